//! Dense complex linear algebra shared by every module.
//!
//! Operators are `nalgebra` matrices over `Complex<f64>`. Operator spaces
//! (subspaces of B(H)) are compared through orthonormal bases under the
//! Hilbert–Schmidt inner product, so inclusion and equality residuals are
//! sines of principal angles and do not depend on the chosen spanning set.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// An element of the operator algebra; a complex d×d matrix.
pub type OperatorMatrix = CMat;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn cis(phase: f64) -> C64 {
    let (s, c) = phase.sin_cos();
    C64::new(c, s)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation of `a` from its adjoint.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let d = a.nrows();
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Applies a real function to a Hermitian matrix through its spectral decomposition.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let diag = CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| f(v)),
    ));
    &vectors * diag * vectors.adjoint()
}

/// Unitary factor of the polar decomposition `a = u |a|`.
pub fn polar_unitary(a: &CMat) -> CMat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    u * v_t
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

/// Column-major vectorisation of a matrix.
pub fn vectorize(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &[C64], d: usize) -> CMat {
    CMat::from_column_slice(d, d, v)
}

/// Null space of the Hermitian positive semidefinite Gram matrix `gram`,
/// returned as orthonormal columns. A direction counts as null when its
/// singular value (square root of the Gram eigenvalue) is at most
/// `rel_tol` times the largest one.
pub fn gram_null_space(gram: &CMat, rel_tol: f64) -> CMat {
    let n = gram.nrows();
    let (values, vectors) = hermitian_eigen(gram);
    let top = values.iter().cloned().fold(0.0, f64::max).max(0.0);
    let cutoff = if top > 0.0 { (rel_tol * top.sqrt()).powi(2) } else { 0.0 };
    let cols: Vec<usize> = (0..n).filter(|&i| values[i] <= cutoff || top == 0.0).collect();
    CMat::from_fn(n, cols.len(), |r, c| vectors[(r, cols[c])])
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn column_span(m: &CMat, rel_tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let gram = m.adjoint() * m;
    let (values, vectors) = hermitian_eigen(&gram);
    let top = values.iter().cloned().fold(0.0, f64::max).max(0.0);
    if top == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let mut cols = Vec::new();
    for (i, &v) in values.iter().enumerate().rev() {
        if v > (rel_tol * top.sqrt()).powi(2) {
            let w = m * vectors.column(i) / C64::new(v.sqrt(), 0.0);
            cols.push(w);
        }
    }
    // one Gram–Schmidt sweep to clean up the squaring of the condition number
    let mut out: Vec<CVec> = Vec::with_capacity(cols.len());
    for mut w in cols {
        for q in &out {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            out.push(w / C64::new(norm, 0.0));
        }
    }
    let rows = m.nrows();
    CMat::from_fn(rows, out.len(), |r, c| out[c][r])
}

/// A subspace of B(C^d) with an orthonormal Hilbert–Schmidt basis.
#[derive(Clone, Debug)]
pub struct OperatorSpace {
    dim: usize,
    /// Orthonormal basis, one vectorised operator per column.
    basis: CMat,
}

impl OperatorSpace {
    /// Span of the given operators; directions below `1e-9` relative weight are dropped.
    pub fn span(d: usize, ops: &[CMat]) -> Self {
        Self::span_with_tol(d, ops, 1e-9)
    }

    pub fn span_with_tol(d: usize, ops: &[CMat], rel_tol: f64) -> Self {
        let mut m = CMat::zeros(d * d, ops.len());
        for (k, op) in ops.iter().enumerate() {
            m.set_column(k, &vectorize(op));
        }
        OperatorSpace { dim: d, basis: column_span(&m, rel_tol) }
    }

    pub fn from_orthonormal_columns(d: usize, basis: CMat) -> Self {
        OperatorSpace { dim: d, basis }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis_columns(&self) -> &CMat {
        &self.basis
    }

    pub fn elements(&self) -> Vec<CMat> {
        (0..self.rank())
            .map(|k| unvectorize(self.basis.column(k).as_slice(), self.dim))
            .collect()
    }

    pub fn project(&self, a: &CMat) -> CMat {
        let v = vectorize(a);
        let coeffs = self.basis.adjoint() * &v;
        unvectorize((&self.basis * coeffs).as_slice(), self.dim)
    }

    /// Relative distance of `a` from the subspace.
    pub fn distance(&self, a: &CMat) -> f64 {
        let norm = frobenius(a);
        if norm == 0.0 {
            return 0.0;
        }
        frobenius(&(a - self.project(a))) / norm
    }

    /// Sine of the largest principal angle from `self` into `other`; 0 iff `self ⊂ other`.
    pub fn inclusion_residual(&self, other: &OperatorSpace) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let coeffs = other.basis.adjoint() * &self.basis;
        let rest = &self.basis - &other.basis * coeffs;
        (0..rest.ncols())
            .map(|k| rest.column(k).norm())
            .fold(0.0, f64::max)
    }

    /// Symmetric span-equality residual; 1 when the ranks differ.
    pub fn equality_residual(&self, other: &OperatorSpace) -> f64 {
        if self.rank() != other.rank() {
            return 1.0;
        }
        self.inclusion_residual(other).max(other.inclusion_residual(self))
    }
}

/// An antilinear map `v ↦ L · conj(v)`, conjugation taken in the computational basis.
///
/// Every antilinear object in the crate (modular conjugations, antiunitary
/// symmetries, Tomita operators) uses this single convention. Conjugation in
/// another orthonormal basis `W` is `W · conj(W†·v) = (W Wᵀ) conj(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Antilinear {
    pub linear: CMat,
}

impl Antilinear {
    pub fn new(linear: CMat) -> Self {
        Antilinear { linear }
    }

    pub fn conjugation(d: usize) -> Self {
        Antilinear { linear: identity(d) }
    }

    /// Complex conjugation of coordinates in the orthonormal basis given by the columns of `w`.
    pub fn conjugation_in_basis(w: &CMat) -> Self {
        Antilinear { linear: w * w.transpose() }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.linear * v.conjugate()
    }

    /// `J A J⁻¹` for invertible antilinear `J`.
    pub fn conjugate_operator(&self, a: &CMat) -> CMat {
        let inv = self
            .linear
            .clone()
            .try_inverse()
            .expect("antilinear map must be invertible");
        &self.linear * a.conjugate() * inv
    }

    /// Linear map `J ∘ J`.
    pub fn square(&self) -> CMat {
        &self.linear * self.linear.conjugate()
    }
}

pub fn random_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    CMat::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    CVec::from_fn(d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let a = random_matrix(d, rng);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-like random unitary from the QR factorisation of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let qr = random_matrix(d, rng).qr();
    let (q, r) = qr.unpack();
    let phases = CMat::from_diagonal(&CVec::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    }));
    q * phases
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}
