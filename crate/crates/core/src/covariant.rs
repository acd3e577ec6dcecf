//! Finite-dimensional covariant systems.
//!
//! A system is given by commuting Hermitian generators `P₀, …, P_{n−1}` and
//! implements the translations as
//!
//! ```text
//! U(y) = exp(i Σ_μ y_μ P_μ) = Σ_j e^{i x_j·y} E_j
//! ```
//!
//! where `x_j·y` is the chosen bilinear form. Spectral points are stored in
//! this pairing convention: if `λ_j` is the joint eigenvalue vector of the
//! generators then `x_j = G λ_j`, so `x_j·y = λ_jᵗ y`. Every deformation
//! formula downstream uses `x_j` directly and never sees the metric.
//!
//! In finite dimension every operator is smooth for the adjoint action, so
//! smoothness preconditions on algebra elements are vacuous here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cis, CMat, CVec, C64};
use crate::minkowski::{in_forward_cone_tol, BilinearForm, Vector};

/// Tolerance on Hermiticity and commutators of the input generators.
pub const GENERATOR_TOL: f64 = 1e-12;
/// Spectral points (and Bohr characters) closer than this are merged.
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CovariantSystem {
    form: BilinearForm,
    generators: Vec<CMat>,
    /// Unitary whose columns are joint eigenvectors, grouped by spectral point.
    basis: CMat,
    /// Spectral point index of each basis column.
    column_point: Vec<usize>,
    /// Spectral points, pairing convention.
    points: Vec<Vector>,
    /// Joint eigenvalue vectors of the generators.
    eigenvalues: Vec<Vector>,
    projections: Vec<CMat>,
    omega: Option<CVec>,
}

/// A component of an operator transforming with the character `e^{i q·y}`.
#[derive(Clone, Debug)]
pub struct BohrComponent {
    pub character: Vector,
    pub component: CMat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Spectral points in the pairing convention.
    pub points: Vec<Vec<f64>>,
    /// Joint eigenvalue vectors; cone membership is tested on these.
    pub eigenvalues: Vec<Vec<f64>>,
    pub in_forward_cone: Vec<bool>,
    pub interior: Vec<bool>,
    pub has_invariant_vector: bool,
}

impl SpectrumReport {
    pub fn all_in_cone(&self) -> bool {
        self.in_forward_cone.iter().all(|&b| b)
    }
}

fn scale_of(m: &CMat) -> f64 {
    1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn is_scalar(m: &CMat, tol: f64) -> bool {
    let k = m.nrows();
    if k <= 1 {
        return true;
    }
    let mean = m.trace() / C64::new(k as f64, 0.0);
    let dev = m - CMat::identity(k, k) * mean;
    linalg::frobenius(&dev) <= tol
}

/// Splits the columns of `v` into blocks on which every restricted generator is scalar.
fn refine_block(generators: &[CMat], v: CMat, tol: f64, out: &mut Vec<CMat>) {
    for p in generators {
        let restricted = v.adjoint() * p * &v;
        if is_scalar(&restricted, tol * scale_of(p)) {
            continue;
        }
        let (values, vectors) = linalg::hermitian_eigen(&restricted);
        let rotated = &v * vectors;
        let mut start = 0;
        for k in 1..=values.len() {
            if k == values.len() || values[k] - values[k - 1] > tol * scale_of(p) {
                let block = rotated.columns(start, k - start).into_owned();
                refine_block(generators, block, tol, out);
                start = k;
            }
        }
        return;
    }
    out.push(v);
}

impl CovariantSystem {
    /// Builds a system from commuting Hermitian generators (one per coordinate of `form`).
    pub fn build(generators: Vec<CMat>, form: BilinearForm, omega: Option<CVec>) -> Result<Self> {
        if generators.len() != form.n {
            return Err(Error::DimensionMismatch { expected: form.n, found: generators.len() });
        }
        let d = generators[0].nrows();
        if d == 0 {
            return Err(Error::InvalidParameter("empty Hilbert space".into()));
        }
        for p in &generators {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.nrows() });
            }
            let dev = linalg::hermitian_deviation(p);
            if dev > GENERATOR_TOL * scale_of(p) {
                return Err(Error::NotHermitian(dev));
            }
        }
        for a in 0..generators.len() {
            for b in (a + 1)..generators.len() {
                let c = linalg::frobenius(&linalg::commutator(&generators[a], &generators[b]));
                if c > GENERATOR_TOL * scale_of(&generators[a]) * scale_of(&generators[b]) {
                    return Err(Error::NonCommuting(c));
                }
            }
        }
        if let Some(o) = &omega {
            if o.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: o.len() });
            }
            let norm = o.norm();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::NotUnitVector(norm));
            }
        }

        // Diagonalize a generic combination first, then split remaining degeneracies.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        let mut combo = CMat::zeros(d, d);
        for p in &generators {
            combo += p * C64::new(rng.random_range(1.0..2.0), 0.0);
        }
        let mut blocks = Vec::new();
        refine_block(&generators, linalg::hermitian_eigen(&combo).1, 1e-9, &mut blocks);

        let mut columns: Vec<(Vector, CVec)> = Vec::with_capacity(d);
        for block in blocks {
            for k in 0..block.ncols() {
                let v: CVec = block.column(k).into_owned();
                let lambda = Vector::from_fn(form.n, |mu, _| (v.adjoint() * &generators[mu] * &v)[(0, 0)].re);
                for (mu, p) in generators.iter().enumerate() {
                    let res = (p * &v - &v * C64::new(lambda[mu], 0.0)).norm();
                    if res > 1e-8 * scale_of(p) {
                        return Err(Error::NonCommuting(res));
                    }
                }
                columns.push((lambda, v));
            }
        }

        // merge joint eigenvalues and order the points lexicographically
        let mut eigenvalues: Vec<Vector> = Vec::new();
        let mut assignment = Vec::with_capacity(columns.len());
        for (lambda, _) in &columns {
            match eigenvalues.iter().position(|e| (e - lambda).amax() <= MERGE_TOL * (1.0 + lambda.amax())) {
                Some(i) => assignment.push(i),
                None => {
                    eigenvalues.push(lambda.clone());
                    assignment.push(eigenvalues.len() - 1);
                }
            }
        }
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            let (ea, eb) = (&eigenvalues[a], &eigenvalues[b]);
            ea.iter()
                .zip(eb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let eigenvalues: Vec<Vector> = order.iter().map(|&i| eigenvalues[i].clone()).collect();
        let points: Vec<Vector> = eigenvalues.iter().map(|l| form.lower(l)).collect();

        let mut indexed: Vec<(usize, CVec)> =
            columns.into_iter().zip(assignment).map(|((_, v), a)| (rank[a], v)).collect();
        indexed.sort_by_key(|(p, _)| *p);
        let column_point: Vec<usize> = indexed.iter().map(|(p, _)| *p).collect();
        let basis = CMat::from_fn(d, d, |r, c| indexed[c].1[r]);

        let projections = (0..points.len())
            .map(|j| {
                let cols: Vec<usize> = (0..d).filter(|&k| column_point[k] == j).collect();
                let v = CMat::from_fn(d, cols.len(), |r, c| basis[(r, cols[c])]);
                &v * v.adjoint()
            })
            .collect();

        Ok(CovariantSystem { form, generators, basis, column_point, points, eigenvalues, projections, omega })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n(&self) -> usize {
        self.form.n
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn projections(&self) -> &[CMat] {
        &self.projections
    }

    /// Joint eigenbasis (unitary, columns grouped by spectral point).
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Spectral point of each joint-eigenbasis column.
    pub fn column_points(&self) -> Vec<&Vector> {
        self.column_point.iter().map(|&j| &self.points[j]).collect()
    }

    pub fn column_point_indices(&self) -> &[usize] {
        &self.column_point
    }

    pub fn omega(&self) -> Option<&CVec> {
        self.omega.as_ref()
    }

    pub fn with_omega(mut self, omega: CVec) -> Result<Self> {
        if omega.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: omega.len() });
        }
        if (omega.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitVector(omega.norm()));
        }
        self.omega = Some(omega);
        Ok(self)
    }

    pub fn zero_point(&self) -> Option<usize> {
        self.points.iter().position(|x| x.amax() <= MERGE_TOL)
    }

    /// `‖Ω − E₀Ω‖`, the distance of `Ω` from the translation-invariant vectors.
    pub fn omega_invariance_residual(&self) -> Option<f64> {
        let omega = self.omega.as_ref()?;
        Some(match self.zero_point() {
            Some(j) => (omega - &self.projections[j] * omega).norm(),
            None => omega.norm(),
        })
    }

    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        self.basis.adjoint() * a * &self.basis
    }

    pub fn from_eigenbasis(&self, a: &CMat) -> CMat {
        &self.basis * a * self.basis.adjoint()
    }

    fn check_vector(&self, x: &Vector) -> Result<()> {
        self.form.check_dim(x.len())
    }

    /// `U(x) = Σ_j e^{i x_j·x} E_j`.
    pub fn translate(&self, x: &Vector) -> Result<CMat> {
        self.check_vector(x)?;
        let phases: Vec<C64> = self
            .column_points()
            .iter()
            .map(|p| cis(self.form.pair_unchecked(p, x)))
            .collect();
        let d = self.dim();
        let scaled = CMat::from_fn(d, d, |r, c| self.basis[(r, c)] * phases[c]);
        Ok(scaled * self.basis.adjoint())
    }

    /// `α_x(A) = U(x) A U(x)⁻¹`.
    pub fn alpha(&self, x: &Vector, a: &CMat) -> Result<CMat> {
        let u = self.translate(x)?;
        Ok(&u * a * u.adjoint())
    }

    /// Splits `A` into components with fixed characters `q = x_j − x_k`.
    pub fn bohr_decompose(&self, a: &CMat) -> Vec<BohrComponent> {
        let d = self.dim();
        let tilde = self.to_eigenbasis(a);
        let cols = self.column_points();
        let mut characters: Vec<Vector> = Vec::new();
        let mut masks: Vec<CMat> = Vec::new();
        // entries at roundoff level would otherwise spawn spurious characters
        let cutoff = 1e-14 * tilde.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..d {
            for l in 0..d {
                if tilde[(k, l)].norm() <= cutoff {
                    continue;
                }
                let q = cols[k] - cols[l];
                let idx = match characters.iter().position(|c| (c - &q).amax() <= MERGE_TOL) {
                    Some(i) => i,
                    None => {
                        characters.push(q);
                        masks.push(CMat::zeros(d, d));
                        characters.len() - 1
                    }
                };
                masks[idx][(k, l)] = tilde[(k, l)];
            }
        }
        characters
            .into_iter()
            .zip(masks)
            .map(|(character, m)| BohrComponent { character, component: self.from_eigenbasis(&m) })
            .collect()
    }

    pub fn spectrum_report(&self) -> SpectrumReport {
        let tol = 1e-10;
        SpectrumReport {
            points: self.points.iter().map(|p| p.iter().cloned().collect()).collect(),
            eigenvalues: self.eigenvalues.iter().map(|p| p.iter().cloned().collect()).collect(),
            in_forward_cone: self.eigenvalues.iter().map(|l| in_forward_cone_tol(l, false, tol)).collect(),
            interior: self.eigenvalues.iter().map(|l| in_forward_cone_tol(l, true, tol)).collect(),
            has_invariant_vector: self.zero_point().is_some(),
        }
    }
}

/// `build_system` under its operation name.
pub fn build_system(generators: Vec<CMat>, form: BilinearForm, omega: Option<CVec>) -> Result<CovariantSystem> {
    CovariantSystem::build(generators, form, omega)
}

/// Diagonal generators from joint eigenvalue vectors, conjugated by `w`.
pub fn generators_from_spectrum(eigenvalues: &[Vec<f64>], n: usize, w: Option<&CMat>) -> Vec<CMat> {
    let d = eigenvalues.len();
    (0..n)
        .map(|mu| {
            let diag = CMat::from_diagonal(&CVec::from_fn(d, |k, _| C64::new(eigenvalues[k][mu], 0.0)));
            match w {
                Some(w) => w * diag * w.adjoint(),
                None => diag,
            }
        })
        .collect()
}
