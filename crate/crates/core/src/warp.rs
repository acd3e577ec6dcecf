//! Warped convolution `A ↦ A_Q` and the identities it satisfies.
//!
//! In the joint eigenbasis of the translations the warped convolution is a
//! Schur multiplier by unit-modulus phases,
//!
//! ```text
//! (A_Q)_kl = e^{i x_k·Q x_l} A_kl,    equivalently A_Q = Σ_j α_{Q x_j}(A) E_j.
//! ```
//!
//! [`warp_quadrature`] evaluates the defining oscillatory integrals directly
//! and is the oracle for this closed form. Residuals are operator norms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariant::CovariantSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, cis, Antilinear, CMat, RMat, C64};
use crate::minkowski::{SkewMatrix, Vector};
use crate::quadrature::{run_schedule, MollifierSpec, QuadratureGrid, QuadratureResult};
use crate::rieffel::product_exact;

/// Intertwining tolerance for covariance checks.
pub const INTERTWINING_TOL: f64 = 1e-10;

pub(crate) fn check_form(sys: &CovariantSystem, q: &SkewMatrix) -> Result<()> {
    let (a, b) = (sys.form(), q.form());
    if a.n != b.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: b.n });
    }
    if a.kind != b.kind {
        return Err(Error::InvalidParameter(format!(
            "Q is skew for the {:?} form but the system uses {:?}",
            b.kind, a.kind
        )));
    }
    Ok(())
}

/// Phase exponents `x_k·Q x_l` on the joint eigenbasis columns, exactly antisymmetric.
pub fn phase_exponents(sys: &CovariantSystem, q: &SkewMatrix) -> RMat {
    let pts = sys.column_points();
    let d = pts.len();
    let mut phi = RMat::zeros(d, d);
    for k in 0..d {
        for l in (k + 1)..d {
            let v = q.pair(pts[k], pts[l]);
            phi[(k, l)] = v;
            phi[(l, k)] = -v;
        }
    }
    phi
}

/// `A_Q` via the spectral twist.
pub fn warp_exact(sys: &CovariantSystem, a: &CMat, q: &SkewMatrix) -> Result<CMat> {
    check_form(sys, q)?;
    check_square(sys, a)?;
    let phi = phase_exponents(sys, q);
    let tilde = sys.to_eigenbasis(a);
    let twisted = CMat::from_fn(tilde.nrows(), tilde.ncols(), |k, l| tilde[(k, l)] * cis(phi[(k, l)]));
    Ok(sys.from_eigenbasis(&twisted))
}

pub(crate) fn check_square(sys: &CovariantSystem, a: &CMat) -> Result<()> {
    if a.nrows() != sys.dim() || a.ncols() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: a.nrows() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    /// `∬ α_{Qx}(A) U(y)`.
    Left,
    /// `∬ U(x) α_{Qy}(A)`.
    Right,
}

/// `A_Q` from the mollified oscillatory integral, extrapolated in ε.
pub fn warp_quadrature(
    sys: &CovariantSystem,
    a: &CMat,
    q: &SkewMatrix,
    moll: &MollifierSpec,
    grid: &QuadratureGrid,
    ordering: Ordering,
) -> Result<QuadratureResult> {
    check_form(sys, q)?;
    check_square(sys, a)?;
    let form = sys.form();
    let g = form.gram();
    let qtg = q.matrix().transpose() * &g;
    let pts = sys.points();
    let np = pts.len();
    // entry (k, l) needs the integral for the point pair (p(k), p(l))
    let mut pairs = Vec::with_capacity(np * np);
    for j in 0..np {
        for l in 0..np {
            let diff = &pts[j] - &pts[l];
            let pair = match ordering {
                Ordering::Left => (&qtg * &diff, &g * &pts[l]),
                Ordering::Right => (&g * &pts[j], &qtg * &diff),
            };
            pairs.push(pair);
        }
    }
    let tilde = sys.to_eigenbasis(a);
    let cols = sys.column_point_indices().to_vec();
    let mut result = run_schedule(form, moll, grid, &pairs, |w| {
        let d = tilde.nrows();
        CMat::from_fn(d, d, |k, l| tilde[(k, l)] * w[cols[k] * np + cols[l]])
    })?;
    result.value = sys.from_eigenbasis(&result.value);
    Ok(result)
}

/// `‖(A_Q)* − (A*)_Q‖`.
pub fn check_star(sys: &CovariantSystem, a: &CMat, q: &SkewMatrix) -> Result<f64> {
    let lhs = warp_exact(sys, a, q)?.adjoint();
    let rhs = warp_exact(sys, &a.adjoint(), q)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

/// `‖A_Q B_Q − (A ×_Q B)_Q‖`.
pub fn check_homomorphism(sys: &CovariantSystem, a: &CMat, b: &CMat, q: &SkewMatrix) -> Result<f64> {
    let lhs = warp_exact(sys, a, q)? * warp_exact(sys, b, q)?;
    let rhs = warp_exact(sys, &product_exact(sys, a, b, q)?, q)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacuumReport {
    /// `‖A_QΩ − AΩ‖`.
    pub residual: f64,
    /// `‖A_Q BΩ − (A ×_Q B)Ω‖`.
    pub product_residual: f64,
}

/// Vacuum invariance of warping. `b` defaults to a fixed operator if absent.
pub fn check_vacuum(sys: &CovariantSystem, a: &CMat, b: Option<&CMat>, q: &SkewMatrix) -> Result<VacuumReport> {
    let omega = sys.omega().ok_or_else(|| Error::Precondition("system has no distinguished vector".into()))?;
    let inv = sys.omega_invariance_residual().unwrap_or(f64::INFINITY);
    if inv > 1e-10 {
        return Err(Error::Precondition(format!("Ω is not translation invariant (residual {inv:.3e})")));
    }
    let aq = warp_exact(sys, a, q)?;
    let residual = (&aq * omega - a * omega).norm();
    let fallback;
    let b = match b {
        Some(b) => b,
        None => {
            fallback = a.adjoint();
            &fallback
        }
    };
    let lhs = &aq * (b * omega);
    let rhs = product_exact(sys, a, b, q)? * omega;
    Ok(VacuumReport { residual, product_residual: (lhs - rhs).norm() })
}

/// A unitary or antiunitary symmetry `V` with `V U(x) V⁻¹ = U(M x)`.
///
/// Antiunitaries are `V = u K` with `K` complex conjugation in the joint
/// eigenbasis.
#[derive(Clone, Debug)]
pub struct Symmetry {
    pub unitary: CMat,
    pub antiunitary: bool,
    pub m: RMat,
}

impl Symmetry {
    fn as_antilinear(&self, sys: &CovariantSystem) -> Antilinear {
        Antilinear::new(&self.unitary * Antilinear::conjugation_in_basis(sys.basis()).linear)
    }

    /// `V A V⁻¹`.
    pub fn conjugate(&self, sys: &CovariantSystem, a: &CMat) -> CMat {
        if self.antiunitary {
            self.as_antilinear(sys).conjugate_operator(a)
        } else {
            &self.unitary * a * self.unitary.adjoint()
        }
    }

    pub fn sigma(&self) -> f64 {
        if self.antiunitary {
            -1.0
        } else {
            1.0
        }
    }
}

fn probe_vectors(n: usize) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e7);
    let mut out = Vec::new();
    for mu in 0..n {
        for t in [0.37, 1.3] {
            let mut v = Vector::zeros(n);
            v[mu] = t;
            out.push(v);
        }
    }
    for _ in 0..3 {
        out.push(Vector::from_fn(n, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0)));
    }
    out
}

/// `max_x ‖V U(x) V⁻¹ − U(Mx)‖` over a fixed probe set.
pub fn intertwining_residual(sys: &CovariantSystem, v: &Symmetry) -> Result<f64> {
    let n = sys.n();
    if v.m.nrows() != n || v.m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.m.nrows() });
    }
    check_square(sys, &v.unitary)?;
    let mut worst: f64 = 0.0;
    for x in probe_vectors(n) {
        let lhs = v.conjugate(sys, &sys.translate(&x)?);
        let rhs = sys.translate(&(&v.m * &x))?;
        worst = worst.max(linalg::op_norm(&(lhs - rhs)));
    }
    Ok(worst)
}

/// `‖V A_Q V⁻¹ − (V A V⁻¹)_{σ M Q Mᵀ}‖`.
pub fn check_covariance(sys: &CovariantSystem, a: &CMat, q: &SkewMatrix, v: &Symmetry) -> Result<f64> {
    check_form(sys, q)?;
    let inter = intertwining_residual(sys, v)?;
    if inter > INTERTWINING_TOL {
        return Err(Error::Precondition(format!("V does not intertwine U(x) with U(Mx) (residual {inter:.3e})")));
    }
    let lhs = v.conjugate(sys, &warp_exact(sys, a, q)?);
    let q2 = q.conjugated(&v.m).scaled(v.sigma());
    let rhs = warp_exact(sys, &v.conjugate(sys, a), &q2)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    /// `max_{j,k} ‖[α_{Qx_j}(A), α_{−Qx_k}(B)]‖`.
    pub hypothesis: f64,
    /// `‖[A_Q, B_{−Q}]‖`.
    pub conclusion: f64,
}

pub fn check_commutation(sys: &CovariantSystem, a: &CMat, b: &CMat, q: &SkewMatrix) -> Result<CommutationReport> {
    check_form(sys, q)?;
    check_square(sys, a)?;
    check_square(sys, b)?;
    let qn = q.neg();
    let left: Vec<CMat> =
        sys.points().iter().map(|x| sys.alpha(&q.apply(x), a)).collect::<Result<_>>()?;
    let right: Vec<CMat> =
        sys.points().iter().map(|x| sys.alpha(&qn.apply(x), b)).collect::<Result<_>>()?;
    let mut hypothesis: f64 = 0.0;
    for l in &left {
        for r in &right {
            hypothesis = hypothesis.max(linalg::op_norm(&linalg::commutator(l, r)));
        }
    }
    let conclusion = linalg::op_norm(&linalg::commutator(&warp_exact(sys, a, q)?, &warp_exact(sys, b, &qn)?));
    Ok(CommutationReport { hypothesis, conclusion })
}

/// `‖(A_{Q₁})_{Q₂} − A_{Q₁+Q₂}‖`.
pub fn check_group_law(sys: &CovariantSystem, a: &CMat, q1: &SkewMatrix, q2: &SkewMatrix) -> Result<f64> {
    let lhs = warp_exact(sys, &warp_exact(sys, a, q1)?, q2)?;
    let rhs = warp_exact(sys, a, &q1.add(q2)?)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    /// `‖π_Q(aA + bB) − aπ_Q(A) − bπ_Q(B)‖` on random combinations of basis elements.
    pub linearity: f64,
    /// `max ‖(E_kl)_{Q,−Q} − E_kl‖` over matrix units.
    pub roundtrip: f64,
    /// Smallest `‖π_Q(E_kl)‖` over matrix units.
    pub min_image_norm: f64,
    /// Rank of the image of the matrix-unit basis.
    pub image_rank: usize,
    /// Irreducibility is only probed through surjectivity in finite dimension.
    pub irreducibility_surrogate: bool,
}

impl InjectivityReport {
    pub fn pass(&self, tol: f64, d: usize) -> bool {
        self.linearity <= tol && self.roundtrip <= tol && self.min_image_norm > 0.0 && self.image_rank == d * d
    }
}

pub fn check_injectivity(sys: &CovariantSystem, q: &SkewMatrix) -> Result<InjectivityReport> {
    check_form(sys, q)?;
    let d = sys.dim();
    let qn = q.neg();
    let mut roundtrip: f64 = 0.0;
    let mut min_image_norm = f64::INFINITY;
    let mut images = Vec::with_capacity(d * d);
    for l in 0..d {
        for k in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(k, l)] = C64::new(1.0, 0.0);
            let img = warp_exact(sys, &e, q)?;
            min_image_norm = min_image_norm.min(linalg::op_norm(&img));
            roundtrip = roundtrip.max(linalg::op_norm(&(warp_exact(sys, &img, &qn)? - &e)));
            images.push(img);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    let mut linearity: f64 = 0.0;
    for _ in 0..3 {
        let (a, b) = (linalg::random_matrix(d, &mut rng), linalg::random_matrix(d, &mut rng));
        let (s, t) = (C64::new(0.3, -1.1), C64::new(-0.7, 0.4));
        let lhs = warp_exact(sys, &(&a * s + &b * t), q)?;
        let rhs = warp_exact(sys, &a, q)? * s + warp_exact(sys, &b, q)? * t;
        linearity = linearity.max(linalg::op_norm(&(lhs - rhs)));
    }
    let image_rank = linalg::OperatorSpace::span(d, &images).rank();
    Ok(InjectivityReport { linearity, roundtrip, min_image_norm, image_rank, irreducibility_surrogate: true })
}

/// Skew matrix helper for tests and suites: `standard_q` on the system's form.
pub fn standard_for(sys: &CovariantSystem, zeta: f64, eta: Option<f64>) -> Result<SkewMatrix> {
    crate::minkowski::standard_q(sys.form(), zeta, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariant::{build_system, generators_from_spectrum};
    use crate::minkowski::{standard_q, BilinearForm};
    use crate::linalg::random_unitary;

    fn three_point(w: Option<&CMat>) -> CovariantSystem {
        let spec = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, -1.0]];
        // eigenvalue (0, −1) lowers to pairing point (0, 1)
        build_system(generators_from_spectrum(&spec, 2, w), BilinearForm::lorentz(2), None).unwrap()
    }

    #[test]
    fn three_point_phase_example() {
        let sys = three_point(None);
        let pts: Vec<Vec<f64>> = sys.column_points().iter().map(|p| p.iter().cloned().collect()).collect();
        let find = |x: [f64; 2]| pts.iter().position(|p| p[..] == x[..]).unwrap();
        let q = standard_q(sys.form(), 1.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = linalg::random_matrix(3, &mut rng);
        let aq = sys.to_eigenbasis(&warp_exact(&sys, &a, &q).unwrap());
        let a = sys.to_eigenbasis(&a);
        // x = (1,0), y = (0,1): Qy = (ζ, 0), x·Qy = ζ
        let (ix, iy) = (find([1.0, 0.0]), find([0.0, 1.0]));
        assert!((aq[(ix, iy)] - a[(ix, iy)] * cis(1.0)).norm() < 1e-13);
        assert!((aq[(iy, ix)] - a[(iy, ix)] * cis(-1.0)).norm() < 1e-13);
        for k in 0..3 {
            assert!((aq[(k, k)] - a[(k, k)]).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_and_zero_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_unitary(3, &mut rng);
        let sys = three_point(Some(&w));
        let q = standard_q(sys.form(), 0.8, None).unwrap();
        let one = linalg::identity(3);
        assert!(linalg::op_norm(&(warp_exact(&sys, &one, &q).unwrap() - &one)) < 1e-14);
        let a = linalg::random_matrix(3, &mut rng);
        let zero = SkewMatrix::zero(*sys.form());
        assert!(linalg::op_norm(&(warp_exact(&sys, &a, &zero).unwrap() - &a)) < 1e-13);
    }

    #[test]
    fn rejects_form_mismatch() {
        let sys = three_point(None);
        let q = standard_q(&BilinearForm::lorentz(4), 1.0, None).unwrap();
        assert!(warp_exact(&sys, &linalg::identity(3), &q).is_err());
    }

    #[test]
    fn identities_on_random_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_unitary(3, &mut rng);
        let sys = three_point(Some(&w));
        let q = standard_q(sys.form(), 0.5, None).unwrap();
        let a = linalg::random_matrix(3, &mut rng);
        assert!(check_star(&sys, &a, &q).unwrap() <= 1e-12);
        let q2 = standard_q(sys.form(), 1.3, None).unwrap();
        assert!(check_group_law(&sys, &a, &q, &q2).unwrap() <= 1e-12);
        assert!(check_group_law(&sys, &a, &q, &q.neg()).unwrap() <= 1e-12);
        let inj = check_injectivity(&sys, &q).unwrap();
        assert!(inj.pass(1e-12, 3), "{inj:?}");
    }

    #[test]
    fn translation_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_unitary(3, &mut rng);
        let sys = three_point(Some(&w));
        let q = standard_q(sys.form(), 1.0, None).unwrap();
        let a = linalg::random_matrix(3, &mut rng);
        let v = Symmetry {
            unitary: sys.translate(&Vector::from_vec(vec![0.4, -0.9])).unwrap(),
            antiunitary: false,
            m: RMat::identity(2, 2),
        };
        assert!(check_covariance(&sys, &a, &q, &v).unwrap() <= 1e-12);
    }

    #[test]
    fn antiunitary_conjugation_flips_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_unitary(3, &mut rng);
        let sys = three_point(Some(&w));
        let q = standard_q(sys.form(), 1.0, None).unwrap();
        let a = linalg::random_matrix(3, &mut rng);
        let v = Symmetry { unitary: linalg::identity(3), antiunitary: true, m: -RMat::identity(2, 2) };
        assert!(intertwining_residual(&sys, &v).unwrap() < 1e-12);
        assert!(check_covariance(&sys, &a, &q, &v).unwrap() <= 1e-12);
        // a unitary V with M = −1 does not intertwine
        let bad = Symmetry { unitary: linalg::identity(3), antiunitary: false, m: -RMat::identity(2, 2) };
        assert!(matches!(check_covariance(&sys, &a, &q, &bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn diagonal_operators_commute_after_warping() {
        let sys = three_point(None);
        let q = standard_q(sys.form(), 1.0, None).unwrap();
        let a = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0)]));
        let b = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![C64::new(0.0, 1.0), C64::new(3.0, 0.0), C64::new(1.0, 0.0)]));
        let rep = check_commutation(&sys, &a, &b, &q).unwrap();
        assert!(rep.hypothesis < 1e-14 && rep.conclusion < 1e-14);
    }

    #[test]
    fn quadrature_matches_exact_on_three_point_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = random_unitary(3, &mut rng);
        let sys = three_point(Some(&w));
        let q = standard_q(sys.form(), 1.0, None).unwrap();
        let a = linalg::random_matrix(3, &mut rng);
        let exact = warp_exact(&sys, &a, &q).unwrap();
        let moll = MollifierSpec::default();
        for ordering in [Ordering::Left, Ordering::Right] {
            let res = warp_quadrature(&sys, &a, &q, &moll, &QuadratureGrid::default(), ordering).unwrap();
            let rel = linalg::op_norm(&(&res.value - &exact)) / linalg::op_norm(&exact);
            assert!(rel < 1e-6, "{ordering:?}: rel {rel:e}, estimate {:e}", res.error_estimate);
        }
    }
}
