//! The deformed product `A ×_Q B`.
//!
//! The product is defined as the ε → 0 limit of
//! `(2π)^{−n} ∬ f(εx, εy) e^{−i x·y} α_{Qx}(A) α_y(B) dx dy`. On a finite
//! spectrum the y-integral concentrates at `x = x_m − x_l` and the limit is
//!
//! ```text
//! (A ×_Q B)_kl = Σ_m e^{i (x_k − x_m)·Q(x_m − x_l)} A_km B_ml
//! ```
//!
//! in the joint eigenbasis. [`product_quadrature`] evaluates the integral
//! itself and is the oracle for this formula.

use crate::covariant::CovariantSystem;
use crate::error::Result;
use crate::linalg::{self, cis, CMat, C64};
use crate::minkowski::SkewMatrix;
use crate::quadrature::{run_schedule, MollifierSpec, QuadratureGrid, QuadratureResult};
use crate::warp::{check_form, check_square, warp_exact};

/// `A ×_Q B` via the spectral twist.
pub fn product_exact(sys: &CovariantSystem, a: &CMat, b: &CMat, q: &SkewMatrix) -> Result<CMat> {
    check_form(sys, q)?;
    check_square(sys, a)?;
    check_square(sys, b)?;
    let pts = sys.column_points();
    let d = pts.len();
    let (at, bt) = (sys.to_eigenbasis(a), sys.to_eigenbasis(b));
    let mut out = CMat::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..d {
                let phase = q.pair(&(pts[k] - pts[m]), &(pts[m] - pts[l]));
                acc += cis(phase) * at[(k, m)] * bt[(m, l)];
            }
            out[(k, l)] = acc;
        }
    }
    Ok(sys.from_eigenbasis(&out))
}

/// `A ×_Q B` from the mollified oscillatory integral, extrapolated in ε.
pub fn product_quadrature(
    sys: &CovariantSystem,
    a: &CMat,
    b: &CMat,
    q: &SkewMatrix,
    moll: &MollifierSpec,
    grid: &QuadratureGrid,
) -> Result<QuadratureResult> {
    check_form(sys, q)?;
    check_square(sys, a)?;
    check_square(sys, b)?;
    let g = sys.form().gram();
    let qtg = q.matrix().transpose() * &g;
    let pts = sys.points();
    let np = pts.len();
    let mut pairs = Vec::with_capacity(np * np * np);
    for j1 in 0..np {
        for j2 in 0..np {
            for j3 in 0..np {
                pairs.push((&qtg * (&pts[j1] - &pts[j2]), &g * (&pts[j2] - &pts[j3])));
            }
        }
    }
    let (at, bt) = (sys.to_eigenbasis(a), sys.to_eigenbasis(b));
    let cols = sys.column_point_indices().to_vec();
    let mut result = run_schedule(sys.form(), moll, grid, &pairs, |w| {
        let d = at.nrows();
        CMat::from_fn(d, d, |k, l| {
            (0..d)
                .map(|m| w[(cols[k] * np + cols[m]) * np + cols[l]] * at[(k, m)] * bt[(m, l)])
                .fold(C64::new(0.0, 0.0), |s, z| s + z)
        })
    })?;
    result.value = sys.from_eigenbasis(&result.value);
    Ok(result)
}

/// `‖(A ×_Q B) ×_Q C − A ×_Q (B ×_Q C)‖`.
pub fn check_associativity(sys: &CovariantSystem, a: &CMat, b: &CMat, c: &CMat, q: &SkewMatrix) -> Result<f64> {
    let lhs = product_exact(sys, &product_exact(sys, a, b, q)?, c, q)?;
    let rhs = product_exact(sys, a, &product_exact(sys, b, c, q)?, q)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

/// `‖(A ×_Q B)* − B* ×_Q A*‖`.
pub fn check_star_compat(sys: &CovariantSystem, a: &CMat, b: &CMat, q: &SkewMatrix) -> Result<f64> {
    let lhs = product_exact(sys, a, b, q)?.adjoint();
    let rhs = product_exact(sys, &b.adjoint(), &a.adjoint(), q)?;
    Ok(linalg::op_norm(&(lhs - rhs)))
}

/// `‖π_Q(A)‖`, the norm of the warped operator.
pub fn deformed_norm(sys: &CovariantSystem, a: &CMat, q: &SkewMatrix) -> Result<f64> {
    Ok(linalg::op_norm(&warp_exact(sys, a, q)?))
}
