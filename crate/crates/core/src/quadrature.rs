//! Mollified oscillatory integrals and their ε → 0 extrapolation.
//!
//! Every quadrature in the crate reduces to integrals of the form
//!
//! ```text
//! I_ε(c, d) = (2π)^{−n} ∬ f(εx, εy) e^{−i x·y} e^{i cᵗx} e^{i dᵗy} dx dy
//! ```
//!
//! with `x·y = Σ_μ s_μ x_μ y_μ` diagonal. For product mollifiers the
//! integral factorizes into one two-dimensional integral per coordinate,
//!
//! ```text
//! J(c, d) = ∬ g(εx) h(εy) e^{−i s x y} e^{i c x} e^{i d y} dx dy,
//! ```
//!
//! evaluated with the trapezoidal rule on `x_i = i·h_x`, `y_k = k·h_y`. The
//! steps are tied by `h_x h_y = 2π/N`, so the inner sum
//! `S_i = Σ_k h(εy_k) e^{i d y_k} e^{−i s x_i y_k}` over all outer nodes is a
//! single length-`N` DFT. Inner sums are cached per `(s, d)`.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cis, CMat, C64};
use crate::minkowski::{BilinearForm, Vector};

/// Default ε schedule.
pub const DEFAULT_SCHEDULE: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mollifier {
    /// `f(x, y) = exp(−(|x|² + |y|²) / 2w²)`.
    Gaussian { width: f64 },
    /// `f(x, y) = exp(−|x|²/2w_x² − |y|²/2w_y²)`.
    ProductGaussian { wx: f64, wy: f64 },
}

impl Mollifier {
    pub fn widths(&self) -> (f64, f64) {
        match *self {
            Mollifier::Gaussian { width } => (width, width),
            Mollifier::ProductGaussian { wx, wy } => (wx, wy),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let (wx, wy) = self.widths();
        let sx: f64 = x.iter().map(|t| t * t).sum();
        let sy: f64 = y.iter().map(|t| t * t).sum();
        (-0.5 * (sx / (wx * wx) + sy / (wy * wy))).exp()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mollifier::Gaussian { .. } => "gaussian",
            Mollifier::ProductGaussian { .. } => "product-gaussian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub mollifier: Mollifier,
    /// Strictly decreasing positive ε values.
    pub schedule: Vec<f64>,
    /// Number of trailing schedule points used by the extrapolation.
    pub order: usize,
}

impl MollifierSpec {
    pub fn new(mollifier: Mollifier, schedule: Vec<f64>, order: usize) -> Result<Self> {
        let (wx, wy) = mollifier.widths();
        if !(wx > 0.0 && wy > 0.0 && wx.is_finite() && wy.is_finite()) {
            return Err(Error::InvalidParameter("mollifier widths must be positive".into()));
        }
        if schedule.is_empty() || schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter("ε schedule must be positive".into()));
        }
        if schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("ε schedule must be strictly decreasing".into()));
        }
        if order == 0 || order > schedule.len() {
            return Err(Error::InvalidParameter(format!(
                "extrapolation order {order} outside 1..={}",
                schedule.len()
            )));
        }
        Ok(MollifierSpec { mollifier, schedule, order })
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        Self::new(Mollifier::Gaussian { width }, DEFAULT_SCHEDULE.to_vec(), DEFAULT_SCHEDULE.len())
    }

    pub fn product_gaussian(wx: f64, wy: f64) -> Result<Self> {
        Self::new(Mollifier::ProductGaussian { wx, wy }, DEFAULT_SCHEDULE.to_vec(), DEFAULT_SCHEDULE.len())
    }
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self::gaussian(4.0).expect("valid default")
    }
}

/// Truncation margins, in units of `w/ε`, for the outer and inner variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub margin_x: f64,
    pub margin_y: f64,
    /// Largest admissible DFT length.
    pub max_nodes: usize,
}

impl QuadratureGrid {
    pub fn new(margin_x: f64, margin_y: f64, max_nodes: usize) -> Result<Self> {
        if margin_x < 3.0 || margin_y < 3.0 {
            return Err(Error::InvalidParameter("grid margins must be at least 3".into()));
        }
        Ok(QuadratureGrid { margin_x, margin_y, max_nodes })
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { margin_x: 6.0, margin_y: 9.0, max_nodes: 1 << 22 }
    }
}

/// Resolved per-axis grid at one ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub eps: f64,
    /// DFT length.
    pub nodes: usize,
    pub step_x: f64,
    pub step_y: f64,
    pub radius_x: f64,
    pub radius_y: f64,
    /// Outer nodes `i ∈ [−half_x, half_x]`.
    pub half_x: usize,
    /// Inner nodes `k ∈ [−half_y, half_y]`.
    pub half_y: usize,
}

fn smooth_size(n: usize) -> usize {
    let mut m = n.max(8);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl AxisGrid {
    /// Chooses steps and radii for integrals with `|c_μ| ≤ c_max`, `|d_μ| ≤ d_max`.
    pub fn resolve(eps: f64, moll: &Mollifier, grid: &QuadratureGrid, c_max: f64, d_max: f64) -> Result<Self> {
        let (wx, wy) = moll.widths();
        let radius_x = d_max + grid.margin_x * wx / eps;
        let radius_y = grid.margin_y * wy / eps;
        // inner aliasing: copies of the inner transform must clear the outer range
        let hy = (2.0 * PI / (radius_x + d_max + 9.0 * eps / wy)).min(PI / radius_x);
        // outer band limit: the integrand has frequencies up to c + radius_y
        let hx_max = (2.0 * PI / (c_max + radius_y + 9.0 * eps / wx)).min(PI / radius_y);
        let needed = (2.0 * PI / (hx_max * hy)).ceil() as usize + 2;
        let nodes = smooth_size(needed);
        if nodes > grid.max_nodes {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs {nodes} nodes, above the cap {}",
                grid.max_nodes
            )));
        }
        let step_y = hy;
        let step_x = 2.0 * PI / (nodes as f64 * step_y);
        let cap = (nodes - 1) / 2;
        let half_x = ((radius_x / step_x).ceil() as usize).min(cap);
        let half_y = ((radius_y / step_y).ceil() as usize).min(cap);
        Ok(AxisGrid { eps, nodes, step_x, step_y, radius_x, radius_y, half_x, half_y })
    }
}

fn key(s: f64, d: f64) -> (bool, i64) {
    (s > 0.0, (d * 1e12).round() as i64)
}

/// Evaluates `I_ε(c, d)` for a batch of `(c, d)` pairs.
pub struct OscillatoryIntegrator {
    signs: Vec<f64>,
    mollifier: Mollifier,
    grid: AxisGrid,
    /// `g(εx_i)` for `i ∈ [−half_x, half_x]`.
    outer_weights: Vec<f64>,
    cache: HashMap<(bool, i64), Vec<C64>>,
}

impl OscillatoryIntegrator {
    pub fn new(form: &BilinearForm, mollifier: Mollifier, grid: AxisGrid) -> Self {
        let (wx, _) = mollifier.widths();
        let outer_weights = (-(grid.half_x as i64)..=grid.half_x as i64)
            .map(|i| {
                let t = grid.eps * i as f64 * grid.step_x / wx;
                (-0.5 * t * t).exp()
            })
            .collect();
        OscillatoryIntegrator {
            signs: (0..form.n).map(|mu| form.sign(mu)).collect(),
            mollifier,
            grid,
            outer_weights,
            cache: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &AxisGrid {
        &self.grid
    }

    /// `S_i = h_y Σ_k h(εy_k) e^{i d y_k} e^{−i s x_i y_k}` for all outer nodes.
    fn inner_sums(grid: &AxisGrid, wy: f64, s: f64, d: f64) -> Vec<C64> {
        let n = grid.nodes;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        let half = grid.half_y as i64;
        for k in -half..=half {
            let y = k as f64 * grid.step_y;
            let t = grid.eps * y / wy;
            let idx = k.rem_euclid(n as i64) as usize;
            buf[idx] = cis(d * y) * ((-0.5 * t * t).exp() * grid.step_y);
        }
        let mut planner = FftPlanner::<f64>::new();
        // x_i y_k = 2π i k / N, so e^{−i s x_i y_k} is a forward DFT for s = +1
        let fft = if s > 0.0 { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
        fft.process(&mut buf);
        let hx = grid.half_x as i64;
        (-hx..=hx).map(|i| buf[i.rem_euclid(n as i64) as usize]).collect()
    }

    fn one_axis(&self, s: f64, c: f64, d: f64) -> C64 {
        let sums = &self.cache[&key(s, d)];
        let hx = self.grid.half_x as i64;
        let mut acc = C64::new(0.0, 0.0);
        for (idx, i) in (-hx..=hx).enumerate() {
            let x = i as f64 * self.grid.step_x;
            acc += sums[idx] * cis(c * x) * self.outer_weights[idx];
        }
        acc * self.grid.step_x
    }

    /// Returns `I_ε(c, d)` for each pair, in order.
    pub fn evaluate(&mut self, pairs: &[(Vector, Vector)]) -> Vec<C64> {
        let (_, wy) = self.mollifier.widths();
        let mut missing: Vec<(f64, f64)> = Vec::new();
        for (_, d) in pairs {
            for (mu, &s) in self.signs.iter().enumerate() {
                let k = key(s, d[mu]);
                if !self.cache.contains_key(&k) && !missing.iter().any(|&(s2, d2)| key(s2, d2) == k) {
                    missing.push((s, d[mu]));
                }
            }
        }
        let grid = self.grid;
        let computed: Vec<Vec<C64>> =
            missing.par_iter().map(|&(s, d)| Self::inner_sums(&grid, wy, s, d)).collect();
        for ((s, d), sums) in missing.into_iter().zip(computed) {
            self.cache.insert(key(s, d), sums);
        }
        let norm = (2.0 * PI).powi(-(self.signs.len() as i32));
        let this = &*self;
        pairs
            .par_iter()
            .map(|(c, d)| {
                this.signs
                    .iter()
                    .enumerate()
                    .map(|(mu, &s)| this.one_axis(s, c[mu], d[mu]))
                    .fold(C64::new(norm, 0.0), |acc, j| acc * j)
            })
            .collect()
    }
}

/// Neville extrapolation to `u = 0` of values sampled at `u_i = ε_i²`.
/// Returns the extrapolated matrix and the norm of the last increment.
pub fn extrapolate(eps: &[f64], values: &[CMat]) -> (CMat, f64) {
    assert_eq!(eps.len(), values.len());
    assert!(!eps.is_empty());
    let u: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let m = u.len();
    if m == 1 {
        return (values[0].clone(), f64::NAN);
    }
    // tableau[i] holds P_{i..i+j} after step j
    let mut tableau: Vec<CMat> = values.to_vec();
    let mut lower = values[m - 1].clone();
    for j in 1..m {
        for i in 0..(m - j) {
            let (ui, uj) = (u[i], u[i + j]);
            tableau[i] = (&tableau[i + 1] * C64::new(ui, 0.0) - &tableau[i] * C64::new(uj, 0.0)) / C64::new(ui - uj, 0.0);
        }
        if j == m - 2 {
            // P_{1..m−1}: next-lower order on the finest points
            lower = tableau[1].clone();
        }
    }
    let best = tableau[0].clone();
    let increment = linalg::frobenius(&(&best - &lower));
    (best, increment)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `0` marks the extrapolated row.
    pub eps: f64,
    pub value_norm: f64,
    /// Change from the previous row; on the extrapolated row, the error estimate.
    pub increment: f64,
}

#[derive(Clone, Debug)]
pub struct QuadratureResult {
    pub value: CMat,
    pub error_estimate: f64,
    pub table: Vec<ConvergenceRow>,
    /// Increments strictly decreasing down the table.
    pub converged: bool,
    pub grids: Vec<AxisGrid>,
}

/// Runs `evaluate(integrator)` across the schedule and extrapolates.
/// `pairs` lists every `(c, d)` the evaluation needs; it fixes the grid.
pub fn run_schedule(
    form: &BilinearForm,
    spec: &MollifierSpec,
    grid: &QuadratureGrid,
    pairs: &[(Vector, Vector)],
    assemble: impl Fn(&[C64]) -> CMat,
) -> Result<QuadratureResult> {
    let c_max = pairs.iter().map(|(c, _)| c.amax()).fold(0.0, f64::max);
    let d_max = pairs.iter().map(|(_, d)| d.amax()).fold(0.0, f64::max);
    let mut values = Vec::with_capacity(spec.schedule.len());
    let mut grids = Vec::with_capacity(spec.schedule.len());
    for &eps in &spec.schedule {
        let axis = AxisGrid::resolve(eps, &spec.mollifier, grid, c_max, d_max)?;
        let mut integrator = OscillatoryIntegrator::new(form, spec.mollifier, axis);
        let weights = integrator.evaluate(pairs);
        values.push(assemble(&weights));
        grids.push(axis);
    }
    let start = spec.schedule.len() - spec.order;
    let (value, error_estimate) = extrapolate(&spec.schedule[start..], &values[start..]);

    let mut table = Vec::with_capacity(values.len() + 1);
    for (i, (eps, v)) in spec.schedule.iter().zip(&values).enumerate() {
        let increment = if i == 0 { f64::NAN } else { linalg::frobenius(&(v - &values[i - 1])) };
        table.push(ConvergenceRow { eps: *eps, value_norm: linalg::frobenius(v), increment });
    }
    table.push(ConvergenceRow { eps: 0.0, value_norm: linalg::frobenius(&value), increment: error_estimate });
    let incs: Vec<f64> = table.iter().skip(1).map(|r| r.increment).collect();
    let converged = incs.iter().all(|x| x.is_finite()) && incs.windows(2).all(|w| w[1] < w[0]);
    Ok(QuadratureResult { value, error_estimate, table, converged, grids })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form of the Gaussian-mollified one-axis integral.
    fn gaussian_axis(eps: f64, wx: f64, wy: f64, s: f64, c: f64, d: f64) -> C64 {
        let a = eps * eps / (wy * wy);
        let b = eps * eps / (wx * wx);
        let x0 = s * d;
        let q = 1.0 + a * b;
        let re = -x0 * x0 * b / (2.0 * q) - c * c * a / (2.0 * q);
        C64::new(re, c * x0 / q).exp() * (2.0 * PI / q.sqrt())
    }

    #[test]
    fn one_axis_matches_closed_form() {
        let moll = Mollifier::ProductGaussian { wx: 1.5, wy: 0.8 };
        let form = BilinearForm::lorentz(2);
        for &eps in &[0.2, 0.1, 0.05] {
            let pairs = vec![
                (Vector::from_vec(vec![0.7, -1.2]), Vector::from_vec(vec![1.1, 0.4])),
                (Vector::from_vec(vec![0.0, 0.3]), Vector::from_vec(vec![-2.0, 0.0])),
            ];
            let axis = AxisGrid::resolve(eps, &moll, &QuadratureGrid::default(), 1.2, 2.0).unwrap();
            let mut integ = OscillatoryIntegrator::new(&form, moll, axis);
            let got = integ.evaluate(&pairs);
            for ((c, d), g) in pairs.iter().zip(got) {
                let mut want = C64::new((2.0 * PI).powi(-2), 0.0);
                for mu in 0..2 {
                    want *= gaussian_axis(eps, 1.5, 0.8, form.sign(mu), c[mu], d[mu]);
                }
                assert!((g - want).norm() < 1e-11, "eps {eps}: {g} vs {want}");
            }
        }
    }

    #[test]
    fn extrapolation_is_exact_on_quadratics_in_u() {
        let eps = [0.2, 0.1, 0.05];
        let vals: Vec<CMat> = eps
            .iter()
            .map(|e| {
                let u = e * e;
                CMat::from_element(1, 1, C64::new(3.0 - 2.0 * u + 5.0 * u * u, u))
            })
            .collect();
        let (v, inc) = extrapolate(&eps, &vals);
        assert!((v[(0, 0)] - C64::new(3.0, 0.0)).norm() < 1e-12);
        assert!(inc < 1e-1);
    }

    #[test]
    fn spec_validation() {
        assert!(MollifierSpec::new(Mollifier::Gaussian { width: 1.0 }, vec![0.1, 0.2], 2).is_err());
        assert!(MollifierSpec::new(Mollifier::Gaussian { width: 1.0 }, vec![0.2, 0.1], 3).is_err());
        assert!(MollifierSpec::new(Mollifier::Gaussian { width: -1.0 }, vec![0.2], 1).is_err());
        assert!(QuadratureGrid::new(2.0, 9.0, 1000).is_err());
        assert_eq!(Mollifier::Gaussian { width: 2.0 }.eval(&[0.0], &[0.0]), 1.0);
    }
}
