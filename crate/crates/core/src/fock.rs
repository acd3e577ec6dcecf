//! Truncated bosonic Fock space over a finite rapidity grid on the 2D mass shell.
//!
//! Modes are `p(θ_i) = m(cosh θ_i, sinh θ_i)`; the basis is all occupation
//! vectors with total particle number at most `N`. Creation operators are
//! cut at `N`, so the CCR hold exactly on the `≤ N−1` sector. Deformed
//! operators are computed with [`warp_exact`] on the exported system.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariant::{build_system, CovariantSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::minkowski::{BilinearForm, SkewMatrix, Vector};
use crate::warp::{check_commutation, warp_exact};

pub const DEFAULT_CAP: usize = 5000;

/// Rapidity grid of the acceptance preset.
pub const DEFAULT_THETAS: [f64; 6] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Clone, Debug)]
pub struct FockModel {
    pub mass: f64,
    pub thetas: Vec<f64>,
    pub cutoff: usize,
    /// Occupation numbers per basis vector; index 0 is the vacuum.
    pub occupations: Vec<Vec<usize>>,
    creation: Vec<CMat>,
    system: CovariantSystem,
    omega: CVec,
}

/// `Σ_{k ≤ N} C(M + k − 1, k)`.
pub fn fock_dimension(modes: usize, cutoff: usize) -> usize {
    let mut total = 0usize;
    let mut multiset = 1usize; // C(M − 1 + k, k) for k = 0
    for k in 0..=cutoff {
        if k > 0 {
            multiset = multiset * (modes + k - 1) / k;
        }
        total = total.saturating_add(multiset);
    }
    total
}

fn occupations(modes: usize, cutoff: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, modes: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == modes - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            fill(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=cutoff {
        fill(&mut Vec::with_capacity(modes), modes, total, &mut out);
    }
    out
}

/// `p(θ) = m(cosh θ, sinh θ)`.
pub fn mass_shell(m: f64, theta: f64) -> Vector {
    Vector::from_vec(vec![m * theta.cosh(), m * theta.sinh()])
}

pub fn build_fock(mass: f64, thetas: &[f64], cutoff: usize) -> Result<FockModel> {
    build_fock_with_cap(mass, thetas, cutoff, DEFAULT_CAP)
}

pub fn build_fock_with_cap(mass: f64, thetas: &[f64], cutoff: usize, cap: usize) -> Result<FockModel> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("rapidity grid must be non-empty and finite".into()));
    }
    let modes = thetas.len();
    let dim = fock_dimension(modes, cutoff);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let occ = occupations(modes, cutoff);
    debug_assert_eq!(occ.len(), dim);
    let index: HashMap<&[usize], usize> = occ.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect();

    let mut creation = Vec::with_capacity(modes);
    for i in 0..modes {
        let mut a = CMat::zeros(dim, dim);
        for (col, o) in occ.iter().enumerate() {
            if o.iter().sum::<usize>() >= cutoff {
                continue;
            }
            let mut up = o.clone();
            up[i] += 1;
            a[(index[up.as_slice()], col)] = C64::new(((o[i] + 1) as f64).sqrt(), 0.0);
        }
        creation.push(a);
    }

    // P₀ = Σ E_i N_i, P₁ = −Σ p_i N_i: the Lorentz pairing x = Gλ returns the total momentum
    let diag = |f: &dyn Fn(usize) -> f64| {
        CMat::from_diagonal(&CVec::from_fn(dim, |r, _| {
            C64::new(occ[r].iter().enumerate().map(|(i, &n)| n as f64 * f(i)).sum(), 0.0)
        }))
    };
    let p0 = diag(&|i| mass * thetas[i].cosh());
    let p1 = diag(&|i| -mass * thetas[i].sinh());
    let mut omega = CVec::zeros(dim);
    omega[0] = C64::new(1.0, 0.0);
    let system = build_system(vec![p0, p1], BilinearForm::lorentz(2), Some(omega.clone()))?;
    Ok(FockModel { mass, thetas: thetas.to_vec(), cutoff, occupations: occ, creation, system, omega })
}

impl FockModel {
    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn modes(&self) -> usize {
        self.thetas.len()
    }

    pub fn system(&self) -> &CovariantSystem {
        &self.system
    }

    pub fn vacuum(&self) -> &CVec {
        &self.omega
    }

    pub fn creation(&self, i: usize) -> &CMat {
        &self.creation[i]
    }

    pub fn annihilation(&self, i: usize) -> CMat {
        self.creation[i].adjoint()
    }

    pub fn momentum(&self, i: usize) -> Vector {
        mass_shell(self.mass, self.thetas[i])
    }

    /// Orthogonal projection onto states with at most `k` particles.
    pub fn sector_projection(&self, k: usize) -> CMat {
        CMat::from_diagonal(&CVec::from_fn(self.dim(), |r, _| {
            if self.occupations[r].iter().sum::<usize>() <= k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// `max_{i,j} ‖P([a_i, a†_j] − δ_ij)P‖` on the `≤ N−1` sector.
    pub fn ccr_residual(&self) -> f64 {
        if self.cutoff == 0 {
            return 0.0;
        }
        let p = self.sector_projection(self.cutoff - 1);
        let id = linalg::identity(self.dim());
        let mut worst: f64 = 0.0;
        for i in 0..self.modes() {
            for j in 0..self.modes() {
                let mut c = linalg::commutator(&self.annihilation(i), &self.creation[j]);
                if i == j {
                    c -= &id;
                }
                worst = worst.max(linalg::op_norm(&(&p * c * &p)));
            }
        }
        worst
    }

    /// `φ(f) = Σ_i (f_i a†_i + f̄_i a_i)`.
    pub fn field(&self, f: &[C64]) -> Result<CMat> {
        if f.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), found: f.len() });
        }
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (i, c) in f.iter().enumerate() {
            out += &self.creation[i] * *c + self.annihilation(i) * c.conj();
        }
        Ok(out)
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.modes() {
            return Err(Error::InvalidParameter(format!("mode {i} out of range (M = {})", self.modes())));
        }
        Ok(())
    }
}

fn check_q(q: &SkewMatrix) -> Result<()> {
    let f = q.form();
    if f.n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: f.n });
    }
    Ok(())
}

/// `(a†(θ_i))_Q`.
pub fn deformed_creation(model: &FockModel, i: usize, q: &SkewMatrix) -> Result<CMat> {
    model.check_mode(i)?;
    check_q(q)?;
    warp_exact(&model.system, &model.creation[i], q)
}

/// `⟨v, a†_Q(θ_i) a†_Q(θ_j) Ω⟩ / ⟨v, a†_Q(θ_j) a†_Q(θ_i) Ω⟩` with `v = a†(θ_i)a†(θ_j)Ω`.
pub fn exchange_phase(model: &FockModel, i: usize, j: usize, q: &SkewMatrix) -> Result<C64> {
    model.check_mode(i)?;
    model.check_mode(j)?;
    if i == j || model.thetas[i] == model.thetas[j] {
        return Err(Error::InvalidParameter("exchange phase needs distinct rapidities".into()));
    }
    if model.cutoff < 2 {
        return Err(Error::Precondition("exchange phase needs cutoff N ≥ 2".into()));
    }
    let (ai, aj) = (deformed_creation(model, i, q)?, deformed_creation(model, j, q)?);
    let omega = &model.omega;
    let v = &model.creation[i] * (&model.creation[j] * omega);
    let num = v.dotc(&(&ai * (&aj * omega)));
    let den = v.dotc(&(&aj * (&ai * omega)));
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRow {
    pub theta1: f64,
    pub theta2: f64,
    /// `p(θ₁)·Q p(θ₂)`.
    pub pqq: f64,
    pub phase_re: f64,
    pub phase_im: f64,
    /// `|phase| − 1`.
    pub modulus_defect: f64,
}

/// Exchange phases over the supplied mode pairs; diagonal pairs are dropped.
pub fn scattering_table(model: &FockModel, q: &SkewMatrix, pairs: &[(usize, usize)]) -> Result<Vec<ScatteringRow>> {
    let pairs: Vec<(usize, usize)> = pairs.iter().cloned().filter(|(i, j)| i != j).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let phase = exchange_phase(model, i, j, q)?;
            Ok(ScatteringRow {
                theta1: model.thetas[i],
                theta2: model.thetas[j],
                pqq: q.pair(&model.momentum(i), &model.momentum(j)),
                phase_re: phase.re,
                phase_im: phase.im,
                modulus_defect: phase.norm() - 1.0,
            })
        })
        .collect()
}

/// All pairs `i < j`.
pub fn upper_pairs(modes: usize) -> Vec<(usize, usize)> {
    (0..modes).flat_map(|i| ((i + 1)..modes).map(move |j| (i, j))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeCommutatorReport {
    /// `‖P[φ(f)_Q, φ(g)_{−Q}]P‖` on the `≤ N−1` sector.
    pub conclusion: f64,
    /// The same without the sector restriction.
    pub conclusion_full: f64,
    /// `max_{j,k} ‖[α_{Qx_j}(φ(f)), α_{−Qx_k}(φ(g))]‖`.
    pub hypothesis: f64,
}

/// Diagnostic only: grid truncation breaks exact locality.
pub fn wedge_commutator_residual(
    model: &FockModel,
    f: &[C64],
    g: &[C64],
    q: &SkewMatrix,
) -> Result<WedgeCommutatorReport> {
    check_q(q)?;
    let (pf, pg) = (model.field(f)?, model.field(g)?);
    let rep = check_commutation(&model.system, &pf, &pg, q)?;
    let c = linalg::commutator(&warp_exact(&model.system, &pf, q)?, &warp_exact(&model.system, &pg, &q.neg())?);
    let p = model.sector_projection(model.cutoff.saturating_sub(1));
    Ok(WedgeCommutatorReport {
        conclusion: linalg::op_norm(&(&p * &c * &p)),
        conclusion_full: rep.conclusion,
        hypothesis: rep.hypothesis,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeResidualRow {
    pub modes: usize,
    pub dim: usize,
    pub hypothesis: f64,
    pub conclusion: f64,
}

/// Residuals for `f` supported on negative and `g` on positive rapidities,
/// on grids of `M` equally spaced rapidities in `[−span, span]`.
pub fn wedge_residual_table(
    mass: f64,
    span: f64,
    cutoff: usize,
    q: &SkewMatrix,
    grid_sizes: &[usize],
) -> Result<Vec<WedgeResidualRow>> {
    grid_sizes
        .iter()
        .map(|&m| {
            if m < 2 {
                return Err(Error::InvalidParameter("wedge table needs at least two rapidities".into()));
            }
            let thetas: Vec<f64> = (0..m).map(|k| -span + 2.0 * span * k as f64 / (m - 1) as f64).collect();
            let model = build_fock(mass, &thetas, cutoff)?;
            let bump = |t: f64| C64::new((-(t * t)).exp(), 0.0);
            let f: Vec<C64> = thetas.iter().map(|&t| if t < 0.0 { bump(t + span / 2.0) } else { C64::new(0.0, 0.0) }).collect();
            let g: Vec<C64> = thetas.iter().map(|&t| if t > 0.0 { bump(t - span / 2.0) } else { C64::new(0.0, 0.0) }).collect();
            let rep = wedge_commutator_residual(&model, &f, &g, q)?;
            Ok(WedgeResidualRow { modes: m, dim: model.dim(), hypothesis: rep.hypothesis, conclusion: rep.conclusion })
        })
        .collect()
}
