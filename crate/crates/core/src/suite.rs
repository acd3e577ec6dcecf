//! Seeded verification suites: the deformation identities on random systems
//! and the modular checks on tensor models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariant::CovariantSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::minkowski::{standard_q, BilinearForm, FormKind, SkewMatrix};
use crate::models::{random_system, tensor_model, SuiteSystem, TENSOR_MAX_D};
use crate::modular::{bicommutant, check_commutant_duality, check_modular_invariance, tomita};
use crate::rieffel::{check_associativity, check_star_compat, product_exact};
use crate::warp::{
    check_commutation, check_covariance, check_group_law, check_homomorphism, check_injectivity, check_star,
    check_vacuum, warp_exact,
};

/// Hypothesis threshold for the commutation implication.
pub const COMMUTATION_HYPOTHESIS_TOL: f64 = 1e-12;

/// Check families with their default tolerances.
pub const IDENTITY_FAMILIES: [(&str, f64); 11] = [
    ("star", 1e-12),
    ("homomorphism", 1e-10),
    ("associativity", 1e-10),
    ("star_compat", 1e-10),
    ("group_law", 1e-12),
    ("roundtrip", 1e-12),
    ("vacuum", 1e-12),
    ("covariance", 1e-10),
    ("commutation", 1e-10),
    ("injectivity", 1e-12),
    ("zero_q", 1e-13),
];

pub const MODULAR_FAMILIES: [(&str, f64); 9] = [
    ("bicommutant", 1e-10),
    ("tomita_s", 1e-10),
    ("tomita_polar", 1e-10),
    ("tomita_jdj", 1e-10),
    ("tomita_jrj", 1e-10),
    ("thermal", 1e-10),
    ("modular_delta", 1e-8),
    ("modular_j", 1e-8),
    ("duality", 1e-8),
];

pub fn default_tolerance(family: &str) -> Option<f64> {
    IDENTITY_FAMILIES.iter().chain(MODULAR_FAMILIES.iter()).find(|(f, _)| *f == family).map(|(_, t)| *t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub form: FormKind,
    /// Spacetime dimensions cycled over the trials.
    pub n_values: Vec<usize>,
    pub dim_max: usize,
    /// Fixed ζ; drawn from `[0, 2]` when absent.
    pub zeta: Option<f64>,
    /// Fixed η for `n = 4`; drawn from `[0, 2]` when absent.
    pub eta: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    /// Overrides every family tolerance.
    pub tol: Option<f64>,
    /// Restricts the run to these families; empty means all.
    pub only: Vec<String>,
    pub modular_trials: usize,
    /// Largest tensor factor dimension for the modular suite.
    pub tensor_d_max: usize,
    /// Fixed `(d, β)` for the modular suite instead of the cycled family.
    pub tensor: Option<(usize, f64)>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            form: FormKind::Lorentz,
            n_values: vec![2, 4],
            dim_max: 12,
            zeta: None,
            eta: None,
            seed: 0,
            trials: 100,
            tol: None,
            only: Vec::new(),
            modular_trials: 20,
            tensor_d_max: 4,
            tensor: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.iter().any(|n| !(2..=4).contains(n)) {
            return Err(Error::InvalidParameter("n must lie in {2, 3, 4}".into()));
        }
        if self.dim_max < 1 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        for (name, v) in [("zeta", self.zeta), ("eta", self.eta)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!("{name} must be finite and ≥ 0")));
                }
            }
        }
        if self.eta.is_some() && !self.n_values.contains(&4) {
            return Err(Error::InvalidParameter("eta requires n = 4".into()));
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                return Err(Error::InvalidParameter("tolerance must be ≥ 0".into()));
            }
        }
        for f in &self.only {
            if default_tolerance(f).is_none() {
                return Err(Error::InvalidParameter(format!("unknown check family '{f}'")));
            }
        }
        if !(2..=TENSOR_MAX_D).contains(&self.tensor_d_max) {
            return Err(Error::InvalidParameter(format!("tensor dimension must lie in 2..={TENSOR_MAX_D}")));
        }
        if let Some((d, beta)) = self.tensor {
            if !(2..=TENSOR_MAX_D).contains(&d) || !(beta >= 0.0) || !beta.is_finite() {
                return Err(Error::InvalidParameter("tensor preset needs 2 ≤ d ≤ 6 and finite β ≥ 0".into()));
            }
        }
        Ok(())
    }

    fn wants(&self, family: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|f| f == family)
    }

    fn tolerance(&self, family: &str) -> f64 {
        self.tol.unwrap_or_else(|| default_tolerance(family).expect("known family"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub family: String,
    pub system: String,
    pub seed: u64,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: String,
    pub checks: usize,
    pub failures: usize,
    pub skipped: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub families: Vec<FamilySummary>,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn family(&self, name: &str) -> Option<&FamilySummary> {
        self.families.iter().find(|f| f.family == name)
    }
}

struct Recorder<'a> {
    config: &'a SuiteConfig,
    system: String,
    seed: u64,
    out: Vec<CheckRecord>,
}

impl Recorder<'_> {
    fn record(&mut self, family: &str, residual: Result<f64>) {
        if !self.config.wants(family) {
            return;
        }
        let tolerance = self.config.tolerance(family);
        let rec = match residual {
            Ok(r) => CheckRecord {
                family: family.into(),
                system: self.system.clone(),
                seed: self.seed,
                residual: Some(r),
                tolerance,
                pass: r <= tolerance,
                skipped: None,
            },
            Err(e) => CheckRecord {
                family: family.into(),
                system: self.system.clone(),
                seed: self.seed,
                residual: None,
                tolerance,
                pass: false,
                skipped: Some(format!("error: {e}")),
            },
        };
        self.out.push(rec);
    }

    fn skip(&mut self, family: &str, reason: String) {
        if !self.config.wants(family) {
            return;
        }
        self.out.push(CheckRecord {
            family: family.into(),
            system: self.system.clone(),
            seed: self.seed,
            residual: None,
            tolerance: self.config.tolerance(family),
            pass: true,
            skipped: Some(reason),
        });
    }
}

/// A block-standard skew matrix for either form: `ζ` couples axes 0–1, `η` axes 2–3.
pub fn block_q(form: &BilinearForm, zeta: f64, eta: Option<f64>) -> Result<SkewMatrix> {
    match form.kind {
        FormKind::Lorentz => standard_q(form, zeta, if form.n == 4 { eta } else { None }),
        FormKind::Euclidean => {
            let n = form.n;
            let mut a = RMat::zeros(n, n);
            a[(0, 1)] = zeta;
            a[(1, 0)] = -zeta;
            if let (Some(e), 4) = (eta, n) {
                a[(2, 3)] = e;
                a[(3, 2)] = -e;
            }
            SkewMatrix::new(form.gram() * a, *form)
        }
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

fn identity_checks(config: &SuiteConfig, trial: usize) -> Vec<CheckRecord> {
    let seed = config.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n_values[trial % config.n_values.len()];
    let d = rng.random_range(1..=config.dim_max);
    let zeta = config.zeta.unwrap_or_else(|| rng.random_range(0.0..=2.0));
    let eta = if n == 4 { Some(config.eta.unwrap_or_else(|| rng.random_range(0.0..=2.0))) } else { None };
    let mut rec = Recorder { config, system: format!("random n={n} d={d} zeta={zeta:.6}"), seed, out: Vec::new() };

    let built = random_system(n, d, seed).and_then(|s| {
        if config.form == FormKind::Euclidean {
            // same spectrum read with the Euclidean pairing
            let sys = CovariantSystem::build(
                s.system.generators().to_vec(),
                BilinearForm::euclidean(n),
                s.system.omega().cloned(),
            )?;
            Ok(SuiteSystem { system: sys, ..s })
        } else {
            Ok(s)
        }
    });
    let s = match built {
        Ok(s) => s,
        Err(e) => {
            rec.record("star", Err(e));
            return rec.out;
        }
    };
    let sys = &s.system;
    let form = *sys.form();
    let q = match block_q(&form, zeta, eta) {
        Ok(q) => q,
        Err(e) => {
            rec.record("star", Err(e));
            return rec.out;
        }
    };
    let q2 = match block_q(&form, rng.random_range(0.0..=2.0), eta.map(|_| rng.random_range(0.0..=2.0))) {
        Ok(q) => q,
        Err(e) => {
            rec.record("group_law", Err(e));
            return rec.out;
        }
    };
    let (a, b, c) = (linalg::random_matrix(d, &mut rng), linalg::random_matrix(d, &mut rng), linalg::random_matrix(d, &mut rng));

    rec.record("star", check_star(sys, &a, &q));
    rec.record("homomorphism", check_homomorphism(sys, &a, &b, &q));
    rec.record("associativity", check_associativity(sys, &a, &b, &c, &q));
    rec.record("star_compat", check_star_compat(sys, &a, &b, &q));
    rec.record("group_law", check_group_law(sys, &a, &q, &q2));
    rec.record(
        "roundtrip",
        warp_exact(sys, &a, &q)
            .and_then(|w| warp_exact(sys, &w, &q.neg()))
            .map(|back| linalg::op_norm(&(back - &a))),
    );
    rec.record("vacuum", check_vacuum(sys, &a, Some(&b), &q).map(|r| r.residual.max(r.product_residual)));
    for (name, v) in &s.symmetries {
        let before = rec.system.clone();
        rec.system = format!("{before} sym={name}");
        rec.record("covariance", check_covariance(sys, &a, &q, v));
        rec.system = before;
    }
    let (ia, ib) = &s.invariant_ops;
    for (label, x, y) in [("invariant", ia, ib), ("generic", &a, &b)] {
        match check_commutation(sys, x, y, &q) {
            Ok(r) if r.hypothesis <= COMMUTATION_HYPOTHESIS_TOL => {
                let before = rec.system.clone();
                rec.system = format!("{before} pair={label}");
                rec.record("commutation", Ok(r.conclusion));
                rec.system = before;
            }
            Ok(r) => rec.skip("commutation", format!("{label} pair: hypothesis {:.3e} not met", r.hypothesis)),
            Err(e) => rec.record("commutation", Err(e)),
        }
    }
    rec.record(
        "injectivity",
        check_injectivity(sys, &q).and_then(|r| {
            if r.pass(f64::INFINITY, d) {
                Ok(r.linearity.max(r.roundtrip))
            } else {
                Err(Error::Precondition(format!("warp not injective: image rank {} of {}", r.image_rank, d * d)))
            }
        }),
    );
    let zero = SkewMatrix::zero(form);
    rec.record(
        "zero_q",
        (|| {
            let w = relative(linalg::op_norm(&(warp_exact(sys, &a, &zero)? - &a)), linalg::op_norm(&a));
            let ab = &a * &b;
            let p = relative(linalg::op_norm(&(product_exact(sys, &a, &b, &zero)? - &ab)), linalg::op_norm(&ab));
            Ok(w.max(p))
        })(),
    );
    rec.out
}

fn modular_checks(config: &SuiteConfig, trial: usize) -> Vec<CheckRecord> {
    let seed = config.seed.wrapping_mul(7_000_003).wrapping_add(trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, beta) = config.tensor.unwrap_or_else(|| {
        let span = config.tensor_d_max - 1;
        (2 + trial % span, if trial % 3 == 0 { 0.0 } else { rng.random_range(0.1..2.0) })
    });
    let zeta = config.zeta.unwrap_or_else(|| rng.random_range(0.1..=2.0));
    let mut rec =
        Recorder { config, system: format!("tensor d={d} beta={beta:.6} zeta={zeta:.6}"), seed, out: Vec::new() };
    let model = match tensor_model(d, beta, seed) {
        Ok(m) => m,
        Err(e) => {
            rec.record("bicommutant", Err(e));
            return rec.out;
        }
    };
    let q = match standard_q(model.system.form(), zeta, None) {
        Ok(q) => q,
        Err(e) => {
            rec.record("modular_delta", Err(e));
            return rec.out;
        }
    };
    rec.record("bicommutant", Ok(bicommutant(&model.algebra).equality_residual(&model.algebra)));
    match tomita(&model.algebra, &model.omega) {
        Ok(data) => {
            let r = data.report;
            rec.record("tomita_s", Ok(r.s_on_basis));
            rec.record("tomita_polar", Ok(r.polar));
            rec.record("tomita_jdj", Ok(r.j_delta_j));
            rec.record("tomita_jrj", Ok(r.jrj_commutant));
            let got = data.delta_eigenvalues();
            let want = model.expected_delta_eigenvalues();
            let worst = got.iter().zip(&want).map(|(g, w)| (g - w).abs() / w.max(1.0)).fold(0.0, f64::max);
            rec.record("thermal", Ok(worst));
        }
        Err(e) => {
            for f in ["tomita_s", "tomita_polar", "tomita_jdj", "tomita_jrj", "thermal"] {
                rec.record(f, Err(e.clone()));
            }
        }
    }
    if config.wants("modular_delta") || config.wants("modular_j") {
        match check_modular_invariance(&model.system, &model.algebra, &model.omega, &q) {
            Ok(r) => match r.skipped {
                Some(reason) => {
                    rec.skip("modular_delta", reason.clone());
                    rec.skip("modular_j", reason);
                }
                None => {
                    rec.record("modular_delta", Ok(r.delta_residual));
                    rec.record("modular_j", Ok(r.j_residual));
                }
            },
            Err(e) => {
                rec.record("modular_delta", Err(e.clone()));
                rec.record("modular_j", Err(e));
            }
        }
    }
    if config.wants("duality") {
        match check_commutant_duality(&model.system, &model.algebra, &model.omega, &q) {
            Ok(r) => match r.skipped {
                Some(reason) => rec.skip("duality", reason),
                None => rec.record("duality", Ok(r.residual)),
            },
            Err(e) => rec.record("duality", Err(e)),
        }
    }
    rec.out
}

fn summarize(records: &[CheckRecord], config: &SuiteConfig) -> Vec<FamilySummary> {
    IDENTITY_FAMILIES
        .iter()
        .chain(MODULAR_FAMILIES.iter())
        .filter(|(f, _)| config.wants(f))
        .map(|(f, _)| {
            let rs: Vec<&CheckRecord> = records.iter().filter(|r| r.family == *f).collect();
            FamilySummary {
                family: f.to_string(),
                checks: rs.len(),
                failures: rs.iter().filter(|r| !r.pass).count(),
                skipped: rs.iter().filter(|r| r.skipped.is_some() && r.pass).count(),
                max_residual: rs.iter().filter_map(|r| r.residual).fold(0.0, f64::max),
                tolerance: config.tolerance(f),
            }
        })
        .collect()
}

/// Runs both suites; records are ordered by trial, independent of thread count.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let wants_identity = IDENTITY_FAMILIES.iter().any(|(f, _)| config.wants(f));
    let wants_modular = MODULAR_FAMILIES.iter().any(|(f, _)| config.wants(f));
    let mut records: Vec<CheckRecord> = Vec::new();
    if wants_identity {
        let per: Vec<Vec<CheckRecord>> = (0..config.trials).into_par_iter().map(|t| identity_checks(config, t)).collect();
        records.extend(per.into_iter().flatten());
    }
    if wants_modular {
        let per: Vec<Vec<CheckRecord>> =
            (0..config.modular_trials).into_par_iter().map(|t| modular_checks(config, t)).collect();
        records.extend(per.into_iter().flatten());
    }
    let families = summarize(&records, config);
    let pass = records.iter().all(|r| r.pass);
    Ok(SuiteReport { config: config.clone(), families, records, pass })
}
