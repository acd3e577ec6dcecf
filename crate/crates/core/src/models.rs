//! Seeded model families used by the suites, the CLI and the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariant::{build_system, generators_from_spectrum, CovariantSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMat, CVec, RMat, C64};
use crate::minkowski::{BilinearForm, Vector};
use crate::modular::AlgebraSpec;
use crate::warp::Symmetry;

/// Largest single-factor dimension for tensor models.
pub const TENSOR_MAX_D: usize = 6;

/// `R = M_d ⊗ 1` on `C^d ⊗ C^d` with `P_μ = h_μ ⊗ 1 − 1 ⊗ h_μ` and
/// `Ω = Σ_k c_k |kk⟩`, `c_k² ∝ e^{−β ε_k}`.
///
/// `U(x) = u(x) ⊗ ū(x)` leaves `Ω` invariant; the joint spectrum is
/// `{G(h_i − h_j)}`, symmetric under `x ↦ −x`, so never inside `V₊`.
#[derive(Clone, Debug)]
pub struct TensorModel {
    pub d: usize,
    pub beta: f64,
    /// `ε_k = h₀` eigenvalues.
    pub energies: Vec<f64>,
    /// `h₁` eigenvalues.
    pub momenta: Vec<f64>,
    pub system: CovariantSystem,
    pub algebra: AlgebraSpec,
    pub omega: CVec,
}

impl TensorModel {
    /// Expected modular spectrum `e^{−β(ε_k − ε_l)}`, ascending.
    pub fn expected_delta_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d * self.d);
        for &ek in &self.energies {
            for &el in &self.energies {
                out.push((-self.beta * (ek - el)).exp());
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Matrix unit `|k⟩⟨l|`.
pub fn matrix_unit(d: usize, k: usize, l: usize) -> CMat {
    let mut e = CMat::zeros(d, d);
    e[(k, l)] = C64::new(1.0, 0.0);
    e
}

/// Tensor model with `ε_k = k` and seeded momenta in `[−1, 1]`.
pub fn tensor_model(d: usize, beta: f64, seed: u64) -> Result<TensorModel> {
    if !(2..=TENSOR_MAX_D).contains(&d) {
        return Err(Error::InvalidParameter(format!("tensor model needs 2 ≤ d ≤ {TENSOR_MAX_D}, got {d}")));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be finite and ≥ 0, got {beta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energies: Vec<f64> = (0..d).map(|k| k as f64).collect();
    let momenta: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    tensor_model_with(beta, energies, momenta)
}

pub fn tensor_model_with(beta: f64, energies: Vec<f64>, momenta: Vec<f64>) -> Result<TensorModel> {
    let d = energies.len();
    if momenta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: momenta.len() });
    }
    let id = linalg::identity(d);
    let diag = |v: &[f64]| CMat::from_diagonal(&CVec::from_fn(d, |k, _| C64::new(v[k], 0.0)));
    let generators: Vec<CMat> = [&energies, &momenta]
        .iter()
        .map(|h| {
            let h = diag(h);
            kron(&h, &id) - kron(&id, &h.transpose())
        })
        .collect();
    let z: f64 = energies.iter().map(|e| (-beta * e).exp()).sum();
    let mut omega = CVec::zeros(d * d);
    for (k, e) in energies.iter().enumerate() {
        omega[k * d + k] = C64::new(((-beta * e).exp() / z).sqrt(), 0.0);
    }
    let system = build_system(generators, BilinearForm::lorentz(2), Some(omega.clone()))?;
    let units: Vec<CMat> =
        (0..d).flat_map(|k| (0..d).map(move |l| (k, l))).map(|(k, l)| kron(&matrix_unit(d, k, l), &id)).collect();
    let algebra = AlgebraSpec::generated(d * d, units)?;
    Ok(TensorModel { d, beta, energies, momenta, system, algebra, omega })
}

/// Parses a `tensor:d=4,beta=1.0` preset.
pub fn parse_tensor_preset(s: &str) -> Result<(usize, f64)> {
    let body = s
        .strip_prefix("tensor")
        .ok_or_else(|| Error::Input(format!("unknown model preset '{s}'")))?;
    let body = body.strip_prefix(':').unwrap_or(body);
    let (mut d, mut beta) = (3usize, 1.0f64);
    for part in body.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("expected key=value in model preset, got '{part}'")))?;
        match k.trim() {
            "d" => d = v.trim().parse().map_err(|_| Error::Input(format!("bad d '{v}'")))?,
            "beta" => beta = v.trim().parse().map_err(|_| Error::Input(format!("bad beta '{v}'")))?,
            other => return Err(Error::Input(format!("unknown model key '{other}'"))),
        }
    }
    Ok((d, beta))
}

/// A fixed `n = 2` system with operands, for quadrature regressions.
#[derive(Clone, Debug)]
pub struct RegressionSystem {
    pub name: String,
    pub system: CovariantSystem,
    pub a: CMat,
    pub b: CMat,
}

/// The `d ≤ 4`, `n = 2` regression set. Entry 0 is the three-point system.
pub fn regression_systems() -> Vec<RegressionSystem> {
    let spectra: [(&str, Vec<Vec<f64>>); 5] = [
        ("three-point", vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, -1.0]]),
        ("two-level", vec![vec![0.0, 0.0], vec![1.0, 0.5]]),
        ("ladder-3", vec![vec![0.0, -0.3], vec![0.5, 0.0], vec![1.0, 0.3]]),
        ("generic-4", vec![vec![0.0, 0.0], vec![0.8, -0.4], vec![-0.5, 0.7], vec![1.1, 0.9]]),
        ("degenerate-4", vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.6, -0.6], vec![-0.4, 1.0]]),
    ];
    spectra
        .into_iter()
        .enumerate()
        .map(|(i, (name, spec))| {
            let d = spec.len();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let w = linalg::random_unitary(d, &mut rng);
            let system = build_system(generators_from_spectrum(&spec, 2, Some(&w)), BilinearForm::lorentz(2), None)
                .expect("regression spectra are valid");
            let a = linalg::random_matrix(d, &mut rng);
            let b = linalg::random_matrix(d, &mut rng);
            RegressionSystem { name: name.to_string(), system, a, b }
        })
        .collect()
}

/// A seeded system for the identity suite together with its symmetries.
#[derive(Clone, Debug)]
pub struct SuiteSystem {
    pub seed: u64,
    pub system: CovariantSystem,
    pub symmetries: Vec<(String, Symmetry)>,
    /// Operators commuting with every translation (diagonal in the eigenbasis).
    pub invariant_ops: (CMat, CMat),
}

/// The mirror `x ↦ Rx` under which the random spectra are symmetric.
pub fn mirror(n: usize) -> RMat {
    let mut r = RMat::identity(n, n);
    if n == 2 {
        r[(1, 1)] = -1.0;
    } else {
        r[(n - 2, n - 2)] = -1.0;
        r[(n - 1, n - 1)] = -1.0;
    }
    r
}

/// Random system of dimension `d` in `n` dimensions.
///
/// The spectrum contains `0` (so `Ω` exists) and is closed under [`mirror`],
/// which is then implemented by a permutation unitary.
pub fn random_system(n: usize, d: usize, seed: u64) -> Result<SuiteSystem> {
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let form = BilinearForm::lorentz(n);
    let r = mirror(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vector> = vec![Vector::zeros(n)];
    // mirror pairs, then one mirror-fixed point if the dimension is even
    while pts.len() + 2 <= d {
        let x = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        pts.push(&r * &x);
        pts.push(x);
    }
    if pts.len() < d {
        let mut x = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        for mu in 0..n {
            if r[(mu, mu)] < 0.0 {
                x[mu] = 0.0;
            }
        }
        pts.push(x);
    }
    let g = form.gram();
    // pairing convention x = Gλ, so build generators from λ = Gx
    let eig: Vec<Vec<f64>> = pts.iter().map(|x| (&g * x).iter().cloned().collect()).collect();
    let w = linalg::random_unitary(d, &mut rng);
    let omega = w.column(0).into_owned();
    let system = build_system(generators_from_spectrum(&eig, n, Some(&w)), form, Some(omega))?;

    // permutation implementing the mirror: column j ↦ column of R x_j
    let mut perm = CMat::zeros(d, d);
    for (j, x) in pts.iter().enumerate() {
        let rx = &r * x;
        let k = pts.iter().position(|y| (y - &rx).amax() < 1e-14).expect("spectrum is mirror-closed");
        perm[(k, j)] = C64::new(1.0, 0.0);
    }
    let mirror_u = &w * perm * w.adjoint();
    let a = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let symmetries = vec![
        ("translation".to_string(), Symmetry { unitary: system.translate(&a)?, antiunitary: false, m: RMat::identity(n, n) }),
        ("mirror".to_string(), Symmetry { unitary: mirror_u, antiunitary: false, m: r.clone() }),
        ("conjugation".to_string(), Symmetry { unitary: linalg::identity(d), antiunitary: true, m: -RMat::identity(n, n) }),
    ];
    let diag = |rng: &mut ChaCha8Rng| {
        let dg = CMat::from_diagonal(&linalg::random_vector(d, rng));
        system.from_eigenbasis(&dg)
    };
    let invariant_ops = (diag(&mut rng), diag(&mut rng));
    Ok(SuiteSystem { seed, system, symmetries, invariant_ops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::intertwining_residual;

    #[test]
    fn tensor_model_shape() {
        let m = tensor_model(3, 0.5, 1).unwrap();
        assert_eq!(m.system.dim(), 9);
        assert_eq!(m.algebra.rank(), 9);
        assert!(m.system.omega_invariance_residual().unwrap() < 1e-14);
        assert!((m.omega.norm() - 1.0).abs() < 1e-14);
        assert!(!m.system.spectrum_report().all_in_cone());
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(parse_tensor_preset("tensor:d=4,beta=1.0").unwrap(), (4, 1.0));
        assert_eq!(parse_tensor_preset("tensor").unwrap(), (3, 1.0));
        assert!(parse_tensor_preset("ising:d=2").is_err());
        assert!(parse_tensor_preset("tensor:q=2").is_err());
    }

    #[test]
    fn random_systems_carry_valid_symmetries() {
        for (n, d, seed) in [(2, 5, 1), (4, 12, 2), (4, 1, 3), (2, 2, 4)] {
            let s = random_system(n, d, seed).unwrap();
            assert_eq!(s.system.dim(), d);
            assert!(s.system.omega_invariance_residual().unwrap() < 1e-12);
            for (name, v) in &s.symmetries {
                let r = intertwining_residual(&s.system, v).unwrap();
                assert!(r < 1e-10, "{name}: {r:e}");
            }
        }
    }

    #[test]
    fn regression_set_is_small() {
        let set = regression_systems();
        assert!(set.len() >= 4);
        assert!(set.iter().all(|r| r.system.dim() <= 4 && r.system.n() == 2));
    }
}
