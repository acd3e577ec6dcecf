//! Bilinear forms, light cone and wedge geometry, Poincaré elements and the
//! admissible deformation matrices.
//!
//! Coordinates are `(x₀, x₁, …, x_{n−1})` with `x₀` the time component. The
//! reference wedge is `W = {x : x₁ ≥ |x₀|}`; its causal complement is
//! `W′ = −W = jW`. Transposes of Lorentz matrices are always taken with
//! respect to the bilinear form, `Mᵀ = G Mᵗ G`, so that `x·(My) = (Mᵀx)·y`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};

pub type Vector = RVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Lorentz,
    Euclidean,
}

impl std::str::FromStr for FormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentz" => Ok(FormKind::Lorentz),
            "euclidean" => Ok(FormKind::Euclidean),
            other => Err(Error::InvalidParameter(format!("unknown form '{other}'"))),
        }
    }
}

/// A diagonal symmetric bilinear form with determinant ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BilinearForm {
    pub kind: FormKind,
    pub n: usize,
}

impl BilinearForm {
    pub fn new(kind: FormKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension n = {n} < 2")));
        }
        Ok(BilinearForm { kind, n })
    }

    pub fn lorentz(n: usize) -> Self {
        Self::new(FormKind::Lorentz, n).expect("n >= 2")
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(FormKind::Euclidean, n).expect("n >= 2")
    }

    /// Diagonal entry `G_μμ`.
    #[inline]
    pub fn sign(&self, mu: usize) -> f64 {
        match self.kind {
            FormKind::Lorentz if mu > 0 => -1.0,
            _ => 1.0,
        }
    }

    pub fn gram(&self) -> RMat {
        RMat::from_diagonal(&RVec::from_fn(self.n, |mu, _| self.sign(mu)))
    }

    pub fn pair(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        Ok(self.pair_unchecked(x, y))
    }

    #[inline]
    pub fn pair_unchecked(&self, x: &Vector, y: &Vector) -> f64 {
        (0..self.n).map(|mu| self.sign(mu) * x[mu] * y[mu]).sum()
    }

    /// `G v`; since `G² = 1` this is its own inverse.
    pub fn lower(&self, v: &Vector) -> Vector {
        RVec::from_fn(self.n, |mu, _| self.sign(mu) * v[mu])
    }

    /// Transpose with respect to the form: `G Mᵗ G`.
    pub fn transpose(&self, m: &RMat) -> RMat {
        let g = self.gram();
        &g * m.transpose() * &g
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: len });
        }
        Ok(())
    }
}

/// `pair(x, y)` under the given form.
pub fn pair(x: &Vector, y: &Vector, form: &BilinearForm) -> Result<f64> {
    form.pair(x, y)
}

/// Membership in the closed (or open, with `strict`) forward light cone.
pub fn in_forward_cone(p: &Vector, strict: bool) -> bool {
    in_forward_cone_tol(p, strict, 0.0)
}

pub fn in_forward_cone_tol(p: &Vector, strict: bool, tol: f64) -> bool {
    let spatial = p.iter().skip(1).map(|v| v * v).sum::<f64>().sqrt();
    if strict {
        p[0] > spatial + tol
    } else {
        p[0] >= spatial - tol
    }
}

/// `x ↦ Λx + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincareElement {
    pub translation: Vector,
    pub lorentz: RMat,
}

impl PoincareElement {
    pub fn new(translation: Vector, lorentz: RMat) -> Result<Self> {
        if lorentz.nrows() != lorentz.ncols() || lorentz.nrows() != translation.len() {
            return Err(Error::DimensionMismatch {
                expected: translation.len(),
                found: lorentz.nrows(),
            });
        }
        Ok(PoincareElement { translation, lorentz })
    }

    pub fn identity(n: usize) -> Self {
        PoincareElement { translation: RVec::zeros(n), lorentz: RMat::identity(n, n) }
    }

    pub fn translation(a: Vector) -> Self {
        let n = a.len();
        PoincareElement { translation: a, lorentz: RMat::identity(n, n) }
    }

    pub fn linear(lorentz: RMat) -> Self {
        let n = lorentz.nrows();
        PoincareElement { translation: RVec::zeros(n), lorentz }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn act(&self, x: &Vector) -> Vector {
        &self.lorentz * x + &self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &PoincareElement) -> PoincareElement {
        PoincareElement {
            translation: &self.lorentz * &other.translation + &self.translation,
            lorentz: &self.lorentz * &other.lorentz,
        }
    }

    pub fn inverse(&self) -> PoincareElement {
        let inv = self
            .lorentz
            .clone()
            .try_inverse()
            .expect("Lorentz part must be invertible");
        PoincareElement { translation: -(&inv * &self.translation), lorentz: inv }
    }

    pub fn determinant(&self) -> f64 {
        self.lorentz.determinant()
    }

    pub fn is_proper(&self) -> bool {
        self.determinant() > 0.0
    }

    pub fn is_orthochronous(&self) -> bool {
        self.lorentz[(0, 0)] >= 1.0 - 1e-12
    }

    /// `‖Λᵗ G Λ − G‖_max`.
    pub fn form_defect(&self, form: &BilinearForm) -> f64 {
        let g = form.gram();
        (self.lorentz.transpose() * &g * &self.lorentz - g).amax()
    }
}

/// Boost `ϑ(t)` in the 0–1 plane with rapidity `2πt`.
pub fn boost(n: usize, t: f64) -> PoincareElement {
    let mut m = RMat::identity(n, n);
    let (c, s) = ((2.0 * std::f64::consts::PI * t).cosh(), (2.0 * std::f64::consts::PI * t).sinh());
    m[(0, 0)] = c;
    m[(0, 1)] = s;
    m[(1, 0)] = s;
    m[(1, 1)] = c;
    PoincareElement::linear(m)
}

/// The reflection `j x = (−x₀, −x₁, x₂, …)`; proper but not orthochronous.
pub fn reflection_j(n: usize) -> PoincareElement {
    let mut m = RMat::identity(n, n);
    m[(0, 0)] = -1.0;
    m[(1, 1)] = -1.0;
    PoincareElement::linear(m)
}

/// Spatial rotation by `angle` in the (i, k) coordinate plane, `1 ≤ i, k`.
pub fn rotation(n: usize, i: usize, k: usize, angle: f64) -> PoincareElement {
    assert!(i >= 1 && k >= 1 && i != k && i < n && k < n, "spatial plane required");
    let mut m = RMat::identity(n, n);
    let (s, c) = angle.sin_cos();
    m[(i, i)] = c;
    m[(k, k)] = c;
    m[(i, k)] = -s;
    m[(k, i)] = s;
    PoincareElement::linear(m)
}

/// A wedge `λW`, represented by its carrier `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wedge {
    pub carrier: PoincareElement,
}

impl Wedge {
    pub fn reference(n: usize) -> Self {
        Wedge { carrier: PoincareElement::identity(n) }
    }

    pub fn reference_complement(n: usize) -> Self {
        Wedge { carrier: reflection_j(n) }
    }

    pub fn dim(&self) -> usize {
        self.carrier.dim()
    }

    pub fn transformed(&self, lambda: &PoincareElement) -> Wedge {
        Wedge { carrier: lambda.compose(&self.carrier) }
    }

    /// Causal complement `(λW)′ = λ(W′) = λjW`.
    pub fn complement(&self) -> Wedge {
        Wedge { carrier: self.carrier.compose(&reflection_j(self.dim())) }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.contains_tol(x, 1e-12)
    }

    /// Pullback membership: `x ∈ λW ⇔ λ⁻¹x ∈ W`.
    pub fn contains_tol(&self, x: &Vector, tol: f64) -> bool {
        let y = self.carrier.inverse().act(x);
        y[1] >= y[0].abs() - tol
    }

    /// Deterministic cloud of points inside the wedge.
    pub fn point_cloud(&self, samples: usize, seed: u64) -> Vec<Vector> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|k| {
                let scale = [0.05, 1.0, 10.0][k % 3];
                let x0: f64 = rng.random_range(-scale..scale);
                // some points hug the boundary, others sit deep inside
                let depth = if k % 4 == 0 { 1e-6 * scale } else { rng.random_range(0.0..scale) };
                let mut v = RVec::zeros(n);
                v[0] = x0;
                v[1] = x0.abs() + depth;
                for mu in 2..n {
                    v[mu] = rng.random_range(-scale..scale);
                }
                self.carrier.act(&v)
            })
            .collect()
    }
}

pub fn in_wedge(x: &Vector, w: &Wedge) -> bool {
    w.contains(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WedgeRelation {
    Preserves,
    Flips,
    Neither,
}

/// Classifies `λ` by where it sends a deterministic point cloud of `w`.
pub fn classify_wedge_map(lambda: &PoincareElement, w: &Wedge, samples: usize, seed: u64) -> WedgeRelation {
    let cloud = w.point_cloud(samples, seed);
    let complement = w.complement();
    let images: Vec<Vector> = cloud.iter().map(|x| lambda.act(x)).collect();
    let tol = |x: &Vector| 1e-9 * (1.0 + x.amax());
    if images.iter().all(|y| w.contains_tol(y, tol(y))) {
        WedgeRelation::Preserves
    } else if images.iter().all(|y| complement.contains_tol(y, tol(y))) {
        WedgeRelation::Flips
    } else {
        WedgeRelation::Neither
    }
}

/// A real matrix `Q` skew with respect to a form: `x·Qy = −y·Qx`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix {
    q: RMat,
    form: BilinearForm,
    zeta: Option<f64>,
    eta: Option<f64>,
}

/// Tolerance on `‖GQ + (GQ)ᵗ‖_max` for accepting a matrix as skew.
pub const SKEW_TOL: f64 = 1e-12;

impl SkewMatrix {
    pub fn new(q: RMat, form: BilinearForm) -> Result<Self> {
        if q.nrows() != form.n || q.ncols() != form.n {
            return Err(Error::DimensionMismatch { expected: form.n, found: q.nrows() });
        }
        let dev = skew_deviation(&q, &form);
        if dev > SKEW_TOL * (1.0 + q.amax()) {
            return Err(Error::NotSkew(dev));
        }
        Ok(SkewMatrix { q, form, zeta: None, eta: None })
    }

    pub fn zero(form: BilinearForm) -> Self {
        SkewMatrix { q: RMat::zeros(form.n, form.n), form, zeta: Some(0.0), eta: None }
    }

    pub fn matrix(&self) -> &RMat {
        &self.q
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn zeta(&self) -> Option<f64> {
        self.zeta
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn n(&self) -> usize {
        self.form.n
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    pub fn apply(&self, y: &Vector) -> Vector {
        &self.q * y
    }

    /// `x·Qy` under the form.
    #[inline]
    pub fn pair(&self, x: &Vector, y: &Vector) -> f64 {
        self.form.pair_unchecked(x, &(&self.q * y))
    }

    /// The bilinear matrix `GQ`, so that `x·Qy = xᵗ (GQ) y`.
    pub fn lowered(&self) -> RMat {
        self.form.gram() * &self.q
    }

    pub fn scaled(&self, s: f64) -> SkewMatrix {
        SkewMatrix {
            q: &self.q * s,
            form: self.form,
            zeta: self.zeta.map(|z| z * s),
            eta: self.eta.map(|e| e * s),
        }
    }

    pub fn neg(&self) -> SkewMatrix {
        SkewMatrix { q: -&self.q, form: self.form, zeta: None, eta: None }
    }

    pub fn add(&self, other: &SkewMatrix) -> Result<SkewMatrix> {
        if self.form != other.form {
            return Err(Error::InvalidParameter("forms differ".into()));
        }
        Ok(SkewMatrix { q: &self.q + &other.q, form: self.form, zeta: None, eta: None })
    }

    /// `M Q Mᵀ` with the form transpose; skew whenever `Q` is.
    pub fn conjugated(&self, m: &RMat) -> SkewMatrix {
        let q = m * &self.q * self.form.transpose(m);
        SkewMatrix { q, form: self.form, zeta: None, eta: None }
    }

    pub fn is_standard(&self) -> bool {
        self.zeta.is_some()
    }

    pub fn to_json(&self) -> SkewMatrixJson {
        SkewMatrixJson {
            form: self.form.kind,
            n: self.form.n,
            zeta: self.zeta,
            eta: self.eta,
            matrix: row_major(&self.q),
        }
    }

    pub fn from_json(json: &SkewMatrixJson) -> Result<Self> {
        let form = BilinearForm::new(json.form, json.n)?;
        let q = from_row_major(&json.matrix, json.n)?;
        let mut s = SkewMatrix::new(q, form)?;
        s.zeta = json.zeta;
        s.eta = json.eta;
        Ok(s)
    }
}

/// `‖GQ + (GQ)ᵗ‖_max`.
pub fn skew_deviation(q: &RMat, form: &BilinearForm) -> f64 {
    let gq = form.gram() * q;
    (&gq + gq.transpose()).amax()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewMatrixJson {
    pub form: FormKind,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<f64>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareJson {
    pub translation: Vec<f64>,
    pub lorentz: Vec<Vec<f64>>,
}

impl PoincareElement {
    pub fn to_json(&self) -> PoincareJson {
        PoincareJson {
            translation: self.translation.iter().cloned().collect(),
            lorentz: row_major(&self.lorentz),
        }
    }

    pub fn from_json(json: &PoincareJson) -> Result<Self> {
        let n = json.translation.len();
        let m = from_row_major(&json.lorentz, n)?;
        PoincareElement::new(RVec::from_vec(json.translation.clone()), m)
    }
}

fn row_major(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

fn from_row_major(rows: &[Vec<f64>], n: usize) -> Result<RMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input(format!("expected a {n}×{n} row-major array")));
    }
    Ok(RMat::from_fn(n, n, |r, c| rows[r][c]))
}

/// The standard admissible matrix: `ζ` in the 0–1 block and, for `n = 4`, `η` in the 2–3 block.
pub fn standard_q(form: &BilinearForm, zeta: f64, eta: Option<f64>) -> Result<SkewMatrix> {
    let n = form.n;
    if zeta < 0.0 || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!("ζ = {zeta} must be finite and ≥ 0")));
    }
    if eta.is_some() && n != 4 {
        return Err(Error::InvalidParameter(format!("η is only admitted for n = 4 (n = {n})")));
    }
    let mut q = RMat::zeros(n, n);
    q[(0, 1)] = zeta;
    q[(1, 0)] = zeta;
    if let Some(e) = eta {
        q[(2, 3)] = e;
        q[(3, 2)] = -e;
    }
    let mut s = SkewMatrix::new(q, *form)?;
    s.zeta = Some(zeta);
    s.eta = eta;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictMode {
    Analytic,
    Sampled,
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub mode: VerdictMode,
    pub residual: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `Q V₊ ⊂ W`.
    pub cone_into_wedge: Verdict,
    /// `ΛQΛᵀ = Q` for wedge-preserving `λ`.
    pub preserving_invariance: Verdict,
    /// `ΛQΛᵀ = −Q` for wedge-flipping `λ`.
    pub flipping_antiinvariance: Verdict,
    pub tolerance: f64,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.cone_into_wedge.pass && self.preserving_invariance.pass && self.flipping_antiinvariance.pass
    }
}

pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Random forward-cone vector.
fn sample_cone_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    let mut v = RVec::zeros(n);
    let mut spatial = 0.0;
    for mu in 1..n {
        v[mu] = rng.random_range(-3.0..3.0);
        spatial += v[mu] * v[mu];
    }
    v[0] = spatial.sqrt() + if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..3.0) };
    v
}

/// Random element of the stabilizer class of `W`: boost, transverse rotations, translation into `W`.
pub fn sample_wedge_preserving(n: usize, rng: &mut ChaCha8Rng) -> PoincareElement {
    const FIXED_T: [f64; 4] = [0.3, -0.3, 1.0, -1.0];
    let t = if rng.random_bool(0.5) {
        FIXED_T[rng.random_range(0..4)]
    } else {
        rng.random_range(-1.0..1.0)
    };
    let mut lambda = boost(n, t);
    for i in 2..n {
        for k in (i + 1)..n {
            let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            lambda = rotation(n, i, k, angle).compose(&lambda);
        }
    }
    let a = Wedge::reference(n).point_cloud(1, rng.random())[0].clone();
    PoincareElement::translation(a).compose(&lambda)
}

/// Random wedge-flipping element: a π-rotation in a plane `(1, k)` composed
/// with a wedge-preserving one. `None` for `n = 2` where no proper
/// orthochronous flip exists.
pub fn sample_wedge_flipping(n: usize, rng: &mut ChaCha8Rng) -> Option<PoincareElement> {
    if n < 3 {
        return None;
    }
    let k = rng.random_range(2..n);
    let flip = rotation(n, 1, k, std::f64::consts::PI);
    Some(flip.compose(&sample_wedge_preserving(n, rng)))
}

/// Roundoff scale of `ΛQΛᵀ`; residuals of (ii) and (iii) are relative to it.
fn conjugation_scale(q: &SkewMatrix, lambda: &RMat) -> f64 {
    let l = lambda.amax();
    l * l * (1.0 + q.matrix().amax())
}

/// Checks the three admissibility conditions on a Lorentz-skew `Q`.
pub fn check_admissible(q: &SkewMatrix, samples: usize, seed: u64) -> Result<AdmissibilityReport> {
    let form = q.form();
    if form.kind != FormKind::Lorentz {
        return Err(Error::InvalidParameter("admissibility needs the Lorentz form".into()));
    }
    let n = form.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = Wedge::reference(n);

    // (i): for the standard block form Q(p₀,p₁,…) = (ζp₁, ζp₀, …), which lies in W iff ζ ≥ 0
    let cone_into_wedge = if q.is_standard() {
        let zeta = q.zeta().unwrap_or(0.0);
        Verdict { pass: zeta >= 0.0, mode: VerdictMode::Analytic, residual: (-zeta).max(0.0), samples: 0 }
    } else {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let p = sample_cone_vector(n, &mut rng);
            let y = q.apply(&p);
            worst = worst.max(y[0].abs() - y[1]);
        }
        Verdict { pass: worst <= ADMISSIBILITY_TOL, mode: VerdictMode::Sampled, residual: worst.max(0.0), samples }
    };

    let mut worst_ii: f64 = 0.0;
    let mut misclassified = 0usize;
    for _ in 0..samples {
        let lambda = sample_wedge_preserving(n, &mut rng);
        if classify_wedge_map(&lambda, &reference, 16, rng.random()) != WedgeRelation::Preserves {
            misclassified += 1;
        }
        let conj = q.conjugated(&lambda.lorentz);
        worst_ii = worst_ii.max((conj.matrix() - q.matrix()).amax() / conjugation_scale(q, &lambda.lorentz));
    }
    let preserving_invariance = Verdict {
        pass: worst_ii <= ADMISSIBILITY_TOL && misclassified == 0,
        mode: VerdictMode::Sampled,
        residual: worst_ii,
        samples,
    };

    let flipping_antiinvariance = if n < 3 {
        Verdict { pass: true, mode: VerdictMode::Vacuous, residual: 0.0, samples: 0 }
    } else {
        let mut worst: f64 = 0.0;
        let mut misclassified = 0usize;
        for _ in 0..samples {
            let lambda = sample_wedge_flipping(n, &mut rng).expect("n >= 3");
            if classify_wedge_map(&lambda, &reference, 16, rng.random()) != WedgeRelation::Flips {
                misclassified += 1;
            }
            let conj = q.conjugated(&lambda.lorentz);
            worst = worst.max((conj.matrix() + q.matrix()).amax() / conjugation_scale(q, &lambda.lorentz));
        }
        Verdict {
            pass: worst <= ADMISSIBILITY_TOL && misclassified == 0,
            mode: VerdictMode::Sampled,
            residual: worst,
            samples,
        }
    };

    Ok(AdmissibilityReport {
        cone_into_wedge,
        preserving_invariance,
        flipping_antiinvariance,
        tolerance: ADMISSIBILITY_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub n: usize,
    pub samples: usize,
    pub radius: f64,
    /// Dimension of the span of `{ΛQΛᵀ − Q}`.
    pub rank: usize,
    /// `‖Q − P Q‖ / ‖Q‖` with `P` the orthogonal projection onto the span.
    pub residual: f64,
    pub contains_q: bool,
}

/// Generators of the Lorentz algebra: boosts in (0, i), rotations in (i, k).
fn lorentz_algebra_basis(n: usize) -> Vec<RMat> {
    let mut out = Vec::new();
    for i in 1..n {
        let mut k = RMat::zeros(n, n);
        k[(0, i)] = 1.0;
        k[(i, 0)] = 1.0;
        out.push(k);
    }
    for i in 1..n {
        for j in (i + 1)..n {
            let mut r = RMat::zeros(n, n);
            r[(i, j)] = -1.0;
            r[(j, i)] = 1.0;
            out.push(r);
        }
    }
    out
}

/// Least-squares test that `Q` lies in the span of `{ΛQΛᵀ − Q}` for `Λ`
/// sampled in a neighborhood of the identity.
pub fn span_deformation_directions(
    q: &SkewMatrix,
    neighborhood_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<SpanReport> {
    let n = q.n();
    if n < 3 {
        return Err(Error::Precondition("span statement requires n ≥ 3".into()));
    }
    if q.is_zero() {
        return Err(Error::Precondition("Q must be nonzero".into()));
    }
    if neighborhood_radius <= 0.0 || samples == 0 {
        return Err(Error::InvalidParameter("radius and samples must be positive".into()));
    }
    let basis = lorentz_algebra_basis(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = DMatrix::<f64>::zeros(n * n, samples);
    for s in 0..samples {
        let mut x = RMat::zeros(n, n);
        for b in &basis {
            x += b * rng.random_range(-neighborhood_radius..neighborhood_radius);
        }
        let lambda = x.exp();
        let diff = q.conjugated(&lambda).matrix() - q.matrix();
        columns.set_column(s, &DVector::from_column_slice(diff.as_slice()));
    }
    let svd = columns.svd(true, false);
    let u = svd.u.expect("u requested");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * top.max(f64::MIN_POSITIVE))
        .collect();
    let target = DVector::from_column_slice(q.matrix().as_slice());
    let mut projected = DVector::<f64>::zeros(n * n);
    for &i in &keep {
        let col = u.column(i);
        projected += col * col.dot(&target);
    }
    let residual = (&target - projected).norm() / target.norm();
    Ok(SpanReport {
        n,
        samples,
        radius: neighborhood_radius,
        rank: keep.len(),
        residual,
        contains_q: residual <= 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        RVec::from_row_slice(xs)
    }

    #[test]
    fn pair_examples() {
        let l2 = BilinearForm::lorentz(2);
        assert_eq!(pair(&v(&[1.0, 0.0]), &v(&[1.0, 0.0]), &l2).unwrap(), 1.0);
        assert_eq!(pair(&v(&[1.0, 1.0]), &v(&[1.0, 1.0]), &l2).unwrap(), 0.0);
        let l4 = BilinearForm::lorentz(4);
        assert_eq!(pair(&v(&[1.0, 0.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0, 0.0]), &l4).unwrap(), 0.0);
        assert!(matches!(
            pair(&v(&[1.0, 0.0, 0.0]), &v(&[1.0, 0.0]), &l2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn forward_cone_examples() {
        assert!(in_forward_cone(&v(&[1.0, 0.0]), false));
        assert!(!in_forward_cone(&v(&[1.0, 1.0]), true));
        assert!(in_forward_cone(&v(&[1.0, 1.0]), false));
        assert!(!in_forward_cone(&v(&[0.5, 1.0]), false));
        assert!(!in_forward_cone(&v(&[0.0, 0.0]), true));
    }

    #[test]
    fn wedge_examples() {
        let w = Wedge::reference(2);
        assert!(in_wedge(&v(&[0.0, 1.0]), &w));
        assert!(in_wedge(&v(&[1.0, 1.0]), &w));
        assert!(!in_wedge(&v(&[0.0, -1.0]), &w));
        assert!(in_wedge(&v(&[0.0, -1.0]), &w.complement()));
    }

    #[test]
    fn boost_examples() {
        let id = boost(3, 0.0);
        assert_eq!(id.lorentz, RMat::identity(3, 3));
        let t = 0.37;
        let e = (2.0 * std::f64::consts::PI * t).exp();
        let img = boost(3, t).act(&v(&[1.0, 1.0, 0.0]));
        assert!((img - v(&[e, e, 0.0])).amax() < 1e-12 * e);
        let prod = boost(4, 0.1).compose(&boost(4, 0.2));
        assert!((prod.lorentz - boost(4, 0.3).lorentz).amax() < 1e-12);
    }

    #[test]
    fn reflection_examples() {
        let j = reflection_j(3);
        assert_eq!(j.act(&v(&[0.0, 1.0, 2.0])), v(&[0.0, -1.0, 2.0]));
        assert_eq!(reflection_j(2).act(&v(&[1.0, 0.0])), v(&[-1.0, 0.0]));
        assert_eq!(j.compose(&j), PoincareElement::identity(3));
        assert!(!j.is_orthochronous());
        let jb = j.compose(&boost(3, 0.4)).compose(&j);
        assert!((jb.lorentz - boost(3, 0.4).lorentz).amax() < 1e-12);
        let q = standard_q(&BilinearForm::lorentz(4), 1.3, Some(0.7)).unwrap();
        let jq = q.conjugated(&reflection_j(4).lorentz);
        assert_eq!(jq.matrix(), q.matrix());
    }

    #[test]
    fn standard_q_examples() {
        let q = standard_q(&BilinearForm::lorentz(2), 1.0, None).unwrap();
        assert_eq!(q.matrix(), &RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let z = standard_q(&BilinearForm::lorentz(4), 0.0, Some(0.0)).unwrap();
        assert!(z.is_zero());
        assert!(standard_q(&BilinearForm::lorentz(3), 1.0, Some(1.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q4 = standard_q(&BilinearForm::lorentz(4), 1.1, Some(-0.4)).unwrap();
        for _ in 0..100 {
            let x = RVec::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
            let y = RVec::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
            assert!((q4.pair(&x, &y) + q4.pair(&y, &x)).abs() <= 1e-12 * 100.0);
        }
    }

    #[test]
    fn non_skew_matrix_rejected() {
        let m = RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(SkewMatrix::new(m, BilinearForm::lorentz(2)), Err(Error::NotSkew(_))));
        // the same matrix is skew for the Euclidean form
        let m = RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(SkewMatrix::new(m, BilinearForm::euclidean(2)).is_ok());
    }

    #[test]
    fn admissibility_examples() {
        let q = standard_q(&BilinearForm::lorentz(2), 1.0, None).unwrap();
        assert_eq!(q.apply(&v(&[1.0, 0.0])), v(&[0.0, 1.0]));
        let report = check_admissible(&q, 200, 1).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.cone_into_wedge.mode, VerdictMode::Analytic);
        assert_eq!(report.flipping_antiinvariance.mode, VerdictMode::Vacuous);

        let b = boost(2, 0.77);
        assert!((q.conjugated(&b.lorentz).matrix() - q.matrix()).amax() < 1e-12);

        let q4 = standard_q(&BilinearForm::lorentz(4), 1.0, Some(0.5)).unwrap();
        let flip = rotation(4, 1, 2, std::f64::consts::PI);
        assert!((q4.conjugated(&flip.lorentz).matrix() + q4.matrix()).amax() < 1e-12);
        assert!(check_admissible(&q4, 200, 2).unwrap().all_pass());
    }

    #[test]
    fn non_admissible_matrix_fails_cone_condition() {
        // ζ < 0 sends the cone into W′
        let mut m = RMat::zeros(2, 2);
        m[(0, 1)] = -1.0;
        m[(1, 0)] = -1.0;
        let q = SkewMatrix::new(m, BilinearForm::lorentz(2)).unwrap();
        let report = check_admissible(&q, 100, 3).unwrap();
        assert!(!report.cone_into_wedge.pass);
        assert_eq!(report.cone_into_wedge.mode, VerdictMode::Sampled);
    }

    #[test]
    fn classification_examples() {
        let w3 = Wedge::reference(3);
        let t = PoincareElement::translation(v(&[0.0, 1.0, 0.0]));
        assert_eq!(classify_wedge_map(&t, &w3, 200, 1), WedgeRelation::Preserves);
        let w2 = Wedge::reference(2);
        assert_eq!(classify_wedge_map(&reflection_j(2), &w2, 200, 1), WedgeRelation::Flips);
        let r = rotation(3, 1, 2, std::f64::consts::FRAC_PI_4);
        assert_eq!(classify_wedge_map(&r, &w3, 200, 1), WedgeRelation::Neither);
        let back = PoincareElement::translation(v(&[0.0, -1.0, 0.0]));
        assert_eq!(classify_wedge_map(&back, &w3, 200, 1), WedgeRelation::Neither);
    }

    #[test]
    fn transformed_wedge_membership_is_composition_stable() {
        let l1 = boost(3, 0.2).compose(&PoincareElement::translation(v(&[0.3, 1.0, -2.0])));
        let l2 = rotation(3, 1, 2, 0.9);
        let w = Wedge::reference(3).transformed(&l1).transformed(&l2);
        let direct = Wedge { carrier: l2.compose(&l1) };
        for x in Wedge::reference(3).point_cloud(50, 4) {
            let y = l2.act(&l1.act(&x));
            assert!(w.contains_tol(&y, 1e-9));
            assert!(direct.contains_tol(&y, 1e-9));
        }
    }

    #[test]
    fn span_examples() {
        let q3 = standard_q(&BilinearForm::lorentz(3), 1.0, None).unwrap();
        let rep = span_deformation_directions(&q3, 0.2, 50, 11).unwrap();
        assert!(rep.residual <= 1e-10, "{rep:?}");
        let q4 = standard_q(&BilinearForm::lorentz(4), 1.0, Some(0.0)).unwrap();
        let rep = span_deformation_directions(&q4, 0.2, 50, 12).unwrap();
        assert!(rep.residual <= 1e-10, "{rep:?}");
        let zero = SkewMatrix::zero(BilinearForm::lorentz(3));
        assert!(span_deformation_directions(&zero, 0.2, 50, 1).is_err());
        let q2 = standard_q(&BilinearForm::lorentz(2), 1.0, None).unwrap();
        assert!(span_deformation_directions(&q2, 0.2, 50, 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let q = standard_q(&BilinearForm::lorentz(4), 0.5, Some(1.5)).unwrap();
        let s = serde_json::to_string(&q.to_json()).unwrap();
        let back = SkewMatrix::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, q);
        let p = boost(3, 0.1).compose(&PoincareElement::translation(v(&[1.0, 2.0, 3.0])));
        let back = PoincareElement::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }
}
