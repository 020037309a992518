//! Hybrid models: per-regime drift and diffusion families coupled with a
//! switching spec, plus the generator `𝒜` and grid checks of Lyapunov
//! premises.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::threshold::{Axis, SwitchingSpec, ThresholdError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("regime {regime} out of range for {n} regimes")]
    RegimeOutOfRange { regime: usize, n: usize },
    #[error("state has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{family}: expected {expected} per-regime coefficients, got {got}")]
    CoefficientCount { family: &'static str, expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("switching spec has {got} regimes, model declares {expected}")]
    RegimeCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Switching(#[from] ThresholdError),
    #[error("test function is singular at {0:?}")]
    SingularPoint(Vec<f64>),
    #[error("scan region contains no grid points")]
    EmptyRegion,
}

/// Scalar multiple of the identity or a full `d × d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Coefficient {
    fn check(&self, d: usize) -> Result<(), ModelError> {
        match self {
            Coefficient::Scalar(v) if v.is_finite() => Ok(()),
            Coefficient::Matrix(m) if m.len() == d && m.iter().all(|r| r.len() == d && r.iter().all(|v| v.is_finite())) => Ok(()),
            _ => Err(ModelError::InvalidParameter(format!("coefficient {self:?} is not a finite scalar or {d}x{d} matrix"))),
        }
    }

    #[inline]
    fn entry(&self, r: usize, c: usize) -> f64 {
        match self {
            Coefficient::Scalar(v) => {
                if r == c {
                    *v
                } else {
                    0.0
                }
            }
            Coefficient::Matrix(m) => m[r][c],
        }
    }

    /// Frobenius norm, an upper bound on the operator norm.
    fn norm(&self) -> f64 {
        match self {
            Coefficient::Scalar(v) => v.abs(),
            Coefficient::Matrix(m) => m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Coefficient::Scalar(v) => out.iter_mut().zip(x).for_each(|(o, xi)| *o = v * xi),
            Coefficient::Matrix(m) => {
                for (o, row) in out.iter_mut().zip(m) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    fn is_regime_independent_of(coeffs: &[Coefficient]) -> bool {
        coeffs.windows(2).all(|w| w[0] == w[1])
    }
}

/// `sgn(x)` with `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Drift families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    /// `b_i·x`.
    Linear { b: Vec<Coefficient> },
    /// `b_i·sgn(x)(|x|^p ∧ |x|)`, one-dimensional.
    PowerSgn { b: Vec<f64>, p: f64 },
    /// `b̂_i·tanh(x) + Z·x`, tanh taken componentwise.
    Bounded {
        b_hat: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<Coefficient>,
    },
}

/// Diffusion families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionSpec {
    /// Constant `σ`; one entry shared by all regimes or one per regime.
    Constant { sigma: Vec<Coefficient> },
    /// `σ_i(|x|^q ∧ |x|)`, one-dimensional.
    Power { sigma: Vec<f64>, q: f64 },
    /// `σ_i(x² ∧ |x|)`, one-dimensional.
    OuCutoff { sigma: Vec<f64> },
}

impl DriftSpec {
    fn validate(&self, d: usize, n: usize) -> Result<(), ModelError> {
        let count = |family, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(ModelError::CoefficientCount { family, expected: n, got })
            }
        };
        match self {
            DriftSpec::Linear { b } => {
                count("linear drift", b.len())?;
                b.iter().try_for_each(|c| c.check(d))
            }
            DriftSpec::PowerSgn { b, p } => {
                count("power-sgn drift", b.len())?;
                require_one_dimensional("power-sgn drift", d)?;
                if !(*p > 1.0 && p.is_finite()) || b.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidParameter(format!("power-sgn drift needs p > 1, got {p}")));
                }
                Ok(())
            }
            DriftSpec::Bounded { b_hat, z } => {
                count("bounded drift", b_hat.len())?;
                if b_hat.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidParameter("bounded drift amplitudes must be finite".into()));
                }
                z.as_ref().map_or(Ok(()), |z| z.check(d))
            }
        }
    }

    #[inline]
    fn eval_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        match self {
            DriftSpec::Linear { b } => b[i].apply_into(x, out),
            DriftSpec::PowerSgn { b, p } => {
                let a = x[0].abs();
                out[0] = b[i] * sgn(x[0]) * a.powf(*p).min(a);
            }
            DriftSpec::Bounded { b_hat, z } => {
                match z {
                    Some(z) => z.apply_into(x, out),
                    None => out.iter_mut().for_each(|o| *o = 0.0),
                }
                out.iter_mut().zip(x).for_each(|(o, xi)| *o += b_hat[i] * xi.tanh());
            }
        }
    }

    /// Global Lipschitz constant of `x ↦ b(x, i)`.
    pub fn lipschitz(&self, i: usize) -> f64 {
        match self {
            DriftSpec::Linear { b } => b[i].norm(),
            DriftSpec::PowerSgn { b, p } => b[i].abs() * p,
            DriftSpec::Bounded { b_hat, z } => b_hat[i].abs() + z.as_ref().map_or(0.0, |z| z.norm()),
        }
    }
}

impl DiffusionSpec {
    fn validate(&self, d: usize, n: usize) -> Result<(), ModelError> {
        match self {
            DiffusionSpec::Constant { sigma } => {
                if sigma.len() != 1 && sigma.len() != n {
                    return Err(ModelError::CoefficientCount { family: "constant diffusion", expected: n, got: sigma.len() });
                }
                sigma.iter().try_for_each(|c| c.check(d))
            }
            DiffusionSpec::Power { sigma, q } => {
                if sigma.len() != n {
                    return Err(ModelError::CoefficientCount { family: "power diffusion", expected: n, got: sigma.len() });
                }
                require_one_dimensional("power diffusion", d)?;
                if !(*q > 1.0 && q.is_finite()) || sigma.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidParameter(format!("power diffusion needs q > 1, got {q}")));
                }
                Ok(())
            }
            DiffusionSpec::OuCutoff { sigma } => {
                if sigma.len() != n {
                    return Err(ModelError::CoefficientCount { family: "ou-cutoff diffusion", expected: n, got: sigma.len() });
                }
                require_one_dimensional("ou-cutoff diffusion", d)?;
                if sigma.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidParameter("diffusion amplitudes must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Writes `σ(x, i)` row-major into `out` (length `d²`).
    #[inline]
    fn eval_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        match self {
            DiffusionSpec::Constant { sigma } => {
                let c = if sigma.len() == 1 { &sigma[0] } else { &sigma[i] };
                let d = x.len();
                for r in 0..d {
                    for col in 0..d {
                        out[r * d + col] = c.entry(r, col);
                    }
                }
            }
            DiffusionSpec::Power { sigma, q } => {
                let a = x[0].abs();
                out[0] = sigma[i] * a.powf(*q).min(a);
            }
            DiffusionSpec::OuCutoff { sigma } => {
                let a = x[0].abs();
                out[0] = sigma[i] * (a * a).min(a);
            }
        }
    }

    pub fn lipschitz(&self, i: usize) -> f64 {
        match self {
            DiffusionSpec::Constant { .. } => 0.0,
            DiffusionSpec::Power { sigma, q } => sigma[i].abs() * q,
            DiffusionSpec::OuCutoff { sigma } => 2.0 * sigma[i].abs(),
        }
    }

    /// The shared constant `σ` when the diffusion is constant and identical
    /// in every regime.
    pub fn shared_constant(&self) -> Option<&Coefficient> {
        match self {
            DiffusionSpec::Constant { sigma } if Coefficient::is_regime_independent_of(sigma) => sigma.first(),
            _ => None,
        }
    }
}

fn require_one_dimensional(family: &str, d: usize) -> Result<(), ModelError> {
    if d == 1 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!("{family} requires d = 1, got d = {d}")))
    }
}

/// A diffusion with state-dependent regime switching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct HybridModel {
    d: usize,
    n: usize,
    drift: DriftSpec,
    diffusion: DiffusionSpec,
    switching: SwitchingSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    drift: DriftSpec,
    diffusion: DiffusionSpec,
    switching: SwitchingSpec,
}

impl TryFrom<ModelRepr> for HybridModel {
    type Error = ModelError;
    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        HybridModel::new(r.d, r.n, r.drift, r.diffusion, r.switching)
    }
}

impl From<HybridModel> for ModelRepr {
    fn from(m: HybridModel) -> Self {
        ModelRepr { d: m.d, n: m.n, drift: m.drift, diffusion: m.diffusion, switching: m.switching }
    }
}

impl HybridModel {
    pub fn new(
        d: usize,
        n: usize,
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        switching: SwitchingSpec,
    ) -> Result<Self, ModelError> {
        if d == 0 || n == 0 {
            return Err(ModelError::InvalidParameter(format!("need d ≥ 1 and N ≥ 1, got d = {d}, N = {n}")));
        }
        drift.validate(d, n)?;
        diffusion.validate(d, n)?;
        if switching.n_regimes() != n {
            return Err(ModelError::RegimeCountMismatch { expected: n, got: switching.n_regimes() });
        }
        if switching.axis() == Axis::Signed {
            require_one_dimensional("signed switching", d)?;
        }
        if let (DriftSpec::PowerSgn { p, .. }, DiffusionSpec::Power { q, .. }) = (&drift, &diffusion) {
            if *p > 2.0 * q - 1.0 + 1e-12 {
                return Err(ModelError::InvalidParameter(format!("power exponents need p ≤ 2q − 1, got p = {p}, q = {q}")));
            }
        }
        Ok(Self { d, n, drift, diffusion, switching })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_regimes(&self) -> usize {
        self.n
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn diffusion(&self) -> &DiffusionSpec {
        &self.diffusion
    }

    pub fn switching(&self) -> &SwitchingSpec {
        &self.switching
    }

    /// Same coefficients, different switching rates.
    pub fn with_switching(&self, switching: SwitchingSpec) -> Result<Self, ModelError> {
        Self::new(self.d, self.n, self.drift.clone(), self.diffusion.clone(), switching)
    }

    fn check_point(&self, x: &[f64], i: usize) -> Result<(), ModelError> {
        if i >= self.n {
            return Err(ModelError::RegimeOutOfRange { regime: i, n: self.n });
        }
        if x.len() != self.d {
            return Err(ModelError::DimensionMismatch { expected: self.d, got: x.len() });
        }
        Ok(())
    }

    pub fn drift_at(&self, x: &[f64], i: usize) -> Result<Vec<f64>, ModelError> {
        self.check_point(x, i)?;
        let mut out = vec![0.0; self.d];
        self.drift.eval_into(x, i, &mut out);
        Ok(out)
    }

    pub fn diffusion_at(&self, x: &[f64], i: usize) -> Result<DMatrix<f64>, ModelError> {
        self.check_point(x, i)?;
        let mut out = vec![0.0; self.d * self.d];
        self.diffusion.eval_into(x, i, &mut out);
        Ok(DMatrix::from_row_slice(self.d, self.d, &out))
    }

    #[inline]
    pub(crate) fn drift_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        self.drift.eval_into(x, i, out);
    }

    #[inline]
    pub(crate) fn diffusion_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        self.diffusion.eval_into(x, i, out);
    }

    /// Lipschitz constant of the drift in regime `i`.
    pub fn drift_lipschitz(&self, i: usize) -> f64 {
        self.drift.lipschitz(i)
    }

    pub fn diffusion_lipschitz(&self, i: usize) -> f64 {
        self.diffusion.lipschitz(i)
    }

    /// `K₂` for drifts of the form `b̂(x, i) + Z(x)` with bounded `b̂`; `None`
    /// when no such decomposition is available.
    pub fn bounded_drift_constant(&self) -> Option<f64> {
        let root_d = (self.d as f64).sqrt();
        match &self.drift {
            DriftSpec::Bounded { b_hat, z } => {
                let amp = b_hat.iter().fold(0.0f64, |m, b| m.max(b.abs()));
                let zn = z.as_ref().map_or(0.0, |z| z.norm());
                Some((amp + zn).max(amp * root_d))
            }
            DriftSpec::Linear { b } if Coefficient::is_regime_independent_of(b) => Some(b[0].norm()),
            _ => None,
        }
    }

    /// `𝒜f(x, i) = b·∇f + ½ tr(σσᵀ ∇²f) + Σ_{j≠i} q_ij(x)(f(x, j) − f(x, i))`.
    pub fn generator_apply(&self, f: &TestFunction, x: &[f64], i: usize) -> Result<f64, ModelError> {
        self.check_point(x, i)?;
        f.check_regimes(self.n)?;
        let d = self.d;
        let grad = f.gradient(x, i)?;
        let hess = f.hessian(x, i)?;
        let mut b = vec![0.0; d];
        self.drift.eval_into(x, i, &mut b);
        let mut sigma = vec![0.0; d * d];
        self.diffusion.eval_into(x, i, &mut sigma);
        let first: f64 = b.iter().zip(&grad).map(|(u, v)| u * v).sum();
        let mut second = 0.0;
        for k in 0..d {
            for l in 0..d {
                let a_kl: f64 = (0..d).map(|m| sigma[k * d + m] * sigma[l * d + m]).sum();
                second += a_kl * hess[k * d + l];
            }
        }
        let fi = f.value(x, i);
        let jump: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.switching.rate(x, i, j) * (f.value(x, j) - fi)).sum();
        Ok(first + 0.5 * second + jump)
    }

    /// Maximum of `𝒜f` over grid points of `region` (spacing `step`) and all
    /// regimes. A negative maximum is numerical evidence that `𝒜f ≤ 0` on
    /// the region, not a proof.
    pub fn lyapunov_scan(&self, f: &TestFunction, region: &Region, step: f64) -> Result<ScanResult, ModelError> {
        let points = region.grid(self.d, step)?;
        if f.singular_at_origin() && region.contains_origin() {
            return Err(ModelError::SingularPoint(vec![0.0; self.d]));
        }
        let mut best = ScanResult { max: f64::NEG_INFINITY, argmax: Vec::new(), regime: 0, points: points.len() };
        for x in &points {
            for i in 0..self.n {
                let v = self.generator_apply(f, x, i)?;
                if v > best.max {
                    best.max = v;
                    best.argmax = x.clone();
                    best.regime = i;
                }
            }
        }
        Ok(best)
    }
}

/// Region scanned by [`HybridModel::lyapunov_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    /// `inner ≤ |x| ≤ outer`.
    Annulus { inner: f64, outer: f64 },
    /// `lo ≤ x ≤ hi`, one-dimensional states.
    Interval { lo: f64, hi: f64 },
}

impl Region {
    fn contains_origin(&self) -> bool {
        match *self {
            Region::Annulus { inner, .. } => inner <= 0.0,
            Region::Interval { lo, hi } => lo <= 0.0 && hi >= 0.0,
        }
    }

    fn grid(&self, d: usize, step: f64) -> Result<Vec<Vec<f64>>, ModelError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(ModelError::EmptyRegion);
        }
        let line = |lo: f64, hi: f64| -> Vec<f64> {
            if !(lo <= hi) {
                return Vec::new();
            }
            let m = ((hi - lo) / step + 1e-9).floor() as usize;
            let mut pts: Vec<f64> = (0..=m).map(|k| lo + k as f64 * step).collect();
            if hi - pts[m] > 1e-12 * hi.abs().max(1.0) {
                pts.push(hi);
            }
            pts
        };
        let points: Vec<Vec<f64>> = match *self {
            Region::Interval { lo, hi } => {
                require_one_dimensional("interval region", d)?;
                line(lo, hi).into_iter().map(|x| vec![x]).collect()
            }
            Region::Annulus { inner, outer } if d == 1 => {
                let radii = line(inner.max(0.0), outer);
                radii.iter().flat_map(|&r| if r == 0.0 { vec![vec![0.0]] } else { vec![vec![-r], vec![r]] }).collect()
            }
            Region::Annulus { inner, outer } => {
                if !(inner <= outer) {
                    return Err(ModelError::EmptyRegion);
                }
                let axis = line(-outer, outer);
                let mut pts = Vec::new();
                let mut idx = vec![0usize; d];
                'outer: loop {
                    let x: Vec<f64> = idx.iter().map(|&k| axis[k]).collect();
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r >= inner && r <= outer {
                        pts.push(x);
                    }
                    for slot in idx.iter_mut() {
                        *slot += 1;
                        if *slot < axis.len() {
                            continue 'outer;
                        }
                        *slot = 0;
                    }
                    break;
                }
                pts
            }
        };
        if points.is_empty() {
            Err(ModelError::EmptyRegion)
        } else {
            Ok(points)
        }
    }
}

/// Outcome of a Lyapunov grid scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub max: f64,
    pub argmax: Vec<f64>,
    pub regime: usize,
    pub points: usize,
}

/// Test functions with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    /// `ξ_i·|x|^γ`.
    Power { xi: Vec<f64>, gamma: f64 },
    /// `|x|^a + ξ_i·|x|^c`.
    PowerSum { rho_gamma: f64, xi: Vec<f64>, h_gamma: f64 },
}

/// Derivatives of `g(x) = |x|^γ`.
struct RadialPower {
    gamma: f64,
}

impl RadialPower {
    fn singular(&self) -> bool {
        self.gamma < 2.0 && self.gamma != 0.0
    }

    fn value(&self, r: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            r.powf(self.gamma)
        }
    }

    fn gradient(&self, x: &[f64], r: f64) -> Vec<f64> {
        if self.gamma == 0.0 || r == 0.0 {
            return vec![0.0; x.len()];
        }
        let c = self.gamma * r.powf(self.gamma - 2.0);
        x.iter().map(|v| c * v).collect()
    }

    fn hessian(&self, x: &[f64], r: f64) -> Vec<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        if self.gamma == 0.0 {
            return h;
        }
        if r == 0.0 {
            if self.gamma == 2.0 {
                (0..d).for_each(|k| h[k * d + k] = 2.0);
            }
            return h;
        }
        let g = self.gamma;
        let a = g * r.powf(g - 2.0);
        let b = g * (g - 2.0) * r.powf(g - 4.0);
        for k in 0..d {
            for l in 0..d {
                h[k * d + l] = b * x[k] * x[l] + if k == l { a } else { 0.0 };
            }
        }
        h
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl TestFunction {
    /// `ξ_i·|x|^γ`.
    pub fn power(xi: Vec<f64>, gamma: f64) -> Self {
        TestFunction::Power { xi, gamma }
    }

    /// The constant function `1`.
    pub fn one(n: usize) -> Self {
        TestFunction::Power { xi: vec![1.0; n], gamma: 0.0 }
    }

    fn xi(&self) -> &[f64] {
        match self {
            TestFunction::Power { xi, .. } | TestFunction::PowerSum { xi, .. } => xi,
        }
    }

    fn check_regimes(&self, n: usize) -> Result<(), ModelError> {
        if self.xi().len() == n {
            Ok(())
        } else {
            Err(ModelError::CoefficientCount { family: "test function", expected: n, got: self.xi().len() })
        }
    }

    /// Whether derivatives blow up (or do not exist) at the origin.
    pub fn singular_at_origin(&self) -> bool {
        match *self {
            TestFunction::Power { gamma, .. } => RadialPower { gamma }.singular(),
            TestFunction::PowerSum { rho_gamma, h_gamma, .. } => {
                RadialPower { gamma: rho_gamma }.singular() || RadialPower { gamma: h_gamma }.singular()
            }
        }
    }

    fn guard(&self, x: &[f64]) -> Result<f64, ModelError> {
        let r = norm(x);
        if r == 0.0 && self.singular_at_origin() {
            return Err(ModelError::SingularPoint(x.to_vec()));
        }
        Ok(r)
    }

    pub fn value(&self, x: &[f64], i: usize) -> f64 {
        let r = norm(x);
        match *self {
            TestFunction::Power { ref xi, gamma } => xi[i] * RadialPower { gamma }.value(r),
            TestFunction::PowerSum { rho_gamma, ref xi, h_gamma } => {
                RadialPower { gamma: rho_gamma }.value(r) + xi[i] * RadialPower { gamma: h_gamma }.value(r)
            }
        }
    }

    pub fn gradient(&self, x: &[f64], i: usize) -> Result<Vec<f64>, ModelError> {
        let r = self.guard(x)?;
        Ok(match *self {
            TestFunction::Power { ref xi, gamma } => {
                RadialPower { gamma }.gradient(x, r).into_iter().map(|g| xi[i] * g).collect()
            }
            TestFunction::PowerSum { rho_gamma, ref xi, h_gamma } => {
                let a = RadialPower { gamma: rho_gamma }.gradient(x, r);
                let b = RadialPower { gamma: h_gamma }.gradient(x, r);
                a.iter().zip(&b).map(|(u, v)| u + xi[i] * v).collect()
            }
        })
    }

    /// Row-major `d × d` Hessian.
    pub fn hessian(&self, x: &[f64], i: usize) -> Result<Vec<f64>, ModelError> {
        let r = self.guard(x)?;
        Ok(match *self {
            TestFunction::Power { ref xi, gamma } => RadialPower { gamma }.hessian(x, r).into_iter().map(|g| xi[i] * g).collect(),
            TestFunction::PowerSum { rho_gamma, ref xi, h_gamma } => {
                let a = RadialPower { gamma: rho_gamma }.hessian(x, r);
                let b = RadialPower { gamma: h_gamma }.hessian(x, r);
                a.iter().zip(&b).map(|(u, v)| u + xi[i] * v).collect()
            }
        })
    }
}
