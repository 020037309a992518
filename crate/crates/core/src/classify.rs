//! Stability and ergodicity verdicts from Lyapunov data.
//!
//! The classifier consumes per-regime drift rates `β_i` of a Lyapunov
//! function `ρ` (either supplied or derived for the supported families),
//! weights them by the stationary law of the governing rate matrix — the
//! innermost cell near the origin, the tail cells near infinity — and fires a
//! verdict only when `Σπ_iβ_i ≤ −1e−12`. Every verdict carries the objects
//! that witness it: `π`, `Σπβ`, and either a Perron–Frobenius pair `(p, η_p, ξ)`
//! or a Fredholm pair `(c, ξ)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel};
use crate::qmatrix::{BetaVector, FredholmCertificate, PfCertificate, QError, QMatrix};
use crate::threshold::{RadialThresholdQ, Shape, SignedThresholdQ, SmoothQ, SwitchingSpec};

/// `Σπβ` must be at most `−MARGIN` for a criterion to fire.
pub const MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Rates(#[from] QError),
    #[error("{operation} needs Lyapunov data of kind {expected}, got {got:?}")]
    WrongKind { operation: &'static str, expected: &'static str, got: LyapunovKind },
    #[error("signed switching has no cut at the origin")]
    NoCutAtZero,
    #[error("shape {0:?} has no limit at infinity for nonzero modulation")]
    NoLimit(Shape),
    #[error("β has {got} entries, the model has {expected} regimes")]
    BetaLength { expected: usize, got: usize },
    #[error("β is not finite: {0:?}")]
    NonFiniteBeta(Vec<f64>),
    #[error("no β supplied and none can be derived for this model")]
    MissingBeta,
}

/// Which drift inequality the pair `(ρ, β)` satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovKind {
    /// `𝓛ρ ≤ β_i ρ` near the origin.
    L1,
    /// `𝓛ρ ≤ β_i h` near the origin.
    L2,
    /// `𝓛ρ ≤ β_i ρ` for `|x| > r₀`.
    L3,
    /// `𝓛ρ ≤ β_i h` for `|x| > r₀` with `h/ρ → 0`.
    L4,
}

impl LyapunovKind {
    pub fn near_origin(self) -> bool {
        matches!(self, LyapunovKind::L1 | LyapunovKind::L2)
    }

    /// Whether the constructive certificate is a Perron–Frobenius pair
    /// (`ρ` on the right-hand side) or a Fredholm solution (`h`).
    fn uses_pf(self) -> bool {
        matches!(self, LyapunovKind::L1 | LyapunovKind::L3)
    }
}

/// Boundary behaviour of `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoBehaviour {
    #[serde(rename = "vanishes-at-0")]
    VanishesAtZero,
    #[serde(rename = "blows-up-at-0")]
    BlowsUpAtZero,
    #[serde(rename = "blows-up-at-inf")]
    BlowsUpAtInfinity,
    #[serde(rename = "vanishes-at-inf")]
    VanishesAtInfinity,
    #[serde(rename = "vanishes-at-+inf")]
    VanishesAtPlusInfinity,
    #[serde(rename = "vanishes-at--inf")]
    VanishesAtMinusInfinity,
}

impl RhoBehaviour {
    fn at_origin(self) -> bool {
        matches!(self, RhoBehaviour::VanishesAtZero | RhoBehaviour::BlowsUpAtZero)
    }
}

/// A Lyapunov pair described by its kind, its `β` and how `ρ` behaves at
/// the relevant boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovData {
    pub kind: LyapunovKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaVector>,
    pub rho: RhoBehaviour,
    /// Exponent `γ` of `ρ(x) = |x|^γ`, when `ρ` is a power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_power: Option<f64>,
    /// Exponent of `h(x) = |x|^γ'` for the `h`-type conditions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_power: Option<f64>,
}

impl LyapunovData {
    pub fn new(kind: LyapunovKind, beta: Vec<f64>, rho: RhoBehaviour) -> Self {
        Self { kind, beta: Some(beta.into()), rho, rho_power: None, h_power: None }
    }

    /// Tag combinations that contradict the kind (a near-origin condition
    /// with an at-infinity tag, or vice versa).
    pub fn is_consistent(&self) -> bool {
        self.kind.near_origin() == self.rho.at_origin()
    }

    fn beta(&self) -> Result<&BetaVector, ClassifyError> {
        let beta = self.beta.as_ref().ok_or(ClassifyError::MissingBeta)?;
        if beta.values().iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFiniteBeta(beta.values().to_vec()));
        }
        Ok(beta)
    }

    fn expect(&self, operation: &'static str, near_origin: bool) -> Result<&BetaVector, ClassifyError> {
        if self.kind.near_origin() != near_origin {
            let expected = if near_origin { "L1 or L2" } else { "L3 or L4" };
            return Err(ClassifyError::WrongKind { operation, expected, got: self.kind });
        }
        self.beta()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AsymptoticallyStableInProbability,
    UnstableInProbability,
    Ergodic,
    ExponentiallyErgodic,
    Transient,
    Inconclusive,
}

/// Which criterion produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    StabilityRadial,
    StabilityTwoSided,
    ErgodicityRadial,
    ErgodicityTwoTailed,
    ErgodicityLimit,
}

/// Witnesses computed from one rate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCertificate {
    /// `innermost`, `right-of-0`, `left-of-0`, `outermost`, `left-tail`,
    /// `right-tail` or `limit`.
    pub cell: String,
    pub q: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub weighted_beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pf: Option<PfCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fredholm: Option<FredholmCertificate>,
}

impl CellCertificate {
    fn build(
        cell: &str,
        q: &QMatrix,
        beta: &BetaVector,
        kind: LyapunovKind,
        notes: &mut Vec<String>,
    ) -> Result<Self, ClassifyError> {
        if beta.len() != q.n() {
            return Err(ClassifyError::BetaLength { expected: q.n(), got: beta.len() });
        }
        let pi = q.stationary()?;
        let weighted_beta = pi.dot(beta.values());
        let (mut pf, mut fredholm) = (None, None);
        if weighted_beta <= -MARGIN {
            if kind.uses_pf() {
                match q.find_stabilizing_p(beta) {
                    Some(p) => pf = Some(q.pf_exponent(beta, p)?),
                    None => notes.push(format!("{cell}: no exponent p on the dyadic grid gives η_p > 0")),
                }
            } else {
                fredholm = Some(q.fredholm_solve(beta)?);
            }
        }
        Ok(Self { cell: cell.into(), q: q.to_rows(), pi: pi.weights().to_vec(), weighted_beta, pf, fredholm })
    }

    pub fn negative(&self) -> bool {
        self.weighted_beta <= -MARGIN
    }

    /// Largest residual among the stored witnesses (`πQ`, PF, Fredholm).
    pub fn residual(&self, beta: &BetaVector) -> Result<f64, QError> {
        let q = QMatrix::from_rows(&self.q)?;
        let n = q.n();
        let balance = (0..n).map(|j| (0..n).map(|i| self.pi[i] * q.rate(i, j)).sum::<f64>().abs()).fold(0.0, f64::max);
        let pf = self.pf.as_ref().map_or(0.0, |c| c.residual(&q, beta));
        let fr = self.fredholm.as_ref().map_or(0.0, |c| c.residual(&q, beta));
        Ok(balance.max(pf).max(fr))
    }
}

/// The classifier's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub verdict: Verdict,
    pub theorem: Criterion,
    pub beta: Vec<f64>,
    pub certificate: Vec<CellCertificate>,
    /// Hypotheses taken for granted rather than checked.
    pub assumptions: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

const ELLIPTICITY: &str = "uniform ellipticity of the diffusion near the origin is assumed, not verified";
const LYAPUNOV_PREMISE: &str = "the drift inequality for ρ with the given β is taken as data";

fn report(
    verdict: Verdict,
    theorem: Criterion,
    beta: &BetaVector,
    certificate: Vec<CellCertificate>,
    notes: Vec<String>,
) -> CriteriaReport {
    let mut assumptions = vec![LYAPUNOV_PREMISE.to_string()];
    if matches!(theorem, Criterion::StabilityRadial | Criterion::StabilityTwoSided) {
        assumptions.push(ELLIPTICITY.into());
    }
    CriteriaReport { verdict, theorem, beta: beta.values().to_vec(), certificate, assumptions, notes }
}

/// Where a derived `β` is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    NearZero,
    NearInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedBeta {
    pub beta: BetaVector,
    pub validity: Validity,
    pub note: String,
}

fn scalar(c: &Coefficient) -> Option<f64> {
    match c {
        Coefficient::Scalar(v) => Some(*v),
        Coefficient::Matrix(m) if m.len() == 1 => Some(m[0][0]),
        Coefficient::Matrix(_) => None,
    }
}

/// `β` for the recognised one-dimensional families:
///
/// * power drift `b_i·sgn(x)(|x|^p ∧ |x|)` with power diffusion
///   `σ_i(|x|^q ∧ |x|)`, `ρ = |x|`-type near the origin: `β_i = b_i` if
///   `p < 2q − 1`, `β_i = b_i − σ_i²/2` if `p = 2q − 1`;
/// * linear drift with the `x² ∧ |x|` diffusion near infinity, `ρ = |x|`:
///   `β_i = b_i`.
pub fn derive_beta(m: &HybridModel) -> Option<DerivedBeta> {
    match (m.drift(), m.diffusion()) {
        (DriftSpec::PowerSgn { b, p }, DiffusionSpec::Power { sigma, q }) => {
            let critical = 2.0 * q - 1.0;
            let beta: Vec<f64> = if (p - critical).abs() <= 1e-12 {
                b.iter().zip(sigma).map(|(b, s)| b - 0.5 * s * s).collect()
            } else if *p < critical {
                b.clone()
            } else {
                return None;
            };
            Some(DerivedBeta {
                beta: beta.into(),
                validity: Validity::NearZero,
                note: format!("power drift p = {p}, power diffusion q = {q}"),
            })
        }
        (DriftSpec::Linear { b }, DiffusionSpec::OuCutoff { .. }) if m.dim() == 1 => {
            let beta: Option<Vec<f64>> = b.iter().map(scalar).collect();
            Some(DerivedBeta {
                beta: beta?.into(),
                validity: Validity::NearInfinity,
                note: "ρ = |x|; the per-regime exponent μ_i is identified with the linear drift coefficient b_i".into(),
            })
        }
        _ => None,
    }
}

/// `β` for `ρ = |x|^{−γ}` (`γ > 0`) near infinity under linear drift and the
/// `x² ∧ |x|` diffusion: for `|x| ≥ 1`,
/// `𝓛^{(i)}ρ = γ(−b_i + (γ+1)σ_i²/2)·ρ`.
pub fn transience_beta(m: &HybridModel, gamma: f64) -> Option<BetaVector> {
    if !(gamma > 0.0) || m.dim() != 1 {
        return None;
    }
    match (m.drift(), m.diffusion()) {
        (DriftSpec::Linear { b }, DiffusionSpec::OuCutoff { sigma }) => b
            .iter()
            .zip(sigma)
            .map(|(b, s)| scalar(b).map(|b| gamma * (-b + 0.5 * (gamma + 1.0) * s * s)))
            .collect::<Option<Vec<f64>>>()
            .map(BetaVector::from),
        _ => None,
    }
}

/// Radial criterion near the origin, governed by the innermost cell.
pub fn stability_at_zero(sw: &RadialThresholdQ, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let beta = ld.expect("stability_at_zero", true)?;
    let mut notes = Vec::new();
    let cell = CellCertificate::build("innermost", sw.innermost(), beta, ld.kind, &mut notes)?;
    let verdict = match (cell.negative(), ld.rho) {
        (true, RhoBehaviour::VanishesAtZero) => Verdict::AsymptoticallyStableInProbability,
        (true, RhoBehaviour::BlowsUpAtZero) => Verdict::UnstableInProbability,
        _ => Verdict::Inconclusive,
    };
    Ok(report(verdict, Criterion::StabilityRadial, beta, vec![cell], notes))
}

/// One-dimensional criterion near the origin, governed by the cells on
/// either side of a cut at `0`.
pub fn stability_two_sided(sw: &SignedThresholdQ, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let beta = ld.expect("stability_two_sided", true)?;
    let (right, left) = sw.cells_at_zero().ok_or(ClassifyError::NoCutAtZero)?;
    let mut notes = Vec::new();
    let right = CellCertificate::build("right-of-0", right, beta, ld.kind, &mut notes)?;
    let left = CellCertificate::build("left-of-0", left, beta, ld.kind, &mut notes)?;
    let verdict = match ld.rho {
        RhoBehaviour::VanishesAtZero if right.negative() && left.negative() => Verdict::AsymptoticallyStableInProbability,
        RhoBehaviour::BlowsUpAtZero if right.negative() || left.negative() => Verdict::UnstableInProbability,
        _ => Verdict::Inconclusive,
    };
    Ok(report(verdict, Criterion::StabilityTwoSided, beta, vec![right, left], notes))
}

fn tail_verdict(negative: bool, ld: &LyapunovData) -> Verdict {
    match (negative, ld.rho) {
        (true, RhoBehaviour::BlowsUpAtInfinity) if ld.kind == LyapunovKind::L3 => Verdict::ExponentiallyErgodic,
        (true, RhoBehaviour::BlowsUpAtInfinity) => Verdict::Ergodic,
        (true, RhoBehaviour::VanishesAtInfinity) => Verdict::Transient,
        _ => Verdict::Inconclusive,
    }
}

/// Radial criterion near infinity, governed by the outermost cell.
pub fn ergodicity_radial(sw: &RadialThresholdQ, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let beta = ld.expect("ergodicity_radial", false)?;
    let mut notes = Vec::new();
    let cell = CellCertificate::build("outermost", sw.outermost(), beta, ld.kind, &mut notes)?;
    let verdict = tail_verdict(cell.negative(), ld);
    Ok(report(verdict, Criterion::ErgodicityRadial, beta, vec![cell], notes))
}

/// One-dimensional criterion near `±∞`, governed by both tail cells.
pub fn ergodicity_signed(sw: &SignedThresholdQ, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let beta = ld.expect("ergodicity_signed", false)?;
    let mut notes = Vec::new();
    let left = CellCertificate::build("left-tail", sw.left_tail(), beta, ld.kind, &mut notes)?;
    let right = CellCertificate::build("right-tail", sw.right_tail(), beta, ld.kind, &mut notes)?;
    let verdict = match ld.rho {
        RhoBehaviour::BlowsUpAtInfinity if left.negative() && right.negative() => tail_verdict(true, ld),
        RhoBehaviour::VanishesAtInfinity if left.negative() || right.negative() => Verdict::Transient,
        RhoBehaviour::VanishesAtMinusInfinity if left.negative() => Verdict::Transient,
        RhoBehaviour::VanishesAtPlusInfinity if right.negative() => Verdict::Transient,
        _ => Verdict::Inconclusive,
    };
    Ok(report(verdict, Criterion::ErgodicityTwoTailed, beta, vec![left, right], notes))
}

/// Criterion near infinity for smooth rates with a limit `Q = lim Q(x)`.
pub fn ergodicity_limit(sq: &SmoothQ, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let beta = ld.expect("ergodicity_limit", false)?;
    let modulated = sq.modulation().iter().flatten().any(|&b| b != 0.0);
    if sq.shape() == Shape::TanhSigned && modulated {
        return Err(ClassifyError::NoLimit(sq.shape()));
    }
    let mut notes = Vec::new();
    let cell = CellCertificate::build("limit", &sq.limit_matrix(), beta, ld.kind, &mut notes)?;
    let verdict = tail_verdict(cell.negative(), ld);
    Ok(report(verdict, Criterion::ErgodicityLimit, beta, vec![cell], notes))
}

/// Dispatches on the switching family and the kind of `ld`. A missing `β`
/// is derived from the model when the family is recognised.
pub fn classify(m: &HybridModel, ld: &LyapunovData) -> Result<CriteriaReport, ClassifyError> {
    let mut ld = ld.clone();
    let mut notes = Vec::new();
    if ld.beta.is_none() {
        let derived = match (ld.rho, ld.rho_power) {
            (RhoBehaviour::VanishesAtInfinity, Some(g)) if g < 0.0 => {
                transience_beta(m, -g).map(|b| (b, format!("β for ρ = |x|^{g} near infinity")))
            }
            _ => derive_beta(m).filter(|d| (d.validity == Validity::NearZero) == ld.kind.near_origin()).map(|d| (d.beta, d.note)),
        };
        let (beta, note) = derived.ok_or(ClassifyError::MissingBeta)?;
        ld.beta = Some(beta);
        notes.push(format!("derived β: {note}"));
    }
    if let Some(beta) = &ld.beta {
        if beta.len() != m.n_regimes() {
            return Err(ClassifyError::BetaLength { expected: m.n_regimes(), got: beta.len() });
        }
    }
    let mut rep = match (m.switching(), ld.kind.near_origin()) {
        (SwitchingSpec::Radial(r), true) => stability_at_zero(r, &ld)?,
        (SwitchingSpec::Signed(s), true) => stability_two_sided(s, &ld)?,
        (SwitchingSpec::Radial(r), false) => ergodicity_radial(r, &ld)?,
        (SwitchingSpec::Signed(s), false) => ergodicity_signed(s, &ld)?,
        (SwitchingSpec::Smooth(q), false) => ergodicity_limit(q, &ld)?,
        (SwitchingSpec::Smooth(_), true) => {
            // no criterion covers smooth rates near the origin; report the matrix there
            let beta = ld.expect("classify", true)?;
            let mut cell_notes = vec!["no criterion covers smooth rates near the origin; certificate is informational".into()];
            let at_origin = m.switching().evaluate(&vec![0.0; m.dim()]);
            let cell = CellCertificate::build("origin", &at_origin, beta, ld.kind, &mut cell_notes)?;
            report(Verdict::Inconclusive, Criterion::StabilityRadial, beta, vec![cell], cell_notes)
        }
    };
    if !ld.is_consistent() {
        rep.notes.push(format!("ρ behaviour {:?} does not match kind {:?}", ld.rho, ld.kind));
    }
    notes.append(&mut rep.notes);
    rep.notes = notes;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rows: &[&[f64]]) -> QMatrix {
        QMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sym() -> QMatrix {
        q(&[&[-1.0, 1.0], &[1.0, -1.0]])
    }

    fn ld(kind: LyapunovKind, beta: &[f64], rho: RhoBehaviour) -> LyapunovData {
        LyapunovData::new(kind, beta.to_vec(), rho)
    }

    fn power_model(b: Vec<f64>, p: f64, q: f64) -> HybridModel {
        HybridModel::new(
            1,
            2,
            DriftSpec::PowerSgn { b, p },
            DiffusionSpec::Power { sigma: vec![1.0, 1.0], q },
            SwitchingSpec::constant(sym()).unwrap(),
        )
        .unwrap()
    }

    fn ou_model(b: &[f64]) -> HybridModel {
        HybridModel::new(
            1,
            2,
            DriftSpec::Linear { b: b.iter().map(|&v| Coefficient::Scalar(v)).collect() },
            DiffusionSpec::OuCutoff { sigma: vec![0.5, 0.5] },
            SwitchingSpec::constant(sym()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn derive_beta_power_branches() {
        let d = derive_beta(&power_model(vec![-1.0, 2.0], 3.0, 2.0)).unwrap();
        assert_eq!(d.beta.values(), &[-1.5, 1.5]);
        assert_eq!(d.validity, Validity::NearZero);
        let d = derive_beta(&power_model(vec![-1.0, 2.0], 2.0, 2.0)).unwrap();
        assert_eq!(d.beta.values(), &[-1.0, 2.0]);
    }

    #[test]
    fn derive_beta_ou() {
        let d = derive_beta(&ou_model(&[1.0, -3.0])).unwrap();
        assert_eq!(d.beta.values(), &[1.0, -3.0]);
        assert_eq!(d.validity, Validity::NearInfinity);
        assert!(d.note.contains("μ_i"));
    }

    #[test]
    fn transience_beta_matches_hand_computation() {
        let b = transience_beta(&ou_model(&[3.0, -1.0]), 1.0).unwrap();
        assert_eq!(b.values(), &[-2.75, 1.25]);
    }

    #[test]
    fn radial_stability_examples() {
        let sw = RadialThresholdQ::new(vec![1.0], vec![sym(), q(&[&[-5.0, 5.0], &[0.1, -0.1]])]).unwrap();
        let r = stability_at_zero(&sw, &ld(LyapunovKind::L1, &[-2.0, 1.0], RhoBehaviour::VanishesAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::AsymptoticallyStableInProbability);
        assert!((r.certificate[0].weighted_beta + 0.5).abs() < 1e-15);
        assert!(r.certificate[0].pf.as_ref().unwrap().eta > 0.0);
        let r = stability_at_zero(&sw, &ld(LyapunovKind::L1, &[-2.0, 1.0], RhoBehaviour::BlowsUpAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::UnstableInProbability);
        let r = stability_at_zero(&sw, &ld(LyapunovKind::L1, &[2.0, -1.0], RhoBehaviour::VanishesAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.certificate[0].pf.is_none());
        let r = stability_at_zero(&sw, &ld(LyapunovKind::L2, &[-2.0, 1.0], RhoBehaviour::VanishesAtZero)).unwrap();
        let beta = BetaVector::new(vec![-2.0, 1.0]);
        assert!(r.certificate[0].residual(&beta).unwrap() < 1e-9);
        assert!(r.certificate[0].fredholm.is_some());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let sw = RadialThresholdQ::single(sym()).unwrap();
        let err = stability_at_zero(&sw, &ld(LyapunovKind::L3, &[-1.0, 0.0], RhoBehaviour::BlowsUpAtInfinity));
        assert!(matches!(err, Err(ClassifyError::WrongKind { .. })));
    }

    fn two_sided(left: QMatrix) -> SignedThresholdQ {
        SignedThresholdQ::new(vec![0.0], vec![left, q(&[&[-4.0, 4.0], &[1.0, -1.0]])]).unwrap()
    }

    #[test]
    fn two_sided_examples() {
        // β = (0.5, −0.75): right side π = (0.2, 0.8) → −0.5, symmetric left side → −0.125
        let beta = [0.5, -0.75];
        let sw = two_sided(sym());
        let r = stability_two_sided(&sw, &ld(LyapunovKind::L1, &beta, RhoBehaviour::VanishesAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::AsymptoticallyStableInProbability);
        assert!((r.certificate[0].weighted_beta + 0.5).abs() < 1e-12);

        // left side π = (0.8, 0.2) → +0.25
        let sw = two_sided(q(&[&[-1.0, 1.0], &[4.0, -4.0]]));
        let r = stability_two_sided(&sw, &ld(LyapunovKind::L1, &beta, RhoBehaviour::BlowsUpAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::UnstableInProbability);
        assert!(r.certificate[1].weighted_beta > 0.0);
        let r = stability_two_sided(&sw, &ld(LyapunovKind::L1, &beta, RhoBehaviour::VanishesAtZero)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);

        let no_cut = SignedThresholdQ::new(vec![1.0], vec![sym(), sym()]).unwrap();
        assert_eq!(
            stability_two_sided(&no_cut, &ld(LyapunovKind::L1, &beta, RhoBehaviour::VanishesAtZero)),
            Err(ClassifyError::NoCutAtZero)
        );
    }

    #[test]
    fn radial_ergodicity_examples() {
        let sw = RadialThresholdQ::new(vec![2.0], vec![q(&[&[-3.0, 3.0], &[0.5, -0.5]]), sym()]).unwrap();
        let r = ergodicity_radial(&sw, &ld(LyapunovKind::L3, &[-3.0, 1.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::ExponentiallyErgodic);
        assert!((r.certificate[0].weighted_beta + 1.0).abs() < 1e-15);
        let r = ergodicity_radial(&sw, &ld(LyapunovKind::L4, &[-3.0, 1.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::Ergodic);
        let r = ergodicity_radial(&sw, &ld(LyapunovKind::L3, &[3.0, -1.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let r = ergodicity_radial(&sw, &ld(LyapunovKind::L3, &[-2.75, 1.25], RhoBehaviour::VanishesAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::Transient);
        let r = ergodicity_radial(&sw, &ld(LyapunovKind::L3, &[0.0, 0.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn signed_ergodicity_examples() {
        let sw = SignedThresholdQ::new(vec![-1.0, 1.0], vec![sym(), q(&[&[-9.0, 9.0], &[1.0, -1.0]]), sym()]).unwrap();
        let r = ergodicity_signed(&sw, &ld(LyapunovKind::L3, &[-3.0, 1.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::ExponentiallyErgodic);
        let r = ergodicity_signed(&sw, &ld(LyapunovKind::L3, &[-3.0, 1.0], RhoBehaviour::VanishesAtPlusInfinity)).unwrap();
        assert_eq!(r.verdict, Verdict::Transient);
        let lopsided = SignedThresholdQ::new(vec![0.0], vec![q(&[&[-9.0, 9.0], &[1.0, -1.0]]), sym()]).unwrap();
        let r = ergodicity_signed(&lopsided, &ld(LyapunovKind::L3, &[-3.0, 1.0], RhoBehaviour::BlowsUpAtInfinity)).unwrap();
        assert!(r.certificate[0].weighted_beta > 0.0 && r.certificate[1].weighted_beta < 0.0);
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn limit_examples() {
        let constant = SmoothQ::new(sym(), vec![vec![0.0; 2]; 2], Shape::TanhSigned).unwrap();
        let data = ld(LyapunovKind::L3, &[-3.0, 1.0], RhoBehaviour::BlowsUpAtInfinity);
        let r = ergodicity_limit(&constant, &data).unwrap();
        assert_eq!(r.verdict, Verdict::ExponentiallyErgodic);
        assert_eq!(r.certificate[0].q, sym().to_rows());

        let radial =
            SmoothQ::new(q(&[&[-2.0, 2.0], &[2.0, -2.0]]), vec![vec![0.0, -1.0], vec![-1.0, 0.0]], Shape::TanhRadius).unwrap();
        let r = ergodicity_limit(&radial, &data).unwrap();
        assert_eq!(r.certificate[0].q, sym().to_rows());
        assert_eq!(r.verdict, Verdict::ExponentiallyErgodic);

        let signed =
            SmoothQ::new(q(&[&[-2.0, 2.0], &[2.0, -2.0]]), vec![vec![0.0, 1.0], vec![1.0, 0.0]], Shape::TanhSigned).unwrap();
        assert_eq!(ergodicity_limit(&signed, &data), Err(ClassifyError::NoLimit(Shape::TanhSigned)));
    }

    #[test]
    fn classify_derives_beta() {
        let m = power_model(vec![-2.0, 0.5], 3.0, 2.0);
        let data = LyapunovData {
            kind: LyapunovKind::L1,
            beta: None,
            rho: RhoBehaviour::VanishesAtZero,
            rho_power: Some(1.0),
            h_power: None,
        };
        let r = classify(&m, &data).unwrap();
        assert_eq!(r.verdict, Verdict::AsymptoticallyStableInProbability);
        assert_eq!(r.beta, vec![-2.5, 0.0]);
        assert!(r.notes.iter().any(|n| n.starts_with("derived β")));

        let m = ou_model(&[3.0, -1.0]);
        let data = LyapunovData {
            kind: LyapunovKind::L3,
            beta: None,
            rho: RhoBehaviour::VanishesAtInfinity,
            rho_power: Some(-1.0),
            h_power: None,
        };
        assert_eq!(classify(&m, &data).unwrap().verdict, Verdict::Transient);
    }

    #[test]
    fn lyapunov_json() {
        let text = r#"{"kind": "L2", "beta": [-1.0, 0.5], "rho": "vanishes-at-0"}"#;
        let data: LyapunovData = serde_json::from_str(text).unwrap();
        assert_eq!(data, ld(LyapunovKind::L2, &[-1.0, 0.5], RhoBehaviour::VanishesAtZero));
        assert!(serde_json::from_str::<LyapunovData>(r#"{"kind": "L5", "rho": "vanishes-at-0"}"#).is_err());
        let rep = stability_at_zero(&RadialThresholdQ::single(sym()).unwrap(), &data).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"verdict\":\"asymptotically-stable-in-probability\""));
        assert!(json.contains("\"theorem\":\"stability-radial\""));
    }
}
