//! Synchronous coupling of a smooth-rate system with its threshold
//! quantization.
//!
//! Both systems consume one Brownian increment stream and one stream of
//! Poisson candidates and marks; each applies its own mark layout at its own
//! state. Both layouts share `K = max` of the two rate bounds, so interval
//! starts coincide and the two systems disagree on a mark only when it lands
//! in the symmetric difference of their intervals.

use serde::Serialize;
use thiserror::Error;

use crate::model::{DriftSpec, HybridModel};
use crate::simulate::{
    drive, mean_stderr, par_paths, shared_bound, stream_rng, warn_coarse_step, Node, NodeKind, PathCounters, RecordMode,
    Recorder, SimError, SimParams, SwitchEvent, System, Trajectory,
};
use crate::threshold::{quantize, theta_distance, SwitchingSpec, ThresholdError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoupleError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Switching(#[from] ThresholdError),
    #[error("coupled models differ: {0}")]
    ModelMismatch(String),
    #[error("operation needs full-path records, runs were recorded as {0:?}")]
    InsufficientRecordMode(RecordMode),
    #[error("sample sets have different sizes ({a} vs {b})")]
    UnequalCounts { a: usize, b: usize },
    #[error("sample sets are empty or mix dimensions")]
    BadSamples,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One synchronously coupled pair of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    pub record: RecordMode,
    /// The system driven by the first model (smooth rates).
    pub reference: Trajectory,
    /// The system driven by the second model (quantized rates).
    pub approximant: Trajectory,
    /// The shared candidate stream `(ζ_k, z_k)`.
    pub candidates: Vec<(f64, f64)>,
    /// `sup |X_t − X_t^{(n)}|` over every grid and candidate node.
    pub sup_distance: f64,
    /// `(1/T)∫₀ᵀ 1{Λ_s ≠ Λ_s^{(n)}} ds`.
    pub mismatch_fraction: f64,
    /// `∫₀ᵀ ‖Q(X_s) − Q^{(n)}(X_s^{(n)})‖_{ℓ1} ds`, trapezoidal on the grid.
    pub rate_gap_integral: f64,
    /// Integrand of `rate_gap_integral` at each recorded node (full mode only).
    pub rate_gap: Vec<f64>,
}

impl CoupledRun {
    /// `|X_t − X_t^{(n)}|` at each checkpoint.
    pub fn checkpoint_distances(&self) -> Vec<f64> {
        self.reference.checkpoint_states.iter().zip(&self.approximant.checkpoint_states).map(|(a, b)| distance(a, b)).collect()
    }
}

#[inline]
fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// `max_i Σ_{j≠i} |q_ij(x) − q'_ij(y)|` without materializing either matrix.
fn rate_gap(a: &SwitchingSpec, x: &[f64], b: &SwitchingSpec, y: &[f64]) -> f64 {
    let n = a.n_regimes();
    let (cx, cy) = (a.axis().coordinate(x), b.axis().coordinate(y));
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (a.rate_at_coordinate(cx, i, j) - b.rate_at_coordinate(cy, i, j)).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn check_compatible(a: &HybridModel, b: &HybridModel) -> Result<(), CoupleError> {
    let mismatch = |what: String| Err(CoupleError::ModelMismatch(what));
    if a.dim() != b.dim() {
        return mismatch(format!("dimension {} vs {}", a.dim(), b.dim()));
    }
    if a.n_regimes() != b.n_regimes() {
        return mismatch(format!("regime count {} vs {}", a.n_regimes(), b.n_regimes()));
    }
    if a.drift() != b.drift() {
        return mismatch("drift specs differ".into());
    }
    if a.diffusion() != b.diffusion() {
        return mismatch("diffusion specs differ".into());
    }
    Ok(())
}

/// Runs one coupled pair on stream `stream`.
pub fn coupled_paths(
    m_smooth: &HybridModel,
    m_thresh: &HybridModel,
    x0: &[f64],
    i0: usize,
    sp: &SimParams,
    stream: u64,
) -> Result<CoupledRun, CoupleError> {
    check_compatible(m_smooth, m_thresh)?;
    sp.validate()?;
    let (bound, kappa) = shared_bound(&[m_smooth, m_thresh]);
    let mut a = System::new(m_smooth, x0, i0)?;
    let mut b = System::new(m_thresh, x0, i0)?;
    let (sa, sb) = (m_smooth.switching(), m_thresh.switching());
    let d = m_smooth.dim();
    let full = sp.record == RecordMode::Full;

    let mut rec_a = Recorder::new(d, sp.record);
    let mut rec_b = Recorder::new(d, sp.record);
    let mut count_a = PathCounters { candidates: 0, sup_norm: a.norm(), events: Vec::new() };
    let mut count_b = PathCounters { candidates: 0, sup_norm: b.norm(), events: Vec::new() };
    let mut candidates = Vec::new();
    let mut sup_distance = distance(&a.x, &b.x);
    let (mut mismatch, mut gap_integral) = (0.0, 0.0);
    let mut gap = rate_gap(sa, &a.x, sb, &b.x);
    let mut gaps = if full { vec![gap] } else { Vec::new() };
    let mut now = 0.0;

    rec_a.observe(0.0, &a.x, a.regime, NodeKind::Initial);
    rec_b.observe(0.0, &b.x, b.regime, NodeKind::Initial);
    let mut rng = stream_rng(sp.seed, stream);
    drive(d, sp, kappa, &mut rng, |node| {
        match node {
            Node::Step { t, h, dw } => {
                if a.regime != b.regime {
                    mismatch += h;
                }
                a.step(t, h, dw)?;
                b.step(t, h, dw)?;
                let next = rate_gap(sa, &a.x, sb, &b.x);
                gap_integral += 0.5 * h * (gap + next);
                gap = next;
                now = t;
                sup_distance = sup_distance.max(distance(&a.x, &b.x));
                count_a.sup_norm = count_a.sup_norm.max(a.norm());
                count_b.sup_norm = count_b.sup_norm.max(b.norm());
                rec_a.observe(t, &a.x, a.regime, NodeKind::Euler);
                rec_b.observe(t, &b.x, b.regime, NodeKind::Euler);
                if full {
                    gaps.push(gap);
                }
            }
            Node::Candidate { t, mark } => {
                candidates.push((t, mark));
                for (sys, count, rec) in [(&mut a, &mut count_a, &mut rec_a), (&mut b, &mut count_b, &mut rec_b)] {
                    count.candidates += 1;
                    let from = sys.regime;
                    if let Some(to) = sys.jump(bound, mark) {
                        count.events.push(SwitchEvent { time: t, from, to, mark });
                        rec.observe(t, &sys.x, to, NodeKind::Switch);
                    }
                }
            }
            Node::Checkpoint => {
                rec_a.observe(now, &a.x, a.regime, NodeKind::Checkpoint);
                rec_b.observe(now, &b.x, b.regime, NodeKind::Checkpoint);
            }
        }
        Ok(())
    })?;

    Ok(CoupledRun {
        seed: sp.seed,
        stream,
        horizon: sp.horizon,
        record: sp.record,
        reference: rec_a.finish(count_a),
        approximant: rec_b.finish(count_b),
        candidates,
        sup_distance,
        mismatch_fraction: mismatch / sp.horizon,
        rate_gap_integral: gap_integral,
        rate_gap: gaps,
    })
}

/// Both sides of the mismatch inequality
/// `(1/t)∫₀ᵗ P(Λ_s ≠ Λ_s^{(n)}) ds ≤ ∫₀ᵗ E‖Q(X_s) − Q^{(n)}(X_s^{(n)})‖_{ℓ1} ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MismatchCheck {
    pub t: f64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
}

impl MismatchCheck {
    pub fn combined_stderr(&self) -> f64 {
        self.lhs_stderr.hypot(self.rhs_stderr)
    }

    /// `lhs ≤ rhs + k·(combined stderr)`.
    pub fn holds_within(&self, k: f64) -> bool {
        self.lhs <= self.rhs + k * self.combined_stderr()
    }

    fn from_samples(t: f64, lhs: impl Iterator<Item = f64>, rhs: impl Iterator<Item = f64>) -> Self {
        let (lhs, lhs_stderr) = mean_stderr(lhs);
        let (rhs, rhs_stderr) = mean_stderr(rhs);
        Self { t, lhs, lhs_stderr, rhs, rhs_stderr }
    }
}

/// Integrals of the mismatch indicator and the rate gap over `[0, t]` from a
/// full-path record.
fn integrals_to(run: &CoupledRun, t: f64) -> (f64, f64) {
    let (ta, ra, rb) = (&run.reference.times, &run.reference.regimes, &run.approximant.regimes);
    let (mut mismatch, mut gap) = (0.0, 0.0);
    for k in 0..ta.len().saturating_sub(1) {
        let (t0, t1) = (ta[k], ta[k + 1]);
        if t0 >= t {
            break;
        }
        let h = t1.min(t) - t0;
        if ra[k] != rb[k] {
            mismatch += h;
        }
        let g1 =
            if t1 <= t { run.rate_gap[k + 1] } else { run.rate_gap[k] + (run.rate_gap[k + 1] - run.rate_gap[k]) * h / (t1 - t0) };
        gap += 0.5 * h * (run.rate_gap[k] + g1);
    }
    (mismatch, gap)
}

/// Monte Carlo estimate of both sides of the mismatch inequality at time `t`.
pub fn mismatch_check(runs: &[CoupledRun], t: f64) -> Result<MismatchCheck, CoupleError> {
    if let Some(r) = runs.iter().find(|r| r.record != RecordMode::Full) {
        return Err(CoupleError::InsufficientRecordMode(r.record));
    }
    if runs.is_empty() {
        return Err(CoupleError::InvalidArgument("no coupled runs".into()));
    }
    let horizon = runs.iter().map(|r| r.horizon).fold(f64::INFINITY, f64::min);
    if !(t > 0.0 && t <= horizon) {
        return Err(CoupleError::InvalidArgument(format!("time {t} outside (0, {horizon}]")));
    }
    let terms: Vec<(f64, f64)> = runs.iter().map(|r| integrals_to(r, t)).collect();
    Ok(MismatchCheck::from_samples(t, terms.iter().map(|p| p.0 / t), terms.iter().map(|p| p.1)))
}

/// The same estimate at `t = T` from the running integrals, for any record mode.
pub fn mismatch_at_horizon(runs: &[CoupledRun]) -> Result<MismatchCheck, CoupleError> {
    let t = runs.first().ok_or_else(|| CoupleError::InvalidArgument("no coupled runs".into()))?.horizon;
    Ok(MismatchCheck::from_samples(t, runs.iter().map(|r| r.mismatch_fraction), runs.iter().map(|r| r.rate_gap_integral)))
}

/// Empirical `W₁` between two equal-size samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Estimate {
    pub value: f64,
    /// `true` for the exact order-statistics value (d = 1); `false` when the
    /// value is the coupled-plan mean distance, an upper bound on `W₁`.
    pub exact: bool,
}

pub fn w1_empirical(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<W1Estimate, CoupleError> {
    if a.len() != b.len() {
        return Err(CoupleError::UnequalCounts { a: a.len(), b: b.len() });
    }
    let d = a.first().map(Vec::len).ok_or(CoupleError::BadSamples)?;
    if d == 0 || a.iter().chain(b).any(|x| x.len() != d) {
        return Err(CoupleError::BadSamples);
    }
    let m = a.len() as f64;
    if d == 1 {
        let mut xs: Vec<f64> = a.iter().map(|x| x[0]).collect();
        let mut ys: Vec<f64> = b.iter().map(|y| y[0]).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let value = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / m;
        return Ok(W1Estimate { value, exact: true });
    }
    let value = a.iter().zip(b).map(|(x, y)| distance(x, y)).sum::<f64>() / m;
    Ok(W1Estimate { value, exact: false })
}

/// One quantization level of a convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    /// Upper bound on `sup_x ‖Q^{(n)}(x) − Q(x)‖_{ℓ1}`.
    pub theta_n: f64,
    /// `Ŵ₁` at each checkpoint.
    pub w1_hat: Vec<f64>,
    /// Mean over pairs of `sup_t |X_t − X_t^{(n)}|`.
    pub coupled_mean: f64,
    /// `2T·e^{(K₂ + 2(N−1)K₃)T}·Θ_n`.
    pub bound: f64,
    /// Largest standard error of the coupled distance over the checkpoints.
    pub stderr: f64,
    pub mismatch: MismatchCheck,
}

impl RateRow {
    pub fn w1_sup(&self) -> f64 {
        self.w1_hat.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub k2: f64,
    pub k3: f64,
    pub radius: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub checkpoints: Vec<f64>,
    /// Whether `Ŵ₁` is exact (d = 1) or the coupled upper bound.
    pub w1_exact: bool,
    pub rows: Vec<RateRow>,
}

/// Settings of [`convergence_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub levels: Vec<usize>,
    /// Half-width of the quantized domain.
    pub radius: f64,
    /// Grid step for the `Θ_n` bound.
    pub theta_step: f64,
    pub x0: Vec<f64>,
    pub i0: usize,
}

fn check_hypotheses(m: &HybridModel) -> Result<(f64, f64), CoupleError> {
    let violated = |msg: &str| CoupleError::HypothesisViolated(msg.into());
    let SwitchingSpec::Smooth(sq) = m.switching() else {
        return Err(violated("switching rates must be smooth"));
    };
    if !matches!(m.drift(), DriftSpec::Bounded { .. }) {
        return Err(violated("drift must be bounded plus linear"));
    }
    if m.diffusion().shared_constant().is_none() {
        return Err(violated("diffusion must be one constant matrix shared by all regimes"));
    }
    let sigma = m.diffusion_at(&vec![0.0; m.dim()], 0).map_err(SimError::from)?;
    if sigma.determinant() == 0.0 {
        return Err(violated("diffusion matrix must be nonsingular"));
    }
    let k2 = m.bounded_drift_constant().ok_or_else(|| violated("drift has no bounded decomposition"))?;
    Ok((k2, sq.lipschitz()))
}

/// Quantizes the smooth rates of `m` at every level, runs `sp.paths` coupled
/// pairs per level and tabulates `Ŵ₁` against the theoretical bound.
///
/// Checkpoints default to `{T/4, T/2, 3T/4, T}` when `sp.checkpoints` is
/// empty. Every level reuses the same streams, so rows share their noise.
pub fn convergence_experiment(m: &HybridModel, setup: &ConvergenceSetup, sp: &SimParams) -> Result<RateTable, CoupleError> {
    let (k2, k3) = check_hypotheses(m)?;
    let SwitchingSpec::Smooth(sq) = m.switching() else { unreachable!("checked above") };
    if setup.levels.is_empty() || setup.levels.contains(&0) {
        return Err(CoupleError::InvalidArgument(format!("levels must be positive, got {:?}", setup.levels)));
    }
    let mut sp = sp.clone();
    if sp.checkpoints.is_empty() {
        sp.checkpoints = (1..=4).map(|k| sp.horizon * k as f64 / 4.0).collect();
    }
    sp.validate()?;
    let n_regimes = m.n_regimes() as f64;
    let growth = (2.0 * sp.horizon * ((k2 + 2.0 * (n_regimes - 1.0) * k3) * sp.horizon).exp()).max(0.0);

    let mut levels = setup.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let mut rows = Vec::with_capacity(levels.len());
    let mut w1_exact = true;
    for n in levels {
        let switching = quantize(sq, n, setup.radius)?;
        let theta_n = theta_distance(m.switching(), &switching, setup.radius, setup.theta_step)?;
        let mq = m.with_switching(switching).map_err(SimError::from)?;
        warn_coarse_step(&sp, shared_bound(&[m, &mq]).0);
        let runs = par_paths(sp.paths, |k| {
            coupled_paths(m, &mq, &setup.x0, setup.i0, &sp, k as u64).map_err(|e| match e {
                CoupleError::Sim(s) => s,
                other => SimError::InvalidParams(other.to_string()),
            })
        })?;
        let mut w1_hat = Vec::with_capacity(sp.checkpoints.len());
        let mut stderr = 0.0f64;
        for c in 0..sp.checkpoints.len() {
            let xs: Vec<Vec<f64>> = runs.iter().map(|r| r.reference.checkpoint_states[c].clone()).collect();
            let ys: Vec<Vec<f64>> = runs.iter().map(|r| r.approximant.checkpoint_states[c].clone()).collect();
            let w = w1_empirical(&xs, &ys)?;
            w1_exact &= w.exact;
            w1_hat.push(w.value);
            stderr = stderr.max(mean_stderr(runs.iter().map(|r| r.checkpoint_distances()[c])).1);
        }
        let (coupled_mean, _) = mean_stderr(runs.iter().map(|r| r.sup_distance));
        rows.push(RateRow {
            n,
            theta_n,
            w1_hat,
            coupled_mean,
            bound: growth * theta_n,
            stderr,
            mismatch: mismatch_at_horizon(&runs)?,
        });
    }
    Ok(RateTable {
        k2,
        k3,
        radius: setup.radius,
        horizon: sp.horizon,
        dt: sp.dt,
        paths: sp.paths,
        seed: sp.seed,
        checkpoints: sp.checkpoints.clone(),
        w1_exact,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coefficient, DiffusionSpec};
    use crate::qmatrix::QMatrix;
    use crate::threshold::{Shape, SmoothQ};

    fn q(rows: &[&[f64]]) -> QMatrix {
        QMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn tanh_model(b: f64) -> HybridModel {
        let sq = SmoothQ::new(q(&[&[-2.0, 2.0], &[2.0, -2.0]]), vec![vec![0.0, b], vec![b, 0.0]], Shape::TanhSigned).unwrap();
        HybridModel::new(
            1,
            2,
            DriftSpec::Bounded { b_hat: vec![1.0, -1.0], z: None },
            DiffusionSpec::Constant { sigma: vec![Coefficient::Scalar(1.0)] },
            sq.into(),
        )
        .unwrap()
    }

    #[test]
    fn constant_smooth_and_single_cell_are_identical() {
        let m = tanh_model(0.0);
        let mq = m.with_switching(SwitchingSpec::constant(q(&[&[-2.0, 2.0], &[2.0, -2.0]])).unwrap()).unwrap();
        let sp = SimParams::new(1.0, 1e-2, 1, 3).with_record(RecordMode::Full);
        let run = coupled_paths(&m, &mq, &[0.3], 0, &sp, 0).unwrap();
        assert_eq!(run.reference.states, run.approximant.states);
        assert_eq!(run.reference.regimes, run.approximant.regimes);
        assert_eq!(run.sup_distance, 0.0);
        assert_eq!(run.mismatch_fraction, 0.0);
        let check = mismatch_check(&[run], 1.0).unwrap();
        assert_eq!((check.lhs, check.rhs), (0.0, 0.0));
    }

    #[test]
    fn constant_rate_difference_integrates_exactly() {
        let m = tanh_model(0.0).with_switching(SwitchingSpec::constant(q(&[&[-2.0, 2.0], &[2.0, -2.0]])).unwrap()).unwrap();
        let mq = m.with_switching(SwitchingSpec::constant(q(&[&[-2.5, 2.5], &[2.0, -2.0]])).unwrap()).unwrap();
        let sp = SimParams::new(2.0, 1e-2, 1, 3).with_record(RecordMode::Full);
        let run = coupled_paths(&m, &mq, &[0.0], 0, &sp, 0).unwrap();
        let check = mismatch_check(std::slice::from_ref(&run), 1.5).unwrap();
        assert!((check.rhs - 1.5 * 0.5).abs() < 1e-12);
        assert!((run.rate_gap_integral - 2.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn runs_share_candidates() {
        let m = tanh_model(0.5);
        let SwitchingSpec::Smooth(sq) = m.switching() else { unreachable!() };
        let mq = m.with_switching(quantize(sq, 4, 2.0).unwrap()).unwrap();
        let sp = SimParams::new(2.0, 1e-2, 1, 11).with_record(RecordMode::Full);
        let run = coupled_paths(&m, &mq, &[0.1], 1, &sp, 5).unwrap();
        assert_eq!(run.reference.times, run.approximant.times);
        assert_eq!(run.reference.candidates, run.candidates.len());
        assert_eq!(run.approximant.candidates, run.candidates.len());
        for e in run.reference.events.iter().chain(&run.approximant.events) {
            assert!(run.candidates.contains(&(e.time, e.mark)));
        }
        assert_eq!(run.rate_gap.len(), run.reference.len());
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let m = tanh_model(0.5);
        let other = HybridModel::new(
            1,
            2,
            DriftSpec::Bounded { b_hat: vec![1.0, 1.0], z: None },
            DiffusionSpec::Constant { sigma: vec![Coefficient::Scalar(1.0)] },
            m.switching().clone(),
        )
        .unwrap();
        let sp = SimParams::new(1.0, 0.1, 1, 0);
        assert!(matches!(coupled_paths(&m, &other, &[0.0], 0, &sp, 0), Err(CoupleError::ModelMismatch(_))));
    }

    #[test]
    fn mismatch_check_needs_full_records() {
        let m = tanh_model(0.0);
        let sp = SimParams::new(1.0, 0.1, 1, 0);
        let run = coupled_paths(&m, &m, &[0.0], 0, &sp, 0).unwrap();
        assert_eq!(mismatch_check(&[run], 1.0), Err(CoupleError::InsufficientRecordMode(RecordMode::Terminal)));
    }

    #[test]
    fn w1_examples() {
        let a: Vec<Vec<f64>> = [0.3, -1.0, 2.5, 0.0].iter().map(|&v| vec![v]).collect();
        assert_eq!(w1_empirical(&a, &a).unwrap().value, 0.0);
        let shifted: Vec<Vec<f64>> = a.iter().rev().map(|x| vec![x[0] + 0.75]).collect();
        assert!((w1_empirical(&a, &shifted).unwrap().value - 0.75).abs() < 1e-15);
        assert_eq!(w1_empirical(&a, &a[..3]), Err(CoupleError::UnequalCounts { a: 4, b: 3 }));
        let planar = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let moved = vec![vec![3.0, 4.0], vec![1.0, 1.0]];
        assert_eq!(w1_empirical(&planar, &moved).unwrap(), W1Estimate { value: 2.5, exact: false });
    }

    #[test]
    fn experiment_rejects_unbounded_drift() {
        let m = tanh_model(0.5);
        let linear = HybridModel::new(
            1,
            2,
            DriftSpec::Linear { b: vec![Coefficient::Scalar(-1.0); 2] },
            m.diffusion().clone(),
            m.switching().clone(),
        )
        .unwrap();
        let setup = ConvergenceSetup { levels: vec![2], radius: 2.0, theta_step: 1e-3, x0: vec![0.0], i0: 0 };
        let sp = SimParams::new(1.0, 0.1, 4, 0);
        assert!(matches!(convergence_experiment(&linear, &setup, &sp), Err(CoupleError::HypothesisViolated(_))));
    }

    #[test]
    fn constant_rates_give_zero_distance() {
        let m = tanh_model(0.0);
        let setup = ConvergenceSetup { levels: vec![4, 2], radius: 2.0, theta_step: 1e-3, x0: vec![0.0], i0: 0 };
        let table = convergence_experiment(&m, &setup, &SimParams::new(1.0, 1e-2, 50, 9)).unwrap();
        assert_eq!(table.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![2, 4]);
        for row in &table.rows {
            assert_eq!(row.theta_n, 0.0);
            assert_eq!(row.w1_sup(), 0.0);
            assert_eq!(row.coupled_mean, 0.0);
        }
    }
}
