//! Path sampler for threshold-switching diffusions.
//!
//! Switching is driven by a Poisson random measure on `[0, T] × [0, κ]`
//! with `κ = (2N−1)·N·K`: candidate times arrive at rate `κ`, each carries a
//! uniform mark `z`, and the regime moves from `i` to `j` exactly when `z`
//! lands in `Γ_ij(X)`. Between candidates the continuous component follows
//! Euler–Maruyama on the grid `{k·dt}`; a candidate splits the step it
//! falls into so the mark is tested against the state at the candidate time.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, stream id)`,
//! so ensembles are reproducible regardless of how paths are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HybridModel, ModelError};
use crate::threshold::{mark_space_size, GammaLayout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("path {path}: {source}")]
    PathFailed { path: usize, source: Box<SimError> },
}

/// What a sampled path keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMode {
    /// Initial and terminal nodes only.
    #[default]
    Terminal,
    /// Every Euler node.
    Full,
    /// Initial node, one node per regime switch, terminal node.
    Events,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub record: RecordMode,
    /// Times at which states are captured; they become forced grid nodes.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

impl SimParams {
    pub fn new(horizon: f64, dt: f64, paths: usize, seed: u64) -> Self {
        Self { horizon, dt, paths, seed, record: RecordMode::Terminal, checkpoints: Vec::new() }
    }

    pub fn with_record(mut self, record: RecordMode) -> Self {
        self.record = record;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<f64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidParams(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon T = {} must be positive", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return bad(format!("need 0 < dt ≤ T, got dt = {}, T = {}", self.dt, self.horizon));
        }
        if self.paths == 0 {
            return bad("path count must be at least 1".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) || self.checkpoints.iter().any(|&c| !(c > 0.0 && c <= self.horizon))
        {
            return bad(format!("checkpoints {:?} must be increasing within (0, T]", self.checkpoints));
        }
        Ok(())
    }
}

/// Independent random stream for path `stream` under master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A regime change at a candidate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub mark: f64,
}

/// One sampled path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major, `dim` entries per recorded node.
    pub states: Vec<f64>,
    pub regimes: Vec<usize>,
    pub events: Vec<SwitchEvent>,
    /// Jump candidates, including those that left the regime unchanged.
    pub candidates: usize,
    /// `max |X|` over all Euler and candidate nodes.
    pub sup_norm: f64,
    pub terminal_state: Vec<f64>,
    pub terminal_regime: usize,
    pub checkpoint_states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time spent in each regime over `[0, horizon]`, exact from the event log.
    pub fn regime_occupation(&self, n: usize, initial: usize, horizon: f64) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        let (mut t, mut r) = (0.0, initial);
        for e in &self.events {
            occ[r] += e.time - t;
            t = e.time;
            r = e.to;
        }
        occ[r] += horizon - t;
        occ
    }

    /// `counts[i][j]` = number of `i → j` switches.
    pub fn transition_counts(&self, n: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; n]; n];
        for e in &self.events {
            counts[e.from][e.to] += 1;
        }
        counts
    }
}

/// Elementary pieces of the shared noise schedule.
pub(crate) enum Node<'a> {
    /// Euler step of length `h` ending at `t`, Brownian increment `dw`.
    Step {
        t: f64,
        h: f64,
        dw: &'a [f64],
    },
    /// Poisson candidate at `t` carrying mark `mark ∈ [0, κ)`.
    Candidate {
        t: f64,
        mark: f64,
    },
    Checkpoint,
}

/// Generates the merged grid / candidate / checkpoint schedule and hands
/// each node to `visit`. The schedule depends only on the parameters and
/// the random stream, never on the state.
pub(crate) fn drive<F>(d: usize, sp: &SimParams, kappa: f64, rng: &mut ChaCha8Rng, mut visit: F) -> Result<(), SimError>
where
    F: FnMut(Node<'_>) -> Result<(), SimError>,
{
    let horizon = sp.horizon;
    let dt = sp.dt;
    let snap = 1e-9 * dt;
    let clock = (kappa > 0.0).then(|| Exp::new(kappa).expect("positive rate"));
    let mut next_candidate = clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));
    let mut dw = vec![0.0; d];
    let mut t = 0.0;
    let mut k = 1usize;
    let mut cp = 0usize;
    while t < horizon {
        let mut next_grid = k as f64 * dt;
        if next_grid > horizon - snap {
            next_grid = horizon;
        }
        let next_cp = sp.checkpoints.get(cp).copied().unwrap_or(f64::INFINITY);
        let target = next_grid.min(next_candidate).min(next_cp);
        let h = target - t;
        if h > 0.0 {
            let scale = h.sqrt();
            for w in dw.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *w = z * scale;
            }
            visit(Node::Step { t: target, h, dw: &dw })?;
        }
        t = target;
        if (next_grid - target).abs() <= snap {
            k += 1;
            t = next_grid;
        }
        if (next_cp - target).abs() <= snap {
            visit(Node::Checkpoint)?;
            cp += 1;
        }
        if next_candidate == target {
            let mark = rng.random::<f64>() * kappa;
            visit(Node::Candidate { t, mark })?;
            next_candidate += clock.as_ref().expect("candidate implies a clock").sample(rng);
        }
    }
    Ok(())
}

/// Continuous and discrete state of one system under the shared schedule.
pub(crate) struct System<'m> {
    model: &'m HybridModel,
    pub x: Vec<f64>,
    pub regime: usize,
    drift: Vec<f64>,
    sigma: Vec<f64>,
}

impl<'m> System<'m> {
    pub fn new(model: &'m HybridModel, x0: &[f64], i0: usize) -> Result<Self, SimError> {
        let d = model.dim();
        if x0.len() != d {
            return Err(ModelError::DimensionMismatch { expected: d, got: x0.len() }.into());
        }
        if i0 >= model.n_regimes() {
            return Err(ModelError::RegimeOutOfRange { regime: i0, n: model.n_regimes() }.into());
        }
        Ok(Self { model, x: x0.to_vec(), regime: i0, drift: vec![0.0; d], sigma: vec![0.0; d * d] })
    }

    #[inline]
    pub fn step(&mut self, t: f64, h: f64, dw: &[f64]) -> Result<(), SimError> {
        let d = self.x.len();
        self.model.drift_into(&self.x, self.regime, &mut self.drift);
        self.model.diffusion_into(&self.x, self.regime, &mut self.sigma);
        for r in 0..d {
            let noise: f64 = (0..d).map(|c| self.sigma[r * d + c] * dw[c]).sum();
            self.x[r] += self.drift[r] * h + noise;
        }
        if self.x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SimError::NonFiniteState { time: t })
        }
    }

    /// Applies the mark test at the current state; returns the new regime if
    /// it changed.
    pub fn jump(&mut self, bound: f64, mark: f64) -> Option<usize> {
        let q = self.model.switching().evaluate(&self.x);
        let layout = GammaLayout::new(&q, bound).expect("shared bound dominates every rate");
        let to = layout.target(self.regime, mark);
        (to != self.regime).then(|| {
            self.regime = to;
            to
        })
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Mark-space bound and size for a set of coupled models.
pub(crate) fn shared_bound(models: &[&HybridModel]) -> (f64, f64) {
    let bound = models.iter().map(|m| m.switching().rate_bound()).fold(0.0, f64::max);
    (bound, mark_space_size(models[0].n_regimes(), bound))
}

pub(crate) fn warn_coarse_step(sp: &SimParams, bound: f64) {
    if sp.dt * bound > 0.1 {
        log::warn!("dt·K = {} exceeds 0.1; switching is resolved coarsely relative to the Euler grid", sp.dt * bound);
    }
}

/// What an observer sees at each recorded node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Initial,
    Euler,
    Switch,
    Checkpoint,
}

/// Runs one path and calls `observer(t, x, regime, kind)` at the initial
/// node, after each Euler step, after each regime switch, and at checkpoints.
pub fn sample_path_with<F>(
    m: &HybridModel,
    x0: &[f64],
    i0: usize,
    sp: &SimParams,
    stream: u64,
    mut observer: F,
) -> Result<PathCounters, SimError>
where
    F: FnMut(f64, &[f64], usize, NodeKind),
{
    sp.validate()?;
    let (bound, kappa) = shared_bound(&[m]);
    let mut sys = System::new(m, x0, i0)?;
    let mut rng = stream_rng(sp.seed, stream);
    let mut counters = PathCounters { candidates: 0, sup_norm: sys.norm(), events: Vec::new() };
    let mut now = 0.0;
    observer(0.0, &sys.x, sys.regime, NodeKind::Initial);
    drive(m.dim(), sp, kappa, &mut rng, |node| {
        match node {
            Node::Step { t, h, dw } => {
                sys.step(t, h, dw)?;
                now = t;
                counters.sup_norm = counters.sup_norm.max(sys.norm());
                observer(t, &sys.x, sys.regime, NodeKind::Euler);
            }
            Node::Candidate { t, mark } => {
                counters.candidates += 1;
                let from = sys.regime;
                if let Some(to) = sys.jump(bound, mark) {
                    counters.events.push(SwitchEvent { time: t, from, to, mark });
                    observer(t, &sys.x, to, NodeKind::Switch);
                }
            }
            Node::Checkpoint => observer(now, &sys.x, sys.regime, NodeKind::Checkpoint),
        }
        Ok(())
    })?;
    Ok(counters)
}

/// Bookkeeping returned by [`sample_path_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathCounters {
    pub candidates: usize,
    pub sup_norm: f64,
    pub events: Vec<SwitchEvent>,
}

/// Samples one path, deterministic in `(sp.seed, stream)`.
pub fn sample_path(m: &HybridModel, x0: &[f64], i0: usize, sp: &SimParams, stream: u64) -> Result<Trajectory, SimError> {
    let d = m.dim();
    let mut rec = Recorder::new(d, sp.record);
    let counters = sample_path_with(m, x0, i0, sp, stream, |t, x, r, kind| rec.observe(t, x, r, kind))?;
    Ok(rec.finish(counters))
}

/// Accumulates a [`Trajectory`] according to the record mode.
pub(crate) struct Recorder {
    dim: usize,
    mode: RecordMode,
    times: Vec<f64>,
    states: Vec<f64>,
    regimes: Vec<usize>,
    checkpoints: Vec<Vec<f64>>,
    last: (f64, Vec<f64>, usize),
}

impl Recorder {
    pub fn new(dim: usize, mode: RecordMode) -> Self {
        Self {
            dim,
            mode,
            times: Vec::new(),
            states: Vec::new(),
            regimes: Vec::new(),
            checkpoints: Vec::new(),
            last: (0.0, vec![0.0; dim], 0),
        }
    }

    fn push(&mut self, t: f64, x: &[f64], r: usize) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.regimes.push(r);
    }

    pub fn observe(&mut self, t: f64, x: &[f64], r: usize, kind: NodeKind) {
        self.last.0 = t;
        self.last.1.copy_from_slice(x);
        self.last.2 = r;
        match (kind, self.mode) {
            (NodeKind::Initial, _) => self.push(t, x, r),
            (NodeKind::Euler, RecordMode::Full) => self.push(t, x, r),
            // regimes are right-continuous: the node at the switch time carries the new regime
            (NodeKind::Switch, RecordMode::Full) => {
                if self.times.last() == Some(&t) {
                    *self.regimes.last_mut().expect("nonempty") = r;
                } else {
                    self.push(t, x, r);
                }
            }
            (NodeKind::Switch, RecordMode::Events) => self.push(t, x, r),
            (NodeKind::Checkpoint, _) => self.checkpoints.push(x.to_vec()),
            _ => {}
        }
    }

    pub fn finish(mut self, counters: PathCounters) -> Trajectory {
        let (t, x, r) = self.last.clone();
        if self.mode != RecordMode::Full && self.times.last() != Some(&t) {
            self.push(t, &x, r);
        } else if self.mode != RecordMode::Full {
            let k = self.times.len() - 1;
            self.states[k * self.dim..].copy_from_slice(&x);
            self.regimes[k] = r;
        }
        Trajectory {
            dim: self.dim,
            times: self.times,
            states: self.states,
            regimes: self.regimes,
            events: counters.events,
            candidates: counters.candidates,
            sup_norm: counters.sup_norm,
            terminal_state: x,
            terminal_regime: r,
            checkpoint_states: self.checkpoints,
        }
    }
}

/// Terminal statistics of `M` independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub seed: u64,
    pub paths: usize,
    pub dim: usize,
    pub terminal_states: Vec<Vec<f64>>,
    pub terminal_regimes: Vec<usize>,
    pub sup_norms: Vec<f64>,
    pub switch_counts: Vec<usize>,
    /// Present unless the record mode is terminal-only.
    pub trajectories: Option<Vec<Trajectory>>,
}

impl EnsembleSummary {
    /// Fraction of paths whose running maximum exceeded `eps`.
    pub fn exceedance_indicators(&self, eps: f64) -> Vec<bool> {
        self.sup_norms.iter().map(|&s| s > eps).collect()
    }

    /// Mean and standard error of the first coordinate of the terminal state.
    pub fn terminal_mean(&self) -> (f64, f64) {
        mean_stderr(self.terminal_states.iter().map(|x| x[0]))
    }
}

pub(crate) fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs paths `0..count` in parallel, returning results in index order.
pub(crate) fn par_paths<T, F>(count: usize, f: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(usize) -> Result<T, SimError> + Sync + Send,
{
    let results: Vec<Result<T, SimError>> = (0..count).into_par_iter().map(&f).collect();
    results.into_iter().enumerate().map(|(path, r)| r.map_err(|e| SimError::PathFailed { path, source: Box::new(e) })).collect()
}

/// `sp.paths` independent paths with stream ids `0..M`.
pub fn ensemble(m: &HybridModel, x0: &[f64], i0: usize, sp: &SimParams) -> Result<EnsembleSummary, SimError> {
    sp.validate()?;
    warn_coarse_step(sp, m.switching().rate_bound());
    let trajectories = par_paths(sp.paths, |k| sample_path(m, x0, i0, sp, k as u64))?;
    let summary = EnsembleSummary {
        seed: sp.seed,
        paths: sp.paths,
        dim: m.dim(),
        terminal_states: trajectories.iter().map(|t| t.terminal_state.clone()).collect(),
        terminal_regimes: trajectories.iter().map(|t| t.terminal_regime).collect(),
        sup_norms: trajectories.iter().map(|t| t.sup_norm).collect(),
        switch_counts: trajectories.iter().map(|t| t.events.len()).collect(),
        trajectories: (sp.record != RecordMode::Terminal).then_some(trajectories),
    };
    Ok(summary)
}

/// Monte Carlo estimate of `P(sup_{t ≤ T} |X_t| > ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exceedance {
    pub probability: f64,
    pub stderr: f64,
    pub paths: usize,
    /// Finite horizon standing in for `t ≥ 0`.
    pub horizon: f64,
}

pub fn estimate_sup_exceedance(m: &HybridModel, x0: &[f64], i0: usize, eps: f64, sp: &SimParams) -> Result<Exceedance, SimError> {
    if !(eps > 0.0) {
        return Err(SimError::InvalidParams(format!("exceedance radius must be positive, got {eps}")));
    }
    sp.validate()?;
    let sups = par_paths(sp.paths, |k| Ok(sample_path_with(m, x0, i0, sp, k as u64, |_, _, _, _| {})?.sup_norm))?;
    let hits = sups.iter().filter(|&&s| s > eps).count() as f64;
    let n = sp.paths as f64;
    let p = hits / n;
    Ok(Exceedance { probability: p, stderr: (p * (1.0 - p) / n).sqrt(), paths: sp.paths, horizon: sp.horizon })
}

/// Ball-occupation statistics of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecurrence {
    /// Fraction of `[0, T]` spent in `|x| ≤ R` (left-point rule on the grid).
    pub occupation: f64,
    /// Number of entries into the ball from outside.
    pub returns: usize,
    pub terminal_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recurrence {
    pub radius: f64,
    pub horizon: f64,
    pub per_path: Vec<PathRecurrence>,
    pub pooled_occupation: f64,
    pub mean_returns: f64,
    /// `(level, value)` pairs for terminal `|x|`.
    pub terminal_quantiles: Vec<(f64, f64)>,
}

impl Recurrence {
    pub fn terminal_quantile(&self, level: f64) -> f64 {
        let mut v: Vec<f64> = self.per_path.iter().map(|p| p.terminal_norm).collect();
        quantile(&mut v, level)
    }
}

/// Lower empirical quantile: the `⌈level·n⌉`-th order statistic.
pub fn quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    values[k - 1]
}

pub fn occupation_and_recurrence(
    m: &HybridModel,
    x0: &[f64],
    i0: usize,
    sp: &SimParams,
    radius: f64,
) -> Result<Recurrence, SimError> {
    if !(radius > 0.0) {
        return Err(SimError::InvalidParams(format!("ball radius must be positive, got {radius}")));
    }
    sp.validate()?;
    let per_path = par_paths(sp.paths, |k| {
        let mut inside_time = 0.0;
        let mut returns = 0;
        let (mut last_t, mut inside) = (0.0, true);
        let mut terminal = 0.0;
        sample_path_with(m, x0, i0, sp, k as u64, |t, x, _, kind| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            match kind {
                NodeKind::Initial => inside = r <= radius,
                NodeKind::Euler => {
                    if inside {
                        inside_time += t - last_t;
                    }
                    let now_inside = r <= radius;
                    if now_inside && !inside {
                        returns += 1;
                    }
                    inside = now_inside;
                    last_t = t;
                }
                _ => {}
            }
            terminal = r;
        })?;
        Ok(PathRecurrence { occupation: inside_time / sp.horizon, returns, terminal_norm: terminal })
    })?;
    let n = per_path.len() as f64;
    let pooled = per_path.iter().map(|p| p.occupation).sum::<f64>() / n;
    let mean_returns = per_path.iter().map(|p| p.returns as f64).sum::<f64>() / n;
    let mut norms: Vec<f64> = per_path.iter().map(|p| p.terminal_norm).collect();
    let terminal_quantiles = [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|&l| (l, quantile(&mut norms, l))).collect();
    Ok(Recurrence { radius, horizon: sp.horizon, per_path, pooled_occupation: pooled, mean_returns, terminal_quantiles })
}
