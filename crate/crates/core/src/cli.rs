//! Command-line front end: JSON config ingestion, subcommand dispatch and
//! deterministic CSV/JSON emission.
//!
//! Regimes are 1-based in every flag and output file. Floats in CSV files are
//! written with 17 significant digits so identical runs produce identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::classify::{classify, LyapunovData};
use crate::couple::{convergence_experiment, ConvergenceSetup, RateTable};
use crate::model::HybridModel;
use crate::simulate::{
    ensemble, estimate_sup_exceedance, occupation_and_recurrence, EnsembleSummary, Exceedance, RecordMode, Recurrence, SimParams,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),
    #[error("model: {0}")]
    ModelInvalid(String),
    #[error("{path}: {message}")]
    IoFailure { path: PathBuf, message: String },
    #[error("{module}::{operation}: {message}")]
    Downstream { module: &'static str, operation: &'static str, message: String },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "ConfigParse",
            CliError::ModelInvalid(_) => "ModelInvalid",
            CliError::IoFailure { .. } => "IoFailure",
            CliError::Downstream { .. } => "Downstream",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 2,
            CliError::ModelInvalid(_) => 3,
            CliError::IoFailure { .. } => 4,
            CliError::Downstream { .. } => 1,
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Downstream { module, operation, .. } = self {
            v["module"] = json!(module);
            v["operation"] = json!(operation);
        }
        v.to_string()
    }

    fn downstream(module: &'static str, operation: &'static str) -> impl FnOnce(String) -> CliError {
        move |message| CliError::Downstream { module, operation, message }
    }
}

#[derive(Debug, Parser)]
#[command(name = "switchdiff", version, about = "Threshold-switching diffusions: simulation, coupling and classification")]
pub struct RunConfig {
    /// Worker threads for path-parallel work (outputs do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an ensemble of paths.
    Simulate(SimulateArgs),
    /// Run the smooth-vs-quantized convergence experiment.
    Couple(CoupleArgs),
    /// Classify a model from Lyapunov data.
    Classify(ClassifyArgs),
    /// Monte Carlo experiments on long-run behaviour.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Exceedance probability as the initial state shrinks towards 0.
    Stability(StabilityArgs),
    /// Ball occupation, returns and terminal spread.
    Recurrence(RecurrenceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunParams {
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub run: RunParams,
    /// Initial state, comma-separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    /// Initial regime, 1-based.
    #[arg(long, default_value_t = 1)]
    pub regime: usize,
    #[arg(long, value_enum, default_value = "terminal")]
    pub record: RecordArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum RecordArg {
    Terminal,
    Full,
    Events,
}

impl From<RecordArg> for RecordMode {
    fn from(r: RecordArg) -> Self {
        match r {
            RecordArg::Terminal => RecordMode::Terminal,
            RecordArg::Full => RecordMode::Full,
            RecordArg::Events => RecordMode::Events,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CoupleArgs {
    /// Model whose switching rates are smooth.
    #[arg(long)]
    pub smooth: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<usize>,
    #[command(flatten)]
    pub run: RunParams,
    /// Half-width of the quantized domain.
    #[arg(long, default_value_t = 4.0)]
    pub radius: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub regime: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lyapunov: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub run: RunParams,
    #[arg(long)]
    pub eps: f64,
    /// Initial distances from the origin to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub regime: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RecurrenceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub run: RunParams,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub regime: usize,
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::IoFailure { path: path.into(), message: e.to_string() })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::IoFailure { path: path.into(), message: e.to_string() })
}

/// Syntax errors are config errors; well-formed JSON that fails validation
/// is reported through `invalid`.
fn parse_json<T: DeserializeOwned>(path: &Path, invalid: fn(String) -> CliError) -> Result<T, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
    serde_json::from_value(value).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<HybridModel, CliError> {
    parse_json(path, CliError::ModelInvalid)
}

fn params(run: &RunParams, record: RecordMode) -> Result<SimParams, CliError> {
    let bad = |m: String| Err(CliError::ConfigParse(m));
    if !(run.horizon > 0.0 && run.horizon.is_finite()) {
        return bad(format!("--T must be positive, got {}", run.horizon));
    }
    if !(run.dt > 0.0) || run.dt > run.horizon {
        return bad(format!("--dt must lie in (0, T], got dt = {}, T = {}", run.dt, run.horizon));
    }
    if run.paths == 0 {
        return bad("--paths must be at least 1".into());
    }
    Ok(SimParams::new(run.horizon, run.dt, run.paths, run.seed).with_record(record))
}

fn initial_state(m: &HybridModel, x0: &[f64], regime: usize) -> Result<(Vec<f64>, usize), CliError> {
    let x = if x0.is_empty() { vec![0.0; m.dim()] } else { x0.to_vec() };
    if x.len() != m.dim() {
        return Err(CliError::ConfigParse(format!("--x0 has {} entries, model dimension is {}", x.len(), m.dim())));
    }
    if regime == 0 || regime > m.n_regimes() {
        return Err(CliError::ConfigParse(format!("--regime must lie in 1..={}, got {regime}", m.n_regimes())));
    }
    Ok((x, regime - 1))
}

fn csv_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let row: Vec<String> = fields.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

/// Ensemble CSV: one row per recorded node (`path, t, x_1..x_d, regime`)
/// when trajectories were kept, else one row per path
/// (`path, x_T_1..x_T_d, regime_T, sup_norm`).
pub fn ensemble_csv(s: &EnsembleSummary) -> String {
    let d = s.dim;
    let mut out = String::new();
    match &s.trajectories {
        Some(trajs) => {
            csv_row(
                &mut out,
                ["path".into(), "t".into()].into_iter().chain((1..=d).map(|k| format!("x_{k}"))).chain(["regime".into()]),
            );
            for (p, tr) in trajs.iter().enumerate() {
                for k in 0..tr.len() {
                    csv_row(
                        &mut out,
                        [p.to_string(), fmt_f64(tr.times[k])]
                            .into_iter()
                            .chain(tr.state(k).iter().map(|&v| fmt_f64(v)))
                            .chain([(tr.regimes[k] + 1).to_string()]),
                    );
                }
            }
        }
        None => {
            csv_row(
                &mut out,
                ["path".into()]
                    .into_iter()
                    .chain((1..=d).map(|k| format!("x_T_{k}")))
                    .chain(["regime_T".into(), "sup_norm".into()]),
            );
            for p in 0..s.paths {
                csv_row(
                    &mut out,
                    [p.to_string()]
                        .into_iter()
                        .chain(s.terminal_states[p].iter().map(|&v| fmt_f64(v)))
                        .chain([(s.terminal_regimes[p] + 1).to_string(), fmt_f64(s.sup_norms[p])]),
                );
            }
        }
    }
    out
}

/// Rate-table CSV, one row per level.
pub fn rate_table_csv(t: &RateTable) -> String {
    let mut out = String::new();
    let w1 = (1..=t.checkpoints.len()).map(|k| format!("w1_hat_t{k}"));
    csv_row(
        &mut out,
        ["n".into(), "theta_n".into()]
            .into_iter()
            .chain(w1)
            .chain(["coupled_mean", "bound", "stderr", "mismatch_lhs", "mismatch_rhs", "mismatch_stderr"].map(String::from)),
    );
    for r in &t.rows {
        csv_row(
            &mut out,
            [r.n.to_string(), fmt_f64(r.theta_n)].into_iter().chain(r.w1_hat.iter().map(|&v| fmt_f64(v))).chain(
                [r.coupled_mean, r.bound, r.stderr, r.mismatch.lhs, r.mismatch.rhs, r.mismatch.combined_stderr()].map(fmt_f64),
            ),
        );
    }
    out
}

pub fn exceedance_csv(curve: &[(f64, Exceedance)]) -> String {
    let mut out = String::new();
    csv_row(&mut out, ["x0_norm", "probability", "stderr", "paths", "horizon"].map(String::from));
    for (x0, e) in curve {
        csv_row(&mut out, [fmt_f64(*x0), fmt_f64(e.probability), fmt_f64(e.stderr), e.paths.to_string(), fmt_f64(e.horizon)]);
    }
    out
}

pub fn recurrence_csv(r: &Recurrence) -> String {
    let mut out = String::new();
    csv_row(&mut out, ["path", "occupation", "returns", "terminal_norm"].map(String::from));
    for (p, s) in r.per_path.iter().enumerate() {
        csv_row(&mut out, [p.to_string(), fmt_f64(s.occupation), s.returns.to_string(), fmt_f64(s.terminal_norm)]);
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// An experiment's artifacts, written together.
pub enum Bundle<'a> {
    Ensemble(&'a EnsembleSummary),
    Rates(&'a RateTable),
    Exceedance(&'a [(f64, Exceedance)]),
    Recurrence(&'a Recurrence),
}

/// Writes the CSV for `bundle` to `path`.
pub fn emit_experiment_bundle(bundle: Bundle<'_>, path: &Path) -> Result<(), CliError> {
    let csv = match bundle {
        Bundle::Ensemble(s) => ensemble_csv(s),
        Bundle::Rates(t) => rate_table_csv(t),
        Bundle::Exceedance(c) => exceedance_csv(c),
        Bundle::Recurrence(r) => recurrence_csv(r),
    };
    write(path, &csv)
}

/// Executes a parsed command line; returns the one-line summary.
pub fn run(config: RunConfig) -> Result<String, CliError> {
    match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::ConfigParse(format!("--threads: {e}")))?;
            pool.install(|| dispatch(config.command))
        }
        None => dispatch(config.command),
    }
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Simulate(a) => {
            let m = load_model(&a.model)?;
            let sp = params(&a.run, a.record.into())?;
            let (x0, i0) = initial_state(&m, &a.x0, a.regime)?;
            let s = ensemble(&m, &x0, i0, &sp).map_err(|e| CliError::downstream("simulate", "ensemble")(e.to_string()))?;
            emit_experiment_bundle(Bundle::Ensemble(&s), &a.run.out)?;
            let (mean, se) = s.terminal_mean();
            Ok(format!("simulated {} paths; mean x_T_1 = {mean:.6} ± {se:.6}", s.paths))
        }
        Command::Couple(a) => {
            let m = load_model(&a.smooth)?;
            let sp = params(&a.run, RecordMode::Terminal)?;
            let (x0, i0) = initial_state(&m, &a.x0, a.regime)?;
            if !(a.radius > 0.0) {
                return Err(CliError::ConfigParse(format!("--radius must be positive, got {}", a.radius)));
            }
            let setup = ConvergenceSetup { levels: a.levels, radius: a.radius, theta_step: a.radius * 1e-4, x0, i0 };
            let t = convergence_experiment(&m, &setup, &sp).map_err(|e| match e {
                crate::couple::CoupleError::HypothesisViolated(msg) => CliError::ModelInvalid(msg),
                other => CliError::downstream("couple", "convergence_experiment")(other.to_string()),
            })?;
            emit_experiment_bundle(Bundle::Rates(&t), &a.run.out)?;
            let last = t.rows.last().expect("at least one level");
            Ok(format!("{} levels; n = {}: sup W1 = {:.6e}, bound = {:.6e}", t.rows.len(), last.n, last.w1_sup(), last.bound))
        }
        Command::Classify(a) => {
            let m = load_model(&a.model)?;
            let ld: LyapunovData = parse_json(&a.lyapunov, CliError::ConfigParse)?;
            let report = classify(&m, &ld).map_err(|e| CliError::downstream("classify", "classify")(e.to_string()))?;
            write(&a.out, &to_json(&report))?;
            Ok(serde_json::to_value(report.verdict).expect("verdict").as_str().expect("string").to_string())
        }
        Command::Experiment(Experiment::Stability(a)) => {
            let m = load_model(&a.model)?;
            let sp = params(&a.run, RecordMode::Terminal)?;
            if !(a.eps > 0.0) || a.x0.iter().any(|&r| !(r > 0.0)) {
                return Err(CliError::ConfigParse("--eps and every --x0 radius must be positive".into()));
            }
            let (_, i0) = initial_state(&m, &[], a.regime)?;
            let mut curve = Vec::with_capacity(a.x0.len());
            for &r in &a.x0 {
                let mut x0 = vec![0.0; m.dim()];
                x0[0] = r;
                let e = estimate_sup_exceedance(&m, &x0, i0, a.eps, &sp)
                    .map_err(|e| CliError::downstream("simulate", "estimate_sup_exceedance")(e.to_string()))?;
                curve.push((r, e));
            }
            emit_experiment_bundle(Bundle::Exceedance(&curve), &a.run.out)?;
            let (r, e) = curve.last().expect("nonempty sweep");
            Ok(format!("P(sup |X| > {}) from |x0| = {r:e}: {:.4} ± {:.4}", a.eps, e.probability, e.stderr))
        }
        Command::Experiment(Experiment::Recurrence(a)) => {
            let m = load_model(&a.model)?;
            let sp = params(&a.run, RecordMode::Terminal)?;
            let (x0, i0) = initial_state(&m, &a.x0, a.regime)?;
            let r = occupation_and_recurrence(&m, &x0, i0, &sp, a.radius)
                .map_err(|e| CliError::downstream("simulate", "occupation_and_recurrence")(e.to_string()))?;
            emit_experiment_bundle(Bundle::Recurrence(&r), &a.run.out)?;
            Ok(format!(
                "occupation of |x| ≤ {} = {:.4}; median terminal |x| = {:.4}",
                a.radius,
                r.pooled_occupation,
                r.terminal_quantile(0.5)
            ))
        }
    }
}

/// Parses `args`, runs, prints the summary or a JSON error; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::ConfigParse(e.to_string().lines().next().unwrap_or_default().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(config) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn error_json_is_machine_readable() {
        let e = CliError::Downstream { module: "couple", operation: "coupled_paths", message: "x".into() };
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "Downstream");
        assert_eq!(v["module"], "couple");
    }

    #[test]
    fn dt_above_horizon_is_a_config_error() {
        let run = RunParams { horizon: 1.0, dt: 2.0, paths: 1, seed: 0, out: "x".into() };
        assert!(matches!(params(&run, RecordMode::Terminal), Err(CliError::ConfigParse(_))));
    }

    #[test]
    fn seed_is_required() {
        let args = ["switchdiff", "simulate", "--model", "m.json", "--T", "1", "--dt", "0.1", "--paths", "1", "--out", "o.csv"];
        let err = RunConfig::try_parse_from(args).unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::MissingRequiredArgument);
    }

    #[test]
    fn experiment_subcommands_parse() {
        let args = [
            "switchdiff",
            "experiment",
            "stability",
            "--model",
            "m.json",
            "--T",
            "1",
            "--dt",
            "0.1",
            "--paths",
            "4",
            "--seed",
            "1",
            "--out",
            "o.csv",
            "--eps",
            "0.1",
        ];
        let c = RunConfig::try_parse_from(args).unwrap();
        let Command::Experiment(Experiment::Stability(a)) = c.command else { panic!("stability expected") };
        assert_eq!(a.x0, vec![0.1, 0.01, 0.001, 0.0001]);
        let args = [
            "switchdiff",
            "experiment",
            "recurrence",
            "--model",
            "m.json",
            "--T",
            "1",
            "--dt",
            "0.1",
            "--paths",
            "4",
            "--seed",
            "1",
            "--out",
            "o.csv",
            "--radius",
            "5",
            "--x0",
            "-2",
        ];
        let c = RunConfig::try_parse_from(args).unwrap();
        let Command::Experiment(Experiment::Recurrence(a)) = c.command else { panic!("recurrence expected") };
        assert_eq!(a.x0, vec![-2.0]);
    }
}
