//! Diffusions with threshold-type regime switching.
//!
//! A hybrid state `(X_t, Λ_t)` evolves as `dX = b(X, Λ)dt + σ(X, Λ)dB`
//! while `Λ` jumps between `N` regimes at rates `q_ij(X)` that are piecewise
//! constant in `|x|` (or in `x` on the line). The crate provides
//!
//! * [`qmatrix`] — rate matrices, stationary laws and the linear-algebra
//!   certificates behind the stability criteria;
//! * [`threshold`] — threshold and smooth rate families, the mark-space
//!   layout used by the sampler, quantization and its error;
//! * [`model`] — drift/diffusion families and the generator;
//! * [`simulate`] — the Poisson-mark sampler and ensemble statistics;
//! * [`couple`] — synchronous coupling and the Wasserstein convergence
//!   experiment;
//! * [`classify`] — stability and ergodicity verdicts with certificates;
//! * [`cli`] — the `switchdiff` command line.

// NaN must fail range checks, so negated comparisons are deliberate;
// index loops read better than iterator chains in the matrix code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod cli;
pub mod couple;
pub mod model;
pub mod qmatrix;
pub mod simulate;
pub mod threshold;

pub use classify::{classify, CriteriaReport, LyapunovData, LyapunovKind, RhoBehaviour, Verdict};
pub use couple::{convergence_experiment, coupled_paths, w1_empirical, ConvergenceSetup, CoupledRun, RateTable};
pub use model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel, Region, TestFunction};
pub use qmatrix::{BetaVector, ProbVector, QMatrix};
pub use simulate::{ensemble, sample_path, RecordMode, SimParams, Trajectory};
pub use threshold::{GammaLayout, RadialThresholdQ, Shape, SignedThresholdQ, SmoothQ, SwitchingSpec};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Rates(#[from] qmatrix::QError),
    #[error(transparent)]
    Switching(#[from] threshold::ThresholdError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Sim(#[from] simulate::SimError),
    #[error(transparent)]
    Couple(#[from] couple::CoupleError),
    #[error(transparent)]
    Classify(#[from] classify::ClassifyError),
    #[error(transparent)]
    Cli(#[from] cli::CliError),
}
