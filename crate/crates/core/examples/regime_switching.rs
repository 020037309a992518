//! Simulate a frozen-diffusion switching process and compare regime
//! occupation and jump rates with the generator.

use switchdiff::model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel};
use switchdiff::qmatrix::QMatrix;
use switchdiff::simulate::{ensemble, sample_path, SimParams};
use switchdiff::threshold::SwitchingSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let m = HybridModel::new(
        1,
        2,
        DriftSpec::Linear { b: vec![Coefficient::Scalar(-1.0), Coefficient::Scalar(0.5)] },
        DiffusionSpec::Constant { sigma: vec![Coefficient::Scalar(0.3)] },
        SwitchingSpec::constant(q.clone())?,
    )?;

    let horizon = 2000.0;
    let path = sample_path(&m, &[1.0], 0, &SimParams::new(horizon, 1e-2, 1, 1), 0)?;
    let occ = path.regime_occupation(2, 0, horizon);
    let counts = path.transition_counts(2);
    println!("π̂ = {:.4}, π = {:?}", occ[0] / horizon, q.stationary()?.weights());
    println!("q̂12 = {:.4}, q̂21 = {:.4}", counts[0][1] as f64 / occ[0], counts[1][0] as f64 / occ[1]);

    let summary = ensemble(&m, &[1.0], 0, &SimParams::new(5.0, 1e-2, 2000, 2))?;
    let (mean, se) = summary.terminal_mean();
    println!("E X_5 ≈ {mean:.4} ± {se:.4}");
    Ok(())
}
