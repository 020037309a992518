//! Ergodic versus transient switching OU processes: classifier verdicts and
//! ball occupation from simulation.

use switchdiff::classify::{classify, LyapunovData, LyapunovKind, RhoBehaviour};
use switchdiff::model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel};
use switchdiff::qmatrix::QMatrix;
use switchdiff::simulate::{occupation_and_recurrence, SimParams};
use switchdiff::threshold::SignedThresholdQ;

fn ou(b: [f64; 2]) -> Result<HybridModel, Box<dyn std::error::Error>> {
    let sym = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]])?;
    let mid = QMatrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]])?;
    Ok(HybridModel::new(
        1,
        2,
        DriftSpec::Linear { b: b.iter().map(|&v| Coefficient::Scalar(v)).collect() },
        DiffusionSpec::OuCutoff { sigma: vec![0.5, 0.5] },
        SignedThresholdQ::new(vec![-1.0, 1.0], vec![sym.clone(), mid, sym])?.into(),
    )?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("ergodic", ou([-3.0, 1.0])?, RhoBehaviour::BlowsUpAtInfinity, None),
        ("transient", ou([3.0, -1.0])?, RhoBehaviour::VanishesAtInfinity, Some(-1.0)),
    ];
    for (name, m, rho, rho_power) in cases {
        let ld = LyapunovData { kind: LyapunovKind::L3, beta: None, rho, rho_power, h_power: None };
        let report = classify(&m, &ld)?;
        let rec = occupation_and_recurrence(&m, &[1.0], 0, &SimParams::new(50.0, 1e-2, 500, 3), 5.0)?;
        println!(
            "{name}: {:?}; occupation of |x| ≤ 5 = {:.3}, mean returns {:.2}, median |X_T| = {:.3e}",
            report.verdict,
            rec.pooled_occupation,
            rec.mean_returns,
            rec.terminal_quantile(0.5)
        );
    }
    Ok(())
}
