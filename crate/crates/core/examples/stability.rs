//! Classify stability at the origin for a two-sided threshold model and
//! check the verdict with a Monte Carlo exceedance estimate.

use switchdiff::classify::{classify, LyapunovData, LyapunovKind, RhoBehaviour};
use switchdiff::model::{DiffusionSpec, DriftSpec, HybridModel};
use switchdiff::qmatrix::QMatrix;
use switchdiff::simulate::{estimate_sup_exceedance, SimParams};
use switchdiff::threshold::SignedThresholdQ;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sym = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]])?;
    let m = HybridModel::new(
        1,
        2,
        DriftSpec::PowerSgn { b: vec![-2.0, 0.5], p: 3.0 },
        DiffusionSpec::Power { sigma: vec![1.0, 1.0], q: 2.0 },
        SignedThresholdQ::new(vec![0.0], vec![sym.clone(), sym])?.into(),
    )?;

    let ld =
        LyapunovData { kind: LyapunovKind::L1, beta: None, rho: RhoBehaviour::VanishesAtZero, rho_power: None, h_power: None };
    let report = classify(&m, &ld)?;
    println!("verdict: {:?} via {:?}", report.verdict, report.theorem);
    for c in &report.certificate {
        println!("  {}: Σπβ = {:.4}", c.cell, c.weighted_beta);
    }
    for note in &report.notes {
        println!("  note: {note}");
    }

    let sp = SimParams::new(20.0, 1e-2, 1000, 11);
    for x0 in [1e-1, 1e-2, 1e-3] {
        let e = estimate_sup_exceedance(&m, &[x0], 0, 0.5, &sp)?;
        println!("x0 = {x0:e}: P(sup |X| > 0.5) ≈ {:.4} ± {:.4}", e.probability, e.stderr);
    }
    Ok(())
}
