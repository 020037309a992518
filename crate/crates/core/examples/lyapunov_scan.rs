//! Build a Lyapunov function from the tail certificate and verify that the
//! generator is negative on an annulus.

use switchdiff::classify::{classify, LyapunovData, LyapunovKind, RhoBehaviour};
use switchdiff::model::{Coefficient, DiffusionSpec, DriftSpec, HybridModel, Region, TestFunction};
use switchdiff::qmatrix::QMatrix;
use switchdiff::threshold::SignedThresholdQ;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sym = QMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]])?;
    let mid = QMatrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]])?;
    let m = HybridModel::new(
        1,
        2,
        DriftSpec::Linear { b: vec![Coefficient::Scalar(-3.0), Coefficient::Scalar(1.0)] },
        DiffusionSpec::OuCutoff { sigma: vec![0.5, 0.5] },
        SignedThresholdQ::new(vec![-1.0, 1.0], vec![sym.clone(), mid, sym])?.into(),
    )?;

    let ld =
        LyapunovData { kind: LyapunovKind::L3, beta: None, rho: RhoBehaviour::BlowsUpAtInfinity, rho_power: None, h_power: None };
    let report = classify(&m, &ld)?;
    let Some(pf) = report.certificate.iter().find(|c| c.cell == "right-tail").and_then(|c| c.pf.clone()) else {
        println!("no tail certificate: {:?}", report.verdict);
        return Ok(());
    };

    let v = TestFunction::power(pf.xi.clone(), pf.p);
    let scan = m.lyapunov_scan(&v, &Region::Annulus { inner: 2.0, outer: 20.0 }, 0.02)?;
    println!("V(x, i) = ξ_i |x|^{} with ξ = {:?}", pf.p, pf.xi);
    println!("max 𝒜V = {:.4e} at x = {:?}, regime {} ({} points)", scan.max, scan.argmax, scan.regime, scan.points);
    Ok(())
}
