//! Mark-space layout for state-dependent switching: interval placement,
//! jump targets, and the symmetric difference between two generators.

use switchdiff::qmatrix::QMatrix;
use switchdiff::threshold::GammaLayout;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = QMatrix::from_rows(&[vec![-1.0, 0.75, 0.25], vec![0.5, -0.5, 0.0], vec![1.0, 1.0, -2.0]])?;
    let b = QMatrix::from_rows(&[vec![-0.5, 0.5, 0.0], vec![0.5, -1.0, 0.5], vec![1.0, 0.5, -1.5]])?;
    let bound = a.max_exit_rate().max(b.max_exit_rate());
    let (la, lb) = (GammaLayout::new(&a, bound)?, GammaLayout::new(&b, bound)?);

    println!("κ = {}", la.kappa());
    for i in 0..a.n() {
        let (lo, hi) = la.block(i);
        println!("block {i}: [{lo}, {hi})");
        for j in (0..a.n()).filter(|&j| j != i) {
            let s = la.start(i, j);
            println!("  {i}→{j}: [{s}, {}), |Δ| with b = {}", s + la.length(i, j), la.symm_diff(&lb, i, j)?);
        }
    }

    for z in [0.1, 1.2, 2.1, 3.5, 6.0] {
        println!("regime 0, mark {z}: θ = {:+}, lands in {}", la.theta(0, z), la.target(0, z));
    }
    Ok(())
}
