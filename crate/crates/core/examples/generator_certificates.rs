//! Stationary law, Perron–Frobenius exponent and Fredholm solution for a
//! single generator and rate vector.

use switchdiff::qmatrix::{BetaVector, QMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QMatrix::from_rows(&[vec![-3.0, 2.0, 1.0], vec![1.0, -1.5, 0.5], vec![0.5, 0.5, -1.0]])?;
    let beta = BetaVector::new(vec![-2.0, 0.5, 0.25]);

    let pi = q.stationary()?;
    println!("π = {:?} (balance residual {:.1e})", pi.weights(), pi.balance_residual(&q));

    let avg = q.weighted_beta(&beta)?;
    println!("Σ π_i β_i = {avg:.6}");

    if let Some(p) = q.find_stabilizing_p(&beta) {
        let pf = q.pf_exponent(&beta, p)?;
        println!("p = {p}: η = {:.6}, ξ = {:?}, residual {:.1e}", pf.eta, pf.xi, pf.residual(&q, &beta));
    }

    if avg < 0.0 {
        let fr = q.fredholm_solve(&beta)?;
        println!("Fredholm: c = {:.6}, ξ = {:?}, residual {:.1e}", fr.c, fr.xi, fr.residual(&q, &beta));
    }
    Ok(())
}
