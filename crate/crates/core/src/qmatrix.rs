//! Rate-matrix algebra for finite-state continuous-time Markov chains.
//!
//! A [`QMatrix`] is a conservative generator: nonnegative off-diagonal
//! rates and zero row sums. On top of it this module provides the pieces
//! the stability and ergodicity criteria need:
//!
//! * irreducibility of the transition graph,
//! * the stationary distribution `π` with `πQ = 0`,
//! * the Perron–Frobenius exponent `η_p` of `Q + p·diag(β)`,
//! * a Fredholm-alternative solve of `Qξ = −c·1 − β`.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Maximum tolerated row-sum defect of an input matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Largest grid exponent `k` in the scan `p = 2^{-k}`.
pub const STABILIZING_GRID_DEPTH: i32 = 40;

const IMAG_TOLERANCE: f64 = 1e-8;
const NEWTON_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("rate matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("rate matrix is empty")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal rate {value} at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} is not conservative (row sum {defect})")]
    NonConservative { row: usize, defect: f64 },
    #[error("rate matrix is not irreducible")]
    NotIrreducible,
    #[error("Perron eigenvector is not positive: {0}")]
    EigenvectorNotPositive(String),
    #[error("weighted exponent sum {0} is not negative")]
    CriterionViolated(f64),
    #[error("vector of length {got} does not match {expected} regimes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exponent p = {0} must be positive and finite")]
    InvalidExponent(f64),
}

/// Conservative transition-rate matrix.
#[derive(Clone, PartialEq)]
pub struct QMatrix {
    rates: DMatrix<f64>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QMatrix").field("rates", &self.to_rows()).finish()
    }
}

impl QMatrix {
    /// Validates a raw matrix. The diagonal is overwritten with the negated
    /// off-diagonal row sum once the row passes the conservation check.
    pub fn validate(raw: DMatrix<f64>) -> Result<Self, QError> {
        let (rows, cols) = raw.shape();
        if rows != cols {
            return Err(QError::NonSquare { rows, cols });
        }
        if rows == 0 {
            return Err(QError::Empty);
        }
        for i in 0..rows {
            for j in 0..cols {
                if !raw[(i, j)].is_finite() {
                    return Err(QError::NonFinite { row: i, col: j });
                }
            }
        }
        for i in 0..rows {
            for j in 0..cols {
                if i != j && raw[(i, j)] < 0.0 {
                    return Err(QError::NegativeOffDiagonal { row: i, col: j, value: raw[(i, j)] });
                }
            }
        }
        let mut rates = raw;
        for i in 0..rows {
            let off: f64 = (0..cols).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
            let defect = rates[(i, i)] + off;
            if defect.abs() > ROW_SUM_TOLERANCE {
                return Err(QError::NonConservative { row: i, defect });
            }
            rates[(i, i)] = -off;
        }
        Ok(Self { rates })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, QError> {
        let n = rows.len();
        if n == 0 {
            return Err(QError::Empty);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QError::NonSquare { rows: n, cols: bad.len() });
        }
        Self::validate(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a generator from off-diagonal rates only; the diagonal of
    /// `rows` is ignored.
    pub fn from_off_diagonal(rows: &[Vec<f64>]) -> Result<Self, QError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QError::NonSquare { rows: n, cols: bad.len() });
        }
        let mut m = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rows[i][j] });
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
            m[(i, i)] = -off;
        }
        Self::validate(m)
    }

    pub fn n(&self) -> usize {
        self.rates.nrows()
    }

    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// Total exit rate `q_i = −q_ii`.
    #[inline]
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[(i, i)]
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n()).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self.rates[(i, j)]).collect()).collect()
    }

    /// `max_i Σ_{j≠i} |q_ij − q'_ij|`.
    pub fn l1_row_distance(&self, other: &QMatrix) -> f64 {
        assert_eq!(self.n(), other.n(), "regime counts differ");
        (0..self.n())
            .map(|i| (0..self.n()).filter(|&j| j != i).map(|j| (self.rate(i, j) - other.rate(i, j)).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Strong connectivity of the graph with an edge `i → j` whenever `q_ij > 0`.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    let w = if forward { self.rates[(u, v)] } else { self.rates[(v, u)] };
                    if v != u && w > 0.0 && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    fn require_irreducible(&self) -> Result<(), QError> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(QError::NotIrreducible)
        }
    }

    fn check_len(&self, len: usize) -> Result<(), QError> {
        if len != self.n() {
            return Err(QError::DimensionMismatch { expected: self.n(), got: len });
        }
        Ok(())
    }

    /// Stationary distribution, solving `Qᵀπ = 0` with the last equation
    /// replaced by `Σπ_i = 1`.
    pub fn stationary(&self) -> Result<ProbVector, QError> {
        self.require_irreducible()?;
        let n = self.n();
        let mut a = self.rates.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let pi = a.lu().solve(&rhs).ok_or(QError::NotIrreducible)?;
        let mut weights: Vec<f64> = pi.iter().map(|&p| p.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(ProbVector(weights))
    }

    /// `Σ_i π_i β_i` for the stationary law of `self`.
    pub fn weighted_beta(&self, beta: &BetaVector) -> Result<f64, QError> {
        self.check_len(beta.len())?;
        let pi = self.stationary()?;
        Ok(pi.dot(beta.values()))
    }

    /// Perron–Frobenius data of `Q + p·diag(β)`: the top eigenvalue is
    /// `−η_p` and its eigenvector is returned scaled to `min ξ_i = 1`.
    pub fn pf_exponent(&self, beta: &BetaVector, p: f64) -> Result<PfCertificate, QError> {
        self.check_len(beta.len())?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(QError::InvalidExponent(p));
        }
        self.require_irreducible()?;
        let n = self.n();
        let mut a = self.rates.clone();
        for i in 0..n {
            a[(i, i)] += p * beta.values()[i];
        }
        if n == 1 {
            return Ok(PfCertificate { p, eta: -a[(0, 0)], xi: vec![1.0] });
        }
        let top = a.complex_eigenvalues().iter().copied().max_by(|x, y| x.re.total_cmp(&y.re)).expect("nonempty spectrum");
        if top.im.abs() > IMAG_TOLERANCE {
            return Err(QError::EigenvectorNotPositive(format!("top eigenvalue {} + {}i is not real", top.re, top.im)));
        }
        // Pin ξ_k = 1 and solve the other rows; every proper principal block
        // of an irreducible Metzler matrix shifted by its Perron root is
        // nonsingular. Row k is then a scalar equation in λ, which a few
        // Newton steps tighten. A second pass pins the largest component so
        // that rounding is measured against the scale of ξ.
        let singular = || QError::EigenvectorNotPositive("singular eigenvector system".into());
        let mut lambda = top.re;
        let mut xi = perron_vector(&a, 0, &mut lambda).ok_or_else(singular)?;
        if let Some(k) = (0..n).max_by(|&u, &v| xi[u].abs().total_cmp(&xi[v].abs())).filter(|&k| k != 0) {
            xi = perron_vector(&a, k, &mut lambda).ok_or_else(singular)?;
        }
        let min = xi.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || xi.iter().any(|v| !v.is_finite()) {
            return Err(QError::EigenvectorNotPositive(format!("eigenvector {xi:?} has mixed signs")));
        }
        xi.iter_mut().for_each(|v| *v /= min);
        Ok(PfCertificate { p, eta: -lambda, xi })
    }

    /// Largest `p ∈ {2^{-k} : k = 0..=40}` with `η_p > 0`, provided
    /// `Σπβ < 0`.
    pub fn find_stabilizing_p(&self, beta: &BetaVector) -> Option<f64> {
        let wb = self.weighted_beta(beta).ok()?;
        if !(wb < 0.0) {
            return None;
        }
        (0..=STABILIZING_GRID_DEPTH).map(|k| 2f64.powi(-k)).find(|&p| self.pf_exponent(beta, p).is_ok_and(|c| c.eta > 0.0))
    }

    /// Solves `Qξ = −c·1 − β` with `c = −Σπβ > 0`, shifted so `min ξ_i = 1`.
    pub fn fredholm_solve(&self, beta: &BetaVector) -> Result<FredholmCertificate, QError> {
        self.check_len(beta.len())?;
        let pi = self.stationary()?;
        let wb = pi.dot(beta.values());
        if !(wb < 0.0) {
            return Err(QError::CriterionViolated(wb));
        }
        let c = -wb;
        let n = self.n();
        let mut xi = vec![0.0; n];
        if n > 1 {
            // ξ_k = 0 fixes the constant and row k is implied by the others.
            // Its residual is the others' weighted by π_i/π_k, so drop the
            // row with the largest stationary weight.
            let k = (0..n).max_by(|&a, &b| pi.weights()[a].total_cmp(&pi.weights()[b])).unwrap_or(0);
            let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            let m = n - 1;
            let block = DMatrix::from_fn(m, m, |r, col| self.rates[(keep[r], keep[col])]);
            let rhs = DVector::from_fn(m, |r, _| -c - beta.values()[keep[r]]);
            let tail = block.lu().solve(&rhs).ok_or(QError::NotIrreducible)?;
            for (r, &i) in keep.iter().enumerate() {
                xi[i] = tail[r];
            }
        }
        let min = xi.iter().copied().fold(f64::INFINITY, f64::min);
        xi.iter_mut().for_each(|v| *v += 1.0 - min);
        Ok(FredholmCertificate { c, xi })
    }
}

impl Serialize for QMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n: usize,
            rates: Vec<Vec<f64>>,
        }
        Repr { n: self.n(), rates: self.to_rows() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n: Option<usize>,
            rates: Vec<Vec<Option<f64>>>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let n = repr.rates.len();
        if let Some(declared) = repr.n {
            if declared != n {
                return Err(serde::de::Error::custom(format!("declared n = {declared} but {n} rows given")));
            }
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in repr.rates.iter().enumerate() {
            if row.len() != n {
                return Err(serde::de::Error::custom(QError::NonSquare { rows: n, cols: row.len() }));
            }
            for (j, v) in row.iter().enumerate() {
                match (v, i == j) {
                    (Some(v), _) => m[(i, j)] = *v,
                    (None, true) => {}
                    (None, false) => return Err(serde::de::Error::custom(format!("missing off-diagonal rate ({i}, {j})"))),
                }
            }
            if row[i].is_none() {
                m[(i, i)] = -(0..n).filter(|&j| j != i).map(|j| m[(i, j)]).sum::<f64>();
            }
        }
        QMatrix::validate(m).map_err(serde::de::Error::custom)
    }
}

/// Probability vector on the regime set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `‖πQ‖_∞`.
    pub fn balance_residual(&self, q: &QMatrix) -> f64 {
        let n = q.n();
        (0..n).map(|j| (0..n).map(|i| self.0[i] * q.rate(i, j)).sum::<f64>().abs()).fold(0.0, f64::max)
    }
}

/// Per-regime Lyapunov drift exponents `β_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BetaVector(Vec<f64>);

impl BetaVector {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "beta entries must be finite");
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self(self.0.iter().map(|v| v + delta).collect())
    }
}

impl From<Vec<f64>> for BetaVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Eigenvector of `a` for the eigenvalue near `lambda` with `ξ_k = 1`,
/// refining `lambda` by Newton steps on the dropped row `k`.
fn perron_vector(a: &DMatrix<f64>, k: usize, lambda: &mut f64) -> Option<Vec<f64>> {
    let n = a.nrows();
    let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let m = keep.len();
    let rhs = DVector::from_fn(m, |r, _| -a[(keep[r], k)]);
    let solve = |lambda: f64| {
        let lu = DMatrix::from_fn(m, m, |r, c| a[(keep[r], keep[c])] - if r == c { lambda } else { 0.0 }).lu();
        let rest = lu.solve(&rhs)?;
        let slope = lu.solve(&rest)?;
        let row = a[(k, k)] - lambda + (0..m).map(|r| a[(k, keep[r])] * rest[r]).sum::<f64>();
        let d_row = -1.0 + (0..m).map(|r| a[(k, keep[r])] * slope[r]).sum::<f64>();
        Some((rest, row, d_row))
    };
    let (mut rest, mut row, mut d_row) = solve(*lambda)?;
    for _ in 0..NEWTON_STEPS {
        if row == 0.0 || !(d_row.abs() > 0.0) {
            break;
        }
        let next = *lambda - row / d_row;
        match solve(next) {
            Some((t, r, d)) if r.abs() < row.abs() => {
                (*lambda, rest, row, d_row) = (next, t, r, d);
            }
            _ => break,
        }
    }
    let mut xi = vec![1.0; n];
    for (r, &i) in keep.iter().enumerate() {
        xi[i] = rest[r];
    }
    Some(xi)
}

/// Top eigenpair of `Q + p·diag(β)`, with eigenvalue `−eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfCertificate {
    pub p: f64,
    pub eta: f64,
    pub xi: Vec<f64>,
}

impl PfCertificate {
    /// `‖(Q + p·diag(β))ξ + η ξ‖_∞`.
    pub fn residual(&self, q: &QMatrix, beta: &BetaVector) -> f64 {
        let n = q.n();
        (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| q.rate(i, j) * self.xi[j]).sum();
                (row + self.p * beta.values()[i] * self.xi[i] + self.eta * self.xi[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solution of `Qξ = −c·1 − β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmCertificate {
    pub c: f64,
    pub xi: Vec<f64>,
}

impl FredholmCertificate {
    /// `‖Qξ + c·1 + β‖_∞`.
    pub fn residual(&self, q: &QMatrix, beta: &BetaVector) -> f64 {
        residual_with(q, &self.xi, self.c, beta)
    }
}

pub(crate) fn residual_with(q: &QMatrix, xi: &[f64], c: f64, beta: &BetaVector) -> f64 {
    let n = q.n();
    (0..n).map(|i| ((0..n).map(|j| q.rate(i, j) * xi[j]).sum::<f64>() + c + beta.values()[i]).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rows: &[&[f64]]) -> QMatrix {
        QMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn validate_accepts_and_rejects() {
        assert!(QMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).is_ok());
        assert!(matches!(
            QMatrix::from_rows(&[vec![-1.0, 1.0], vec![-1.0, 1.0]]),
            Err(QError::NegativeOffDiagonal { row: 1, col: 0, .. })
        ));
        assert!(matches!(QMatrix::from_rows(&[vec![-1.0, 0.5], vec![2.0, -2.0]]), Err(QError::NonConservative { row: 0, .. })));
        assert!(matches!(QMatrix::validate(DMatrix::zeros(2, 3)), Err(QError::NonSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn validate_normalizes_small_defects() {
        let m = QMatrix::from_rows(&[vec![-1.0 - 5e-10, 1.0], vec![2.0, -2.0]]).unwrap();
        assert_eq!(m.rate(0, 0), -1.0);
    }

    #[test]
    fn irreducibility_examples() {
        assert!(q(&[&[-1.0, 1.0], &[2.0, -2.0]]).is_irreducible());
        assert!(!q(&[&[0.0, 0.0], &[2.0, -2.0]]).is_irreducible());
        let cycle = q(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]);
        assert!(cycle.is_irreducible());
    }

    #[test]
    fn stationary_two_state() {
        let pi = q(&[&[-1.0, 1.0], &[2.0, -2.0]]).stationary().unwrap();
        assert!((pi.weights()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((pi.weights()[1] - 1.0 / 3.0).abs() < 1e-14);
        let pi = q(&[&[-3.0, 3.0], &[1.0, -1.0]]).stationary().unwrap();
        assert!((pi.weights()[0] - 0.25).abs() < 1e-14);
        assert!((pi.weights()[1] - 0.75).abs() < 1e-14);
        assert_eq!(q(&[&[0.0, 0.0], &[2.0, -2.0]]).stationary(), Err(QError::NotIrreducible));
    }

    #[test]
    fn weighted_beta_examples() {
        let sym = q(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        assert!((sym.weighted_beta(&vec![-2.0, 1.0].into()).unwrap() + 0.5).abs() < 1e-14);
        assert_eq!(sym.weighted_beta(&vec![0.0, 0.0].into()).unwrap(), 0.0);
        let skew = q(&[&[-1.0, 1.0], &[2.0, -2.0]]);
        assert!((skew.weighted_beta(&vec![3.0, -3.0].into()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pf_exponent_zero_beta_is_trivial() {
        let m = q(&[&[-1.0, 1.0, 0.0], &[0.5, -1.0, 0.5], &[2.0, 0.0, -2.0]]);
        let cert = m.pf_exponent(&vec![0.0; 3].into(), 0.7).unwrap();
        assert!(cert.eta.abs() < 1e-12);
        assert!(cert.xi.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn find_stabilizing_p_examples() {
        let sym = q(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        assert_eq!(sym.find_stabilizing_p(&vec![1.0, 1.0].into()), None);
        assert_eq!(sym.find_stabilizing_p(&vec![-1.0, -1.0].into()), Some(1.0));
    }

    #[test]
    fn fredholm_examples() {
        let sym = q(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        let cert = sym.fredholm_solve(&vec![-0.7, -0.7].into()).unwrap();
        assert!((cert.c - 0.7).abs() < 1e-14);
        assert!(cert.xi.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let cert = sym.fredholm_solve(&vec![-2.0, 1.0].into()).unwrap();
        assert!((cert.c - 0.5).abs() < 1e-14);
        assert!((cert.xi[0] - 1.0).abs() < 1e-12 && (cert.xi[1] - 2.5).abs() < 1e-12);

        assert!(matches!(sym.fredholm_solve(&vec![1.0, 1.0].into()), Err(QError::CriterionViolated(_))));
    }

    #[test]
    fn json_fills_missing_diagonal() {
        let m: QMatrix = serde_json::from_str(r#"{"n": 2, "rates": [[null, 1.5], [0.5, null]]}"#).unwrap();
        assert_eq!(m.to_rows(), vec![vec![-1.5, 1.5], vec![0.5, -0.5]]);
        let back: QMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<QMatrix>(r#"{"n": 3, "rates": [[-1, 1], [1, -1]]}"#).is_err());
    }
}
