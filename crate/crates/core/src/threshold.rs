//! State-dependent switching rates.
//!
//! Three families are supported: radial threshold rates (piecewise constant
//! in `|x|`), signed threshold rates (piecewise constant in `x ∈ ℝ`), and a
//! smooth parametric family `A + B·shape(x)`. All cells are left-closed and
//! right-open; the leftmost signed cell is open at `−∞`.
//!
//! The module also builds the mark-space interval layout used by the
//! switching sampler: for source regime `i` and target `j` an interval
//! `Γ_ij(x)` of length `q_ij(x)` inside `[0, κ]`, `κ = (2N−1)·N·K`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmatrix::{QError, QMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error(transparent)]
    Rates(#[from] QError),
    #[error("breakpoints must be finite and strictly increasing: {0:?}")]
    UnsortedBreakpoints(Vec<f64>),
    #[error("radial thresholds must be positive: {0:?}")]
    NonPositiveThreshold(Vec<f64>),
    #[error("expected {expected} cells for {breakpoints} breakpoints, got {got}")]
    CellCount { breakpoints: usize, expected: usize, got: usize },
    #[error("cell {0} is not irreducible")]
    ReducibleCell(usize),
    #[error("cells disagree on the regime count")]
    RegimeCountMismatch,
    #[error("modulation |B_ij| = {modulation} exceeds base rate A_ij = {base} at ({row}, {col})")]
    ModulationTooLarge { row: usize, col: usize, base: f64, modulation: f64 },
    #[error("smooth rates are reducible at shape value {0}")]
    ReducibleSmooth(f64),
    #[error("rate {rate} at ({row}, {col}) exceeds the bound K = {bound}")]
    RateExceedsBound { row: usize, col: usize, rate: f64, bound: f64 },
    #[error("layouts were built with different (N, K)")]
    LayoutMismatch,
    #[error("switching specs live on different axes (radial vs signed)")]
    AxisMismatch,
    #[error("domain radius {radius} must cover every breakpoint (largest {largest})")]
    DomainTooSmall { radius: f64, largest: f64 },
    #[error("grid step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("quantization level count must be at least 1")]
    NoLevels,
    #[error("quantized cell {cell} is not irreducible")]
    QuantizationBreaksIrreducibility { cell: usize },
}

/// Which scalar coordinate of the state a switching spec depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `|x|`, for any dimension.
    Radial,
    /// `x` itself; one-dimensional states only.
    Signed,
}

impl Axis {
    #[inline]
    pub fn coordinate(self, x: &[f64]) -> f64 {
        match self {
            Axis::Radial => {
                if x.len() == 1 {
                    x[0].abs()
                } else {
                    x.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
            }
            Axis::Signed => x[0],
        }
    }
}

fn check_breakpoints(points: &[f64]) -> Result<(), ThresholdError> {
    let sorted = points.iter().all(|p| p.is_finite()) && points.windows(2).all(|w| w[0] < w[1]);
    if sorted {
        Ok(())
    } else {
        Err(ThresholdError::UnsortedBreakpoints(points.to_vec()))
    }
}

fn check_cells(breakpoints: usize, cells: &[QMatrix]) -> Result<(), ThresholdError> {
    if cells.len() != breakpoints + 1 {
        return Err(ThresholdError::CellCount { breakpoints, expected: breakpoints + 1, got: cells.len() });
    }
    let n = cells[0].n();
    if cells.iter().any(|c| c.n() != n) {
        return Err(ThresholdError::RegimeCountMismatch);
    }
    match cells.iter().position(|c| !c.is_irreducible()) {
        Some(k) => Err(ThresholdError::ReducibleCell(k)),
        None => Ok(()),
    }
}

/// Rates piecewise constant in `|x|` on `[α_{k−1}, α_k)`, `α_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadialRepr", into = "RadialRepr")]
pub struct RadialThresholdQ {
    thresholds: Vec<f64>,
    cells: Vec<QMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialRepr {
    thresholds: Vec<f64>,
    cells: Vec<QMatrix>,
}

impl TryFrom<RadialRepr> for RadialThresholdQ {
    type Error = ThresholdError;
    fn try_from(r: RadialRepr) -> Result<Self, Self::Error> {
        Self::new(r.thresholds, r.cells)
    }
}

impl From<RadialThresholdQ> for RadialRepr {
    fn from(q: RadialThresholdQ) -> Self {
        RadialRepr { thresholds: q.thresholds, cells: q.cells }
    }
}

impl RadialThresholdQ {
    pub fn new(thresholds: Vec<f64>, cells: Vec<QMatrix>) -> Result<Self, ThresholdError> {
        check_breakpoints(&thresholds)?;
        if thresholds.first().is_some_and(|&a| a <= 0.0) {
            return Err(ThresholdError::NonPositiveThreshold(thresholds));
        }
        check_cells(thresholds.len(), &cells)?;
        Ok(Self { thresholds, cells })
    }

    pub fn single(cell: QMatrix) -> Result<Self, ThresholdError> {
        Self::new(Vec::new(), vec![cell])
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn cells(&self) -> &[QMatrix] {
        &self.cells
    }

    /// Cell governing a neighbourhood of the origin.
    pub fn innermost(&self) -> &QMatrix {
        &self.cells[0]
    }

    /// Cell governing `|x| ≥ α_m`.
    pub fn outermost(&self) -> &QMatrix {
        self.cells.last().expect("at least one cell")
    }

    #[inline]
    pub fn cell_index(&self, radius: f64) -> usize {
        self.thresholds.partition_point(|&a| a <= radius)
    }
}

/// Rates piecewise constant in `x ∈ ℝ` on `[c_{j−1}, c_j)`, `c_0 = −∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignedRepr", into = "SignedRepr")]
pub struct SignedThresholdQ {
    cuts: Vec<f64>,
    cells: Vec<QMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignedRepr {
    cuts: Vec<f64>,
    cells: Vec<QMatrix>,
}

impl TryFrom<SignedRepr> for SignedThresholdQ {
    type Error = ThresholdError;
    fn try_from(r: SignedRepr) -> Result<Self, Self::Error> {
        Self::new(r.cuts, r.cells)
    }
}

impl From<SignedThresholdQ> for SignedRepr {
    fn from(q: SignedThresholdQ) -> Self {
        SignedRepr { cuts: q.cuts, cells: q.cells }
    }
}

impl SignedThresholdQ {
    pub fn new(cuts: Vec<f64>, cells: Vec<QMatrix>) -> Result<Self, ThresholdError> {
        check_breakpoints(&cuts)?;
        check_cells(cuts.len(), &cells)?;
        Ok(Self { cuts, cells })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn cells(&self) -> &[QMatrix] {
        &self.cells
    }

    #[inline]
    pub fn cell_index(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c <= x)
    }

    /// Cells `[0, c)` and `[c', 0)` on either side of a cut at the origin.
    pub fn cells_at_zero(&self) -> Option<(&QMatrix, &QMatrix)> {
        let k = self.cuts.iter().position(|&c| c == 0.0)?;
        Some((&self.cells[k + 1], &self.cells[k]))
    }

    pub fn left_tail(&self) -> &QMatrix {
        &self.cells[0]
    }

    pub fn right_tail(&self) -> &QMatrix {
        self.cells.last().expect("at least one cell")
    }
}

/// Modulating profile of a [`SmoothQ`], valued in `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// `tanh(x)` for one-dimensional `x`.
    #[serde(rename = "tanh-signed-x")]
    TanhSigned,
    /// `tanh(|x|)`.
    #[serde(rename = "tanh-radius")]
    TanhRadius,
    /// `1 / (1 + e^{−|x|})`.
    #[serde(rename = "sigmoid-radius")]
    SigmoidRadius,
}

impl Shape {
    pub fn axis(self) -> Axis {
        match self {
            Shape::TanhSigned => Axis::Signed,
            Shape::TanhRadius | Shape::SigmoidRadius => Axis::Radial,
        }
    }

    #[inline]
    pub fn value(self, coordinate: f64) -> f64 {
        match self {
            Shape::TanhSigned | Shape::TanhRadius => coordinate.tanh(),
            Shape::SigmoidRadius => 1.0 / (1.0 + (-coordinate).exp()),
        }
    }

    /// Closure of the range of the shape over its axis.
    pub fn range(self) -> (f64, f64) {
        match self {
            Shape::TanhSigned => (-1.0, 1.0),
            Shape::TanhRadius => (0.0, 1.0),
            Shape::SigmoidRadius => (0.5, 1.0),
        }
    }

    /// Global Lipschitz constant of the shape in its coordinate.
    pub fn slope_bound(self) -> f64 {
        match self {
            Shape::TanhSigned | Shape::TanhRadius => 1.0,
            Shape::SigmoidRadius => 0.25,
        }
    }

    /// Limit of the shape as the coordinate goes to `+∞`.
    pub fn upper_limit(self) -> f64 {
        1.0
    }
}

/// Smooth rates `q_ij(x) = A_ij + B_ij·shape(x)` for `i ≠ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SmoothRepr", into = "SmoothRepr")]
pub struct SmoothQ {
    base: QMatrix,
    modulation: Vec<Vec<f64>>,
    shape: Shape,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SmoothRepr {
    base: QMatrix,
    modulation: Vec<Vec<Option<f64>>>,
    shape: Shape,
}

impl TryFrom<SmoothRepr> for SmoothQ {
    type Error = ThresholdError;
    fn try_from(r: SmoothRepr) -> Result<Self, Self::Error> {
        let n = r.base.n();
        if r.modulation.len() != n || r.modulation.iter().any(|row| row.len() != n) {
            return Err(ThresholdError::RegimeCountMismatch);
        }
        let modulation = r
            .modulation
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, v)| if i == j { 0.0 } else { v.unwrap_or(0.0) }).collect())
            .collect();
        Self::new(r.base, modulation, r.shape)
    }
}

impl From<SmoothQ> for SmoothRepr {
    fn from(q: SmoothQ) -> Self {
        let n = q.base.n();
        let modulation = (0..n)
            .map(|i| {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| q.modulation[i][j]).sum();
                (0..n).map(|j| Some(if i == j { -off } else { q.modulation[i][j] })).collect()
            })
            .collect();
        SmoothRepr { base: q.base, modulation, shape: q.shape }
    }
}

impl SmoothQ {
    /// `modulation` holds the off-diagonal amplitudes; its diagonal is ignored.
    pub fn new(base: QMatrix, modulation: Vec<Vec<f64>>, shape: Shape) -> Result<Self, ThresholdError> {
        let n = base.n();
        if modulation.len() != n || modulation.iter().any(|r| r.len() != n) {
            return Err(ThresholdError::RegimeCountMismatch);
        }
        let mut modulation = modulation;
        for (i, row) in modulation.iter_mut().enumerate() {
            row[i] = 0.0;
            for (j, &b) in row.iter().enumerate() {
                if i != j && (!b.is_finite() || b.abs() > base.rate(i, j)) {
                    return Err(ThresholdError::ModulationTooLarge { row: i, col: j, base: base.rate(i, j), modulation: b });
                }
            }
        }
        let sq = Self { base, modulation, shape };
        let (lo, hi) = shape.range();
        for s in [lo, hi] {
            if !sq.matrix_at_shape(s).is_irreducible() {
                return Err(ThresholdError::ReducibleSmooth(s));
            }
        }
        Ok(sq)
    }

    pub fn base(&self) -> &QMatrix {
        &self.base
    }

    pub fn modulation(&self) -> &[Vec<f64>] {
        &self.modulation
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    #[inline]
    fn rate_at_shape(&self, s: f64, i: usize, j: usize) -> f64 {
        if i != j {
            self.base.rate(i, j) + self.modulation[i][j] * s
        } else {
            -(0..self.n()).filter(|&k| k != i).map(|k| self.rate_at_shape(s, i, k)).sum::<f64>()
        }
    }

    /// Generator obtained by freezing the shape at `s`.
    pub fn matrix_at_shape(&self, s: f64) -> QMatrix {
        let n = self.n();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { self.rate_at_shape(s, i, j) }).collect()).collect();
        QMatrix::from_off_diagonal(&rows).expect("modulation bounded by base keeps rates valid")
    }

    /// Lipschitz constant `K₃` of every entry `q_ij(·)`.
    pub fn lipschitz(&self) -> f64 {
        let amp = self.modulation.iter().flatten().fold(0.0f64, |m, b| m.max(b.abs()));
        amp * self.shape.slope_bound()
    }

    /// `lim q(x)` along the shape's `+∞` direction.
    pub fn limit_matrix(&self) -> QMatrix {
        self.matrix_at_shape(self.shape.upper_limit())
    }
}

/// Any of the supported switching-rate specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SwitchingSpec {
    Radial(RadialThresholdQ),
    Signed(SignedThresholdQ),
    Smooth(SmoothQ),
}

impl From<RadialThresholdQ> for SwitchingSpec {
    fn from(q: RadialThresholdQ) -> Self {
        SwitchingSpec::Radial(q)
    }
}

impl From<SignedThresholdQ> for SwitchingSpec {
    fn from(q: SignedThresholdQ) -> Self {
        SwitchingSpec::Signed(q)
    }
}

impl From<SmoothQ> for SwitchingSpec {
    fn from(q: SmoothQ) -> Self {
        SwitchingSpec::Smooth(q)
    }
}

impl SwitchingSpec {
    /// State-independent switching with a single generator.
    pub fn constant(q: QMatrix) -> Result<Self, ThresholdError> {
        Ok(RadialThresholdQ::single(q)?.into())
    }

    pub fn n_regimes(&self) -> usize {
        match self {
            SwitchingSpec::Radial(r) => r.cells[0].n(),
            SwitchingSpec::Signed(s) => s.cells[0].n(),
            SwitchingSpec::Smooth(q) => q.n(),
        }
    }

    pub fn axis(&self) -> Axis {
        match self {
            SwitchingSpec::Radial(_) => Axis::Radial,
            SwitchingSpec::Signed(_) => Axis::Signed,
            SwitchingSpec::Smooth(q) => q.shape.axis(),
        }
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            SwitchingSpec::Radial(r) => &r.thresholds,
            SwitchingSpec::Signed(s) => &s.cuts,
            SwitchingSpec::Smooth(_) => &[],
        }
    }

    /// Rate matrix at state `x`.
    pub fn evaluate(&self, x: &[f64]) -> QMatrix {
        self.evaluate_at_coordinate(self.axis().coordinate(x))
    }

    /// Rate matrix at axis coordinate `c` (`|x|` or `x`).
    pub fn evaluate_at_coordinate(&self, c: f64) -> QMatrix {
        match self {
            SwitchingSpec::Radial(r) => r.cells[r.cell_index(c)].clone(),
            SwitchingSpec::Signed(s) => s.cells[s.cell_index(c)].clone(),
            SwitchingSpec::Smooth(q) => q.matrix_at_shape(q.shape.value(c)),
        }
    }

    #[inline]
    pub fn rate_at_coordinate(&self, c: f64, i: usize, j: usize) -> f64 {
        match self {
            SwitchingSpec::Radial(r) => r.cells[r.cell_index(c)].rate(i, j),
            SwitchingSpec::Signed(s) => s.cells[s.cell_index(c)].rate(i, j),
            SwitchingSpec::Smooth(q) => q.rate_at_shape(q.shape.value(c), i, j),
        }
    }

    #[inline]
    pub fn rate(&self, x: &[f64], i: usize, j: usize) -> f64 {
        self.rate_at_coordinate(self.axis().coordinate(x), i, j)
    }

    /// Maximal total exit rate over every cell and regime; for smooth rates
    /// the supremum over the closure of the shape's range.
    pub fn rate_bound(&self) -> f64 {
        match self {
            SwitchingSpec::Radial(r) => r.cells.iter().map(QMatrix::max_exit_rate).fold(0.0, f64::max),
            SwitchingSpec::Signed(s) => s.cells.iter().map(QMatrix::max_exit_rate).fold(0.0, f64::max),
            SwitchingSpec::Smooth(q) => {
                let (lo, hi) = q.shape.range();
                (0..q.n()).flat_map(|i| [lo, hi].map(move |s| (i, s))).map(|(i, s)| -q.rate_at_shape(s, i, i)).fold(0.0, f64::max)
            }
        }
    }

    /// Lipschitz constant of each entry; `None` for discontinuous rates.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            SwitchingSpec::Smooth(q) => Some(q.lipschitz()),
            _ if self.breakpoints().is_empty() => Some(0.0),
            _ => None,
        }
    }

    /// Range of `q_ij` on the tail beyond `edge` in direction `sign`.
    fn tail_range(&self, edge: f64, sign: f64, i: usize, j: usize) -> (f64, f64) {
        match self {
            SwitchingSpec::Smooth(q) => {
                let at_edge = q.rate_at_shape(q.shape.value(edge), i, j);
                let limit = if sign > 0.0 { q.shape.upper_limit() } else { q.shape.range().0 };
                let at_inf = q.rate_at_shape(limit, i, j);
                (at_edge.min(at_inf), at_edge.max(at_inf))
            }
            _ => {
                // the left tail is the open cell below the edge
                let c = if sign > 0.0 { edge } else { edge - edge.abs().max(1.0) * f64::EPSILON };
                let v = self.rate_at_coordinate(c, i, j);
                (v, v)
            }
        }
    }
}

/// Mark-space intervals `Γ_ij` for a frozen rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaLayout {
    n: usize,
    bound: f64,
    starts: Vec<f64>,
    lengths: Vec<f64>,
}

/// Offset of `Γ_ij` for the 0-based pair `(i, j)`, `i ≠ j`.
#[inline]
pub fn interval_start(n: usize, bound: f64, i: usize, j: usize) -> f64 {
    let (src, dst, n) = (i as f64 + 1.0, j as f64 + 1.0, n as f64);
    if i == 0 {
        (dst - 2.0) * bound
    } else if j < i {
        2.0 * (src - 1.0) * n * bound - (src - dst) * bound
    } else {
        2.0 * (src - 1.0) * n * bound + (dst - src - 1.0) * bound
    }
}

/// Size `κ = (2N−1)·N·K` of the mark space.
#[inline]
pub fn mark_space_size(n: usize, bound: f64) -> f64 {
    (2.0 * n as f64 - 1.0) * n as f64 * bound
}

impl GammaLayout {
    pub fn new(q: &QMatrix, bound: f64) -> Result<Self, ThresholdError> {
        let n = q.n();
        let mut starts = vec![0.0; n * n];
        let mut lengths = vec![0.0; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let rate = q.rate(i, j);
                if rate > bound * (1.0 + 1e-12) {
                    return Err(ThresholdError::RateExceedsBound { row: i, col: j, rate, bound });
                }
                starts[i * n + j] = interval_start(n, bound, i, j);
                lengths[i * n + j] = rate;
            }
        }
        Ok(Self { n, bound, starts, lengths })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn kappa(&self) -> f64 {
        mark_space_size(self.n, self.bound)
    }

    /// `Γ_ij` as `[start, end)`, or `None` when `q_ij = 0` or `i = j`.
    pub fn interval(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        let len = self.lengths[i * self.n + j];
        (i != j && len > 0.0).then(|| {
            let start = self.starts[i * self.n + j];
            (start, start + len)
        })
    }

    pub fn start(&self, i: usize, j: usize) -> f64 {
        self.starts[i * self.n + j]
    }

    pub fn length(&self, i: usize, j: usize) -> f64 {
        self.lengths[i * self.n + j]
    }

    /// Block `U_i` reserved for source regime `i`.
    pub fn block(&self, i: usize) -> (f64, f64) {
        let nk = self.n as f64 * self.bound;
        if i == 0 {
            (0.0, nk)
        } else {
            let src = i as f64 + 1.0;
            ((2.0 * src - 3.0) * nk, (2.0 * src - 1.0) * nk)
        }
    }

    /// Regime offset `j − i` if the mark `z` falls in `Γ_ij`, else 0.
    pub fn theta(&self, i: usize, z: f64) -> isize {
        for j in (0..self.n).filter(|&j| j != i) {
            let len = self.lengths[i * self.n + j];
            let start = self.starts[i * self.n + j];
            if len > 0.0 && z >= start && z - start < len {
                return j as isize - i as isize;
            }
        }
        0
    }

    /// Target regime selected by mark `z` from source `i`.
    pub fn target(&self, i: usize, z: f64) -> usize {
        (i as isize + self.theta(i, z)) as usize
    }

    /// Lebesgue measure of `Γ_ij(self) Δ Γ_ij(other)`.
    pub fn symm_diff(&self, other: &GammaLayout, i: usize, j: usize) -> Result<f64, ThresholdError> {
        if self.n != other.n || self.bound != other.bound {
            return Err(ThresholdError::LayoutMismatch);
        }
        let (sa, la) = (self.start(i, j), self.length(i, j));
        let (sb, lb) = (other.start(i, j), other.length(i, j));
        if sa == sb {
            return Ok((la - lb).abs());
        }
        let overlap = ((sa + la).min(sb + lb) - sa.max(sb)).max(0.0);
        Ok(la + lb - 2.0 * overlap)
    }
}

/// `sup_x max_i Σ_{j≠i} |q_ij^a(x) − q_ij^b(x)|`.
///
/// Exact for two threshold specs. Otherwise an upper bound: a grid scan of
/// `[0, R]` (radial) or `[−R, R]` (signed) with step at most `h`, plus the
/// Lipschitz slack `(N−1)·K₃·h`, plus a monotone bound on the tails beyond `R`.
pub fn theta_distance(a: &SwitchingSpec, b: &SwitchingSpec, radius: f64, step: f64) -> Result<f64, ThresholdError> {
    if a.n_regimes() != b.n_regimes() {
        return Err(ThresholdError::RegimeCountMismatch);
    }
    if a.axis() != b.axis() {
        return Err(ThresholdError::AxisMismatch);
    }
    let axis = a.axis();
    let n = a.n_regimes();
    let row_gap = |c: f64, cell_c: f64| -> f64 {
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let va = match a {
                            SwitchingSpec::Smooth(_) => a.rate_at_coordinate(c, i, j),
                            _ => a.rate_at_coordinate(cell_c, i, j),
                        };
                        let vb = match b {
                            SwitchingSpec::Smooth(_) => b.rate_at_coordinate(c, i, j),
                            _ => b.rate_at_coordinate(cell_c, i, j),
                        };
                        (va - vb).abs()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    };

    let mut cuts: Vec<f64> = a.breakpoints().iter().chain(b.breakpoints()).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let both_threshold = !matches!(a, SwitchingSpec::Smooth(_)) && !matches!(b, SwitchingSpec::Smooth(_));
    if both_threshold {
        let mut reps = cuts.clone();
        match axis {
            Axis::Radial => reps.push(0.0),
            Axis::Signed => reps.push(cuts.first().map_or(0.0, |c| c - 1.0)),
        }
        return Ok(reps.into_iter().map(|c| row_gap(c, c)).fold(0.0, f64::max));
    }

    if !(step > 0.0 && step.is_finite()) {
        return Err(ThresholdError::InvalidStep(step));
    }
    let largest = cuts.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !(radius >= largest) {
        return Err(ThresholdError::DomainTooSmall { radius, largest });
    }
    let lo = match axis {
        Axis::Radial => 0.0,
        Axis::Signed => -radius,
    };
    let mut nodes = vec![lo];
    nodes.extend(cuts.iter().copied().filter(|&c| c > lo && c < radius));
    nodes.push(radius);

    let mut sup = 0.0f64;
    for w in nodes.windows(2) {
        let (u, v) = (w[0], w[1]);
        let m = ((v - u) / step).ceil().max(1.0) as usize;
        for k in 0..=m {
            let c = if k == m { v } else { u + (v - u) * k as f64 / m as f64 };
            // threshold sides are constant on [u, v); v is reached as a left limit
            sup = sup.max(row_gap(c, u));
        }
    }
    let k3 = a.lipschitz().unwrap_or(0.0) + b.lipschitz().unwrap_or(0.0);
    sup += (n as f64 - 1.0) * k3 * step;

    let mut tails = vec![(radius, 1.0)];
    if axis == Axis::Signed {
        tails.push((-radius, -1.0));
    }
    for (edge, sign) in tails {
        let tail = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let (alo, ahi) = a.tail_range(edge, sign, i, j);
                        let (blo, bhi) = b.tail_range(edge, sign, i, j);
                        (ahi - blo).abs().max((alo - bhi).abs())
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        sup = sup.max(tail);
    }
    Ok(sup)
}

/// Midpoint quantization of smooth rates into `levels` uniform cells on
/// `[0, R]` (radial) or `[−R, R]` (signed), plus unbounded tail cells frozen
/// at the finite boundary.
pub fn quantize(sq: &SmoothQ, levels: usize, radius: f64) -> Result<SwitchingSpec, ThresholdError> {
    if levels == 0 {
        return Err(ThresholdError::NoLevels);
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ThresholdError::DomainTooSmall { radius, largest: 0.0 });
    }
    let at = |c: f64| sq.matrix_at_shape(sq.shape.value(c));
    let check = |cells: &[QMatrix]| match cells.iter().position(|c| !c.is_irreducible()) {
        Some(cell) => Err(ThresholdError::QuantizationBreaksIrreducibility { cell }),
        None => Ok(()),
    };
    let nl = levels as f64;
    match sq.shape.axis() {
        Axis::Radial => {
            let thresholds: Vec<f64> = (1..=levels).map(|k| radius * k as f64 / nl).collect();
            let mut cells: Vec<QMatrix> = (0..levels).map(|k| at(radius * (k as f64 + 0.5) / nl)).collect();
            cells.push(at(radius));
            check(&cells)?;
            Ok(RadialThresholdQ::new(thresholds, cells)?.into())
        }
        Axis::Signed => {
            let width = 2.0 * radius;
            let cuts: Vec<f64> = (0..=levels).map(|k| -radius + width * k as f64 / nl).collect();
            let mut cells = vec![at(-radius)];
            cells.extend((0..levels).map(|k| at(-radius + width * (k as f64 + 0.5) / nl)));
            cells.push(at(radius));
            check(&cells)?;
            Ok(SignedThresholdQ::new(cuts, cells)?.into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rows: &[&[f64]]) -> QMatrix {
        QMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn two_cell() -> RadialThresholdQ {
        RadialThresholdQ::new(vec![2.0], vec![q(&[&[-1.0, 1.0], &[2.0, -2.0]]), q(&[&[-3.0, 3.0], &[1.0, -1.0]])]).unwrap()
    }

    fn tanh_smooth(shape: Shape) -> SmoothQ {
        SmoothQ::new(q(&[&[-2.0, 2.0], &[2.0, -2.0]]), vec![vec![0.0, 1.0], vec![1.0, 0.0]], shape).unwrap()
    }

    #[test]
    fn evaluate_uses_right_open_cells() {
        let spec = SwitchingSpec::from(two_cell());
        assert_eq!(spec.evaluate(&[1.5]), two_cell().cells()[0]);
        assert_eq!(spec.evaluate(&[-2.0]), two_cell().cells()[1]);
        assert_eq!(spec.evaluate(&[2.0f64.next_down()]), two_cell().cells()[0]);
        let smooth = SwitchingSpec::from(tanh_smooth(Shape::TanhSigned));
        assert_eq!(smooth.evaluate(&[0.0]), q(&[&[-2.0, 2.0], &[2.0, -2.0]]));
    }

    #[test]
    fn signed_leftmost_cell_is_open_at_minus_infinity() {
        let s = SignedThresholdQ::new(
            vec![-1.0, 0.0],
            vec![q(&[&[-1.0, 1.0], &[1.0, -1.0]]), q(&[&[-2.0, 2.0], &[1.0, -1.0]]), q(&[&[-3.0, 3.0], &[1.0, -1.0]])],
        )
        .unwrap();
        assert_eq!(s.cell_index(-1e300), 0);
        assert_eq!(s.cell_index(-1.0), 1);
        assert_eq!(s.cell_index(0.0), 2);
        let (right, left) = s.cells_at_zero().unwrap();
        assert_eq!(right.rate(0, 1), 3.0);
        assert_eq!(left.rate(0, 1), 2.0);
    }

    #[test]
    fn rate_bounds() {
        assert_eq!(SwitchingSpec::from(two_cell()).rate_bound(), 3.0);
        assert_eq!(SwitchingSpec::constant(q(&[&[-5.0, 5.0], &[5.0, -5.0]])).unwrap().rate_bound(), 5.0);
        let smooth = SwitchingSpec::from(tanh_smooth(Shape::TanhSigned));
        assert_eq!(smooth.rate_bound(), 3.0);
        // grid check: the supremum is approached but never exceeded
        let grid_max = (-4000..=4000).map(|k| k as f64 * 0.01).map(|x| smooth.evaluate(&[x]).max_exit_rate()).fold(0.0, f64::max);
        assert!(grid_max <= 3.0 && grid_max > 2.999);
    }

    #[test]
    fn layout_examples() {
        let layout = GammaLayout::new(&q(&[&[-1.0, 1.0], &[2.0, -2.0]]), 2.0).unwrap();
        assert_eq!(layout.interval(0, 1), Some((0.0, 1.0)));
        assert_eq!(layout.interval(1, 0), Some((6.0, 8.0)));
        assert_eq!(layout.kappa(), 12.0);
        assert_eq!(layout.theta(0, 0.5), 1);
        assert_eq!(layout.theta(0, 7.0), 0);
        assert_eq!(layout.theta(1, 7.0), -1);

        let three = q(&[&[-1.0, 0.0, 1.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]);
        let layout = GammaLayout::new(&three, 1.0).unwrap();
        assert_eq!(layout.interval(0, 1), None);
        // start = 2(n−1)NK + (k−n−1)K with n = 2, k = 3, N = 3, K = 1
        assert_eq!(layout.interval(1, 2), Some((6.0, 7.0)));
        assert_eq!(layout.block(1), (3.0, 9.0));

        assert!(matches!(GammaLayout::new(&q(&[&[-3.0, 3.0], &[1.0, -1.0]]), 2.0), Err(ThresholdError::RateExceedsBound { .. })));
    }

    #[test]
    fn symm_diff_examples() {
        let a = GammaLayout::new(&q(&[&[-1.0, 1.0], &[2.0, -2.0]]), 2.0).unwrap();
        let b = GammaLayout::new(&q(&[&[-1.5, 1.5], &[2.0, -2.0]]), 2.0).unwrap();
        assert_eq!(a.symm_diff(&a, 0, 1).unwrap(), 0.0);
        assert_eq!(a.symm_diff(&b, 0, 1).unwrap(), 0.5);
        let c = GammaLayout::new(&q(&[&[-1.0, 1.0], &[2.0, -2.0]]), 3.0).unwrap();
        assert_eq!(a.symm_diff(&c, 0, 1), Err(ThresholdError::LayoutMismatch));
    }

    #[test]
    fn theta_distance_threshold_pairs() {
        let a = SwitchingSpec::from(two_cell());
        assert_eq!(theta_distance(&a, &a, 5.0, 0.1).unwrap(), 0.0);
        let c1 = SwitchingSpec::constant(q(&[&[-1.0, 1.0], &[2.0, -2.0]])).unwrap();
        let c2 = SwitchingSpec::constant(q(&[&[-1.25, 1.25], &[3.0, -3.0]])).unwrap();
        assert_eq!(theta_distance(&c1, &c2, 5.0, 0.1).unwrap(), 1.0);
        // refined partition: [0,1) differs by 0, [1,2) by |1−4| ... exact sup
        let b = SwitchingSpec::from(
            RadialThresholdQ::new(vec![1.0], vec![q(&[&[-1.0, 1.0], &[2.0, -2.0]]), q(&[&[-4.0, 4.0], &[2.0, -2.0]])]).unwrap(),
        );
        assert_eq!(theta_distance(&a, &b, 5.0, 0.1).unwrap(), 3.0);
        assert_eq!(
            theta_distance(&a, &SwitchingSpec::from(tanh_smooth(Shape::TanhSigned)), 5.0, 0.1),
            Err(ThresholdError::AxisMismatch)
        );
    }

    #[test]
    fn quantize_single_level() {
        let sq = tanh_smooth(Shape::TanhRadius);
        let SwitchingSpec::Radial(r) = quantize(&sq, 1, 1.0).unwrap() else { panic!("radial expected") };
        assert_eq!(r.thresholds(), &[1.0]);
        assert_eq!(r.cells()[0], sq.matrix_at_shape(0.5f64.tanh()));
        assert_eq!(r.cells()[1], sq.matrix_at_shape(1.0f64.tanh()));
    }

    #[test]
    fn quantize_constant_is_exact() {
        let sq = SmoothQ::new(q(&[&[-2.0, 2.0], &[1.0, -1.0]]), vec![vec![0.0; 2]; 2], Shape::TanhSigned).unwrap();
        let quant = quantize(&sq, 4, 2.0).unwrap();
        let dist = theta_distance(&SwitchingSpec::from(sq), &quant, 2.0, 1e-3).unwrap();
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn smooth_json_round_trip() {
        let sq = tanh_smooth(Shape::SigmoidRadius);
        let spec = SwitchingSpec::from(sq);
        let text = serde_json::to_string(&spec).unwrap();
        let back: SwitchingSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"base": {"n": 2, "rates": [[-1, 1], [1, -1]]}, "modulation": [[0, 2], [0, 0]], "shape": "tanh-radius"}"#;
        assert!(serde_json::from_str::<SwitchingSpec>(bad).is_err());
    }
}
