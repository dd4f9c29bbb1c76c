//! Sample-moment estimators, the self-normalized maximum-deviation
//! statistic, and its Gumbel limit law.
//!
//! For an `n × m` data matrix with rows drawn i.i.d. from a population with
//! covariance `Σ = (σ_ij)`, the crate's central statistic is
//!
//! ```text
//!     M = max_{(i,j) ∈ I}  |σ̂_ij − σ⁰_ij| / √τ̂_ij
//! ```
//!
//! where `σ̂_ij` is the sample covariance of columns `i` and `j`, `σ⁰_ij` is
//! the hypothesized value, `τ̂_ij` estimates the variance of one centered
//! cross-product, and `I` is a set of column pairs. Self-normalizing by
//! `√τ̂_ij` puts every pair on the same scale regardless of marginal
//! variances or fourth moments, and `n·M²`, after recentering by constants
//! depending only on the dimension (or on `|I|`), converges to the Gumbel
//! law `exp(−e^{−y/2})`.
//!
//! Numerical conventions, fixed here once for the whole crate:
//!
//! * Both `σ̂` and `τ̂` divide by `n` (not `n − 1`).
//! * All estimators center explicitly (two-pass mean-then-moment); the raw
//!   second-moment shortcut `E[XY] − E[X]E[Y]` is never used, because its
//!   cancellation error feeds straight into `τ̂`.
//! * Column indices are 0-based throughout the library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Data matrix
// ---------------------------------------------------------------------------

/// An `n × m` sample: `n` observations (rows) of an `m`-variate vector.
///
/// Invariants established at construction: `n ≥ 2`, `m ≥ 2`, every entry
/// finite. Storage is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from row-major flat storage.
    pub fn from_flat(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::invalid(format!(
                "data matrix must be at least 2 x 2, got {n} x {m}"
            )));
        }
        if values.len() != n * m {
            return Err(Error::invalid(format!(
                "expected {n} x {m} = {} values, got {}",
                n * m,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry {} at row {}, column {}",
                values[pos],
                pos / m,
                pos % m
            )));
        }
        Ok(DataMatrix { n, m, values })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::invalid(format!(
                "ragged input: row 0 has {m} entries but row {bad} has {}",
                rows[bad].len()
            )));
        }
        Self::from_flat(n, m, rows.concat())
    }

    /// Number of observations.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of variables (columns).
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Entry at observation `k`, variable `i`.
    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.m + i]
    }

    /// Row `k` as a slice.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    /// Mean of column `i`.
    pub fn column_mean(&self, i: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.n {
            acc += self.get(k, i);
        }
        acc / self.n as f64
    }

    /// Means of all columns.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.m];
        for k in 0..self.n {
            for (mean, v) in means.iter_mut().zip(self.row(k)) {
                *mean += v;
            }
        }
        for mean in &mut means {
            *mean /= self.n as f64;
        }
        means
    }

    /// Applies `X[:, i] *= c[i]` in place; used to build scale alternatives.
    pub fn scale_column(&mut self, i: usize, factor: f64) -> Result<()> {
        if i >= self.m {
            return Err(Error::invalid(format!(
                "column {i} out of range for m = {}",
                self.m
            )));
        }
        if !factor.is_finite() {
            return Err(Error::invalid(format!("non-finite scale factor {factor}")));
        }
        for k in 0..self.n {
            self.values[k * self.m + i] *= factor;
        }
        Ok(())
    }

    fn check_column(&self, i: usize) -> Result<()> {
        if i >= self.m {
            Err(Error::invalid(format!(
                "column index {i} out of range for m = {}",
                self.m
            )))
        } else {
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Pair index sets
// ---------------------------------------------------------------------------

/// The set `I` of column pairs `(i, j)` over which the maximum is taken.
///
/// Pairs are 0-based with `i ≤ j`, iterated in row-major order (by `i`, then
/// `j`) — the order that fixes argmax tie-breaking. A set must contain at
/// least one pair to exist; the statistical requirement `s ≥ 3` is enforced
/// where the limit constants are formed, not here, so small sets can still
/// be used for raw-statistic work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairIndexSet {
    /// All pairs `i < j`; cardinality `m(m−1)/2`.
    StrictPairs { m: usize },
    /// All pairs `i ≤ j`; cardinality `m(m+1)/2`.
    PairsWithDiagonal { m: usize },
    /// Pairs strictly outside the band: `j − i > band`; cardinality
    /// `(m−band−1)(m−band)/2`.
    BandExterior { m: usize, band: usize },
    /// An explicit list of pairs, held sorted in row-major order.
    Custom { m: usize, pairs: Vec<(usize, usize)> },
}

impl PairIndexSet {
    /// All strictly-upper-triangle pairs of an `m`-column matrix.
    pub fn strict_pairs(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::EmptyIndexSet {
                reason: format!("no strict pairs exist for m = {m}"),
            });
        }
        Ok(PairIndexSet::StrictPairs { m })
    }

    /// All upper-triangle pairs including the diagonal.
    pub fn pairs_with_diagonal(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::EmptyIndexSet {
                reason: "no pairs exist for m = 0".to_string(),
            });
        }
        Ok(PairIndexSet::PairsWithDiagonal { m })
    }

    /// Pairs with `j − i > band`. Empty (an error) when `band ≥ m − 1`.
    pub fn band_exterior(m: usize, band: usize) -> Result<Self> {
        if band + 1 >= m {
            return Err(Error::EmptyIndexSet {
                reason: format!("band {band} leaves no exterior pairs for m = {m}"),
            });
        }
        Ok(PairIndexSet::BandExterior { m, band })
    }

    /// An explicit pair list. Requires every pair in range with `i ≤ j` and
    /// no duplicates; the list is sorted into row-major order.
    pub fn custom(m: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyIndexSet {
                reason: "custom pair list is empty".to_string(),
            });
        }
        for &(i, j) in &pairs {
            if i > j {
                return Err(Error::invalid(format!(
                    "custom pair ({i}, {j}) must satisfy i <= j"
                )));
            }
            if j >= m {
                return Err(Error::invalid(format!(
                    "custom pair ({i}, {j}) out of range for m = {m}"
                )));
            }
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("custom pair list contains duplicates"));
        }
        Ok(PairIndexSet::Custom { m, pairs })
    }

    /// The dimension this set indexes.
    pub fn m(&self) -> usize {
        match *self {
            PairIndexSet::StrictPairs { m }
            | PairIndexSet::PairsWithDiagonal { m }
            | PairIndexSet::BandExterior { m, .. }
            | PairIndexSet::Custom { m, .. } => m,
        }
    }

    /// Number of pairs `s = |I|`.
    pub fn cardinality(&self) -> usize {
        match *self {
            PairIndexSet::StrictPairs { m } => m * (m - 1) / 2,
            PairIndexSet::PairsWithDiagonal { m } => m * (m + 1) / 2,
            PairIndexSet::BandExterior { m, band } => {
                let w = m - band - 1;
                w * (w + 1) / 2
            }
            PairIndexSet::Custom { ref pairs, .. } => pairs.len(),
        }
    }

    /// Iterates the pairs in row-major order.
    pub fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        match *self {
            PairIndexSet::StrictPairs { m } => {
                for i in 0..m {
                    for j in i + 1..m {
                        f(i, j);
                    }
                }
            }
            PairIndexSet::PairsWithDiagonal { m } => {
                for i in 0..m {
                    for j in i..m {
                        f(i, j);
                    }
                }
            }
            PairIndexSet::BandExterior { m, band } => {
                for i in 0..m {
                    for j in i + band + 1..m {
                        f(i, j);
                    }
                }
            }
            PairIndexSet::Custom { ref pairs, .. } => {
                for &(i, j) in pairs {
                    f(i, j);
                }
            }
        }
    }

    /// The pairs as a vector, in iteration order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.cardinality());
        self.for_each_pair(|i, j| out.push((i, j)));
        out
    }

    /// The normalization constants conventionally paired with this set:
    /// dimension-based for the two canonical full-triangle sets (the limit
    /// is stated for those directly), cardinality-based for subsets.
    pub fn default_normalization(&self) -> NormalizationMode {
        match self {
            PairIndexSet::StrictPairs { .. } | PairIndexSet::PairsWithDiagonal { .. } => {
                NormalizationMode::TheoremConstants
            }
            PairIndexSet::BandExterior { .. } | PairIndexSet::Custom { .. } => {
                NormalizationMode::CardinalityConstants
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Null covariance
// ---------------------------------------------------------------------------

/// The hypothesized covariance `σ⁰_ij`, supplied per structure test.
#[derive(Debug, Clone, PartialEq)]
pub enum NullCovariance {
    /// `σ⁰_ij = 0` (independence-style nulls; only meaningful off-diagonal).
    Zero,
    /// `σ⁰_ij = 1{i = j}`.
    Identity,
    /// A full symmetric matrix.
    Explicit(nalgebra::DMatrix<f64>),
    /// A stationary null: `σ⁰_ij = γ_{|i−j|}` from an autocovariance vector
    /// `γ_0 .. γ_{m−1}`.
    Toeplitz(Vec<f64>),
}

impl NullCovariance {
    /// Hypothesized value for the pair `(i, j)`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            NullCovariance::Zero => 0.0,
            NullCovariance::Identity => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            NullCovariance::Explicit(sigma) => sigma[(i, j)],
            NullCovariance::Toeplitz(gamma) => gamma[i.abs_diff(j)],
        }
    }

    /// Checks that the null can serve an `m`-column matrix.
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            NullCovariance::Zero | NullCovariance::Identity => Ok(()),
            NullCovariance::Explicit(sigma) => {
                if sigma.nrows() != m || sigma.ncols() != m {
                    return Err(Error::invalid(format!(
                        "null covariance is {} x {}, data has m = {m}",
                        sigma.nrows(),
                        sigma.ncols()
                    )));
                }
                if sigma.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("null covariance has non-finite entries"));
                }
                for i in 0..m {
                    for j in i + 1..m {
                        if sigma[(i, j)] != sigma[(j, i)] {
                            return Err(Error::invalid(format!(
                                "null covariance not symmetric at ({i}, {j})"
                            )));
                        }
                    }
                }
                Ok(())
            }
            NullCovariance::Toeplitz(gamma) => {
                if gamma.len() != m {
                    return Err(Error::invalid(format!(
                        "Toeplitz null needs {m} autocovariances, got {}",
                        gamma.len()
                    )));
                }
                if gamma.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("autocovariance vector has non-finite entries"));
                }
                if gamma[0] <= 0.0 {
                    return Err(Error::invalid(format!(
                        "Toeplitz null needs gamma_0 > 0, got {}",
                        gamma[0]
                    )));
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pair estimators
// ---------------------------------------------------------------------------

/// The two sample moments attached to a column pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    /// `σ̂_ij = (1/n) Σ_k (X_ki − x̄_i)(X_kj − x̄_j)`.
    pub sigma_hat: f64,
    /// `τ̂_ij = (1/n) Σ_k [(X_ki − x̄_i)(X_kj − x̄_j) − σ̂_ij]²`, the
    /// empirical variance of the centered cross-products. Always `≥ 0`.
    pub tau_hat: f64,
}

/// Core of the pair estimators, with the column means supplied by the
/// caller so that bulk drivers can hoist the mean pass out of their pair
/// loop. Single-pair entry points and the bulk path funnel through here,
/// which keeps their summation order — and hence their floating-point
/// results — identical.
fn pair_stats_with_means(x: &DataMatrix, i: usize, j: usize, mean_i: f64, mean_j: f64) -> PairStats {
    let n = x.n() as f64;
    let mut cross = 0.0;
    for k in 0..x.n() {
        cross += (x.get(k, i) - mean_i) * (x.get(k, j) - mean_j);
    }
    let sigma_hat = cross / n;
    let mut sq = 0.0;
    for k in 0..x.n() {
        let d = (x.get(k, i) - mean_i) * (x.get(k, j) - mean_j) - sigma_hat;
        sq += d * d;
    }
    PairStats { sigma_hat, tau_hat: sq / n }
}

/// Both sample moments for the pair `(i, j)`.
pub fn pair_stats(x: &DataMatrix, i: usize, j: usize) -> Result<PairStats> {
    x.check_column(i)?;
    x.check_column(j)?;
    Ok(pair_stats_with_means(x, i, j, x.column_mean(i), x.column_mean(j)))
}

/// Sample covariance `σ̂_ij` (divides by `n`).
pub fn sample_cov_pair(x: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    Ok(pair_stats(x, i, j)?.sigma_hat)
}

/// Self-normalizer `τ̂_ij` (divides by `n`).
pub fn tau_hat_pair(x: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    Ok(pair_stats(x, i, j)?.tau_hat)
}

/// The default floor under which a `τ̂` is treated as degenerate:
/// `1e−12 × (max over columns of the raw second moment)²`. The square makes
/// the floor scale like `τ̂` itself (fourth power of the data), so the check
/// is invariant under rescaling all columns together.
pub fn default_tau_floor(x: &DataMatrix) -> f64 {
    let n = x.n() as f64;
    let mut max_second = 0.0f64;
    for i in 0..x.m() {
        let mut acc = 0.0;
        for k in 0..x.n() {
            let v = x.get(k, i);
            acc += v * v;
        }
        max_second = max_second.max(acc / n);
    }
    1e-12 * max_second * max_second
}

/// A maximum-deviation statistic with the pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDeviation {
    /// `max |σ̂ − σ⁰| / √τ̂` over the index set.
    pub statistic: f64,
    /// First pair (row-major order) attaining the maximum.
    pub argmax: (usize, usize),
}

/// Evaluates `max_{(i,j) ∈ idx} |σ̂_ij − σ⁰_ij| / √τ̂_ij`.
///
/// Ties go to the first attaining pair in row-major order. Any pair whose
/// `τ̂` falls below `tau_floor` aborts the computation with
/// [`Error::DegenerateVariance`]: a vanishing self-normalizer means the
/// studentization underlying the limit theory has failed for this sample,
/// and skipping such pairs silently would bias every downstream rate.
pub fn max_deviation(
    x: &DataMatrix,
    null: &NullCovariance,
    idx: &PairIndexSet,
    tau_floor: f64,
) -> Result<MaxDeviation> {
    if idx.m() != x.m() {
        return Err(Error::invalid(format!(
            "index set is for m = {}, data has m = {}",
            idx.m(),
            x.m()
        )));
    }
    if !(tau_floor >= 0.0) {
        return Err(Error::invalid(format!("tau_floor must be >= 0, got {tau_floor}")));
    }
    null.validate(x.m())?;

    let means = x.column_means();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    let mut failure: Option<Error> = None;
    idx.for_each_pair(|i, j| {
        if failure.is_some() {
            return;
        }
        let stats = pair_stats_with_means(x, i, j, means[i], means[j]);
        if stats.tau_hat < tau_floor || stats.tau_hat <= 0.0 {
            failure = Some(Error::DegenerateVariance {
                i,
                j,
                tau_hat: stats.tau_hat,
                floor: tau_floor,
            });
            return;
        }
        let dev = (stats.sigma_hat - null.value(i, j)).abs() / stats.tau_hat.sqrt();
        if dev > best {
            best = dev;
            arg = (i, j);
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::EmptyIndexSet {
            reason: "index set produced no pairs".to_string(),
        });
    }
    Ok(MaxDeviation { statistic: best, argmax: arg })
}

// ---------------------------------------------------------------------------
// Gumbel limit law
// ---------------------------------------------------------------------------

/// Which family of recentering constants to use in [`gumbel_normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `y = n·M² − 4 log m + log log m + log 8π`, the constants of the limit
    /// theorem for the full pair set of an `m`-dimensional matrix.
    #[serde(rename = "theorem")]
    TheoremConstants,
    /// `y = n·M² − 2 log s + log log s + log π`, with `s` the cardinality of
    /// the index set; valid for arbitrary pair subsets.
    #[serde(rename = "cardinality")]
    CardinalityConstants,
}

impl std::fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormalizationMode::TheoremConstants => write!(f, "theorem"),
            NormalizationMode::CardinalityConstants => write!(f, "cardinality"),
        }
    }
}

/// Recenters `n·statistic²` into the Gumbel scale.
///
/// Requires `s ≥ 3` in both modes (`log log s` must be defined and positive;
/// `s = 3` gives `log log 3 ≈ 0.094 > 0`) and additionally `m ≥ 3` for the
/// dimension-based constants.
pub fn gumbel_normalize(
    statistic: f64,
    n: usize,
    s: usize,
    mode: NormalizationMode,
    m: usize,
) -> Result<f64> {
    if s < 3 {
        return Err(Error::CardinalityTooSmall { s });
    }
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 observations, got {n}")));
    }
    let lead = n as f64 * statistic * statistic;
    match mode {
        NormalizationMode::TheoremConstants => {
            if m < 3 {
                return Err(Error::invalid(format!(
                    "theorem constants need m >= 3 (log log m must be positive), got m = {m}"
                )));
            }
            let lm = (m as f64).ln();
            Ok(lead - 4.0 * lm + lm.ln() + (8.0 * std::f64::consts::PI).ln())
        }
        NormalizationMode::CardinalityConstants => {
            let ls = (s as f64).ln();
            Ok(lead - 2.0 * ls + ls.ln() + std::f64::consts::PI.ln())
        }
    }
}

/// CDF of the limit law: `exp(−e^{−y/2})`.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y / 2.0).exp()).exp()
}

/// Upper-tail quantile: the `y` with `1 − gumbel_cdf(y) = alpha`, i.e.
/// `y = −2 log(−log(1 − alpha))`.
pub fn gumbel_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    // ln(1 − alpha) via ln_1p keeps small alphas exact.
    Ok(-2.0 * (-(-alpha).ln_1p()).ln())
}

/// Upper-tail probability `1 − gumbel_cdf(y)`, computed as `−expm1(−e^{−y/2})`
/// so that large `y` (tiny p) keeps full relative precision.
pub fn gumbel_sf(y: f64) -> f64 {
    -(-(-y / 2.0).exp()).exp_m1()
}

// ---------------------------------------------------------------------------
// Test driver
// ---------------------------------------------------------------------------

/// Outcome of one maximum-deviation test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// The raw maximum deviation `M`.
    pub statistic: f64,
    /// Cardinality `s` of the index set used.
    pub cardinality: usize,
    /// Gumbel-normalized value `y`.
    pub normalized: f64,
    /// `p = 1 − exp(−e^{−y/2})`.
    pub p_value: f64,
    /// First pair attaining the maximum (0-based columns, row-major ties).
    pub argmax_pair: (usize, usize),
    /// Constants used to form `normalized`.
    pub normalization_mode: NormalizationMode,
}

impl TestResult {
    /// Convenience: reject at level `alpha`? Equivalent to comparing
    /// `normalized` against `gumbel_quantile(alpha)`.
    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// Runs the full pipeline: maximum deviation, Gumbel recentering with the
/// requested constants, p-value. The τ̂ floor is [`default_tau_floor`].
pub fn run_test(
    x: &DataMatrix,
    null: &NullCovariance,
    idx: &PairIndexSet,
    mode: NormalizationMode,
) -> Result<TestResult> {
    run_test_with_floor(x, null, idx, mode, default_tau_floor(x))
}

/// [`run_test`] with an explicit τ̂ floor.
pub fn run_test_with_floor(
    x: &DataMatrix,
    null: &NullCovariance,
    idx: &PairIndexSet,
    mode: NormalizationMode,
    tau_floor: f64,
) -> Result<TestResult> {
    let dev = max_deviation(x, null, idx, tau_floor)?;
    let s = idx.cardinality();
    let y = gumbel_normalize(dev.statistic, x.n(), s, mode, x.m())?;
    Ok(TestResult {
        statistic: dev.statistic,
        cardinality: s,
        normalized: y,
        p_value: gumbel_sf(y),
        argmax_pair: dev.argmax,
        normalization_mode: mode,
    })
}
