//! Report shapes written by the commands. Columns and pairs are 1-based in
//! every report, matching CSV column numbering.

use covmax::core_stats::TestResult;
use serde::Serialize;

/// Output of `covmax test`.
#[derive(Debug, Serialize)]
pub struct TestReport {
    /// Which null was tested: `independence`, `identity`, `stationarity`,
    /// `banded`, `taper`, or `custom`.
    pub null: String,
    pub n: usize,
    pub m: usize,
    /// Number of (i, j) pairs examined.
    pub cardinality: usize,
    /// Maximum self-normalized deviation `M`.
    pub statistic: f64,
    /// Gumbel-scale value `y`.
    pub normalized: f64,
    pub p_value: f64,
    /// First pair attaining the maximum, 1-based columns.
    pub argmax: [usize; 2],
    /// Recentering family: `theorem` or `cardinality`.
    pub normalization: String,
    pub alpha: f64,
    pub reject: bool,
    /// Band whose exterior was tested (banded and taper nulls only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
    /// Pooled autocovariances fitted under the stationarity null.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_autocovariances: Option<Vec<f64>>,
    /// What a taper-adequacy check cannot see (taper null only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

impl TestReport {
    /// Assembles the common fields from a test outcome.
    pub fn new(null: &str, n: usize, m: usize, result: &TestResult, alpha: f64) -> Self {
        TestReport {
            null: null.to_string(),
            n,
            m,
            cardinality: result.cardinality,
            statistic: result.statistic,
            normalized: result.normalized,
            p_value: result.p_value,
            argmax: [result.argmax_pair.0 + 1, result.argmax_pair.1 + 1],
            normalization: result.normalization_mode.to_string(),
            alpha,
            reject: result.reject_at(alpha),
            band: None,
            fitted_autocovariances: None,
            caveat: None,
        }
    }
}

/// Output of `covmax taper --report`.
#[derive(Debug, Serialize)]
pub struct TaperReport {
    pub n: usize,
    pub m: usize,
    /// Bandwidth actually used.
    pub band: usize,
    /// Smoothness exponent the bandwidth was derived from, when `--eta`
    /// chose the band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Norm errors against `--truth`, when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<TaperErrors>,
}

/// Operator- and Frobenius-norm errors of the tapered and raw estimates
/// against a supplied true covariance.
#[derive(Debug, Serialize)]
pub struct TaperErrors {
    pub operator_tapered: f64,
    pub operator_raw: f64,
    pub frobenius_tapered: f64,
    pub frobenius_raw: f64,
}
