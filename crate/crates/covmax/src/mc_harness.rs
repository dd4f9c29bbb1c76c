//! Monte Carlo studies: replicate a generator + test combination, summarize
//! calibration.
//!
//! Reproducibility contract: every replication derives its own seed from
//! `(master_seed, replication index)`, and the generators inside derive one
//! stream per data row from that. No state is shared across replications,
//! so the summary is bitwise identical whatever the parallelism degree —
//! replications are farmed out with rayon and collected back in index
//! order. The measured `runtime_seconds` is the one field that cannot be
//! deterministic, so it is excluded from serialization.
//!
//! Failure policy: a replication that aborts with a degenerate product
//! variance is recorded as a sentinel (`null` in serialized vectors) and
//! excluded from rejection rates and the KS distance; silently dropping
//! such replications would bias size estimates, so a study whose sentinel
//! share exceeds 1% refuses to report at all. Any other per-replication
//! error is a configuration defect and fails the study immediately.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core_stats::{
    gumbel_cdf, run_test, DataMatrix, NormalizationMode, NullCovariance, PairIndexSet,
    TestResult,
};
use crate::error::{Error, Result};
use crate::limit_oracles::ks_distance;
use crate::processes::GeneratorSpec;
use crate::rng::derive_seed;
use crate::structure_tests;

// ---------------------------------------------------------------------------
// Serializable test specification
// ---------------------------------------------------------------------------

/// Serializable null covariance. `Explicit` carries the matrix by rows;
/// `Toeplitz` carries autocovariances `γ_0 ..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "null", rename_all = "snake_case")]
pub enum NullSpec {
    Zero,
    Identity,
    Toeplitz { gamma: Vec<f64> },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl NullSpec {
    /// Materializes the null for `m` columns.
    pub fn build(&self, m: usize) -> Result<NullCovariance> {
        let null = match self {
            NullSpec::Zero => NullCovariance::Zero,
            NullSpec::Identity => NullCovariance::Identity,
            NullSpec::Toeplitz { gamma } => NullCovariance::Toeplitz(gamma.clone()),
            NullSpec::Explicit { matrix } => {
                let rows = matrix.len();
                if rows == 0 || matrix.iter().any(|r| r.len() != rows) {
                    return Err(Error::invalid("explicit null matrix must be square"));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                NullCovariance::Explicit(nalgebra::DMatrix::from_row_slice(rows, rows, &flat))
            }
        };
        null.validate(m)?;
        Ok(null)
    }
}

/// Serializable pair index set. `Custom` pairs are 1-based `(i, j)` with
/// `i ≤ j`, matching report and CSV column numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum IndexSetSpec {
    StrictPairs,
    PairsWithDiagonal,
    BandExterior { band: usize },
    Custom { pairs: Vec<(usize, usize)> },
}

impl IndexSetSpec {
    /// Materializes the index set for `m` columns.
    pub fn build(&self, m: usize) -> Result<PairIndexSet> {
        match self {
            IndexSetSpec::StrictPairs => PairIndexSet::strict_pairs(m),
            IndexSetSpec::PairsWithDiagonal => PairIndexSet::pairs_with_diagonal(m),
            IndexSetSpec::BandExterior { band } => PairIndexSet::band_exterior(m, *band),
            IndexSetSpec::Custom { pairs } => {
                let zero_based = pairs
                    .iter()
                    .map(|&(i, j)| {
                        if i == 0 || j == 0 {
                            Err(Error::invalid("custom pairs are 1-based; got index 0"))
                        } else {
                            Ok((i - 1, j - 1))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                PairIndexSet::custom(m, zero_based)
            }
        }
    }
}

/// Serializable choice of structure test, mirroring the canned entry points
/// plus a fully custom combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum TestSpec {
    Independence,
    Identity,
    Stationarity,
    Bandedness { band: usize },
    Custom {
        #[serde(flatten)]
        null: NullSpec,
        #[serde(flatten)]
        set: IndexSetSpec,
        /// Defaults to the index set's natural normalization.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalization: Option<NormalizationMode>,
    },
}

impl TestSpec {
    /// Runs the specified test on one dataset.
    pub fn apply(&self, x: &DataMatrix) -> Result<TestResult> {
        match self {
            TestSpec::Independence => structure_tests::test_independence(x),
            TestSpec::Identity => structure_tests::test_identity(x),
            TestSpec::Stationarity => Ok(structure_tests::test_stationarity(x)?.result),
            TestSpec::Bandedness { band } => structure_tests::test_bandedness(x, *band),
            TestSpec::Custom { null, set, normalization } => {
                let null = null.build(x.m())?;
                let idx = set.build(x.m())?;
                let mode = normalization.unwrap_or_else(|| idx.default_normalization());
                run_test(x, &null, &idx, mode)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Study configuration and summary
// ---------------------------------------------------------------------------

fn default_levels() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

/// Full description of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub generator: GeneratorSpec,
    pub test: TestSpec,
    pub n: usize,
    pub m: usize,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_levels")]
    pub nominal_levels: Vec<f64>,
}

impl StudyConfig {
    /// Checks the scalar parts of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("a study needs at least one replication"));
        }
        if self.nominal_levels.is_empty() {
            return Err(Error::invalid("nominal_levels must not be empty"));
        }
        for &a in &self.nominal_levels {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid(format!("nominal level {a} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Replication-level outputs and their calibration summary. The `y_values`
/// and `p_values` vectors have one slot per replication in index order;
/// sentinel (`null`) entries mark replications excluded by the failure
/// policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub n: usize,
    pub m: usize,
    pub replications: usize,
    pub failed_replications: usize,
    pub nominal_levels: Vec<f64>,
    /// Normalized statistic `y` per replication.
    pub y_values: Vec<Option<f64>>,
    /// p-value per replication.
    pub p_values: Vec<Option<f64>>,
    /// Nominal level (formatted as its shortest exact decimal) → empirical
    /// rejection rate `mean(p ≤ α)` over non-sentinel replications.
    pub rejection_rates: BTreeMap<String, f64>,
    /// KS distance between the non-sentinel `y` sample and the Gumbel-type
    /// limit CDF.
    pub ks_to_gumbel: f64,
    /// Wall-clock duration of the study. Deliberately not serialized: the
    /// serialized summary is part of the determinism contract and wall
    /// time is not deterministic.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

/// Map key for a nominal level: Rust's shortest-roundtrip float format.
pub fn level_key(alpha: f64) -> String {
    format!("{alpha}")
}

impl StudySummary {
    /// Empirical rejection rate at a nominal level from the config.
    pub fn rejection_rate(&self, alpha: f64) -> Option<f64> {
        self.rejection_rates.get(&level_key(alpha)).copied()
    }
}

/// Runs a full study: `R` independent replications, each generating a
/// fresh dataset from its derived seed and applying the test.
pub fn run_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let start = Instant::now();
    let outcomes: Vec<Result<TestResult>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(cfg.master_seed, rep as u64);
            let x = cfg.generator.generate(cfg.n, cfg.m, seed)?;
            cfg.test.apply(&x)
        })
        .collect();

    let mut y_values = Vec::with_capacity(cfg.replications);
    let mut p_values = Vec::with_capacity(cfg.replications);
    let mut failed = 0usize;
    let mut first_failure: Option<String> = None;
    for outcome in outcomes {
        match outcome {
            Ok(t) => {
                y_values.push(Some(t.normalized));
                p_values.push(Some(t.p_value));
            }
            Err(e @ Error::DegenerateVariance { .. }) => {
                failed += 1;
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
                y_values.push(None);
                p_values.push(None);
            }
            // Anything else is a configuration defect, identical in every
            // replication — abort with the real error.
            Err(e) => return Err(e),
        }
    }
    if failed as f64 > 0.01 * cfg.replications as f64 {
        return Err(Error::StudyAborted {
            failed,
            total: cfg.replications,
            first_failure: first_failure.unwrap_or_default(),
        });
    }

    let successes: Vec<f64> = p_values.iter().flatten().copied().collect();
    let n_ok = successes.len() as f64;
    let mut rejection_rates = BTreeMap::new();
    for &alpha in &cfg.nominal_levels {
        let rate = successes.iter().filter(|&&p| p <= alpha).count() as f64 / n_ok;
        rejection_rates.insert(level_key(alpha), rate);
    }

    let mut ys: Vec<f64> = y_values.iter().flatten().copied().collect();
    ys.sort_by(f64::total_cmp);
    let ks_to_gumbel = ks_distance(&ys, gumbel_cdf)?;

    Ok(StudySummary {
        n: cfg.n,
        m: cfg.m,
        replications: cfg.replications,
        failed_replications: failed,
        nominal_levels: cfg.nominal_levels.clone(),
        y_values,
        p_values,
        rejection_rates,
        ks_to_gumbel,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Convergence sweep
// ---------------------------------------------------------------------------

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub replications: usize,
    pub ks_to_gumbel: f64,
    pub rejection_rates: BTreeMap<String, f64>,
    /// Set when this row's KS distance exceeds the previous (smaller-scale)
    /// row's by more than 0.05 — the approximation should not get *worse*
    /// with scale beyond noise.
    pub ks_non_improvement: bool,
}

/// Sweep report: one row per config, in the given (scale-ascending) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Runs each study in turn and flags scale steps where the Gumbel
/// approximation degrades. Requires at least two configs, ordered by scale.
pub fn convergence_sweep(cfgs: &[StudyConfig]) -> Result<SweepReport> {
    if cfgs.len() < 2 {
        return Err(Error::invalid("a convergence sweep needs at least two configs"));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let summary = run_study(cfg)?;
        let ks_non_improvement = rows
            .last()
            .map(|prev: &SweepRow| summary.ks_to_gumbel > prev.ks_to_gumbel + 0.05)
            .unwrap_or(false);
        rows.push(SweepRow {
            n: cfg.n,
            m: cfg.m,
            replications: cfg.replications,
            ks_to_gumbel: summary.ks_to_gumbel,
            rejection_rates: summary.rejection_rates,
            ks_non_improvement,
        });
    }
    Ok(SweepReport { rows })
}
