//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building inputs or running a test.
///
/// Statistical failure modes get their own variants because callers react to
/// them differently: a degenerate variance estimate invalidates the limit
/// theory for the sample at hand, while a too-small index set is a usage
/// error that no amount of data will fix.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A self-normalizer τ̂ fell below the floor, so the studentized
    /// deviation for this pair is numerically meaningless.
    #[error(
        "degenerate variance estimate for column pair ({i}, {j}): tau_hat = {tau_hat:.3e} \
         is below the floor {floor:.3e}"
    )]
    DegenerateVariance { i: usize, j: usize, tau_hat: f64, floor: f64 },

    /// The index set has fewer than three pairs; `log log s` is undefined or
    /// non-positive and the limit constants are meaningless.
    #[error("index set cardinality {s} is too small: the normalization requires s >= 3")]
    CardinalityTooSmall { s: usize },

    /// The index set contains no pairs at all.
    #[error("empty index set: {reason}")]
    EmptyIndexSet { reason: String },

    /// The innovation fourth cumulant sits at or below the κ₄ = −2 boundary
    /// and drove a product variance to zero or below.
    #[error(
        "fourth-cumulant boundary: kappa4 = {kappa4} gives tau({i}, {j}) = {tau:.3e} <= 0; \
         the product variance must be positive for the limit theory"
    )]
    Kappa4Boundary { kappa4: f64, i: usize, j: usize, tau: f64 },

    /// An enumeration or table build would exceed its configured cap.
    #[error("{what} requires {requested}, above the cap {cap}")]
    CapExceeded { what: String, requested: usize, cap: usize },

    /// More than the tolerated share of Monte Carlo replications failed.
    #[error(
        "study aborted: {failed} of {total} replications failed (tolerance is 1%); \
         first failure: {first_failure}"
    )]
    StudyAborted { failed: usize, total: usize, first_failure: String },

    /// Anything rejected while validating inputs: dimensions, ranges,
    /// non-finite values, malformed specs.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Shorthand for [`Error::InvalidInput`] with formatted text.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
