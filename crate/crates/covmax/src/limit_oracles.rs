//! Independent reference computations for the extreme-value limit.
//!
//! The distributional theory rests on a Poisson-type approximation: with the
//! threshold `z_s` chosen so that `s · P(|Z| > z_s) → e^{−z}`, the number of
//! exceedances among `s` weakly dependent standardized entries converges to
//! a Poisson(`e^{−z}`) count, and the maximum's normalized law is Gumbel.
//! This module provides ways to compute the relevant binomial moments
//! *without* going through the statistic under test, so the asymptotic
//! machinery can be checked against ground truth:
//!
//! * [`EnumerableEventSystem`] — tiny finite probability spaces where every
//!   joint probability is enumerable exactly; the factorial-moment identity
//!   `E[N(N−1)⋯(N−d+1)] = d! · Q_d` (with `Q_d` the sum of `d`-subset joint
//!   probabilities) can be verified to machine precision.
//! * [`independent_exceedance_sum`] — the closed form
//!   `Q′_d = C(s,d) (2Φ̄(z))^d` for independent Gaussian coordinates.
//! * [`mc_exceedance_sum`] — Monte Carlo `Q′_d` for an arbitrary Gaussian
//!   covariance, with a standard error.
//! * [`ks_distance`] — Kolmogorov–Smirnov distance from an empirical sample
//!   to any reference CDF.

use nalgebra::DMatrix;
use rand_distr::Distribution as _;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Largest number of events an enumerable system may carry (joint outcomes
/// are bitmasks and `d`-subset enumeration is combinatorial).
pub const MAX_EVENTS: usize = 20;

/// Upper tail `Φ̄(x) = P(Z > x)` of the standard normal, accurate into the
/// far tail (implemented via `erfc`).
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Binomial coefficient as `f64`, exact for the sizes used here.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Falling factorial `n (n−1) ⋯ (n−d+1)` as `f64`.
fn falling_factorial(n: usize, d: usize) -> f64 {
    if d > n {
        return 0.0;
    }
    (0..d).map(|i| (n - i) as f64).product()
}

// ---------------------------------------------------------------------------
// Enumerable event systems
// ---------------------------------------------------------------------------

/// A finite probability space with `s ≤ 20` named events, specified by the
/// exhaustive list of joint outcomes: each carries a probability and a
/// bitmask saying which of the `s` events occur (bit `i` = event `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerableEventSystem {
    s: usize,
    outcomes: Vec<(f64, u32)>,
}

impl EnumerableEventSystem {
    /// Validates and builds a system. Probabilities must be nonnegative and
    /// sum to one (to `1e−12`); masks must fit in `s` bits; `s ≤ 20`.
    pub fn new(s: usize, outcomes: Vec<(f64, u32)>) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("event system needs at least one event"));
        }
        if s > MAX_EVENTS {
            return Err(Error::CapExceeded {
                what: "enumerable event system size".into(),
                requested: s,
                cap: MAX_EVENTS,
            });
        }
        if outcomes.is_empty() {
            return Err(Error::invalid("event system needs at least one outcome"));
        }
        let mut total = 0.0;
        for &(p, mask) in &outcomes {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::invalid(format!("outcome probability {p} is invalid")));
            }
            if mask >= (1u32 << s) {
                return Err(Error::invalid(format!(
                    "outcome mask {mask:#b} names events beyond the declared {s}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("outcome probabilities sum to {total}, not 1")));
        }
        Ok(EnumerableEventSystem { s, outcomes })
    }

    /// Number of events.
    pub fn s(&self) -> usize {
        self.s
    }

    /// A system of `s` independent events each with probability `p`
    /// (all `2^s` outcomes enumerated).
    pub fn independent(s: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("event probability {p} outside [0, 1]")));
        }
        if s > MAX_EVENTS {
            return Err(Error::CapExceeded {
                what: "enumerable event system size".into(),
                requested: s,
                cap: MAX_EVENTS,
            });
        }
        let outcomes = (0u32..(1 << s))
            .map(|mask| {
                let k = mask.count_ones() as i32;
                (p.powi(k) * (1.0 - p).powi(s as i32 - k), mask)
            })
            .collect();
        EnumerableEventSystem::new(s, outcomes)
    }

    /// `d`-th factorial moment of the event count:
    /// `E[N (N−1) ⋯ (N−d+1)]` with `N = #{events that occur}`.
    pub fn factorial_moment(&self, d: usize) -> f64 {
        self.outcomes
            .iter()
            .map(|&(p, mask)| p * falling_factorial(mask.count_ones() as usize, d))
            .sum()
    }

    /// `Q_d = Σ_{|A| = d} P(⋂_{i ∈ A} E_i)`, computed the slow, literal way:
    /// enumerate every `d`-subset of events and add up its joint
    /// probability. This is deliberately a *different* computational route
    /// from [`Self::factorial_moment`], so the identity `d!·Q_d = E(N)_d`
    /// is a genuine cross-check rather than an algebraic tautology.
    pub fn subset_probability_sum(&self, d: usize) -> f64 {
        if d == 0 {
            return 1.0;
        }
        if d > self.s {
            return 0.0;
        }
        let mut total = 0.0;
        // Gosper's hack over d-subsets of s bits.
        let mut subset: u32 = (1 << d) - 1;
        let limit: u32 = 1 << self.s;
        while subset < limit {
            let joint: f64 = self
                .outcomes
                .iter()
                .filter(|&&(_, mask)| mask & subset == subset)
                .map(|&(p, _)| p)
                .sum();
            total += joint;
            // Next subset with the same popcount.
            let c = subset & subset.wrapping_neg();
            let r = subset + c;
            subset = (((r ^ subset) >> 2) / c) | r;
        }
        total
    }

    /// Marginal probability of event `i`.
    pub fn event_probability(&self, i: usize) -> f64 {
        self.outcomes
            .iter()
            .filter(|&&(_, mask)| mask & (1 << i) != 0)
            .map(|&(p, _)| p)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Gaussian exceedance sums
// ---------------------------------------------------------------------------

/// The calibrated threshold `z_s(z) = √(2 log s − log log s − log π + 2z)`,
/// chosen so that `s · 2Φ̄(z_s) → e^{−z}` as `s → ∞`. Requires `s ≥ 3` and a
/// positive radicand.
pub fn exceedance_threshold(s: usize, z: f64) -> Result<f64> {
    if s < 3 {
        return Err(Error::CardinalityTooSmall { s });
    }
    let ls = (s as f64).ln();
    let sq = 2.0 * ls - ls.ln() - std::f64::consts::PI.ln() + 2.0 * z;
    if sq <= 0.0 {
        return Err(Error::invalid(format!(
            "threshold undefined: 2 log s − log log s − log π + 2z = {sq} <= 0"
        )));
    }
    Ok(sq.sqrt())
}

/// Exact `Q′_d = C(s,d) (2Φ̄(z))^d` for `s` independent standard normal
/// coordinates and symmetric exceedance events `{|Z_i| > z}`. Computed in
/// product form `Π_{k<d} (s−k)·p/(k+1)` so huge `C(s,d)` never materializes.
pub fn independent_exceedance_sum(s: usize, d: usize, z: f64) -> Result<f64> {
    if d == 0 {
        return Ok(1.0);
    }
    if d > s {
        return Ok(0.0);
    }
    let p = 2.0 * normal_upper_tail(z);
    let mut acc = 1.0;
    for k in 0..d {
        acc *= (s - k) as f64 * p / (k + 1) as f64;
    }
    Ok(acc)
}

/// The Poisson limit of `Q′_d` under the calibrated threshold:
/// `λ^d / d!` with `λ = e^{−z}`.
pub fn poisson_reference(z: f64, d: usize) -> f64 {
    let lambda = (-z).exp();
    let mut acc = 1.0;
    for k in 0..d {
        acc *= lambda / (k + 1) as f64;
    }
    acc
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Monte Carlo `Q′_d` for `Z ~ N(0, Σ)` and events `{|Z_i| > z}`: each
/// replication contributes `C(N, d)` with `N` the exceedance count, whose
/// expectation is exactly `Q′_d`. Σ must be symmetric positive definite
/// (Cholesky). Deterministic in `seed`.
pub fn mc_exceedance_sum(
    sigma: &DMatrix<f64>,
    z: f64,
    d: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::invalid("covariance must be square"));
    }
    if reps < 2 {
        return Err(Error::invalid("Monte Carlo needs at least 2 replications"));
    }
    let s = sigma.nrows();
    let chol = nalgebra::Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    let l = chol.l();
    let mut rng = rng_from_seed(seed);
    let normal = rand_distr::StandardNormal;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut eps = vec![0.0f64; s];
    for _ in 0..reps {
        for e in eps.iter_mut() {
            *e = normal.sample(&mut rng);
        }
        // Z = L ε, lower-triangular product.
        let mut count = 0usize;
        for i in 0..s {
            let mut zi = 0.0;
            for j in 0..=i {
                zi += l[(i, j)] * eps[j];
            }
            if zi.abs() > z {
                count += 1;
            }
        }
        let v = binomial(count, d);
        sum += v;
        sum_sq += v * v;
    }
    let nrep = reps as f64;
    let mean = sum / nrep;
    let var = (sum_sq / nrep - mean * mean).max(0.0) * nrep / (nrep - 1.0);
    Ok(McEstimate { estimate: mean, std_error: (var / nrep).sqrt(), reps })
}

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov distance
// ---------------------------------------------------------------------------

/// Two-sided KS distance between a sorted sample and a reference CDF:
/// `max_i max(F(x_i) − i/n, (i+1)/n − F(x_i))`.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted_sample: &[f64], cdf: F) -> Result<f64> {
    if sorted_sample.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample"));
    }
    if sorted_sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("KS distance requires a sorted sample"));
    }
    let n = sorted_sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted_sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}
