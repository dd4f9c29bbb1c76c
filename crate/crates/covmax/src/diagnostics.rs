//! Checkable surrogates for the conditions behind the limit theory.
//!
//! The Gumbel approximation for the maximum deviation is only as good as
//! the dependence and moment conditions backing it. This module offers two
//! kinds of evidence:
//!
//! * **Data-driven** ([`condition_report`]): correlations between the
//!   centered entry products `(X_i − x̄_i)(X_j − x̄_j)` — whose extremes the
//!   statistic is built from — summarized by the order-statistic profile
//!   `γ(b)` (the largest `b`-th-largest absolute correlation with any other
//!   product), the neighborhood counts `G(t)`, and the total squared
//!   correlation mass. Weak dependence shows up as `γ(b)` dropping fast in
//!   `b` and `G(t)` staying `O(1)` for moderate `t`.
//! * **Model-driven** ([`physical_dep_linear`], [`psi_tail`], [`h_profile`],
//!   [`exp_moment`], [`abs_moment_table`]): exact functional-dependence and
//!   moment profiles for the synthetic generator families, where everything
//!   is computable from coefficients and the innovation law.

use serde::{Deserialize, Serialize};

use crate::core_stats::{DataMatrix, PairIndexSet};
use crate::error::{Error, Result};
use crate::processes::{InnovationDist, NonstationaryLinearSpec, StationaryLinearSpec};

/// Default cap on the number of entry pairs the product-correlation matrix
/// may hold (its memory and time are quadratic in this count).
pub const DEFAULT_PRODUCT_PAIR_CAP: usize = 2000;

// ---------------------------------------------------------------------------
// Product correlations
// ---------------------------------------------------------------------------

/// Sample correlation matrix of the centered entry products, one product
/// column per pair `(i, j)`, `i ≤ j`, in row-major pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCorrelations {
    pairs: Vec<(usize, usize)>,
    /// `s × s` row-major correlation matrix.
    corr: Vec<f64>,
    /// Biased (divisor `n`) variance of each product column — exactly the
    /// `τ̂` of its pair.
    tau: Vec<f64>,
}

/// Builds the product-correlation matrix over all pairs including the
/// diagonal. Fails with [`Error::CapExceeded`] when `m(m+1)/2 > cap`, and
/// with [`Error::DegenerateVariance`] when a product column is constant.
pub fn product_correlations(x: &DataMatrix, cap: usize) -> Result<ProductCorrelations> {
    let (n, m) = (x.n(), x.m());
    let idx = PairIndexSet::pairs_with_diagonal(m)?;
    let s = idx.cardinality();
    if s > cap {
        return Err(Error::CapExceeded { what: "entry pairs".into(), requested: s, cap });
    }
    let pairs = idx.pairs();
    let means = x.column_means();
    // Product columns, centered by their own means.
    let mut centered = vec![0.0f64; s * n];
    let mut tau = vec![0.0f64; s];
    for (a, &(i, j)) in pairs.iter().enumerate() {
        let col = &mut centered[a * n..(a + 1) * n];
        let mut mean = 0.0;
        for k in 0..n {
            let v = (x.get(k, i) - means[i]) * (x.get(k, j) - means[j]);
            col[k] = v;
            mean += v;
        }
        mean /= n as f64;
        let mut var = 0.0;
        for v in col.iter_mut() {
            *v -= mean;
            var += *v * *v;
        }
        var /= n as f64;
        if var <= 0.0 {
            return Err(Error::DegenerateVariance { i, j, tau_hat: var, floor: 0.0 });
        }
        tau[a] = var;
    }
    // Normalize columns to unit length, making inner products correlations.
    for a in 0..s {
        let norm = (tau[a] * n as f64).sqrt();
        for v in &mut centered[a * n..(a + 1) * n] {
            *v /= norm;
        }
    }
    let mut corr = vec![0.0f64; s * s];
    for a in 0..s {
        corr[a * s + a] = 1.0;
        for b in a + 1..s {
            let (ca, cb) = (&centered[a * n..(a + 1) * n], &centered[b * n..(b + 1) * n]);
            let r: f64 = ca.iter().zip(cb).map(|(u, v)| u * v).sum();
            corr[a * s + b] = r;
            corr[b * s + a] = r;
        }
    }
    Ok(ProductCorrelations { pairs, corr, tau })
}

impl ProductCorrelations {
    /// Number of product columns (pairs).
    pub fn s(&self) -> usize {
        self.pairs.len()
    }

    /// The pair behind product column `a`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Correlation between product columns `a` and `b`.
    pub fn r(&self, a: usize, b: usize) -> f64 {
        self.corr[a * self.s() + b]
    }

    /// `τ̂` of the pair behind column `a`.
    pub fn tau(&self, a: usize) -> f64 {
        self.tau[a]
    }

    /// Smallest `τ̂` across all pairs.
    pub fn tau_min(&self) -> f64 {
        self.tau.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `γ(b)`: over every product column, the `b`-th largest absolute
    /// correlation with a *different* column, maximized over columns
    /// (`b = 1` is the largest off-self correlation). Requires
    /// `1 ≤ b ≤ s − 1`.
    pub fn gamma(&self, b: usize) -> Result<f64> {
        let s = self.s();
        if b == 0 || b >= s {
            return Err(Error::invalid(format!(
                "order statistic index must satisfy 1 <= b <= {}, got {b}",
                s - 1
            )));
        }
        let mut best = 0.0f64;
        let mut buf = Vec::with_capacity(s - 1);
        for a in 0..s {
            buf.clear();
            for other in 0..s {
                if other != a {
                    buf.push(self.r(a, other).abs());
                }
            }
            // b-th largest = (b−1)-th from the top after partial selection.
            buf.select_nth_unstable_by(b - 1, |x, y| y.total_cmp(x));
            best = best.max(buf[b - 1]);
        }
        Ok(best)
    }

    /// `G(t)`: the largest number of product columns whose absolute
    /// correlation with some fixed column exceeds `t` — the column itself
    /// included, so i.i.d.-like data gives 1 for any `t < 1`.
    pub fn g_count(&self, t: f64) -> usize {
        let s = self.s();
        (0..s)
            .map(|a| (0..s).filter(|&b| self.r(a, b).abs() > t).count())
            .max()
            .unwrap_or(0)
    }

    /// Total squared correlation mass `Σ_{a,b} r_ab²`, both orders and the
    /// diagonal included (so it is at least `s`). Standardized products
    /// make this the squared-covariance sum of the normalized entries.
    pub fn cov_sq_sum(&self) -> f64 {
        self.corr.iter().map(|r| r * r).sum()
    }
}

// ---------------------------------------------------------------------------
// Condition report
// ---------------------------------------------------------------------------

/// One `γ(b)` profile point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub b: usize,
    pub value: f64,
}

/// One `G(t)` profile point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCountEntry {
    pub threshold: f64,
    pub count: usize,
}

/// Data-driven summary of how hostile a dataset looks to the limit theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n: usize,
    pub m: usize,
    /// Number of product columns `m(m+1)/2`.
    pub s: usize,
    /// Smallest product variance `τ̂` across pairs — near-zero values mean
    /// the self-normalization is on thin ice.
    pub tau_min: f64,
    /// Largest absolute sample correlation between distinct data columns.
    pub corr_max: f64,
    /// Pooled excess kurtosis: the average over columns of the biased
    /// sample kurtosis minus 3. Values at or below −2 are impossible for
    /// nondegenerate data; values near them flag product degeneracy.
    pub kappa4_pooled: f64,
    /// `γ(b)` at a short ladder of `b` values.
    pub gamma: Vec<GammaEntry>,
    /// `G(t)` at a short ladder of thresholds.
    pub g_counts: Vec<GCountEntry>,
    /// `Σ r²` over all ordered pairs of product columns.
    pub cov_sq_sum: f64,
}

/// Computes the full data-driven report. The product matrix is capped at
/// `cap` pairs (use [`DEFAULT_PRODUCT_PAIR_CAP`] unless there is a reason
/// not to).
pub fn condition_report(x: &DataMatrix, cap: usize) -> Result<ConditionReport> {
    let pc = product_correlations(x, cap)?;
    let (n, m) = (x.n(), x.m());
    let s = pc.s();

    let means = x.column_means();
    // Largest absolute correlation between original columns.
    let mut corr_max = 0.0f64;
    let mut col_var = vec![0.0f64; m];
    for i in 0..m {
        let mut v = 0.0;
        for k in 0..n {
            let d = x.get(k, i) - means[i];
            v += d * d;
        }
        col_var[i] = v / n as f64;
    }
    for i in 0..m {
        for j in i + 1..m {
            let mut cov = 0.0;
            for k in 0..n {
                cov += (x.get(k, i) - means[i]) * (x.get(k, j) - means[j]);
            }
            cov /= n as f64;
            let denom = (col_var[i] * col_var[j]).sqrt();
            if denom > 0.0 {
                corr_max = corr_max.max((cov / denom).abs());
            }
        }
    }

    // Pooled excess kurtosis.
    let mut kappa_sum = 0.0;
    for i in 0..m {
        let mut m4 = 0.0;
        for k in 0..n {
            let d = x.get(k, i) - means[i];
            m4 += d * d * d * d;
        }
        m4 /= n as f64;
        kappa_sum += m4 / (col_var[i] * col_var[i]) - 3.0;
    }

    let gamma = [1usize, 2, 4, 8]
        .into_iter()
        .filter(|&b| b <= s.saturating_sub(1))
        .map(|b| Ok(GammaEntry { b, value: pc.gamma(b)? }))
        .collect::<Result<Vec<_>>>()?;
    let g_counts = [0.25, 0.5, 0.9]
        .into_iter()
        .map(|threshold| GCountEntry { threshold, count: pc.g_count(threshold) })
        .collect();

    Ok(ConditionReport {
        n,
        m,
        s,
        tau_min: pc.tau_min(),
        corr_max,
        kappa4_pooled: kappa_sum / m as f64,
        gamma,
        g_counts,
        cov_sq_sum: pc.cov_sq_sum(),
    })
}

// ---------------------------------------------------------------------------
// Model-driven profiles
// ---------------------------------------------------------------------------

/// Functional-dependence coefficients of a stationary linear process:
/// `δ_p(i) = |a_i| · ‖ε − ε′‖_p` for `i = 0 ..= J` (replacing the one
/// innovation `i` steps back perturbs the output through `a_i` alone).
/// Supported orders: `p ∈ {2, 4}`.
pub fn physical_dep_linear(spec: &StationaryLinearSpec, p: u32) -> Result<Vec<f64>> {
    let norm = spec.innovations().diff_norm(p)?;
    Ok(spec.coeffs().iter().map(|a| a.abs() * norm).collect())
}

/// Tail dependence norm `Ψ_p(k) = (Σ_{i ≥ k} δ_p(i)²)^{1/2}` of a
/// stationary linear process (zero once `k` passes the truncation lag).
pub fn psi_tail(spec: &StationaryLinearSpec, p: u32, k: usize) -> Result<f64> {
    let delta = physical_dep_linear(spec, p)?;
    if k >= delta.len() {
        return Ok(0.0);
    }
    // Summing ascending keeps the small far-tail terms from being absorbed.
    Ok(delta[k..].iter().rev().map(|d| d * d).sum::<f64>().sqrt())
}

/// Coefficient tail profile of a non-stationary linear process:
/// `h(k) = max_i (Σ_{|t| ≥ ⌊k/2⌋} f_{i,t}²)^{1/2}` for `k ≥ 2`, and
/// `h(0) = h(1) = 1` (row normalization makes the full sum one). Zero for
/// `k ≥ 2T + 2`, and `|σ_ij| ≤ 2 h(|i−j|)` always: of the two lags
/// reaching any shared innovation, one is at least `⌊|i−j|/2⌋`, and
/// Cauchy–Schwarz bounds each half-range sum by `h`.
pub fn h_profile(spec: &NonstationaryLinearSpec, k: usize) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    let cut = (k / 2) as isize;
    let t_max = spec.max_abs_lag() as isize;
    if cut > t_max {
        return 0.0;
    }
    let mut best = 0.0f64;
    for i in 0..spec.m() {
        let mut acc = 0.0;
        let mut t = cut;
        while t <= t_max {
            let (a, b) = (spec.coeff(i, t), spec.coeff(i, -t));
            acc += a * a;
            if t != 0 {
                acc += b * b;
            }
            t += 1;
        }
        best = best.max(acc);
    }
    best.sqrt()
}

// ---------------------------------------------------------------------------
// Moment summaries
// ---------------------------------------------------------------------------

/// Absolute moments `ℳ(p) = E|ε|^p` at each requested order (`+∞` where
/// divergent).
pub fn abs_moment_table(dist: InnovationDist, orders: &[f64]) -> Result<Vec<(f64, f64)>> {
    orders.iter().map(|&p| Ok((p, dist.abs_moment(p)?))).collect()
}

/// One exponential-moment evaluation `𝒦(t, p) = E exp(t|ε|^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub t: f64,
    pub p: f64,
    pub finite: bool,
    /// The value when finite; `None` when divergent.
    pub value: Option<f64>,
}

/// Evaluates `𝒦(t, p)` for `t ≥ 0`, `p > 0`: closed form where one exists,
/// adaptive quadrature otherwise.
pub fn exp_moment(dist: InnovationDist, t: f64, p: f64) -> Result<ExpMoment> {
    if !(t >= 0.0) || !(p > 0.0) {
        return Err(Error::invalid(format!(
            "exponential moment needs t >= 0 and p > 0, got t = {t}, p = {p}"
        )));
    }
    dist.validate()?;
    if !dist.exp_moment_finite(t, p) {
        return Ok(ExpMoment { t, p, finite: false, value: None });
    }
    if let Some(v) = dist.exp_moment_closed(t, p) {
        return Ok(ExpMoment { t, p, finite: true, value: Some(v) });
    }
    // Quadrature over the positive half-line (all supported continuous laws
    // are symmetric): 2 ∫_0^X e^{t x^p} f(x) dx with X past both the support
    // and the point where the integrand is negligible.
    let integrand = |x: f64| (t * x.powf(p)).exp() * dist.pdf(x).expect("continuous law");
    let upper = match dist {
        InnovationDist::StandardizedUniform => 3f64.sqrt(),
        InnovationDist::StandardNormal => {
            // Find X with t·X^p − X²/2 < −80: the remaining tail mass is
            // below e^{−80} relative to the bulk.
            let mut x = 8.0f64;
            while t * x.powf(p) - 0.5 * x * x > -80.0 {
                x *= 1.5;
                if x > 1e6 {
                    return Err(Error::invalid(format!(
                        "quadrature cutoff not found for t = {t}, p = {p}"
                    )));
                }
            }
            x
        }
        InnovationDist::StandardizedStudentT { .. } => {
            // Only reachable with t = 0, handled by the closed form above.
            unreachable!("polynomial tails diverge for every t > 0")
        }
        InnovationDist::Rademacher => unreachable!("closed form always available"),
    };
    let value = 2.0 * adaptive_simpson(&integrand, 0.0, upper, 1e-11, 40);
    Ok(ExpMoment { t, p, finite: true, value: Some(value) })
}

/// Standard adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        m: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let left = simpson(f, a, lm, m);
        let right = simpson(f, m, rm, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, lm, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, rm, b, right, tol / 2.0, depth - 1)
        }
    }
    let m = (a + b) / 2.0;
    recurse(f, a, m, b, simpson(f, a, m, b), tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{
        gen_iid, long_memory_coeffs, GeneratorSpec, LongMemoryVariant,
    };
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iid_normal(n: usize, m: usize, seed: u64) -> DataMatrix {
        gen_iid(n, m, InnovationDist::StandardNormal, seed).unwrap()
    }

    // -- product correlations --------------------------------------------------

    /// One-pass raw-moment oracle for the correlation of two product
    /// columns — a different accumulation route from the implementation.
    fn oracle_product_corr(x: &DataMatrix, p1: (usize, usize), p2: (usize, usize)) -> f64 {
        let n = x.n() as f64;
        let mean = |c: usize| x.column_mean(c);
        let (m1a, m1b, m2a, m2b) = (mean(p1.0), mean(p1.1), mean(p2.0), mean(p2.1));
        let (mut su, mut sv, mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..x.n() {
            let u = (x.get(k, p1.0) - m1a) * (x.get(k, p1.1) - m1b);
            let v = (x.get(k, p2.0) - m2a) * (x.get(k, p2.1) - m2b);
            su += u;
            sv += v;
            suu += u * u;
            svv += v * v;
            suv += u * v;
        }
        let cov = suv / n - (su / n) * (sv / n);
        let vu = suu / n - (su / n) * (su / n);
        let vv = svv / n - (sv / n) * (sv / n);
        cov / (vu * vv).sqrt()
    }

    #[test]
    fn product_correlations_match_raw_moment_oracle() {
        let x = iid_normal(60, 4, 11);
        let pc = product_correlations(&x, 2000).unwrap();
        assert_eq!(pc.s(), 10);
        for a in 0..pc.s() {
            assert_eq!(pc.r(a, a), 1.0);
            for b in 0..pc.s() {
                let oracle = oracle_product_corr(&x, pc.pairs()[a], pc.pairs()[b]);
                assert_relative_eq!(pc.r(a, b), oracle, max_relative = 1e-9, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn product_tau_matches_pair_estimator() {
        let x = iid_normal(40, 5, 3);
        let pc = product_correlations(&x, 2000).unwrap();
        for (a, &(i, j)) in pc.pairs().iter().enumerate() {
            assert_relative_eq!(
                pc.tau(a),
                crate::core_stats::tau_hat_pair(&x, i, j).unwrap(),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            pc.tau_min(),
            pc.pairs()
                .iter()
                .map(|&(i, j)| crate::core_stats::tau_hat_pair(&x, i, j).unwrap())
                .fold(f64::INFINITY, f64::min),
            max_relative = 1e-12
        );
    }

    #[test]
    fn pair_cap_is_enforced() {
        let x = iid_normal(30, 10, 1);
        let err = product_correlations(&x, 54).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { requested: 55, cap: 54, .. }), "{err:?}");
        assert!(product_correlations(&x, 55).is_ok());
    }

    #[test]
    fn constant_column_degenerates() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 3.0], vec![1.0, 4.0]];
        let x = DataMatrix::from_rows(&rows).unwrap();
        let err = product_correlations(&x, 2000).unwrap_err();
        assert!(matches!(err, Error::DegenerateVariance { i: 0, j: 0, .. }), "{err:?}");
    }

    /// Exhaustive γ(b) oracle: full sort of each row's off-self column.
    fn oracle_gamma(pc: &ProductCorrelations, b: usize) -> f64 {
        let s = pc.s();
        let mut best = 0.0f64;
        for a in 0..s {
            let mut row: Vec<f64> =
                (0..s).filter(|&o| o != a).map(|o| pc.r(a, o).abs()).collect();
            row.sort_by(|x, y| y.total_cmp(x));
            best = best.max(row[b - 1]);
        }
        best
    }

    #[test]
    fn gamma_matches_exhaustive_sort() {
        // Correlated columns so the profile is not flat noise.
        let spec = GeneratorSpec::StationaryLinear {
            coeffs: crate::processes::CoeffSource::Explicit { coeffs: vec![1.0, 0.7, 0.4] },
            innovations: InnovationDist::StandardizedUniform,
        };
        let x = spec.generate(80, 4, 19).unwrap();
        let pc = product_correlations(&x, 2000).unwrap();
        for b in 1..pc.s() {
            assert_eq!(pc.gamma(b).unwrap(), oracle_gamma(&pc, b), "b = {b}");
        }
        assert!(pc.gamma(0).is_err());
        assert!(pc.gamma(pc.s()).is_err());
    }

    #[test]
    fn gamma_is_nonincreasing_in_b() {
        let x = iid_normal(50, 5, 23);
        let pc = product_correlations(&x, 2000).unwrap();
        let vals: Vec<f64> = (1..pc.s()).map(|b| pc.gamma(b).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{vals:?}");
        }
    }

    #[test]
    fn g_count_on_iid_data_is_one_at_high_threshold() {
        let x = iid_normal(500, 6, 31);
        let pc = product_correlations(&x, 2000).unwrap();
        // Only the self-correlation survives a 0.9 threshold on iid data.
        assert_eq!(pc.g_count(0.9), 1);
        // Every column beats a zero threshold everywhere... except exact
        // zeros, so just bound it.
        assert!(pc.g_count(0.0) >= 1);
        assert_eq!(pc.g_count(1.0), 0); // strict inequality excludes self
    }

    #[test]
    fn cov_sq_sum_bounds() {
        let x = iid_normal(100, 5, 7);
        let pc = product_correlations(&x, 2000).unwrap();
        let s = pc.s() as f64;
        let v = pc.cov_sq_sum();
        assert!(v >= s, "diagonal alone contributes s: {v}");
        assert!(v <= s * s + 1e-9);
    }

    #[test]
    fn condition_report_on_iid_data() {
        let x = iid_normal(400, 6, 47);
        let rep = condition_report(&x, 2000).unwrap();
        assert_eq!((rep.n, rep.m, rep.s), (400, 6, 21));
        assert!(rep.tau_min > 0.5 && rep.tau_min < 3.0, "iid normal τ ≈ 1..2: {}", rep.tau_min);
        assert!(rep.corr_max < 0.25, "iid columns: {}", rep.corr_max);
        assert!(rep.kappa4_pooled.abs() < 0.8, "normal kurtosis: {}", rep.kappa4_pooled);
        assert_eq!(rep.gamma.first().map(|g| g.b), Some(1));
        // γ ladder non-increasing.
        for w in rep.gamma.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-15);
        }
        assert_eq!(rep.g_counts.iter().find(|g| g.threshold == 0.9).unwrap().count, 1);
        let json = serde_json::to_string(&rep).unwrap();
        let back: ConditionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(rep, back);
    }

    // -- model-driven profiles ---------------------------------------------

    #[test]
    fn physical_dep_uses_the_difference_norm() {
        let spec =
            StationaryLinearSpec::new(&[3.0, 4.0], InnovationDist::Rademacher).unwrap();
        let d4 = physical_dep_linear(&spec, 4).unwrap();
        // ‖ε−ε′‖₄ = 8^{1/4} for Rademacher; coefficients normalize to (.6, .8).
        let norm4 = 8f64.powf(0.25);
        assert_relative_eq!(norm4, 1.681_792_830_507_429, max_relative = 1e-13);
        assert_relative_eq!(d4[0], 0.6 * norm4, max_relative = 1e-13);
        assert_relative_eq!(d4[1], 0.8 * norm4, max_relative = 1e-13);
        let d2 = physical_dep_linear(&spec, 2).unwrap();
        assert_relative_eq!(d2[1], 0.8 * std::f64::consts::SQRT_2, max_relative = 1e-13);
        assert!(physical_dep_linear(&spec, 3).is_err());
    }

    #[test]
    fn psi_tail_frozen_boundary_log_values() {
        let a = long_memory_coeffs(0.75, 10_000, LongMemoryVariant::BoundaryLog).unwrap();
        let spec = StationaryLinearSpec::new(&a, InnovationDist::StandardNormal).unwrap();
        let expect = [
            (10usize, 0.258_543_411_907_306_44),
            (100, 0.167_003_365_174_187_85),
            (1000, 0.110_652_375_696_251_95),
        ];
        let mut prev = f64::INFINITY;
        for (k, frozen) in expect {
            let v = psi_tail(&spec, 2, k).unwrap() * (k as f64).ln();
            assert_relative_eq!(v, frozen, max_relative = 1e-10);
            assert!(v < prev, "Ψ₂(k)·log k must decrease along this menu");
            prev = v;
        }
    }

    #[test]
    fn psi_tail_edges() {
        let spec =
            StationaryLinearSpec::new(&[0.6, 0.8], InnovationDist::StandardNormal).unwrap();
        // Ψ₂(0)² = Σ δ² = 2 Σ a² = 2.
        assert_relative_eq!(
            psi_tail(&spec, 2, 0).unwrap(),
            std::f64::consts::SQRT_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            psi_tail(&spec, 2, 1).unwrap(),
            0.8 * std::f64::consts::SQRT_2,
            max_relative = 1e-14
        );
        assert_eq!(psi_tail(&spec, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn h_profile_endpoints_and_support() {
        let rows = vec![vec![0.5, 0.5, 0.5, 0.5, 0.5]; 3]; // T = 2, normalized
        let spec = NonstationaryLinearSpec::new(rows, InnovationDist::StandardNormal).unwrap();
        assert_eq!(h_profile(&spec, 0), 1.0);
        assert_eq!(h_profile(&spec, 1), 1.0);
        // k = 2, 3 → cut 1: four of five (normalized) coefficients remain.
        let f = 1.0 / 5f64.sqrt();
        assert_relative_eq!(h_profile(&spec, 2), 2.0 * f, max_relative = 1e-13);
        assert_relative_eq!(h_profile(&spec, 3), 2.0 * f, max_relative = 1e-13);
        // k = 4, 5 → cut 2: two remain.
        assert_relative_eq!(h_profile(&spec, 4), std::f64::consts::SQRT_2 * f, max_relative = 1e-13);
        // k ≥ 2T + 2 = 6 → nothing.
        assert_eq!(h_profile(&spec, 6), 0.0);
        assert_eq!(h_profile(&spec, 60), 0.0);
    }

    #[test]
    fn h_profile_bounds_the_covariance() {
        for seed in 0..15u64 {
            let mut rng = rng_from_seed(seed);
            let rows: Vec<Vec<f64>> =
                (0..7).map(|_| (0..7).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let spec =
                NonstationaryLinearSpec::new(rows, InnovationDist::StandardNormal).unwrap();
            for i in 0..7usize {
                for j in 0..7usize {
                    let bound = 2.0 * h_profile(&spec, i.abs_diff(j));
                    let sig = spec.sigma(i, j).abs();
                    assert!(
                        sig <= bound + 1e-12,
                        "seed {seed}: |σ({i},{j})| = {sig} > 2h = {bound}"
                    );
                }
            }
        }
    }

    // -- moments ---------------------------------------------------------------

    #[test]
    fn moment_table_collects_closed_forms() {
        let table =
            abs_moment_table(InnovationDist::StandardNormal, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(table[0].1, (2.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-13);
        assert_relative_eq!(table[1].1, 1.0, max_relative = 1e-13);
        assert_relative_eq!(table[3].1, 3.0, max_relative = 1e-13);
    }

    #[test]
    fn exp_moment_gaussian_closed_form_and_quadrature_agree() {
        // Closed form at p = 2 ...
        let closed = exp_moment(InnovationDist::StandardNormal, 0.3, 2.0).unwrap();
        assert_relative_eq!(closed.value.unwrap(), 1.0 / 0.4f64.sqrt(), max_relative = 1e-13);
        // ... and the quadrature path at p just below 2 converges to it.
        let quad = exp_moment(InnovationDist::StandardNormal, 0.3, 1.999_999).unwrap();
        assert_relative_eq!(quad.value.unwrap(), closed.value.unwrap(), max_relative = 1e-4);
        // p = 1 against the exact E e^{t|Z|} = 2 e^{t²/2} Φ̄(−t).
        let p1 = exp_moment(InnovationDist::StandardNormal, 0.7, 1.0).unwrap();
        let exact = 2.0 * (0.7f64 * 0.7 / 2.0).exp() * crate::limit_oracles::normal_upper_tail(-0.7);
        assert_relative_eq!(p1.value.unwrap(), exact, max_relative = 1e-9);
    }

    #[test]
    fn exp_moment_uniform_matches_series() {
        // E e^{tU²} = Σ_k t^k 3^k / ((2k+1) k!) for U uniform on [−√3, √3].
        let t = 0.8;
        let mut series = 0.0;
        let mut term = 1.0; // t^k 3^k / k!
        for k in 0..200 {
            series += term / (2 * k + 1) as f64;
            term *= t * 3.0 / (k + 1) as f64;
        }
        let quad = exp_moment(InnovationDist::StandardizedUniform, t, 2.0).unwrap();
        assert_relative_eq!(quad.value.unwrap(), series, max_relative = 1e-9);
    }

    #[test]
    fn exp_moment_finiteness_flags() {
        let inf = exp_moment(InnovationDist::StandardizedStudentT { df: 10.0 }, 0.01, 0.5).unwrap();
        assert!(!inf.finite);
        assert_eq!(inf.value, None);
        let at_zero = exp_moment(InnovationDist::StandardizedStudentT { df: 10.0 }, 0.0, 2.0).unwrap();
        assert_eq!(at_zero.value, Some(1.0));
        let gauss_edge = exp_moment(InnovationDist::StandardNormal, 0.5, 2.0).unwrap();
        assert!(!gauss_edge.finite);
        let rad = exp_moment(InnovationDist::Rademacher, 2.0, 6.0).unwrap();
        assert_relative_eq!(rad.value.unwrap(), 2f64.exp(), max_relative = 1e-14);
        assert!(exp_moment(InnovationDist::StandardNormal, -0.1, 2.0).is_err());
        assert!(exp_moment(InnovationDist::StandardNormal, 0.1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn psi_tail_is_nonincreasing_in_k(seed in 0u64..20) {
            let mut rng = rng_from_seed(seed);
            let coeffs: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assume!(coeffs.iter().map(|a| a * a).sum::<f64>() > 1e-6);
            let spec = StationaryLinearSpec::new(&coeffs, InnovationDist::StandardNormal).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..14 {
                let v = psi_tail(&spec, 2, k).unwrap();
                prop_assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }
}
