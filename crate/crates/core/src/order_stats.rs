//! Moments of order statistics of i.i.d. exponential random variables.
//!
//! For `Z_1, ..., Z_n` i.i.d. exponential with rate `r`, the `i`-th smallest
//! draw `Z_{i:n}` has
//!
//! ```text
//! E[Z_{i:n}]   = (H_n - H_{n-i}) / r
//! Var[Z_{i:n}] = (G_n - G_{n-i}) / r^2
//! ```
//!
//! where `H_j = sum_{v=1}^{j} 1/v` and `G_j = sum_{v=1}^{j} 1/v^2` are the
//! first- and second-order harmonic partial sums. Everything here is built on
//! those two sequences, computed by direct forward summation in double
//! precision: for indices up to 10^6 the accumulated error stays far below
//! the 1e-12 tolerances required of the closed forms.
//!
//! Shifted exponentials are not handled here. A deterministic offset shifts
//! every order statistic by the same constant, so callers add it themselves.

use crate::error::{Error, Result};

/// Precomputed harmonic partial sums `H_0..H_max` and `G_0..G_max`.
///
/// `H_0 = G_0 = 0` by convention, so queries that cover the whole sample
/// (`i = n`) need no special casing.
#[derive(Debug, Clone)]
pub struct HarmonicCache {
    h: Vec<f64>,
    g: Vec<f64>,
}

impl HarmonicCache {
    /// Builds the cache for indices `0..=max_index`.
    pub fn new(max_index: usize) -> Self {
        let mut h = Vec::with_capacity(max_index + 1);
        let mut g = Vec::with_capacity(max_index + 1);
        h.push(0.0);
        g.push(0.0);
        for i in 1..=max_index {
            let x = i as f64;
            h.push(h[i - 1] + 1.0 / x);
            g.push(g[i - 1] + 1.0 / (x * x));
        }
        Self { h, g }
    }

    pub fn max_index(&self) -> usize {
        self.h.len() - 1
    }

    /// First-order harmonic number `H_i`.
    pub fn harmonic(&self, i: usize) -> Result<f64> {
        self.h.get(i).copied().ok_or(Error::Capacity {
            index: i,
            max_index: self.max_index(),
        })
    }

    /// Second-order harmonic number `G_i`.
    pub fn harmonic2(&self, i: usize) -> Result<f64> {
        self.g.get(i).copied().ok_or(Error::Capacity {
            index: i,
            max_index: self.max_index(),
        })
    }

    /// Mean and variance of the `order`-th smallest of `sample_size` i.i.d.
    /// exponential draws with the given rate, looked up from the cache.
    pub fn exp_order_moments(
        &self,
        order: usize,
        sample_size: usize,
        rate: f64,
    ) -> Result<ExpOrderMoments> {
        check_order(order, sample_size, rate)?;
        let mean = (self.harmonic(sample_size)? - self.harmonic(sample_size - order)?) / rate;
        let variance =
            (self.harmonic2(sample_size)? - self.harmonic2(sample_size - order)?) / (rate * rate);
        Ok(ExpOrderMoments {
            mean,
            variance,
            order,
            sample_size,
            rate,
        })
    }
}

/// First two moments of one exponential order statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpOrderMoments {
    pub mean: f64,
    pub variance: f64,
    pub order: usize,
    pub sample_size: usize,
    pub rate: f64,
}

fn check_order(order: usize, sample_size: usize, rate: f64) -> Result<()> {
    if order < 1 || order > sample_size {
        return Err(Error::Domain(format!(
            "order statistic index must satisfy 1 <= i <= n, got i={order}, n={sample_size}"
        )));
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

/// `H_i` by direct forward summation. Bit-identical to the cached value
/// since the cache accumulates in the same order.
fn harmonic_direct(i: usize) -> f64 {
    let mut sum = 0.0;
    for j in 1..=i {
        sum += 1.0 / j as f64;
    }
    sum
}

fn harmonic2_direct(i: usize) -> f64 {
    let mut sum = 0.0;
    for j in 1..=i {
        let x = j as f64;
        sum += 1.0 / (x * x);
    }
    sum
}

/// `E[Z_{order:sample_size}] = (H_n - H_{n-i}) / rate`.
pub fn exp_order_mean(order: usize, sample_size: usize, rate: f64) -> Result<f64> {
    check_order(order, sample_size, rate)?;
    Ok((harmonic_direct(sample_size) - harmonic_direct(sample_size - order)) / rate)
}

/// `Var[Z_{order:sample_size}] = (G_n - G_{n-i}) / rate^2`.
pub fn exp_order_var(order: usize, sample_size: usize, rate: f64) -> Result<f64> {
    check_order(order, sample_size, rate)?;
    Ok((harmonic2_direct(sample_size) - harmonic2_direct(sample_size - order)) / (rate * rate))
}

/// Average of the means of the `k` smallest order statistics out of `m`,
/// in closed form:
///
/// ```text
/// (1/k) sum_{i=1}^{k} E[X_{i:m}] = (1/rate) * (1 - ((m-k)/k) (H_m - H_{m-k}))
/// ```
///
/// For `k = m` this is the population mean `1/rate`.
pub fn mean_order_prefix_avg(k: usize, m: usize, rate: f64) -> Result<f64> {
    check_order(k, m, rate)?;
    let hm = harmonic_direct(m);
    let hmk = harmonic_direct(m - k);
    Ok((1.0 - (m - k) as f64 / k as f64 * (hm - hmk)) / rate)
}

/// Both sides of the prefix-sum identity
/// `sum_{i=1}^{k} H_i = (k+1)(H_{k+1} - 1)`, exposed for verification.
pub fn harmonic_prefix_identity(k: usize) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::Domain(format!("k must be >= 1, got {k}")));
    }
    let mut h = 0.0;
    let mut lhs = 0.0;
    for i in 1..=k {
        h += 1.0 / i as f64;
        lhs += h;
    }
    let h_next = h + 1.0 / (k + 1) as f64;
    let rhs = (k + 1) as f64 * (h_next - 1.0);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI_SQ_OVER_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

    #[test]
    fn harmonic_known_values() {
        let cache = HarmonicCache::new(100);
        assert_eq!(cache.harmonic(0).unwrap(), 0.0);
        assert_eq!(cache.harmonic(1).unwrap(), 1.0);
        assert_eq!(cache.harmonic(2).unwrap(), 1.5);
        // Direct-summation value verified in extended precision.
        assert!((cache.harmonic(100).unwrap() - 5.187_377_517_639_62).abs() < 1e-12);
    }

    #[test]
    fn harmonic2_known_values() {
        let cache = HarmonicCache::new(10);
        assert_eq!(cache.harmonic2(0).unwrap(), 0.0);
        assert_eq!(cache.harmonic2(1).unwrap(), 1.0);
        assert!((harmonic2_direct(1_000_000) - PI_SQ_OVER_6).abs() < 1e-6);
    }

    #[test]
    fn harmonic_capacity_error() {
        let cache = HarmonicCache::new(10);
        assert_eq!(
            cache.harmonic(11),
            Err(Error::Capacity {
                index: 11,
                max_index: 10
            })
        );
        assert!(cache.harmonic2(200).is_err());
    }

    #[test]
    fn cache_increments_match_definition() {
        let cache = HarmonicCache::new(5000);
        for i in 1..=5000usize {
            let dh = cache.harmonic(i).unwrap() - cache.harmonic(i - 1).unwrap();
            let dg = cache.harmonic2(i).unwrap() - cache.harmonic2(i - 1).unwrap();
            let x = i as f64;
            assert!((dh - 1.0 / x).abs() < 1e-12, "H step at {i}");
            assert!((dg - 1.0 / (x * x)).abs() < 1e-12, "G step at {i}");
        }
    }

    #[test]
    fn cache_matches_direct_summation_bitwise() {
        let cache = HarmonicCache::new(1000);
        for i in [0usize, 1, 17, 100, 999, 1000] {
            assert_eq!(cache.harmonic(i).unwrap(), harmonic_direct(i));
            assert_eq!(cache.harmonic2(i).unwrap(), harmonic2_direct(i));
        }
    }

    #[test]
    fn exp_order_mean_examples() {
        assert_eq!(exp_order_mean(1, 1, 1.0).unwrap(), 1.0);
        // Minimum of n exponentials is exponential with rate n * r.
        assert!((exp_order_mean(1, 10, 2.0).unwrap() - 0.05).abs() < 1e-15);
        let expected = harmonic_direct(100) - harmonic_direct(21);
        assert_eq!(exp_order_mean(79, 100, 1.0).unwrap(), expected);
        // Maximum of n draws: H_n / r exactly.
        assert_eq!(
            exp_order_mean(50, 50, 1.0).unwrap(),
            harmonic_direct(50)
        );
    }

    #[test]
    fn exp_order_var_examples() {
        assert_eq!(exp_order_var(1, 1, 1.0).unwrap(), 1.0);
        assert!((exp_order_var(1, 10, 1.0).unwrap() - 0.01).abs() < 1e-15);
        let expected = harmonic2_direct(100) - harmonic2_direct(50);
        assert_eq!(exp_order_var(50, 100, 1.0).unwrap(), expected);
    }

    #[test]
    fn order_domain_errors() {
        assert!(exp_order_mean(0, 5, 1.0).is_err());
        assert!(exp_order_mean(6, 5, 1.0).is_err());
        assert!(exp_order_mean(1, 5, 0.0).is_err());
        assert!(exp_order_mean(1, 5, -1.0).is_err());
        assert!(exp_order_var(3, 2, 1.0).is_err());
        assert!(mean_order_prefix_avg(4, 3, 1.0).is_err());
    }

    #[test]
    fn prefix_avg_examples() {
        assert_eq!(mean_order_prefix_avg(1, 1, 1.0).unwrap(), 1.0);
        // k = m: the average over all order statistics is the population mean.
        for m in [1usize, 2, 7, 40] {
            let v = mean_order_prefix_avg(m, m, 2.5).unwrap();
            assert!((v - 1.0 / 2.5).abs() < 1e-15, "m={m}");
        }
        let brute = (exp_order_mean(1, 5, 1.0).unwrap()
            + exp_order_mean(2, 5, 1.0).unwrap()
            + exp_order_mean(3, 5, 1.0).unwrap())
            / 3.0;
        let closed = mean_order_prefix_avg(3, 5, 1.0).unwrap();
        assert!((closed - brute).abs() / brute < 1e-12);
    }

    #[test]
    fn prefix_avg_matches_brute_force_all_pairs_up_to_500() {
        let cache = HarmonicCache::new(500);
        for m in 1..=500usize {
            let hm = cache.harmonic(m).unwrap();
            let mut partial = 0.0;
            for k in 1..=m {
                partial += hm - cache.harmonic(m - k).unwrap();
                let brute = partial / k as f64;
                let closed = mean_order_prefix_avg(k, m, 1.0).unwrap();
                assert!(
                    (closed - brute).abs() <= 1e-10 * brute.abs(),
                    "k={k} m={m}: closed={closed} brute={brute}"
                );
            }
        }
    }

    #[test]
    fn prefix_identity_examples() {
        assert_eq!(harmonic_prefix_identity(1).unwrap(), (1.0, 1.0));
        let (lhs, rhs) = harmonic_prefix_identity(2).unwrap();
        assert!((lhs - 2.5).abs() < 1e-15 && (rhs - 2.5).abs() < 1e-15);
        let (lhs, rhs) = harmonic_prefix_identity(1000).unwrap();
        assert!((lhs - rhs).abs() / rhs < 1e-9);
        assert!(harmonic_prefix_identity(0).is_err());
    }

    #[test]
    fn prefix_identity_holds_up_to_1e5() {
        // Single pass over all k: running prefix sum against the closed form.
        let mut h = 0.0;
        let mut lhs = 0.0;
        for k in 1..=100_000usize {
            h += 1.0 / k as f64;
            lhs += h;
            let rhs = (k + 1) as f64 * (h + 1.0 / (k + 1) as f64 - 1.0);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs, "k={k}");
        }
    }

    #[test]
    fn cached_moments_agree_with_free_functions() {
        let cache = HarmonicCache::new(200);
        let m = cache.exp_order_moments(79, 100, 1.5).unwrap();
        assert_eq!(m.mean, exp_order_mean(79, 100, 1.5).unwrap());
        assert_eq!(m.variance, exp_order_var(79, 100, 1.5).unwrap());
        assert_eq!((m.order, m.sample_size, m.rate), (79, 100, 1.5));
        assert!(m.mean > 0.0 && m.variance > 0.0);
    }

    proptest! {
        #[test]
        fn mean_strictly_increasing_in_order(n in 1usize..300, rate in 0.01f64..100.0) {
            let mut prev = 0.0;
            for i in 1..=n {
                let v = exp_order_mean(i, n, rate).unwrap();
                prop_assert!(v > prev, "i={} n={}", i, n);
                prev = v;
            }
        }

        #[test]
        fn variance_positive_and_increasing_in_order(n in 1usize..200) {
            let mut prev = 0.0;
            for i in 1..=n {
                let v = exp_order_var(i, n, 1.0).unwrap();
                prop_assert!(v > prev);
                prev = v;
            }
        }
    }
}
