//! Paired Wilcoxon signed-rank test.
//!
//! Zero differences are discarded, tied magnitudes share midranks. Up to
//! [`EXACT_MAX_N`] non-zero pairs the null distribution of W⁺ is computed
//! exactly by dynamic programming over doubled (integer) ranks; beyond that
//! a tie-corrected, continuity-corrected normal approximation is used.

use std::fmt;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest effective sample size tested with the exact null distribution.
pub const EXACT_MAX_N: usize = 20;
/// Largest effective sample size the exact DP accepts when forced.
const EXACT_HARD_LIMIT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

impl fmt::Display for WilcoxonMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::NormalApprox => "normal_approx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    pub n_input: usize,
    pub n_effective: usize,
    /// Sum of (mid)ranks of the positive differences `b − a`.
    pub w_plus: f64,
    pub p_two_sided: f64,
    pub method: WilcoxonMethod,
}

/// Midranks of `|d|` (ascending, 1-based), doubled so they are integers.
pub fn doubled_midranks(magnitudes: &[f64]) -> Vec<u64> {
    let n = magnitudes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]));
    let mut ranks = vec![0u64; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && magnitudes[order[end + 1]] == magnitudes[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end+1 share (start + 1 + end + 1) / 2
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Sizes of the groups of tied magnitudes.
fn tie_groups(magnitudes: &[f64]) -> Vec<usize> {
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        groups.push(j - i + 1);
        i = j + 1;
    }
    groups
}

/// Number of sign assignments giving each value of `2·W⁺`, indexed by that value.
pub fn exact_null_counts(doubled_ranks: &[u64]) -> Vec<u128> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u128; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    counts
}

fn exact_p(doubled_ranks: &[u64], w_plus_doubled: u64) -> f64 {
    let counts = exact_null_counts(doubled_ranks);
    let w = w_plus_doubled as usize;
    let lower: u128 = counts[..=w].iter().sum();
    let upper: u128 = counts[w..].iter().sum();
    let total = 1u128 << doubled_ranks.len();
    let tail = 2 * lower.min(upper);
    if tail >= total {
        1.0
    } else {
        tail as f64 / total as f64
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_p(n: usize, w_plus: f64, ties: &[usize]) -> f64 {
    let n = n as f64;
    let mu = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    let diff = w_plus - mu;
    let z = if diff == 0.0 {
        0.0
    } else {
        (diff - 0.5 * diff.signum()) / var.sqrt()
    };
    (2.0 * normal_cdf(-z.abs())).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Two-sided paired test on differences `b − a`, choosing the method by sample size.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(pairs, None)
}

/// As [`wilcoxon_signed_rank`], optionally forcing the method.
pub fn wilcoxon_signed_rank_with(
    pairs: &[(f64, f64)],
    method: Option<WilcoxonMethod>,
) -> Result<WilcoxonResult> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData);
    }
    if pairs.iter().any(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::InvalidParams("paired values must be finite".into()));
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| b - a)
        .filter(|&d| d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::DegenerateSample);
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&magnitudes);
    let w_plus_doubled: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus = w_plus_doubled as f64 / 2.0;

    let method = method.unwrap_or(if n <= EXACT_MAX_N {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApprox
    });
    let p_two_sided = match method {
        WilcoxonMethod::Exact => {
            if n > EXACT_HARD_LIMIT {
                return Err(Error::InvalidParams(format!(
                    "exact test limited to {EXACT_HARD_LIMIT} pairs, got {n}"
                )));
            }
            exact_p(&ranks, w_plus_doubled)
        }
        WilcoxonMethod::NormalApprox => normal_p(n, w_plus, &tie_groups(&magnitudes)),
    };

    Ok(WilcoxonResult {
        n_input: pairs.len(),
        n_effective: n,
        w_plus,
        p_two_sided,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn five_positive_pairs() {
        let pairs: Vec<(f64, f64)> = (1..=5).map(|b| (0.0, b as f64)).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.w_plus, 15.0);
        assert_eq!(r.p_two_sided, 0.0625);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!((r.n_input, r.n_effective), (5, 5));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            wilcoxon_signed_rank(&[]),
            Err(Error::InsufficientData)
        ));
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0), (0.3, 0.3)]),
            Err(Error::DegenerateSample)
        ));
        assert!(wilcoxon_signed_rank(&[(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn zeros_are_dropped_and_ties_share_midranks() {
        let pairs = [(0.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.0, 2.0)];
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.n_effective, 3);
        // |d| = 1, 1, 2 → ranks 1.5, 1.5, 3
        assert_eq!(r.w_plus, 4.5);
        assert_eq!(doubled_midranks(&[1.0, 1.0, 2.0]), vec![3, 3, 6]);
    }

    #[test]
    fn null_distribution_sums_to_one() {
        for ranks in [vec![2u64, 4, 6, 8], vec![3, 3, 6, 8, 10, 10]] {
            let c = exact_null_counts(&ranks);
            let total: u128 = c.iter().sum();
            let p: f64 = c.iter().map(|&x| x as f64 / total as f64).sum();
            assert_eq!(total, 1u128 << ranks.len());
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn normal_cdf_reference_values() {
        // 30-digit reference values
        let table = [
            (-8.0, 6.2209605742717841e-16),
            (-7.5, 3.1908916729108962e-14),
            (-7.0, 1.279812543885835e-12),
            (-6.5, 4.0160005838591178e-11),
            (-6.0, 9.8658764503769814e-10),
            (-5.5, 1.8989562465887719e-8),
            (-5.0, 2.8665157187919391e-7),
            (-4.5, 3.3976731247300604e-6),
            (-4.0, 3.1671241833119921e-5),
            (-3.5, 0.00023262907903552504),
            (-3.0, 0.0013498980316300945),
            (-2.5, 0.0062096653257761352),
            (-2.0, 0.022750131948179207),
            (-1.5, 0.066807201268858066),
            (-1.0, 0.15865525393145705),
            (-0.5, 0.3085375387259869),
            (0.0, 0.5),
        ];
        for (z, want) in table {
            let got = normal_cdf(z);
            assert!((got - want).abs() < 1e-10, "z={z}: {got:e} vs {want:e}");
            assert!((got - want).abs() <= 1e-9 * want, "z={z}: relative error");
            assert!((normal_cdf(-z) - (1.0 - want)).abs() < 1e-10);
        }
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let mut rng = SplitMix64::new(3);
        let pairs: Vec<(f64, f64)> = (0..35)
            .map(|_| (rng.next_f64(), rng.next_f64() + 0.3))
            .collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        assert!(r.p_two_sided < 0.01);
        assert!(r.p_two_sided > 0.0);
    }

    /// All 2ⁿ sign patterns, counting doubled W⁺ directly.
    fn enumerate_p(doubled: &[u64], observed: u64) -> f64 {
        let n = doubled.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: u64 = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| doubled[i])
                .sum();
            le += (w <= observed) as u64;
            ge += (w >= observed) as u64;
        }
        (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(
            raw in prop::collection::vec(-4i32..=4, 1..=12),
            scale in 0.1f64..10.0,
        ) {
            let pairs: Vec<(f64, f64)> = raw.iter().map(|&d| (0.5, 0.5 + d as f64 * scale)).collect();
            match wilcoxon_signed_rank(&pairs) {
                Err(Error::DegenerateSample) => prop_assert!(raw.iter().all(|&d| d == 0)),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
                Ok(r) => {
                    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| b - a).filter(|d| *d != 0.0).collect();
                    let ranks = doubled_midranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
                    let w2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
                    prop_assert_eq!(r.p_two_sided, enumerate_p(&ranks, w2));
                    prop_assert!(r.p_two_sided > 0.0 && r.p_two_sided <= 1.0);
                    let max_w = (r.n_effective * (r.n_effective + 1)) as f64 / 2.0;
                    prop_assert!((0.0..=max_w).contains(&r.w_plus));

                    let flipped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
                    let f = wilcoxon_signed_rank(&flipped).unwrap();
                    prop_assert_eq!(f.p_two_sided, r.p_two_sided);
                    prop_assert_eq!(f.w_plus, max_w - r.w_plus);
                }
            }
        }

        #[test]
        fn p_is_scale_invariant(raw in prop::collection::vec(-50i32..50, 1..30), k in 0.01f64..100.0) {
            let base: Vec<(f64, f64)> = raw.iter().map(|&d| (0.0, d as f64)).collect();
            let scaled: Vec<(f64, f64)> = raw.iter().map(|&d| (0.0, d as f64 * k)).collect();
            if let Ok(a) = wilcoxon_signed_rank(&base) {
                let b = wilcoxon_signed_rank(&scaled).unwrap();
                prop_assert_eq!(a.w_plus, b.w_plus);
                prop_assert!((a.p_two_sided - b.p_two_sided).abs() < 1e-15);
            }
        }
    }
}
