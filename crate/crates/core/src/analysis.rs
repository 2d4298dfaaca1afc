//! Rank-based two-arm analysis: Mann-Whitney-Wilcoxon test, probabilistic
//! index and difference in medians, plus pooling across imputations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::statcore::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub p_value: f64,
    /// Rank sum of arm 1 (mid-ranks for ties).
    pub rank_sum_w: f64,
    /// `P(Y¹ > Y⁰) + ½ P(Y¹ = Y⁰)`.
    pub theta_hat: f64,
    /// `median(y1) - median(y0)`.
    pub median_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub continuity_correction: bool,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self {
            continuity_correction: true,
        }
    }
}

/// Mid-ranks of the pooled sample, doubled so they are integers, and the
/// tie-correction term `Σ (t³ - t)` over tie groups.
fn doubled_midranks(y0: &[f64], y1: &[f64]) -> (Vec<u64>, f64) {
    let mut pooled: Vec<(f64, usize)> = y0.iter().chain(y1).copied().zip(0..).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0.total_cmp(&pooled[i].0).is_eq() {
            j += 1;
        }
        // Positions i+1..=j share the rank (i + 1 + j) / 2.
        let r2 = (i + 1 + j) as u64;
        for &(_, idx) in &pooled[i..j] {
            ranks[idx] = r2;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Twice the Mann-Whitney U of arm 1, exact in integer arithmetic.
fn doubled_u1(ranks: &[u64], n0: usize, n1: usize) -> u64 {
    let w2: u64 = ranks[n0..].iter().sum();
    w2 - (n1 * (n1 + 1)) as u64
}

pub fn prob_index(y0: &[f64], y1: &[f64]) -> Result<f64> {
    if y0.is_empty() || y1.is_empty() {
        return Err(invalid!("probabilistic index needs two non-empty samples"));
    }
    let (ranks, _) = doubled_midranks(y0, y1);
    let u2 = doubled_u1(&ranks, y0.len(), y1.len());
    Ok(u2 as f64 / (2.0 * y0.len() as f64 * y1.len() as f64))
}

pub fn median_diff(y0: &[f64], y1: &[f64]) -> Result<f64> {
    match (median(y0), median(y1)) {
        (Some(m0), Some(m1)) => Ok(m1 - m0),
        _ => Err(invalid!("median difference needs two non-empty samples")),
    }
}

pub fn wilcoxon_test(y0: &[f64], y1: &[f64]) -> Result<TestResult> {
    wilcoxon_test_with(y0, y1, WilcoxonOptions::default())
}

/// Two-sided Mann-Whitney-Wilcoxon test by the normal approximation with
/// mid-ranks and tie-corrected variance.
pub fn wilcoxon_test_with(y0: &[f64], y1: &[f64], opts: WilcoxonOptions) -> Result<TestResult> {
    let (n0, n1) = (y0.len(), y1.len());
    if n0 < 2 || n1 < 2 {
        return Err(invalid!("Wilcoxon test needs at least two values per arm ({n0}, {n1})"));
    }
    let (ranks, ties) = doubled_midranks(y0, y1);
    let u2 = doubled_u1(&ranks, n0, n1);
    let (a, b) = (n0 as f64, n1 as f64);
    let n = a + b;
    let u1 = u2 as f64 / 2.0;
    let var = a * b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let mut dev = (u1 - a * b / 2.0).abs();
        if opts.continuity_correction {
            dev = (dev - 0.5).max(0.0);
        }
        let z = dev / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(TestResult {
        p_value,
        rank_sum_w: ranks[n0..].iter().sum::<u64>() as f64 / 2.0,
        theta_hat: u1 / (a * b),
        median_diff: median_diff(y0, y1)?,
    })
}

/// Median of the per-imputation p-values.
pub fn pool_median_p(p_values: &[f64]) -> Result<f64> {
    median(p_values).ok_or_else(|| invalid!("no p-values to pool"))
}

/// Arithmetic means of the per-imputation estimates.
pub fn pool_estimates(theta_hats: &[f64], median_diffs: &[f64]) -> Result<(f64, f64)> {
    match (mean(theta_hats), mean(median_diffs)) {
        (Some(t), Some(m)) => Ok((t, m)),
        _ => Err(invalid!("no estimates to pool")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_theta(y0: &[f64], y1: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in y1 {
            for b in y0 {
                s += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        s / (y0.len() * y1.len()) as f64
    }

    #[test]
    fn identical_samples() {
        let y = [3.0, 1.0, 4.0, 1.0, 5.0];
        let r = wilcoxon_test(&y, &y).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.theta_hat, 0.5);
        assert_eq!(r.median_diff, 0.0);
    }

    #[test]
    fn complete_separation_three_by_three() {
        let r = wilcoxon_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.theta_hat, 1.0);
        assert_eq!(r.rank_sum_w, 15.0);
        // Exact two-sided probability is 2 / C(6,3) = 0.1; the corrected
        // normal approximation gives 0.0809.
        assert!((r.p_value - 0.1).abs() < 0.05, "{}", r.p_value);
        assert!((r.p_value - 0.080_856).abs() < 1e-5, "{}", r.p_value);
    }

    #[test]
    fn tied_theta_matches_pairwise_count() {
        let y0 = [0.0, 0.0, 86.0, 86.0];
        let y1 = [0.0, 86.0, 86.0, 86.0];
        // y1=0 vs y0: two ties -> 1; each y1=86: two wins + two ties -> 3.
        assert_eq!(brute_theta(&y0, &y1), (1.0 + 3.0 * 3.0) / 16.0);
        assert_eq!(prob_index(&y0, &y1).unwrap(), brute_theta(&y0, &y1));
        assert_eq!(wilcoxon_test(&y0, &y1).unwrap().theta_hat, 10.0 / 16.0);
    }

    #[test]
    fn all_values_identical_gives_p_one() {
        let r = wilcoxon_test(&[7.0; 5], &[7.0; 3]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_small_and_empty_inputs() {
        assert!(wilcoxon_test(&[1.0], &[2.0, 3.0]).is_err());
        assert!(prob_index(&[], &[1.0]).is_err());
        assert!(median_diff(&[1.0], &[]).is_err());
        assert!(pool_median_p(&[]).is_err());
    }

    #[test]
    fn prob_index_examples() {
        assert_eq!(prob_index(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(prob_index(&[1.0, 2.0], &[3.0, 9.0]).unwrap(), 1.0);
    }

    #[test]
    fn median_diff_examples() {
        assert_eq!(median_diff(&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0]).unwrap(), 2.0);
        assert_eq!(median_diff(&[1.0, 2.0, 3.0, 4.0], &[10.0]).unwrap(), 7.5);
    }

    #[test]
    fn pooling_examples() {
        assert_eq!(pool_median_p(&[0.01, 0.5, 0.9]).unwrap(), 0.5);
        assert_eq!(pool_median_p(&[0.04]).unwrap(), 0.04);
        assert_eq!(pool_median_p(&[0.8, 0.2, 0.6, 0.4]).unwrap(), 0.5);
        assert_eq!(pool_estimates(&[0.4, 0.6], &[2.0, 2.0]).unwrap(), (0.5, 2.0));
        assert_eq!(pool_estimates(&[0.7], &[-1.0]).unwrap(), (0.7, -1.0));
    }

    #[test]
    fn continuity_correction_is_optional() {
        let y0 = [1.0, 2.0, 3.0, 4.0];
        let y1 = [3.5, 5.0, 6.0, 7.0];
        let with = wilcoxon_test(&y0, &y1).unwrap().p_value;
        let without = wilcoxon_test_with(&y0, &y1, WilcoxonOptions { continuity_correction: false })
            .unwrap()
            .p_value;
        assert!(without < with);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sample() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec((0u32..=12).prop_map(f64::from), 2..25)
        }

        proptest! {
            #[test]
            fn prob_index_matches_brute_force(y0 in sample(), y1 in sample()) {
                prop_assert_eq!(prob_index(&y0, &y1).unwrap(), brute_theta(&y0, &y1));
            }

            #[test]
            fn prob_index_is_antisymmetric(y0 in sample(), y1 in sample()) {
                prop_assert_eq!(prob_index(&y0, &y1).unwrap() + prob_index(&y1, &y0).unwrap(), 1.0);
            }

            #[test]
            fn swapping_arms(y0 in sample(), y1 in sample()) {
                let a = wilcoxon_test(&y0, &y1).unwrap();
                let b = wilcoxon_test(&y1, &y0).unwrap();
                prop_assert_eq!(a.p_value, b.p_value);
                prop_assert!((a.theta_hat - (1.0 - b.theta_hat)).abs() < 1e-12);
                prop_assert_eq!(a.median_diff, -b.median_diff);
            }

            #[test]
            fn p_value_invariant_under_monotone_maps(y0 in sample(), y1 in sample()) {
                let f = |v: &Vec<f64>| v.iter().map(|x| (x * 0.3).exp() - 7.0).collect::<Vec<_>>();
                let a = wilcoxon_test(&y0, &y1).unwrap();
                let b = wilcoxon_test(&f(&y0), &f(&y1)).unwrap();
                prop_assert_eq!(a.p_value, b.p_value);
                prop_assert!((0.0..=1.0).contains(&a.p_value));
            }
        }
    }
}
