//! Summary statistics and the two-sample tests used to compare grid cells.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn two_sided_p(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * n.cdf(-z.abs())).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    /// Standardized statistic; positive when the first sample is larger.
    pub z: f64,
    pub p_value: f64,
}

/// Pooled two-proportion z-test of `successes_a / n_a` against
/// `successes_b / n_b`. Degenerate pools (all successes or all failures on
/// both sides) give z = 0, p = 1.
pub fn two_proportion_z(successes_a: usize, n_a: usize, successes_b: usize, n_b: usize) -> TestResult {
    let (na, nb) = (n_a as f64, n_b as f64);
    let pa = successes_a as f64 / na;
    let pb = successes_b as f64 / nb;
    let pooled = (successes_a + successes_b) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return TestResult { z: 0.0, p_value: 1.0 };
    }
    let z = (pa - pb) / se;
    TestResult {
        z,
        p_value: two_sided_p(z),
    }
}

/// Wilcoxon rank-sum (Mann-Whitney U) test with the normal approximation
/// and tie correction. z > 0 when `a` tends to be larger than `b`.
pub fn rank_sum(a: &[f64], b: &[f64]) -> TestResult {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return TestResult { z: 0.0, p_value: 1.0 };
    }
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = pooled.len();
    let mut rank_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_a += pooled[i..=j].iter().filter(|x| x.1).count() as f64 * avg;
        i = j + 1;
    }
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_a - f1 * (f1 + 1.0) / 2.0;
    let mu = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var <= 0.0 {
        return TestResult { z: 0.0, p_value: 1.0 };
    }
    let z = (u - mu) / var.sqrt();
    TestResult {
        z,
        p_value: two_sided_p(z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!((std_dev(&xs) - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(std_dev(&[7.0]), 0.0);
    }

    #[test]
    fn two_proportion_hand_computed() {
        // pooled 0.7, se = sqrt(0.7 * 0.3 * 0.02) = 0.0648074..., z = 0.4 / se
        let r = two_proportion_z(90, 100, 50, 100);
        assert!((r.z - 6.172_133_998).abs() < 1e-6, "{}", r.z);
        assert!(r.p_value < 1e-8);
        let same = two_proportion_z(40, 100, 40, 100);
        assert_eq!(same.z, 0.0);
        assert!((same.p_value - 1.0).abs() < 1e-12);
        assert_eq!(two_proportion_z(100, 100, 100, 100), TestResult { z: 0.0, p_value: 1.0 });
    }

    #[test]
    fn rank_sum_small_sample() {
        // U for a = {1,2,3}, b = {4,5,6} is 0; mu = 4.5, var = 9*7/12 = 5.25
        let r = rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert!((r.z - (-4.5 / 5.25f64.sqrt())).abs() < 1e-12);
        let same = rank_sum(&[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0]);
        assert!(same.z.abs() < 1e-12);
        assert!((same.p_value - 1.0).abs() < 1e-12);
        assert_eq!(rank_sum(&[3.0; 4], &[3.0; 5]).p_value, 1.0);
    }

    #[test]
    fn rank_sum_matches_brute_force_u() {
        let a = [3.0, 7.0, 7.0, 10.0, 1.0];
        let b = [7.0, 2.0, 9.0, 4.0];
        let u: f64 = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }))
            .sum();
        // ties: three 7s -> 27 - 3 = 24
        let n: f64 = 9.0;
        let var = 20.0 / 12.0 * ((n + 1.0) - 24.0 / (n * (n - 1.0)));
        let r = rank_sum(&a, &b);
        assert!((r.z - (u - 10.0) / var.sqrt()).abs() < 1e-12);
    }
}
