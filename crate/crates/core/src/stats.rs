//! Goodness-of-fit tests used by the verification suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    /// Whether the null hypothesis survives at significance `alpha`.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson chi-square test that `samples` are uniform on `[lo, hi)` over `bins` equal bins.
pub fn chi_square_uniform(samples: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Result<TestResult> {
    if bins < 2 || !(hi > lo) {
        return Err(domain(format!(
            "chi-square needs >= 2 bins on a non-empty range, got {bins} on [{lo}, {hi})"
        )));
    }
    let mut counts = vec![0u64; bins];
    let mut n = 0u64;
    let scale = bins as f64 / (hi - lo);
    for x in samples {
        if !(lo..hi).contains(&x) {
            return Err(domain(format!("sample {x} outside [{lo}, {hi})")));
        }
        counts[(((x - lo) * scale) as usize).min(bins - 1)] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(domain("chi-square needs samples"));
    }
    let expected = n as f64 / bins as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((bins - 1) as f64).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic,
        p_value: dist.sf(statistic),
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // theta-function form, fast for small lambda
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous `cdf`. Sorts `samples` in place.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(domain("KS test needs samples"));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample Kolmogorov-Smirnov test. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("KS test needs samples in both groups"));
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// Sample excess kurtosis, 0 for a normal law.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d2 = (x - mean).powi(2);
        (m2 + d2, m4 + d2 * d2)
    });
    (m4 / n) / (m2 / n).powi(2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_cdf;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kolmogorov_reference_values() {
        // scipy.special.kolmogorov
        assert_abs_diff_eq!(kolmogorov_sf(0.5), 0.963_945_243_664_875_4, epsilon = 1e-10);
        assert_abs_diff_eq!(kolmogorov_sf(1.0), 0.269_999_671_677_354_56, epsilon = 1e-10);
        assert_abs_diff_eq!(kolmogorov_sf(1.36), 0.049_485_876_755_377_88, epsilon = 1e-9);
        assert_abs_diff_eq!(kolmogorov_sf(1.95), 0.000_995_910_842_883_58, epsilon = 1e-9);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        // the two series agree where they meet
        let below = kolmogorov_sf(1.0 - 1e-12);
        assert_abs_diff_eq!(below, kolmogorov_sf(1.0), epsilon = 1e-10);
    }

    #[test]
    fn chi_square_accepts_uniform_and_rejects_skew() {
        let mut r = RngStream::new(3, 1);
        let xs: Vec<f64> = (0..100_000).map(|_| r.uniform()).collect();
        assert!(chi_square_uniform(xs.iter().copied(), 0.0, 1.0, 64)
            .unwrap()
            .accepts(1e-3));
        let skew = xs.iter().map(|x| x * x);
        assert!(!chi_square_uniform(skew, 0.0, 1.0, 64).unwrap().accepts(1e-3));
        assert!(chi_square_uniform([2.0], 0.0, 1.0, 64).is_err());
    }

    #[test]
    fn ks_one_sample_normal() {
        let mut r = RngStream::new(3, 2);
        let mut xs: Vec<f64> = (0..50_000).map(|_| r.standard_normal()).collect();
        assert!(ks_one_sample(&mut xs, std_normal_cdf).unwrap().accepts(1e-3));
        let mut shifted: Vec<f64> = xs.iter().map(|x| x + 0.05).collect();
        assert!(!ks_one_sample(&mut shifted, std_normal_cdf).unwrap().accepts(1e-3));
    }

    #[test]
    fn ks_two_sample_behaviour() {
        let mut r = RngStream::new(3, 3);
        let mut a: Vec<f64> = (0..40_000).map(|_| r.standard_normal()).collect();
        let mut b: Vec<f64> = (0..30_000).map(|_| r.standard_normal()).collect();
        assert!(ks_two_sample(&mut a, &mut b).unwrap().accepts(1e-3));
        let mut c: Vec<f64> = (0..30_000).map(|_| 1.1 * r.standard_normal()).collect();
        assert!(!ks_two_sample(&mut a, &mut c).unwrap().accepts(1e-3));
        let mut same = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut same).unwrap().statistic, 0.0);
    }

    #[test]
    fn kurtosis_of_normal_and_uniform() {
        let mut r = RngStream::new(3, 4);
        let xs: Vec<f64> = (0..400_000).map(|_| r.standard_normal()).collect();
        assert_abs_diff_eq!(excess_kurtosis(&xs), 0.0, epsilon = 0.05);
        let us: Vec<f64> = (0..400_000).map(|_| r.uniform()).collect();
        assert_abs_diff_eq!(excess_kurtosis(&us), -1.2, epsilon = 0.02);
    }
}
