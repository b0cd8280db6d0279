//! Sample moments, estimate summaries and the Kolmogorov-Smirnov distance
//! to the standard normal.
//!
//! All reductions run sequentially in sample order, so a summary is a pure
//! function of the sample vector.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Critical value for the two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Mean and central moments of a sample, with Bessel's correction on the
/// variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance `s^2`.
    pub variance: f64,
    /// Fourth central moment `m4 = mean((x - mean)^4)`.
    pub m4: f64,
}

impl SampleMoments {
    pub fn of(samples: &[f64]) -> Self {
        let r = samples.len();
        if r == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                m4: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / r as f64;
        let (mut s2, mut s4) = (0.0, 0.0);
        for &x in samples {
            let d = (x - mean) * (x - mean);
            s2 += d;
            s4 += d * d;
        }
        let variance = if r > 1 { s2 / (r - 1) as f64 } else { f64::NAN };
        Self {
            count: r,
            mean,
            variance,
            m4: s4 / r as f64,
        }
    }

    /// Variance of `s^2` as an estimator, `(m4 - (R-3)/(R-1) s^4) / R`,
    /// floored at zero.
    pub fn variance_of_variance(&self) -> f64 {
        let r = self.count as f64;
        if self.count < 4 {
            return f64::NAN;
        }
        let s4 = self.variance * self.variance;
        ((self.m4 - (r - 3.0) / (r - 1.0) * s4) / r).max(0.0)
    }
}

/// A Monte Carlo point estimate with its sampling error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub point: f64,
    pub variance_of_point: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub replicates: usize,
    pub master_seed: u64,
}

impl EstimateSummary {
    pub fn new(point: f64, variance_of_point: f64, replicates: usize, master_seed: u64) -> Self {
        let stderr = variance_of_point.sqrt();
        Self {
            point,
            variance_of_point,
            stderr,
            ci95: (point - Z95 * stderr, point + Z95 * stderr),
            replicates,
            master_seed,
        }
    }

    /// Sample mean, with variance `s^2 / R`.
    pub fn mean_of(samples: &[f64], master_seed: u64) -> Self {
        let m = SampleMoments::of(samples);
        Self::new(m.mean, m.variance / m.count as f64, m.count, master_seed)
    }

    /// Sample variance, with the fourth-moment variance-of-variance.
    pub fn variance_of(samples: &[f64], master_seed: u64) -> Self {
        let m = SampleMoments::of(samples);
        Self::new(m.variance, m.variance_of_variance(), m.count, master_seed)
    }

    /// Fraction of successes among `trials` Bernoulli replicates.
    pub fn proportion(successes: u64, trials: usize, master_seed: u64) -> Self {
        let n = trials as f64;
        let phat = successes as f64 / n;
        let var = if trials > 1 {
            phat * (1.0 - phat) / (n - 1.0)
        } else {
            f64::NAN
        };
        Self::new(phat, var, trials, master_seed)
    }

    /// `c * self`, with the error scaled accordingly.
    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            c * self.point,
            c * c * self.variance_of_point,
            self.replicates,
            self.master_seed,
        )
    }

    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.point - target) / self.stderr
    }
}

/// Kolmogorov-Smirnov distance between the sample, standardised by its own
/// mean and standard deviation, and the standard normal. `None` when the
/// sample has fewer than two points or zero spread.
pub fn ks_distance_to_normal(samples: &[f64]) -> Option<f64> {
    let m = SampleMoments::of(samples);
    let sd = m.variance.sqrt();
    if m.count < 2 || sd.is_nan() || sd == 0.0 {
        return None;
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - m.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let n = z.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in z.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moments_of_a_small_sample() {
        let m = SampleMoments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        // central deviations 1.5, 0.5, 0.5, 1.5
        assert!((m.m4 - (2.0 * 1.5f64.powi(4) + 2.0 * 0.5f64.powi(4)) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_has_zero_spread() {
        let s = EstimateSummary::variance_of(&[9.0; 10], 1);
        assert_eq!(s.point, 0.0);
        assert_eq!(s.stderr, 0.0);
        assert_eq!(ks_distance_to_normal(&[9.0; 10]), None);
    }

    #[test]
    fn interval_is_symmetric() {
        let s = EstimateSummary::new(1.0, 0.04, 10, 0);
        assert_eq!(s.stderr, 0.2);
        assert!((s.ci95.0 - (1.0 - 0.392)).abs() < 1e-12);
        assert!((s.ci95.1 - (1.0 + 0.392)).abs() < 1e-12);
        let t = s.scaled(-2.0);
        assert_eq!(t.point, -2.0);
        assert!((t.stderr - 0.4).abs() < 1e-12);
    }

    #[test]
    fn proportion_summary() {
        let s = EstimateSummary::proportion(25, 100, 3);
        assert_eq!(s.point, 0.25);
        assert!((s.variance_of_point - 0.1875 / 99.0).abs() < 1e-15);
        assert_eq!(EstimateSummary::proportion(0, 50, 3).stderr, 0.0);
    }

    #[test]
    fn ks_distance_of_normal_quantiles_is_small() {
        let normal = Normal::standard();
        let n = 2000;
        let sample: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        assert!(ks_distance_to_normal(&sample).unwrap() < 0.01);
        let skewed: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).powi(4)).collect();
        assert!(ks_distance_to_normal(&skewed).unwrap() > 0.1);
    }

    #[test]
    fn variance_of_variance_for_two_point_sample() {
        // x in {0, 1} with equal weight: m4 = 1/16, s^2 = R/(4(R-1))
        let r = 1000;
        let sample: Vec<f64> = (0..r).map(|i| (i % 2) as f64).collect();
        let m = SampleMoments::of(&sample);
        let s4 = m.variance * m.variance;
        let expected = (0.0625 - (r as f64 - 3.0) / (r as f64 - 1.0) * s4) / r as f64;
        assert!((m.variance_of_variance() - expected.max(0.0)).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn moments_are_shift_invariant(xs in proptest::collection::vec(-100.0f64..100.0, 2..50), c in -50.0f64..50.0) {
            let a = SampleMoments::of(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let b = SampleMoments::of(&shifted);
            prop_assert!((a.mean + c - b.mean).abs() < 1e-9);
            prop_assert!((a.variance - b.variance).abs() < 1e-7 * (1.0 + a.variance));
            prop_assert!(a.variance >= 0.0);
        }

        #[test]
        fn ks_distance_is_in_unit_interval(xs in proptest::collection::vec(-10.0f64..10.0, 2..100)) {
            if let Some(d) = ks_distance_to_normal(&xs) {
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }
    }
}
