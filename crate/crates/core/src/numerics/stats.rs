//! Summary statistics used by the Monte Carlo harness.

use super::special::norm_quantile;
use serde::{Deserialize, Serialize};

/// Mean, standard error of the mean, and extremes of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let count = xs.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                std_err: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let std_err = if count > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            count,
            mean,
            std_err,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Two-sided Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = norm_quantile(0.5 + 0.5 * confidence);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Critical value for `comparisons` simultaneous two-sided intervals at
/// family-wise confidence `confidence` (Bonferroni).
pub fn bonferroni_z(confidence: f64, comparisons: usize) -> f64 {
    let k = comparisons.max(1) as f64;
    norm_quantile(1.0 - (1.0 - confidence) / (2.0 * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_sample() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sample sd = sqrt(5/3), se = sd / 2
        assert!((s.std_err - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }

    #[test]
    fn wilson_zero_successes_has_positive_upper() {
        let (lo, hi) = wilson_interval(0, 100_000, 0.99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1e-4);
    }

    #[test]
    fn bonferroni_widens() {
        assert!((bonferroni_z(0.95, 1) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(bonferroni_z(0.95, 20) > bonferroni_z(0.95, 2));
    }
}
