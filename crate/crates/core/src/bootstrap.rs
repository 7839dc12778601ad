//! Non-parametric bootstrap of cross-validation residuals.
//!
//! Resampling the residuals (instead of retraining on resampled supports)
//! gives distributions of RMSE and CoP at negligible cost. `SS_T` stays at
//! its support-point value for every resample.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

pub const DEFAULT_REPS: usize = 100_000;
pub const DEFAULT_LEVEL: f64 = 0.99;
pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    pub reps: usize,
    pub n: usize,
    pub ss_t: f64,
    pub seed: u64,
    pub rmse_samples: Vec<f64>,
    pub cop_samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Rmse,
    Cop,
}

impl BootstrapDistribution {
    pub fn samples(&self, measure: Measure) -> &[f64] {
        match measure {
            Measure::Rmse => &self.rmse_samples,
            Measure::Cop => &self.cop_samples,
        }
    }
}

/// Draws `reps` resamples of size `n` with replacement. Resample `j` uses
/// its own counter-based stream, so the result does not depend on how the
/// work is split across threads.
pub fn bootstrap_residuals(residuals: &[f64], ss_t: f64, reps: usize, seed: u64) -> Result<BootstrapDistribution> {
    let n = residuals.len();
    if reps == 0 {
        return Err(Error::Argument("bootstrap needs at least one repetition".into()));
    }
    if n < 2 {
        return Err(Error::Argument(format!("bootstrap needs at least 2 residuals, got {n}")));
    }
    if !(ss_t > 0.0) {
        return Err(Error::DegenerateOutput(format!("SS_T must be positive, got {ss_t}")));
    }
    let sse: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::indexed(seed, streams::BOOTSTRAP, j as u64);
            (0..n)
                .map(|_| {
                    let e = residuals[rng.random_range(0..n)];
                    e * e
                })
                .sum()
        })
        .collect();
    Ok(BootstrapDistribution {
        reps,
        n,
        ss_t,
        seed,
        rmse_samples: sse.iter().map(|s| (s / n as f64).sqrt()).collect(),
        cop_samples: sse.iter().map(|s| 1.0 - s / ss_t).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `(N − 1)·p` in the sorted sample).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Percentile interval at the quantiles `(1 − level)/2` and `(1 + level)/2`.
pub fn confidence_interval(dist: &BootstrapDistribution, measure: Measure, level: f64) -> Result<ConfidenceInterval> {
    percentile_interval(dist.samples(measure), level)
}

pub fn percentile_interval(samples: &[f64], level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    let s = sorted(samples);
    let alpha = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval { level, lower: quantile_sorted(&s, alpha), upper: quantile_sorted(&s, 1.0 - alpha) })
}

pub fn median(samples: &[f64]) -> f64 {
    quantile_sorted(&sorted(samples), 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

/// Counts over `bins` uniform bins spanning the sample range.
pub fn histogram(samples: &[f64], bins: usize) -> Histogram {
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut counts = vec![0; bins.max(1)];
    let width = (max - min) / counts.len() as f64;
    for &v in samples {
        let k = if width > 0.0 { ((v - min) / width) as usize } else { 0 };
        counts[k.min(bins.max(1) - 1)] += 1;
    }
    Histogram { min, max, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub estimate: f64,
    pub mean: f64,
    pub median: f64,
    pub ci: ConfidenceInterval,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub reps: usize,
    pub seed: u64,
    pub n: usize,
    pub rmse: MeasureSummary,
    pub cop: MeasureSummary,
}

/// Point estimates, percentile intervals and histograms of both measures.
pub fn summarize(residuals: &[f64], dist: &BootstrapDistribution, level: f64) -> Result<BootstrapSummary> {
    let n = residuals.len() as f64;
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let measure = |m: Measure, estimate: f64| -> Result<MeasureSummary> {
        let s = dist.samples(m);
        Ok(MeasureSummary {
            estimate,
            mean: s.iter().sum::<f64>() / s.len() as f64,
            median: median(s),
            ci: confidence_interval(dist, m, level)?,
            histogram: histogram(s, HISTOGRAM_BINS),
        })
    };
    Ok(BootstrapSummary {
        reps: dist.reps,
        seed: dist.seed,
        n: dist.n,
        rmse: measure(Measure::Rmse, (sse / n).sqrt())?,
        cop: measure(Measure::Cop, 1.0 - sse / dist.ss_t)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_residuals_give_point_mass() {
        let dist = bootstrap_residuals(&[0.5; 10], 20.0, 500, 1).unwrap();
        assert!(dist.rmse_samples.iter().all(|&r| (r - 0.5).abs() < 1e-15));
        let expected = 1.0 - 10.0 * 0.25 / 20.0;
        assert!(dist.cop_samples.iter().all(|&c| (c - expected).abs() < 1e-15));
        let ci = confidence_interval(&dist, Measure::Rmse, 0.99).unwrap();
        assert_eq!(ci.width(), 0.0);
        let zero = bootstrap_residuals(&[0.0; 5], 1.0, 100, 1).unwrap();
        assert!(zero.cop_samples.iter().all(|&c| c == 1.0));
    }

    #[test]
    fn argument_errors() {
        assert!(bootstrap_residuals(&[1.0, 2.0], 1.0, 0, 1).is_err());
        assert!(bootstrap_residuals(&[1.0], 1.0, 10, 1).is_err());
        assert!(bootstrap_residuals(&[1.0, 2.0], 0.0, 10, 1).is_err());
        let d = bootstrap_residuals(&[1.0, 2.0], 1.0, 10, 1).unwrap();
        for level in [0.0, 1.0, -0.5, 1.5] {
            assert!(confidence_interval(&d, Measure::Cop, level).is_err());
        }
    }

    #[test]
    fn type7_quantiles_on_known_sample() {
        // Samples 1..=100000: position (N−1)p, value 1 + (N−1)p.
        let s: Vec<f64> = (1..=100_000).map(f64::from).collect();
        let ci = percentile_interval(&s, 0.99).unwrap();
        assert!((ci.lower - (1.0 + 99_999.0 * 0.005)).abs() < 1e-9);
        assert!((ci.upper - (1.0 + 99_999.0 * 0.995)).abs() < 1e-9);
        assert!((quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn nested_levels() {
        let res: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let d = bootstrap_residuals(&res, 2000.0, 4000, 3).unwrap();
        for m in [Measure::Rmse, Measure::Cop] {
            let wide = confidence_interval(&d, m, 0.99).unwrap();
            let narrow = confidence_interval(&d, m, 0.90).unwrap();
            assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        }
    }

    #[test]
    fn deterministic_and_coherent() {
        let res: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let a = bootstrap_residuals(&res, 15.0, 1000, 42).unwrap();
        let b = bootstrap_residuals(&res, 15.0, 1000, 42).unwrap();
        assert_eq!(a, b);
        for (r, c) in a.rmse_samples.iter().zip(&a.cop_samples) {
            assert!((c - (1.0 - 30.0 * r * r / 15.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0], 50);
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
        assert_eq!(h.counts[49], 2);
        assert_eq!(histogram(&[2.0; 3], 50).counts[0], 3);
    }
}
