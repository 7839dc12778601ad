//! Goodness-of-fit (CoD) and prognosis (CoP) measures built from residuals.

use serde::{Deserialize, Serialize};

use crate::crossval::CvResult;
use crate::error::{Error, Result};
use crate::sampling::DesignMatrix;

/// Residuals beyond this multiple of RMSE^cv are flagged as outliers.
pub const OUTLIER_FACTOR: f64 = 3.0;

/// Relative floor on `SS_T` below which an output counts as constant.
pub const DEGENERACY_FACTOR: f64 = 1e-14;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Total sum of squares about the mean.
pub fn total_sum_of_squares(y: &[f64]) -> f64 {
    let mu = mean(y);
    y.iter().map(|v| (v - mu) * (v - mu)).sum()
}

pub fn sum_of_squares(residuals: &[f64]) -> f64 {
    residuals.iter().map(|e| e * e).sum()
}

/// `SS_T`, or an error when it is numerically zero.
pub fn checked_total_sum_of_squares(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::DegenerateOutput("no output values".into()));
    }
    let ss_t = total_sum_of_squares(y);
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(ss_t > DEGENERACY_FACTOR * y.len() as f64 * scale * scale) {
        return Err(Error::DegenerateOutput(format!("output variance is zero (SS_T = {ss_t:e})")));
    }
    Ok(ss_t)
}

/// `1 − SS_E/SS_T` of predictions against observations.
pub fn coefficient_of_determination(y: &[f64], predicted: &[f64]) -> Result<f64> {
    if y.len() != predicted.len() {
        return Err(Error::Dimension(format!("{} observations, {} predictions", y.len(), predicted.len())));
    }
    let ss_t = checked_total_sum_of_squares(y)?;
    let ss_e: f64 = y.iter().zip(predicted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_e / ss_t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n: usize,
    pub rmse_fit: f64,
    pub rmse_cv: f64,
    pub cod1: f64,
    pub cod2: f64,
    /// Raw signed CoP; reports may clamp it to `[0, 1]`.
    pub cop: f64,
    pub ss_e: f64,
    pub ss_r: f64,
    pub ss_t: f64,
    pub ss_e_cv: f64,
    pub mean_y: f64,
    pub sample_cop: Vec<f64>,
    /// 0-based indices with `|ε^cv| > 3·RMSE^cv`.
    pub outlier_indices: Vec<usize>,
}

impl QualityReport {
    pub fn cop_clamped(&self) -> f64 {
        self.cop.clamp(0.0, 1.0)
    }
}

pub fn compute_report(cv: &CvResult) -> Result<QualityReport> {
    let n = cv.n();
    let ss_t = checked_total_sum_of_squares(&cv.y)?;
    let mean_y = mean(&cv.y);
    let ss_e = sum_of_squares(&cv.fit_residuals);
    let ss_r: f64 = cv.fitted.iter().map(|f| (f - mean_y) * (f - mean_y)).sum();
    let ss_e_cv = sum_of_squares(&cv.cv_residuals);
    let rmse_cv = (ss_e_cv / n as f64).sqrt();
    Ok(QualityReport {
        n,
        rmse_fit: (ss_e / n as f64).sqrt(),
        rmse_cv,
        cod1: 1.0 - ss_e / ss_t,
        cod2: ss_r / ss_t,
        cop: 1.0 - ss_e_cv / ss_t,
        ss_e,
        ss_r,
        ss_t,
        ss_e_cv,
        mean_y,
        sample_cop: sample_cop_values(&cv.cv_residuals, ss_t, SampleCopScaling::MeanPreserving),
        outlier_indices: outliers(&cv.cv_residuals, rmse_cv),
    })
}

/// Indices whose residual exceeds `OUTLIER_FACTOR · rmse` in magnitude.
pub fn outliers(residuals: &[f64], rmse: f64) -> Vec<usize> {
    residuals
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() > OUTLIER_FACTOR * rmse)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleCopScaling {
    /// `1 − n·(ε_i^cv)²/SS_T`; the mean equals the global CoP.
    #[default]
    MeanPreserving,
    /// `1 − (ε_i^cv)²/SS_T`, the per-point share without the factor `n`.
    Unscaled,
}

fn sample_cop_values(residuals: &[f64], ss_t: f64, scaling: SampleCopScaling) -> Vec<f64> {
    let factor = match scaling {
        SampleCopScaling::MeanPreserving => residuals.len() as f64,
        SampleCopScaling::Unscaled => 1.0,
    };
    residuals.iter().map(|e| 1.0 - factor * e * e / ss_t).collect()
}

/// Contribution of each support point to the CoP.
pub fn sample_cop(cv: &CvResult) -> Result<Vec<f64>> {
    sample_cop_with(cv, SampleCopScaling::MeanPreserving)
}

pub fn sample_cop_with(cv: &CvResult, scaling: SampleCopScaling) -> Result<Vec<f64>> {
    let ss_t = checked_total_sum_of_squares(&cv.y)?;
    Ok(sample_cop_values(&cv.cv_residuals, ss_t, scaling))
}

/// Normalized difference between the cross-validation and test estimates of
/// the mean squared prediction error; positive when CV is conservative.
pub fn delta_sse(cv: &CvResult, test_y: &[f64], test_pred: &[f64]) -> Result<f64> {
    if test_y.len() != test_pred.len() {
        return Err(Error::Dimension(format!("{} test values, {} predictions", test_y.len(), test_pred.len())));
    }
    let n_t = test_y.len() as f64;
    let ss_t_test = checked_total_sum_of_squares(test_y)?;
    let ss_e_test: f64 = test_y.iter().zip(test_pred).map(|(a, b)| (a - b) * (a - b)).sum();
    let ss_e_cv = sum_of_squares(&cv.cv_residuals);
    Ok((ss_e_cv / cv.n() as f64 - ss_e_test / n_t) / (ss_t_test / n_t))
}

/// How the kernel width of the local error field is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Width solved per query so that `(Σw)²/Σw² ≈ K`.
    EffectiveSamples(f64),
    /// Fixed width `h` in normalized input units.
    Fixed(f64),
}

impl Bandwidth {
    pub fn default_for(n: usize) -> Self {
        Bandwidth::EffectiveSamples((0.05 * n as f64).max(5.0))
    }
}

/// Weights below this sum make a query point isolated.
const ISOLATION_FLOOR: f64 = 1e-300;

/// Continuous estimate of the prediction error, averaging squared CV
/// residuals with isotropic weights `exp(−‖x − x_i‖²/h²)` in normalized inputs.
#[derive(Debug, Clone)]
pub struct LocalErrorField {
    design: DesignMatrix,
    points: Vec<Vec<f64>>,
    squared: Vec<f64>,
    ss_t: f64,
    bandwidth: Bandwidth,
}

/// One evaluation of a [`LocalErrorField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimate {
    pub rmse: f64,
    pub cop: f64,
    /// Query lies outside the design bounds.
    pub extrapolated: bool,
}

impl LocalErrorField {
    pub fn new(design: &DesignMatrix, cv: &CvResult, bandwidth: Bandwidth) -> Result<Self> {
        if design.rows() != cv.n() {
            return Err(Error::Dimension(format!("design has {} rows, residuals {}", design.rows(), cv.n())));
        }
        match bandwidth {
            Bandwidth::EffectiveSamples(k) if !(k >= 1.0) => {
                return Err(Error::Argument(format!("effective sample target must be ≥ 1, got {k}")))
            }
            Bandwidth::Fixed(h) if !(h > 0.0) => {
                return Err(Error::Argument(format!("bandwidth must be positive, got {h}")))
            }
            _ => {}
        }
        Ok(Self {
            design: design.clone(),
            points: design.normalized_rows(),
            squared: cv.cv_residuals.iter().map(|e| e * e).collect(),
            ss_t: checked_total_sum_of_squares(&cv.y)?,
            bandwidth,
        })
    }

    pub fn with_default_bandwidth(design: &DesignMatrix, cv: &CvResult) -> Result<Self> {
        Self::new(design, cv, Bandwidth::default_for(cv.n()))
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    fn squared_distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.design.cols() {
            return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.len(), self.design.cols())));
        }
        let u = self.design.bounds().normalize(x);
        Ok(self.points.iter().map(|p| p.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum()).collect())
    }

    /// Width giving an effective sample size of `target`, by bisection in log h.
    fn solve_width(d2: &[f64], target: f64) -> f64 {
        let d_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
        let ess = |h: f64| {
            let (mut s, mut s2) = (0.0, 0.0);
            for d in d2 {
                let w = (-(d - d_min) / (h * h)).exp();
                s += w;
                s2 += w * w;
            }
            s * s / s2
        };
        let (mut lo, mut hi) = (1e-8f64.ln(), 1e4f64.ln());
        if ess(hi.exp()) <= target {
            return hi.exp();
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ess(mid.exp()) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    fn weighted_mean_square(d2: &[f64], squared: &[f64], h: f64) -> Option<f64> {
        let (mut sw, mut swe) = (0.0, 0.0);
        for (d, e2) in d2.iter().zip(squared) {
            let w = (-d / (h * h)).exp();
            sw += w;
            swe += w * e2;
        }
        (sw >= ISOLATION_FLOOR).then(|| swe / sw)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<LocalEstimate> {
        let d2 = self.squared_distances(x)?;
        let h = match self.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::EffectiveSamples(k) => Self::solve_width(&d2, k),
        };
        let mse = Self::weighted_mean_square(&d2, &self.squared, h)
            .or_else(|| Self::weighted_mean_square(&d2, &self.squared, 10.0 * h))
            .ok_or_else(|| Error::Isolation(format!("all kernel weights underflow at {x:?}")))?;
        let rmse = mse.sqrt();
        Ok(LocalEstimate {
            rmse,
            cop: 1.0 - self.n() as f64 * rmse * rmse / self.ss_t,
            extrapolated: !self.design.bounds().contains(x),
        })
    }

    pub fn local_rmse(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|e| e.rmse)
    }

    pub fn local_cop(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x).map(|e| e.cop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossval::FoldAssignment;
    use crate::sampling::Bounds;

    fn cv_from(y: Vec<f64>, fitted: Vec<f64>, cv_pred: Vec<f64>) -> CvResult {
        let n = y.len();
        CvResult::from_predictions(y, fitted, cv_pred, FoldAssignment::leave_one_out(n).unwrap())
    }

    #[test]
    fn perfect_model() {
        let y = vec![1.0, 4.0, 2.0, 8.0];
        let r = compute_report(&cv_from(y.clone(), y.clone(), y)).unwrap();
        assert_eq!(r.rmse_fit, 0.0);
        assert_eq!(r.rmse_cv, 0.0);
        assert!((r.cod1 - 1.0).abs() < 1e-15 && (r.cod2 - 1.0).abs() < 1e-15 && (r.cop - 1.0).abs() < 1e-15);
        assert!(r.outlier_indices.is_empty());
    }

    #[test]
    fn cod_formulations_diverge_for_non_ols() {
        let r = compute_report(&cv_from(vec![0.0, 1.0, 2.0], vec![0.5, 1.0, 1.5], vec![0.5, 1.0, 1.5])).unwrap();
        assert!((r.ss_t - 2.0).abs() < 1e-15);
        assert!((r.ss_e - 0.5).abs() < 1e-15);
        assert!((r.cod1 - 0.75).abs() < 1e-15);
        assert!((r.ss_r - 0.5).abs() < 1e-15);
        assert!((r.cod2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn negative_cop() {
        let r = compute_report(&cv_from(vec![0.0, 2.0], vec![0.0, 2.0], vec![2.0, 0.0])).unwrap();
        assert!((r.ss_e_cv - 8.0).abs() < 1e-15);
        assert!((r.cop + 3.0).abs() < 1e-15);
        assert_eq!(r.cop_clamped(), 0.0);
    }

    #[test]
    fn sample_cop_hand_values() {
        let cv = cv_from(vec![0.0, 2.0], vec![0.0, 2.0], vec![-1.0, 3.0]);
        let s = sample_cop(&cv).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let r = compute_report(&cv).unwrap();
        assert!((mean(&s) - r.cop).abs() < 1e-15);
        let unscaled = sample_cop_with(&cv, SampleCopScaling::Unscaled).unwrap();
        assert_eq!(unscaled, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_residual_sample_cop_and_outlier_minimum() {
        let y = vec![0.0, 1.0, 3.0, 2.0, 5.0];
        let cv = cv_from(y.clone(), y.clone(), y.clone());
        assert!(sample_cop(&cv).unwrap().iter().all(|&v| v == 1.0));
        let mut pred = y.clone();
        pred[3] += 2.0;
        pred[1] -= 0.1;
        let s = sample_cop(&cv_from(y.clone(), y, pred)).unwrap();
        let argmin = (0..5).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        assert_eq!(argmin, 3);
    }

    #[test]
    fn constant_output_is_degenerate() {
        let cv = cv_from(vec![2.0; 4], vec![2.0; 4], vec![2.0; 4]);
        assert!(matches!(compute_report(&cv), Err(Error::DegenerateOutput(_))));
    }

    #[test]
    fn outlier_at_five_rmse_is_flagged_alone() {
        // 99 residuals of ±a and one b with b = 5·RMSE: b²(1 − 25/n) = 25(n−1)a²/n.
        let n = 100.0;
        let a: f64 = 1.0;
        let b = (25.0 * (n - 1.0) * a * a / n / (1.0 - 25.0 / n)).sqrt();
        let mut res: Vec<f64> = (0..99).map(|i| if i % 2 == 0 { a } else { -a }).collect();
        res.insert(42, b);
        let rmse = (sum_of_squares(&res) / n).sqrt();
        assert!((b - 5.0 * rmse).abs() < 1e-9);
        assert_eq!(outliers(&res, rmse), vec![42]);
    }

    #[test]
    fn delta_sse_hand_values() {
        let cv = cv_from(vec![0.0, 2.0], vec![0.0, 2.0], vec![1.0, 1.0]);
        // SS_E^cv = 2, n = 2; test: SS_E = 2, SS_T = 4, n_t = 4.
        let test_y = vec![-1.0, 1.0, -1.0, 1.0];
        let test_pred = vec![-2.0, 2.0, -1.0, 1.0];
        let sse: f64 = test_y.iter().zip(&test_pred).map(|(a, b): (&f64, &f64)| (a - b).powi(2)).sum();
        assert!((sse - 2.0).abs() < 1e-15);
        assert!((delta_sse(&cv, &test_y, &test_pred).unwrap() - 0.5).abs() < 1e-15);
        let perfect = cv_from(vec![0.0, 2.0], vec![0.0, 2.0], vec![0.0, 2.0]);
        assert_eq!(delta_sse(&perfect, &test_y, &test_y).unwrap(), 0.0);
        assert!(delta_sse(&perfect, &[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    fn field(points: Vec<Vec<f64>>, residuals: Vec<f64>, bandwidth: Bandwidth) -> LocalErrorField {
        let m = points[0].len();
        let design = DesignMatrix::new(points, Bounds::uniform(m, 0.0, 1.0).unwrap()).unwrap();
        let n = residuals.len();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let pred: Vec<f64> = y.iter().zip(&residuals).map(|(a, e)| a - e).collect();
        let cv = CvResult::from_predictions(y.clone(), y, pred, FoldAssignment::leave_one_out(n).unwrap());
        LocalErrorField::new(&design, &cv, bandwidth).unwrap()
    }

    #[test]
    fn local_rmse_hand_values() {
        let two = field(vec![vec![0.2], vec![0.6]], vec![3.0, 4.0], Bandwidth::EffectiveSamples(5.0));
        assert!((two.local_rmse(&[0.4]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        let narrow = field(vec![vec![0.2], vec![0.6]], vec![3.0, 4.0], Bandwidth::Fixed(1e-3));
        assert!((narrow.local_rmse(&[0.6]).unwrap() - 4.0).abs() < 1e-12);
        let constant = field(vec![vec![0.1], vec![0.5], vec![0.9]], vec![2.0, -2.0, 2.0], Bandwidth::default_for(3));
        for x in [0.0, 0.3, 1.0] {
            let e = constant.evaluate(&[x]).unwrap();
            assert!((e.rmse - 2.0).abs() < 1e-12);
            assert!((e.cop - (1.0 - 3.0 * 4.0 / constant.ss_t)).abs() < 1e-12);
        }
        assert!(constant.evaluate(&[1.5]).unwrap().extrapolated);
    }

    #[test]
    fn single_support_field() {
        let design = DesignMatrix::new(vec![vec![0.3, 0.3]], Bounds::uniform(2, 0.0, 1.0).unwrap()).unwrap();
        let f = LocalErrorField {
            design: design.clone(),
            points: design.normalized_rows(),
            squared: vec![9.0],
            ss_t: 0.5,
            bandwidth: Bandwidth::default_for(1),
        };
        for x in [[0.0, 0.0], [0.9, 0.1], [0.3, 0.3]] {
            assert!((f.local_rmse(&x).unwrap() - 3.0).abs() < 1e-12);
        }
    }
}
