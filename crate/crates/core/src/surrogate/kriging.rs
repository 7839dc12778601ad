//! Ordinary Kriging with a constant trend and squared-exponential correlation
//! `R(u, v) = exp(−Σ θ_k (u_k − v_k)²)` on unit-cube coordinates.
//!
//! Correlation parameters maximize the concentrated log-likelihood
//! `−(n/2)·ln σ̂² − ½·ln|R|`. The search evaluates a log-uniform grid of 16
//! starts over `[THETA_MIN, THETA_MAX]` (shared θ for the isotropic model,
//! the diagonal θ₁ = … = θ_k for the anisotropic one) and refines the best
//! start locally, accepting only improvements.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{params_from, Anisotropy, FittedModel, ModelKind, ModelSpec, SurrogateFamily, TrainingData};
use crate::error::{Error, Result};

pub const THETA_MIN: f64 = 1e-2;
pub const THETA_MAX: f64 = 1e2;
pub const NUGGET_START: f64 = 1e-10;
pub const NUGGET_CAP: f64 = 1e-4;
const GRID_STARTS: usize = 16;

/// The 16 log-uniform starting values of θ.
pub fn theta_grid() -> Vec<f64> {
    let (lo, hi) = (THETA_MIN.log10(), THETA_MAX.log10());
    (0..GRID_STARTS)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (GRID_STARTS - 1) as f64))
        .collect()
}

fn correlation_matrix(points: &[Vec<f64>], theta: &[f64]) -> DMatrix<f64> {
    let n = points.len();
    let mut r = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = correlation(&points[i], &points[j], theta);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

fn correlation(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(theta)
        .map(|((x, y), t)| t * (x - y) * (x - y))
        .sum();
    (-s).exp()
}

fn factorize(base: &DMatrix<f64>, nugget: f64) -> Option<Cholesky<f64, Dyn>> {
    let mut r = base.clone();
    for i in 0..r.nrows() {
        r[(i, i)] += nugget;
    }
    Cholesky::new(r)
}

/// Cholesky of `R + λI` with λ escalated ×10 from [`NUGGET_START`] up to [`NUGGET_CAP`].
fn factorize_adaptive(base: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let mut nugget = NUGGET_START;
    while nugget <= NUGGET_CAP * (1.0 + 1e-9) {
        if let Some(chol) = factorize(base, nugget) {
            return Some((chol, nugget));
        }
        nugget *= 10.0;
    }
    None
}

struct Solved {
    mu: f64,
    sigma2: f64,
    weights: DVector<f64>,
    ln_likelihood: f64,
}

fn solve(chol: Cholesky<f64, Dyn>, y: &[f64]) -> Solved {
    let n = y.len();
    let yv = DVector::from_column_slice(y);
    let ones = DVector::from_element(n, 1.0);
    let ri_one = chol.solve(&ones);
    let ri_y = chol.solve(&yv);
    let mu = ri_y.sum() / ri_one.sum();
    let weights = &ri_y - &ri_one * mu;
    let centered = &yv - &ones * mu;
    let sigma2 = (centered.dot(&weights) / n as f64).max(f64::MIN_POSITIVE);
    let ln_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let ln_likelihood = -0.5 * n as f64 * sigma2.ln() - 0.5 * ln_det;
    Solved { mu, sigma2, weights, ln_likelihood }
}

/// Concentrated log-likelihood at `theta` and the nugget that made `R`
/// factorizable, or `None` if no admissible nugget exists.
pub fn concentrated_log_likelihood(points: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Option<(f64, f64)> {
    let base = correlation_matrix(points, theta);
    let (chol, nugget) = factorize_adaptive(&base)?;
    let s = solve(chol, y);
    s.ln_likelihood.is_finite().then_some((s.ln_likelihood, nugget))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrigingModel {
    /// Correlation parameter per active input.
    pub theta: Vec<f64>,
    pub nugget: f64,
    /// Constant trend (generalized least-squares mean).
    pub mu: f64,
    /// Process variance.
    pub sigma2: f64,
    /// `R⁻¹(y − μ1)`.
    pub weights: Vec<f64>,
    pub ln_likelihood: f64,
    #[serde(skip)]
    supports: Vec<Vec<f64>>,
}

impl KrigingModel {
    /// Fits with fixed correlation parameters and nugget (no search).
    pub fn fit_fixed(data: &TrainingData, theta: &[f64], nugget: f64) -> Result<Self> {
        if theta.len() != data.dim() {
            return Err(Error::Dimension(format!("{} θ values for {} inputs", theta.len(), data.dim())));
        }
        let base = correlation_matrix(&data.points, theta);
        let chol = factorize(&base, nugget)
            .ok_or_else(|| Error::Conditioning(format!("R + {nugget:e}·I is not positive definite")))?;
        Ok(Self::from_solved(data, theta.to_vec(), nugget, solve(chol, &data.y)))
    }

    fn from_solved(data: &TrainingData, theta: Vec<f64>, nugget: f64, s: Solved) -> Self {
        Self {
            theta,
            nugget,
            mu: s.mu,
            sigma2: s.sigma2,
            weights: s.weights.iter().copied().collect(),
            ln_likelihood: s.ln_likelihood,
            supports: data.points.clone(),
        }
    }

    /// Maximum-likelihood fit.
    pub fn fit(data: &TrainingData, anisotropy: Anisotropy) -> Result<Self> {
        let n = data.n();
        let k = data.dim();
        if n < 3 {
            return Err(Error::SingularFit(format!("Kriging needs at least 3 supports, got {n}")));
        }
        let (lo, hi) = data.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo == 0.0 {
            // Constant response: any θ reproduces it; keep a neutral one.
            return Ok(Self {
                theta: vec![1.0; k],
                nugget: NUGGET_START,
                mu: lo,
                sigma2: 0.0,
                weights: vec![0.0; n],
                ln_likelihood: f64::INFINITY,
                supports: data.points.clone(),
            });
        }
        let mut search = Search::new(data);
        for t in theta_grid() {
            search.evaluate(vec![t.log10(); k]);
        }
        if search.best.is_none() {
            return Err(Error::Conditioning(format!(
                "correlation matrix not positive definite for any start θ with nugget ≤ {NUGGET_CAP:e}"
            )));
        }
        match anisotropy {
            Anisotropy::Isotropic => search.refine_shared(),
            Anisotropy::Anisotropic => search.refine_pattern(),
        }
        let (log_theta, _, nugget) = search.best.expect("checked above");
        let theta: Vec<f64> = log_theta.iter().map(|l| 10f64.powf(*l)).collect();
        let base = correlation_matrix(&data.points, &theta);
        let chol = factorize(&base, nugget).expect("factorized during search");
        Ok(Self::from_solved(data, theta, nugget, solve(chol, &data.y)))
    }

    /// Exact leave-one-out predictions for fixed θ and nugget, including
    /// re-estimation of the constant trend.
    pub fn loo_predictions(&self, data: &TrainingData) -> Result<Vec<f64>> {
        let base = correlation_matrix(&data.points, &self.theta);
        let chol = factorize(&base, self.nugget)
            .ok_or_else(|| Error::Conditioning("refactorization failed".into()))?;
        let inv = chol.inverse();
        let ones = DVector::from_element(data.n(), 1.0);
        let ri_one = &inv * &ones;
        let denom = ri_one.sum();
        let y = DVector::from_column_slice(&data.y);
        let ri_y = &inv * &y;
        let mu = ri_y.sum() / denom;
        let weights = &ri_y - &ri_one * mu;
        Ok((0..data.n())
            .map(|i| {
                let q_ii = inv[(i, i)] - ri_one[i] * ri_one[i] / denom;
                data.y[i] - weights[i] / q_ii
            })
            .collect())
    }
}

impl FittedModel for KrigingModel {
    fn predict_unit(&self, u: &[f64]) -> f64 {
        self.mu
            + self
                .supports
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| {
                    // The nugget belongs to the self-correlation, so supports are reproduced.
                    let jitter = if s.as_slice() == u { self.nugget } else { 0.0 };
                    w * (correlation(s, u, &self.theta) + jitter)
                })
                .sum::<f64>()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// Best-so-far bookkeeping over log10 θ.
struct Search<'a> {
    data: &'a TrainingData,
    best: Option<(Vec<f64>, f64, f64)>,
    evaluations: usize,
}

impl<'a> Search<'a> {
    fn new(data: &'a TrainingData) -> Self {
        Self { data, best: None, evaluations: 0 }
    }

    fn evaluate(&mut self, log_theta: Vec<f64>) -> f64 {
        self.evaluations += 1;
        let theta: Vec<f64> = log_theta.iter().map(|l| 10f64.powf(*l)).collect();
        match concentrated_log_likelihood(&self.data.points, &self.data.y, &theta) {
            Some((ll, nugget)) => {
                if self.best.as_ref().is_none_or(|b| ll > b.1) {
                    self.best = Some((log_theta, ll, nugget));
                }
                ll
            }
            None => f64::NEG_INFINITY,
        }
    }

    fn best_point(&self) -> Vec<f64> {
        self.best.as_ref().expect("search started").0.clone()
    }

    /// Golden-section search on the shared log θ between the grid neighbours
    /// of the best start.
    fn refine_shared(&mut self) {
        let k = self.data.dim();
        let spacing = (THETA_MAX.log10() - THETA_MIN.log10()) / (GRID_STARTS - 1) as f64;
        let center = self.best_point()[0];
        let mut a = (center - spacing).max(THETA_MIN.log10());
        let mut b = (center + spacing).min(THETA_MAX.log10());
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = self.evaluate(vec![c; k]);
        let mut fd = self.evaluate(vec![d; k]);
        while b - a > 5e-3 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.evaluate(vec![c; k]);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.evaluate(vec![d; k]);
            }
        }
    }

    /// Compass search in log θ with step halving, clamped to the box.
    fn refine_pattern(&mut self) {
        let k = self.data.dim();
        let (lo, hi) = (THETA_MIN.log10(), THETA_MAX.log10());
        let budget = self.evaluations + 30 * k + 20;
        let mut step = 0.25;
        while step >= 0.02 && self.evaluations < budget {
            let mut improved = false;
            for j in 0..k {
                for dir in [1.0, -1.0] {
                    let mut cand = self.best_point();
                    let before = self.best.as_ref().map(|b| b.1).unwrap_or(f64::NEG_INFINITY);
                    cand[j] = (cand[j] + dir * step).clamp(lo, hi);
                    if cand == self.best_point() {
                        continue;
                    }
                    if self.evaluate(cand) > before {
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
    }
}

pub struct KrigingFamily;

fn anisotropy_of(spec: &ModelSpec) -> Result<Anisotropy> {
    match spec.kind {
        ModelKind::Kriging { anisotropy } => Ok(anisotropy),
        _ => Err(Error::Argument(format!("{} is not a Kriging spec", spec.name()))),
    }
}

impl SurrogateFamily for KrigingFamily {
    fn id(&self) -> &'static str {
        "kriging"
    }

    fn train(&self, spec: &ModelSpec, data: &TrainingData) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(KrigingModel::fit(data, anisotropy_of(spec)?)?))
    }

    fn restore(&self, spec: &ModelSpec, data: &TrainingData, params: &serde_json::Value) -> Result<Box<dyn FittedModel>> {
        anisotropy_of(spec)?;
        let mut model: KrigingModel = params_from(params)?;
        if model.weights.len() != data.n() || model.theta.len() != data.dim() {
            return Err(Error::Data("Kriging parameters do not match the supports".into()));
        }
        model.supports = data.points.clone();
        Ok(Box::new(model))
    }

    /// Closed-form leave-one-out with the full-data θ and nugget.
    fn loo_predictions(&self, spec: &ModelSpec, data: &TrainingData) -> Option<Result<Vec<f64>>> {
        let anisotropy = match anisotropy_of(spec) {
            Ok(a) => a,
            Err(e) => return Some(Err(e)),
        };
        Some(KrigingModel::fit(data, anisotropy).and_then(|m| {
            if m.sigma2 == 0.0 {
                Ok(data.y.clone())
            } else {
                m.loo_predictions(data)
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TrainingData {
        let points: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0, ((i * 7) % 12) as f64 / 11.0]).collect();
        let y = points.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        TrainingData { points, y }
    }

    #[test]
    fn grid_spans_range() {
        let g = theta_grid();
        assert_eq!(g.len(), 16);
        assert!((g[0] - THETA_MIN).abs() < 1e-15);
        assert!((g[15] - THETA_MAX).abs() < 1e-9);
    }

    #[test]
    fn interpolates_supports() {
        let data = toy();
        for a in [Anisotropy::Isotropic, Anisotropy::Anisotropic] {
            let m = KrigingModel::fit(&data, a).unwrap();
            let range = 2.0;
            for (p, y) in data.points.iter().zip(&data.y) {
                assert!((m.predict_unit(p) - y).abs() <= 1e-6 * range);
            }
        }
    }

    #[test]
    fn likelihood_not_below_grid() {
        let data = toy();
        for a in [Anisotropy::Isotropic, Anisotropy::Anisotropic] {
            let m = KrigingModel::fit(&data, a).unwrap();
            for t in theta_grid() {
                if let Some((ll, _)) = concentrated_log_likelihood(&data.points, &data.y, &[t, t]) {
                    assert!(m.ln_likelihood >= ll - 1e-9, "{} < {ll}", m.ln_likelihood);
                }
            }
        }
    }

    #[test]
    fn closed_form_loo_matches_frozen_retraining() {
        let data = toy();
        let m = KrigingModel::fit(&data, Anisotropy::Anisotropic).unwrap();
        let fast = m.loo_predictions(&data).unwrap();
        for i in 0..data.n() {
            let mut skip = vec![false; data.n()];
            skip[i] = true;
            let reduced = KrigingModel::fit_fixed(&data.without(&skip), &m.theta, m.nugget).unwrap();
            let explicit = reduced.predict_unit(&data.points[i]);
            assert!((fast[i] - explicit).abs() < 1e-7, "{i}: {} vs {explicit}", fast[i]);
        }
    }
}
