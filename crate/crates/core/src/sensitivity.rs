//! Variance-based sensitivity indices evaluated on a surrogate, scaled by
//! the CoP to account for the variation the surrogate does not explain.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::sampling::Bounds;
use crate::surrogate::TrainedSurrogate;

/// Default base sample count `N` for CLI runs.
pub const DEFAULT_BASE_SAMPLES: usize = 1 << 14;
pub const MIN_BASE_SAMPLES: usize = 64;

/// Sample matrices `A`, `B` and `ABⁱ` (A with column i taken from B).
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliBundle {
    pub base: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub ab: Vec<Vec<Vec<f64>>>,
}

impl SaltelliBundle {
    pub fn dim(&self) -> usize {
        self.ab.len()
    }

    /// Total number of model evaluations, `N·(m + 2)`.
    pub fn evaluation_count(&self) -> usize {
        self.base * (self.dim() + 2)
    }

    pub fn points(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.a.iter().chain(&self.b).chain(self.ab.iter().flatten())
    }
}

/// Independent uniform sampling of `A` and `B` over the bounds.
pub fn saltelli_design(m: usize, base: usize, bounds: &Bounds, seed: u64) -> Result<SaltelliBundle> {
    if m == 0 {
        return Err(Error::Argument("at least one input is required".into()));
    }
    if base < MIN_BASE_SAMPLES {
        return Err(Error::Argument(format!("base sample count must be ≥ {MIN_BASE_SAMPLES}, got {base}")));
    }
    if bounds.dim() != m {
        return Err(Error::Dimension(format!("{m} inputs but {}-dimensional bounds", bounds.dim())));
    }
    let mut rng = rng::substream(seed, streams::SALTELLI);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..base)
            .map(|_| (0..m).map(|j| bounds.lower()[j] + rng.random::<f64>() * bounds.width(j)).collect())
            .collect()
    };
    let a = draw();
    let b = draw();
    let ab = (0..m)
        .map(|i| {
            a.iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut row = ra.clone();
                    row[i] = rb[i];
                    row
                })
                .collect()
        })
        .collect();
    Ok(SaltelliBundle { base, a, b, ab })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// First-order indices Ŝᵢ (raw estimator values, may be slightly negative).
    pub s_first: Vec<f64>,
    /// Total-effect indices Ŝ_Ti.
    pub s_total: Vec<f64>,
    pub s_first_cv: Vec<f64>,
    pub s_total_cv: Vec<f64>,
    /// CoP applied to the `_cv` vectors (1 until scaled).
    pub cop: f64,
    pub sample_size: usize,
    pub variance: f64,
}

impl SensitivityResult {
    /// Negative estimator noise clamped to zero, for reporting.
    pub fn clamped(values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v.max(0.0)).collect()
    }
}

/// First-order (Saltelli 2010 form) and total-effect (Jansen form) indices
/// of an arbitrary response function.
pub fn sobol_indices_of<F>(f: F, bundle: &SaltelliBundle) -> Result<SensitivityResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let eval = |rows: &Vec<Vec<f64>>| -> Vec<f64> { rows.par_iter().map(|r| f(r)).collect() };
    let fa = eval(&bundle.a);
    let fb = eval(&bundle.b);
    let n = bundle.base as f64;
    let pooled_mean = (fa.iter().sum::<f64>() + fb.iter().sum::<f64>()) / (2.0 * n);
    let variance = fa
        .iter()
        .chain(&fb)
        .map(|v| (v - pooled_mean) * (v - pooled_mean))
        .sum::<f64>()
        / (2.0 * n);
    if !(variance >= 1e-14) {
        return Err(Error::DegenerateOutput(format!("model output variance {variance:e} is zero")));
    }
    let mut s_first = Vec::with_capacity(bundle.dim());
    let mut s_total = Vec::with_capacity(bundle.dim());
    for ab in &bundle.ab {
        let fab = eval(ab);
        let first = fb.iter().zip(&fab).zip(&fa).map(|((b, ab), a)| b * (ab - a)).sum::<f64>() / n;
        let total = fa.iter().zip(&fab).map(|(a, ab)| (a - ab) * (a - ab)).sum::<f64>() / (2.0 * n);
        s_first.push(first / variance);
        s_total.push(total / variance);
    }
    Ok(SensitivityResult {
        s_first_cv: s_first.clone(),
        s_total_cv: s_total.clone(),
        s_first,
        s_total,
        cop: 1.0,
        sample_size: bundle.base,
        variance,
    })
}

/// Indices of a trained surrogate over its input bounds.
pub fn sobol_indices(model: &TrainedSurrogate, bundle: &SaltelliBundle) -> Result<SensitivityResult> {
    if bundle.dim() != model.bounds().dim() {
        return Err(Error::Dimension(format!(
            "bundle has {} inputs, model {}",
            bundle.dim(),
            model.bounds().dim()
        )));
    }
    sobol_indices_of(|x| model.predict_point(x).expect("dimension checked"), bundle)
}

/// Multiplies both index vectors by `cop`, keeping the raw values.
pub fn scale_by_cop(result: &SensitivityResult, cop: f64) -> SensitivityResult {
    SensitivityResult {
        s_first_cv: result.s_first.iter().map(|s| cop * s).collect(),
        s_total_cv: result.s_total.iter().map(|s| cop * s).collect(),
        cop,
        ..result.clone()
    }
}
