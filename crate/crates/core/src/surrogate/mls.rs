use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::solve_checked;
use super::polynomial::PolynomialModel;
use super::{basis_row, basis_size, params_from, Basis, FittedModel, ModelKind, ModelSpec, SurrogateFamily, TrainingData};
use crate::error::{Error, Result};

/// Shape parameter α of the Gaussian weight: `exp(−d²/(α·r)²)`.
pub const MLS_SHAPE: f64 = 0.4;

/// MLS weight at distance `d` for influence radius `r`.
///
/// The Gaussian is shifted down by its value at `d = r` and rescaled, so it
/// reaches exactly zero at the radius and the prediction stays continuous
/// when a support crosses it.
pub fn mls_weight(d: f64, r: f64) -> f64 {
    if d >= r {
        return 0.0;
    }
    let edge = (-1.0 / (MLS_SHAPE * MLS_SHAPE)).exp();
    let g = (-(d * d) / (MLS_SHAPE * r).powi(2)).exp();
    (g - edge) / (1.0 - edge)
}

/// Moving least squares: a weighted local fit around every query point.
/// Points with fewer in-radius supports than basis terms use the global
/// least-squares polynomial instead.
#[derive(Debug, Clone)]
pub struct MlsModel {
    basis: Basis,
    /// Absolute radius in unit coordinates (`radius · √k`).
    reach: f64,
    supports: Vec<Vec<f64>>,
    values: Vec<f64>,
    global: PolynomialModel,
}

#[derive(Serialize, Deserialize)]
struct MlsParams {
    global: PolynomialModel,
}

impl MlsModel {
    pub fn fit(data: &TrainingData, basis: Basis, radius: f64) -> Result<Self> {
        let k = data.dim();
        let global = PolynomialModel::fit(data, basis)?;
        Ok(Self {
            basis,
            reach: radius * (k as f64).sqrt(),
            supports: data.points.clone(),
            values: data.y.clone(),
            global,
        })
    }

    /// Local weighted fit at `u`, or `None` when it falls back to the global fit.
    pub fn local_prediction(&self, u: &[f64]) -> Option<f64> {
        let k = u.len();
        let p = basis_size(k, self.basis);
        let mut moment = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        let mut count = 0usize;
        for (s, y) in self.supports.iter().zip(&self.values) {
            let d2: f64 = s.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
            let d = d2.sqrt();
            if d >= self.reach {
                continue;
            }
            count += 1;
            let w = mls_weight(d, self.reach);
            if w <= 0.0 {
                continue;
            }
            let shifted: Vec<f64> = s.iter().zip(u).map(|(a, b)| (a - b) / self.reach).collect();
            let row = basis_row(&shifted, self.basis);
            for a in 0..p {
                let wa = w * row[a];
                rhs[a] += wa * y;
                for b in a..p {
                    moment[(a, b)] += wa * row[b];
                }
            }
        }
        if count < p {
            return None;
        }
        for a in 0..p {
            for b in 0..a {
                moment[(a, b)] = moment[(b, a)];
            }
        }
        solve_checked(moment, &rhs).map(|coef| coef[0])
    }
}

impl FittedModel for MlsModel {
    fn predict_unit(&self, u: &[f64]) -> f64 {
        self.local_prediction(u).unwrap_or_else(|| self.global.predict_unit(u))
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(MlsParams { global: self.global.clone() }).expect("plain data")
    }
}

pub struct MlsFamily;

fn unpack(spec: &ModelSpec) -> Result<(Basis, f64)> {
    match spec.kind {
        ModelKind::Mls { basis, radius } if radius > 0.0 => Ok((basis, radius)),
        ModelKind::Mls { radius, .. } => Err(Error::Argument(format!("MLS radius must be positive, got {radius}"))),
        _ => Err(Error::Argument(format!("{} is not an MLS spec", spec.name()))),
    }
}

impl SurrogateFamily for MlsFamily {
    fn id(&self) -> &'static str {
        "mls"
    }

    fn train(&self, spec: &ModelSpec, data: &TrainingData) -> Result<Box<dyn FittedModel>> {
        let (basis, radius) = unpack(spec)?;
        if data.n() < 3 {
            return Err(Error::SingularFit(format!("MLS needs at least 3 supports, got {}", data.n())));
        }
        Ok(Box::new(MlsModel::fit(data, basis, radius)?))
    }

    fn restore(&self, spec: &ModelSpec, data: &TrainingData, params: &serde_json::Value) -> Result<Box<dyn FittedModel>> {
        let (basis, radius) = unpack(spec)?;
        let p: MlsParams = params_from(params)?;
        Ok(Box::new(MlsModel {
            basis,
            reach: radius * (data.dim() as f64).sqrt(),
            supports: data.points.clone(),
            values: data.y.clone(),
            global: p.global,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_profile() {
        assert!((mls_weight(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(mls_weight(1.0, 1.0), 0.0);
        assert_eq!(mls_weight(2.0, 1.0), 0.0);
        assert!(mls_weight(0.999_999, 1.0) < 1e-6);
        assert!(mls_weight(0.3, 1.0) > mls_weight(0.5, 1.0));
    }

    #[test]
    fn few_neighbours_fall_back_to_global() {
        let data = TrainingData {
            points: (0..10).map(|i| vec![i as f64 / 9.0]).collect(),
            y: (0..10).map(|i| (i as f64 / 9.0).powi(2)).collect(),
        };
        let model = MlsModel::fit(&data, Basis::Quadratic, 0.05).unwrap();
        assert!(model.local_prediction(&[0.5]).is_none());
        let wide = MlsModel::fit(&data, Basis::Quadratic, 0.5).unwrap();
        let v = wide.local_prediction(&[0.5]).unwrap();
        assert!((v - 0.25).abs() < 1e-10);
    }
}
