use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::least_squares;
use super::{basis_row, params_from, Basis, FittedModel, ModelKind, ModelSpec, SurrogateFamily, TrainingData};
use crate::error::{Error, Result};

/// Global least-squares polynomial in centered unit coordinates `z = 2u − 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub basis: Basis,
    pub coefficients: Vec<f64>,
}

pub(crate) fn centered(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| 2.0 * v - 1.0).collect()
}

pub(crate) fn design_matrix(points: &[Vec<f64>], basis: Basis) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = points.iter().map(|p| basis_row(&centered(p), basis)).collect();
    let p = rows.first().map_or(1, Vec::len);
    DMatrix::from_row_iterator(rows.len(), p, rows.into_iter().flatten())
}

impl PolynomialModel {
    pub fn fit(data: &TrainingData, basis: Basis) -> Result<Self> {
        Ok(Self::fit_with_leverages(data, basis)?.0)
    }

    fn fit_with_leverages(data: &TrainingData, basis: Basis) -> Result<(Self, Vec<f64>)> {
        let x = design_matrix(&data.points, basis);
        let y = DVector::from_column_slice(&data.y);
        let ls = least_squares(&x, &y)?;
        Ok((Self { basis, coefficients: ls.coefficients.iter().copied().collect() }, ls.leverages))
    }
}

impl FittedModel for PolynomialModel {
    fn predict_unit(&self, u: &[f64]) -> f64 {
        basis_row(&centered(u), self.basis)
            .iter()
            .zip(&self.coefficients)
            .map(|(a, b)| a * b)
            .sum()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// Leverage above which the hat-matrix shortcut is not trusted.
const MAX_LEVERAGE: f64 = 1.0 - 1e-8;

pub struct PolynomialFamily;

fn basis_of(spec: &ModelSpec) -> Result<Basis> {
    match spec.kind {
        ModelKind::Polynomial { basis } => Ok(basis),
        _ => Err(Error::Argument(format!("{} is not a polynomial spec", spec.name()))),
    }
}

impl SurrogateFamily for PolynomialFamily {
    fn id(&self) -> &'static str {
        "polynomial"
    }

    fn train(&self, spec: &ModelSpec, data: &TrainingData) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(PolynomialModel::fit(data, basis_of(spec)?)?))
    }

    fn restore(&self, spec: &ModelSpec, _data: &TrainingData, params: &serde_json::Value) -> Result<Box<dyn FittedModel>> {
        let model: PolynomialModel = params_from(params)?;
        if model.basis != basis_of(spec)? {
            return Err(Error::Data("polynomial basis does not match spec".into()));
        }
        Ok(Box::new(model))
    }

    /// Hat-matrix identity: `e_i^loo = e_i / (1 − h_ii)`.
    fn loo_predictions(&self, spec: &ModelSpec, data: &TrainingData) -> Option<Result<Vec<f64>>> {
        let basis = match basis_of(spec) {
            Ok(b) => b,
            Err(e) => return Some(Err(e)),
        };
        let (model, leverages) = match PolynomialModel::fit_with_leverages(data, basis) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        if leverages.iter().any(|&h| h > MAX_LEVERAGE) {
            return None;
        }
        Some(Ok(data
            .points
            .iter()
            .zip(&data.y)
            .zip(&leverages)
            .map(|((p, y), h)| {
                let residual = y - model.predict_unit(p);
                y - residual / (1.0 - h)
            })
            .collect()))
    }
}
