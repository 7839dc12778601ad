//! Approximation models ŷ(x) and the registry that selects them by name.
//!
//! Every family implements [`SurrogateFamily`]. Training maps inputs to the
//! unit cube of the design bounds, restricted to the active inputs, and hands
//! the family a [`TrainingData`]; the family returns a boxed [`FittedModel`]
//! that predicts in those unit coordinates. [`TrainedSurrogate`] wraps it with
//! the spec and bounds needed to predict in original units.

mod basis;
mod kriging;
mod linalg;
mod mls;
mod polynomial;
mod registry;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{Bounds, DesignMatrix, OutputVector};

pub use basis::{basis_row, basis_size};
pub use kriging::{
    concentrated_log_likelihood, theta_grid, KrigingFamily, KrigingModel, NUGGET_CAP, NUGGET_START,
    THETA_MAX, THETA_MIN,
};
pub use mls::{mls_weight, MlsFamily, MlsModel, MLS_SHAPE};
pub use polynomial::{PolynomialFamily, PolynomialModel};
pub use registry::{family, family_for, model_names, spec_by_name};

/// Model schema tag written into serialized surrogates.
pub const MODEL_SCHEMA: &str = "prognosis-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anisotropy {
    Isotropic,
    Anisotropic,
}

/// Which approximation to train and on which inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelKind {
    Polynomial { basis: Basis },
    /// `radius` is a fraction of the diagonal of the normalized input cube.
    Mls { basis: Basis, radius: f64 },
    Kriging { anisotropy: Anisotropy },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// 0-based input columns; `None` uses every column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_inputs: Option<Vec<usize>>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, active_inputs: None }
    }

    pub fn polynomial(basis: Basis) -> Self {
        Self::new(ModelKind::Polynomial { basis })
    }

    pub fn mls(basis: Basis, radius: f64) -> Self {
        Self::new(ModelKind::Mls { basis, radius })
    }

    pub fn kriging(anisotropy: Anisotropy) -> Self {
        Self::new(ModelKind::Kriging { anisotropy })
    }

    pub fn with_inputs(mut self, inputs: Vec<usize>) -> Self {
        self.active_inputs = Some(inputs);
        self
    }

    /// Registry name of the family variant, e.g. `kriging-aniso`.
    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Polynomial { basis: Basis::Linear } => "polynomial-linear",
            ModelKind::Polynomial { basis: Basis::Quadratic } => "polynomial-quadratic",
            ModelKind::Mls { basis: Basis::Linear, .. } => "mls-linear",
            ModelKind::Mls { basis: Basis::Quadratic, .. } => "mls-quadratic",
            ModelKind::Kriging { anisotropy: Anisotropy::Isotropic } => "kriging-iso",
            ModelKind::Kriging { anisotropy: Anisotropy::Anisotropic } => "kriging-aniso",
        }
    }

    /// Human readable label as used in reports ("Anisotropic Kriging").
    pub fn label(&self) -> &'static str {
        match self.kind {
            ModelKind::Polynomial { basis: Basis::Linear } => "Linear Polynomial",
            ModelKind::Polynomial { basis: Basis::Quadratic } => "Quadratic Polynomial",
            ModelKind::Mls { basis: Basis::Linear, .. } => "Linear MLS",
            ModelKind::Mls { basis: Basis::Quadratic, .. } => "Quadratic MLS",
            ModelKind::Kriging { anisotropy: Anisotropy::Isotropic } => "Isotropic Kriging",
            ModelKind::Kriging { anisotropy: Anisotropy::Anisotropic } => "Anisotropic Kriging",
        }
    }

    /// Family complexity rank used for tie-breaking: polynomial < mls < kriging.
    pub fn family_rank(&self) -> u8 {
        match self.kind {
            ModelKind::Polynomial { .. } => 0,
            ModelKind::Mls { .. } => 1,
            ModelKind::Kriging { .. } => 2,
        }
    }

    /// Basis order (kriging counts as constant trend, isotropic before anisotropic).
    pub fn order_rank(&self) -> u8 {
        match self.kind {
            ModelKind::Polynomial { basis } | ModelKind::Mls { basis, .. } => match basis {
                Basis::Linear => 1,
                Basis::Quadratic => 2,
            },
            ModelKind::Kriging { anisotropy: Anisotropy::Isotropic } => 1,
            ModelKind::Kriging { anisotropy: Anisotropy::Anisotropic } => 2,
        }
    }

    /// Resolved active inputs for an `m`-column design.
    pub fn resolve_inputs(&self, m: usize) -> Result<Vec<usize>> {
        match &self.active_inputs {
            None => Ok((0..m).collect()),
            Some(list) => {
                if list.is_empty() {
                    return Err(Error::Argument("active input set must not be empty".into()));
                }
                let mut seen = vec![false; m];
                for &j in list {
                    if j >= m {
                        return Err(Error::Dimension(format!(
                            "active input {} exceeds the {m} design columns",
                            j + 1
                        )));
                    }
                    if std::mem::replace(&mut seen[j], true) {
                        return Err(Error::Argument(format!("active input {} listed twice", j + 1)));
                    }
                }
                Ok(list.clone())
            }
        }
    }

    /// Number of regression terms (minimum support count) for `k` active inputs.
    pub fn basis_terms(&self, k: usize) -> usize {
        match self.kind {
            ModelKind::Polynomial { basis } | ModelKind::Mls { basis, .. } => basis_size(k, basis),
            ModelKind::Kriging { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ModelKind::Mls { radius, .. } = self.kind {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::Argument(format!("MLS radius must be positive, got {radius}")));
            }
        }
        if matches!(&self.active_inputs, Some(v) if v.is_empty()) {
            return Err(Error::Argument("active input set must not be empty".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        if let ModelKind::Mls { radius, .. } = self.kind {
            write!(f, "(r={radius})")?;
        }
        Ok(())
    }
}

/// Support points in unit-cube coordinates of the active inputs.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub points: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl TrainingData {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn without(&self, skip: &[bool]) -> Self {
        let keep = |i: &usize| !skip[*i];
        Self {
            points: (0..self.n()).filter(keep).map(|i| self.points[i].clone()).collect(),
            y: (0..self.n()).filter(keep).map(|i| self.y[i]).collect(),
        }
    }
}

/// A trained family-specific predictor in unit-cube coordinates.
pub trait FittedModel: Send + Sync + fmt::Debug {
    fn predict_unit(&self, u: &[f64]) -> f64;
    /// Family parameters for serialization.
    fn params(&self) -> serde_json::Value;
}

/// One interchangeable surrogate family.
pub trait SurrogateFamily: Send + Sync {
    /// Family tag, matching the `family` field of [`ModelKind`].
    fn id(&self) -> &'static str;

    fn train(&self, spec: &ModelSpec, data: &TrainingData) -> Result<Box<dyn FittedModel>>;

    /// Rebuilds a model from [`FittedModel::params`].
    fn restore(
        &self,
        spec: &ModelSpec,
        data: &TrainingData,
        params: &serde_json::Value,
    ) -> Result<Box<dyn FittedModel>>;

    /// Leave-one-out predictions without explicit retraining, when the family
    /// has a closed form for them.
    fn loo_predictions(&self, _spec: &ModelSpec, _data: &TrainingData) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// A fitted approximation together with what is needed to evaluate it in
/// original input units.
#[derive(Debug)]
pub struct TrainedSurrogate {
    spec: ModelSpec,
    bounds: Bounds,
    inputs: Vec<usize>,
    data: TrainingData,
    model: Box<dyn FittedModel>,
}

/// Maps a design to unit coordinates of the selected inputs.
pub(crate) fn training_data(design: &DesignMatrix, y: &[f64], inputs: &[usize]) -> TrainingData {
    let bounds = design.bounds();
    let points = design
        .iter_rows()
        .map(|row| {
            inputs
                .iter()
                .map(|&j| (row[j] - bounds.lower()[j]) / bounds.width(j))
                .collect()
        })
        .collect();
    TrainingData { points, y: y.to_vec() }
}

pub(crate) fn check_training_shapes(spec: &ModelSpec, design: &DesignMatrix, y: &OutputVector) -> Result<Vec<usize>> {
    spec.validate()?;
    if design.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows but {} output values",
            design.rows(),
            y.len()
        )));
    }
    if y.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("output contains non-finite values".into()));
    }
    spec.resolve_inputs(design.cols())
}

/// Trains `spec` on the support points.
pub fn train(spec: &ModelSpec, design: &DesignMatrix, y: &OutputVector) -> Result<TrainedSurrogate> {
    let inputs = check_training_shapes(spec, design, y)?;
    let data = training_data(design, &y.values, &inputs);
    let model = family_for(spec).train(spec, &data)?;
    Ok(TrainedSurrogate { spec: spec.clone(), bounds: design.bounds().clone(), inputs, data, model })
}

impl TrainedSurrogate {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// 0-based active input columns.
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn model(&self) -> &dyn FittedModel {
        self.model.as_ref()
    }

    /// Accepts either a full-width point (all design columns) or a point
    /// restricted to the active inputs.
    pub fn predict_point(&self, x: &[f64]) -> Result<f64> {
        let u: Vec<f64> = if x.len() == self.bounds.dim() {
            self.inputs
                .iter()
                .map(|&j| (x[j] - self.bounds.lower()[j]) / self.bounds.width(j))
                .collect()
        } else if x.len() == self.inputs.len() {
            self.inputs
                .iter()
                .zip(x)
                .map(|(&j, v)| (v - self.bounds.lower()[j]) / self.bounds.width(j))
                .collect()
        } else {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, model expects {} (or {} active)",
                x.len(),
                self.bounds.dim(),
                self.inputs.len()
            )));
        };
        Ok(self.model.predict_unit(&u))
    }

    pub fn predict(&self, points: &DesignMatrix) -> Result<OutputVector> {
        points
            .iter_rows()
            .map(|r| self.predict_point(r))
            .collect::<Result<Vec<_>>>()
            .map(OutputVector::new)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            schema: MODEL_SCHEMA.to_string(),
            spec: self.spec.clone(),
            bounds: self.bounds.clone(),
            inputs: self.inputs.clone(),
            supports: self.data.points.clone(),
            values: self.data.y.clone(),
            params: self.model.params(),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if doc.schema != MODEL_SCHEMA {
            return Err(Error::Data(format!("unsupported model schema '{}'", doc.schema)));
        }
        let inputs = doc.spec.resolve_inputs(doc.bounds.dim())?;
        if inputs != doc.inputs || doc.supports.len() != doc.values.len() {
            return Err(Error::Data("model document is inconsistent".into()));
        }
        let data = TrainingData { points: doc.supports.clone(), y: doc.values.clone() };
        let model = family_for(&doc.spec).restore(&doc.spec, &data, &doc.params)?;
        Ok(Self { spec: doc.spec.clone(), bounds: doc.bounds.clone(), inputs, data, model })
    }
}

/// Versioned JSON form of a [`TrainedSurrogate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema: String,
    pub spec: ModelSpec,
    pub bounds: Bounds,
    pub inputs: Vec<usize>,
    /// Support points in unit coordinates of the active inputs.
    pub supports: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub params: serde_json::Value,
}

pub(crate) fn params_from<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Data(format!("bad model parameters: {e}")))
}
