//! Quality measures for outputs discretized on a shared one-dimensional grid.
//! Every grid point gets its own surrogate; all points share one fold
//! assignment. Stationary measures normalize by the grid-averaged total sum
//! of squares instead of the per-point one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossval::{assign_folds, k_fold_cv, CvResult, FoldAssignment};
use crate::error::{Error, Result};
use crate::quality::{sum_of_squares, total_sum_of_squares};
use crate::sampling::{DesignMatrix, OutputVector};
use crate::surrogate::ModelSpec;

/// Points whose total sum of squares falls below this fraction of the
/// stationary one report no ordinary CoD.
pub const UNDEFINED_COD_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FieldDataset {
    design: DesignMatrix,
    grid: Vec<f64>,
    /// `values[j][i]` is sample `j` at grid point `i`.
    values: Vec<Vec<f64>>,
}

impl FieldDataset {
    pub fn new(design: DesignMatrix, grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Data("field grid is empty".into()));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("field grid must be finite and strictly increasing".into()));
        }
        if values.len() != design.rows() {
            return Err(Error::Dimension(format!("{} field samples for {} design rows", values.len(), design.rows())));
        }
        for (j, row) in values.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::Dimension(format!(
                    "sample {} has {} values, grid has {} points",
                    j + 1,
                    row.len(),
                    grid.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("sample {} has a non-finite value", j + 1)));
            }
        }
        Ok(Self { design, grid, values })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn points(&self) -> usize {
        self.grid.len()
    }

    /// Output of every sample at grid point `i`.
    pub fn at(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }
}

/// Cross-validation results along the grid; a failed point keeps its message.
#[derive(Debug, Clone)]
pub struct FieldCv {
    pub assignment: FoldAssignment,
    pub points: Vec<std::result::Result<CvResult, String>>,
}

impl FieldCv {
    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().err().map(|e| (i, e.as_str())))
            .collect()
    }
}

pub fn field_cross_validate(spec: &ModelSpec, data: &FieldDataset, q: usize, seed: u64) -> Result<FieldCv> {
    let assignment = assign_folds(&data.design, q, seed)?;
    field_cross_validate_with(spec, data, &assignment)
}

pub fn field_cross_validate_with(spec: &ModelSpec, data: &FieldDataset, assignment: &FoldAssignment) -> Result<FieldCv> {
    spec.validate()?;
    if assignment.n() != data.n() {
        return Err(Error::Argument(format!("fold assignment covers {} points, field has {}", assignment.n(), data.n())));
    }
    let points = (0..data.points())
        .into_par_iter()
        .map(|i| {
            let y = OutputVector::new(data.at(i));
            k_fold_cv(spec, &data.design, &y, assignment).map_err(|e| e.to_string())
        })
        .collect();
    Ok(FieldCv { assignment: assignment.clone(), points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub t: f64,
    pub ss_t: f64,
    pub ss_e: Option<f64>,
    pub ss_e_cv: Option<f64>,
    /// Absent when the point's total sum of squares is negligible.
    pub cod: Option<f64>,
    pub cod_stat: Option<f64>,
    pub cop_stat: Option<f64>,
    pub rmse_fit: Option<f64>,
    pub rmse_cv: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldQualityReport {
    pub n: usize,
    pub ss_t_stat: f64,
    pub points: Vec<FieldPoint>,
}

impl FieldQualityReport {
    pub fn cod_stat(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.cod_stat).collect()
    }

    pub fn cop_stat(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.cop_stat).collect()
    }
}

pub fn field_report(data: &FieldDataset, cv: &FieldCv) -> Result<FieldQualityReport> {
    if cv.points.len() != data.points() {
        return Err(Error::Dimension(format!("{} CV results for {} grid points", cv.points.len(), data.points())));
    }
    let n = data.n();
    let ss_t: Vec<f64> = (0..data.points()).map(|i| total_sum_of_squares(&data.at(i))).collect();
    let ss_t_stat = ss_t.iter().sum::<f64>() / ss_t.len() as f64;
    if !(ss_t_stat > 0.0) {
        return Err(Error::DegenerateOutput("field has zero stationary total sum of squares".into()));
    }
    let mut points = Vec::with_capacity(data.points());
    for (i, result) in cv.points.iter().enumerate() {
        let mut point = FieldPoint {
            t: data.grid[i],
            ss_t: ss_t[i],
            ss_e: None,
            ss_e_cv: None,
            cod: None,
            cod_stat: None,
            cop_stat: None,
            rmse_fit: None,
            rmse_cv: None,
            error: None,
        };
        match result {
            Ok(r) => {
                if r.n() != n {
                    return Err(Error::Dimension(format!("grid point {} has {} residuals, expected {n}", i + 1, r.n())));
                }
                let ss_e = sum_of_squares(&r.fit_residuals);
                let ss_e_cv = sum_of_squares(&r.cv_residuals);
                point.ss_e = Some(ss_e);
                point.ss_e_cv = Some(ss_e_cv);
                point.rmse_fit = Some((ss_e / n as f64).sqrt());
                point.rmse_cv = Some((ss_e_cv / n as f64).sqrt());
                point.cod_stat = Some(1.0 - ss_e / ss_t_stat);
                point.cop_stat = Some(1.0 - ss_e_cv / ss_t_stat);
                if ss_t[i] >= UNDEFINED_COD_FRACTION * ss_t_stat {
                    point.cod = Some(1.0 - ss_e / ss_t[i]);
                }
            }
            Err(e) => point.error = Some(e.clone()),
        }
        points.push(point);
    }
    Ok(FieldQualityReport { n, ss_t_stat, points })
}
