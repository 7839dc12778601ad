use serde::{Deserialize, Serialize};

use super::Bounds;
use crate::error::{Error, Result};

/// Coordinates closer than this in every dimension count as the same point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// `n × m` input samples, stored row-major, together with their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    bounds: Bounds,
}

impl DesignMatrix {
    /// Validates bounds membership and rejects duplicate rows.
    pub fn new(rows: Vec<Vec<f64>>, bounds: Bounds) -> Result<Self> {
        let design = Self::from_rows_unchecked(rows, bounds)?;
        design.validate()?;
        Ok(design)
    }

    /// Builds the matrix checking only shapes. Used for evaluation point sets
    /// (test data, sensitivity bundles) where repeated points are harmless.
    pub fn from_rows_unchecked(rows: Vec<Vec<f64>>, bounds: Bounds) -> Result<Self> {
        let cols = bounds.dim();
        if rows.is_empty() {
            return Err(Error::Design("a design needs at least one row".into()));
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {} has {} values, bounds have {cols} dimensions",
                    i + 1,
                    row.len()
                )));
            }
            values.extend(row);
        }
        Ok(Self { rows: n, cols, values, bounds })
    }

    pub(crate) fn from_flat(rows: usize, values: Vec<f64>, bounds: Bounds) -> Self {
        debug_assert_eq!(values.len(), rows * bounds.dim());
        Self { rows, cols: bounds.dim(), values, bounds }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.rows {
            let row = self.row(i);
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Design(format!("row {} has a non-finite value", i + 1)));
            }
            if !self.bounds.contains(row) {
                return Err(Error::Design(format!("row {} lies outside the bounds", i + 1)));
            }
        }
        if let Some((a, b)) = self.find_duplicate() {
            return Err(Error::Design(format!("rows {} and {} coincide", a + 1, b + 1)));
        }
        Ok(())
    }

    /// First pair of rows equal within [`DUPLICATE_TOLERANCE`] per coordinate.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| self.row(a)[0].total_cmp(&self.row(b)[0]));
        for (k, &a) in order.iter().enumerate() {
            let ra = self.row(a);
            for &b in &order[k + 1..] {
                let rb = self.row(b);
                if rb[0] - ra[0] > DUPLICATE_TOLERANCE {
                    break;
                }
                if ra.iter().zip(rb).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOLERANCE) {
                    return Some((a.min(b), a.max(b)));
                }
            }
        }
        None
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Rows normalized to the unit cube of the bounds.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(|r| self.bounds.normalize(r)).collect()
    }

    /// Subset of rows, keeping the bounds.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::from_flat(indices.len(), values, self.bounds.clone())
    }

    /// Subset of columns (0-based), keeping the matching bounds.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let bounds = self.bounds.select(cols)?;
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for row in self.iter_rows() {
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Ok(Self::from_flat(self.rows, values, bounds))
    }

    /// Same samples with replaced bounds (must still contain every row).
    pub fn with_bounds(&self, bounds: Bounds) -> Result<Self> {
        if bounds.dim() != self.cols {
            return Err(Error::Dimension(format!(
                "bounds have {} dimensions, design has {}",
                bounds.dim(),
                self.cols
            )));
        }
        let d = Self { bounds, ..self.clone() };
        for (i, row) in d.iter_rows().enumerate() {
            if !d.bounds.contains(row) {
                return Err(Error::Design(format!("row {} lies outside the bounds", i + 1)));
            }
        }
        Ok(d)
    }
}

/// Response values `y` evaluated at the rows of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
}

impl OutputVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, noise_seed: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { values: indices.iter().map(|&i| self.values[i]).collect(), noise_seed: self.noise_seed }
    }
}

impl From<Vec<f64>> for OutputVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}
