//! Fold mapping and k-fold / leave-one-out cross-validation.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::sampling::{DesignMatrix, OutputVector};
use crate::surrogate::{self, check_training_shapes, family_for, training_data, ModelSpec, TrainedSurrogate, TrainingData};

/// Number of subsets used when none is given.
pub const DEFAULT_FOLDS: usize = 5;

/// Mapping of every support point to one of `q` subsets (0-based labels).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    q: usize,
    map: Vec<usize>,
}

impl FoldAssignment {
    /// Validates that every subset is used and sizes differ by at most one.
    pub fn new(q: usize, map: Vec<usize>) -> Result<Self> {
        if q < 2 || q > map.len() {
            return Err(Error::Argument(format!("need 2 ≤ q ≤ n, got q = {q}, n = {}", map.len())));
        }
        let mut sizes = vec![0usize; q];
        for &f in &map {
            if f >= q {
                return Err(Error::Argument(format!("fold label {f} out of range for q = {q}")));
            }
            sizes[f] += 1;
        }
        let (lo, hi) = (sizes.iter().min().copied().unwrap_or(0), sizes.iter().max().copied().unwrap_or(0));
        if lo == 0 || hi - lo > 1 {
            return Err(Error::Argument(format!("unbalanced folds: sizes {sizes:?}")));
        }
        Ok(Self { q, map })
    }

    /// Every point in its own subset.
    pub fn leave_one_out(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_leave_one_out(&self) -> bool {
        self.q == self.map.len()
    }

    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.map.len()).filter(|&i| self.map[i] == fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q];
        for &f in &self.map {
            sizes[f] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMethod {
    /// Cluster the inputs, then deal each cluster across the folds.
    #[default]
    Clustered,
    /// Shuffle and deal; no spatial structure.
    Random,
}

/// Space-covering assignment with the default clustered method.
pub fn assign_folds(design: &DesignMatrix, q: usize, seed: u64) -> Result<FoldAssignment> {
    assign_folds_with(design, q, seed, FoldMethod::Clustered)
}

/// Assigns folds so that each one covers the input space almost uniformly.
///
/// Clustered: seeded k-means with `q` clusters on the normalized inputs; the
/// members of each cluster are shuffled and dealt round-robin onto the folds
/// with one counter shared across clusters, so fold sizes differ by at most
/// one and every fold draws from every cluster.
pub fn assign_folds_with(design: &DesignMatrix, q: usize, seed: u64, method: FoldMethod) -> Result<FoldAssignment> {
    let n = design.rows();
    if q < 2 || q > n {
        return Err(Error::Argument(format!("need 2 ≤ q ≤ n, got q = {q}, n = {n}")));
    }
    let mut rng = rng::substream(seed, streams::FOLDS);
    let groups: Vec<Vec<usize>> = match method {
        FoldMethod::Random => vec![(0..n).collect()],
        FoldMethod::Clustered if q == n => vec![(0..n).collect()],
        FoldMethod::Clustered => kmeans(&design.normalized_rows(), q, &mut rng),
    };
    let mut map = vec![0; n];
    let mut counter = 0usize;
    for mut group in groups {
        group.shuffle(&mut rng);
        for i in group {
            map[i] = counter % q;
            counter += 1;
        }
    }
    FoldAssignment::new(q, map)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding; returns the member lists.
fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("k ≥ 1");
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]]).total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                    })
                    .expect("n ≥ 1");
                centers[c] = points[far].clone();
                labels[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}

/// Fitting and cross-validation residuals of one model on one data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub y: Vec<f64>,
    /// Predictions of the model trained on all supports.
    pub fitted: Vec<f64>,
    /// Predictions of the models trained without each point's subset.
    pub cv_pred: Vec<f64>,
    pub fit_residuals: Vec<f64>,
    pub cv_residuals: Vec<f64>,
    pub assignment: FoldAssignment,
}

impl CvResult {
    pub fn from_predictions(y: Vec<f64>, fitted: Vec<f64>, cv_pred: Vec<f64>, assignment: FoldAssignment) -> Self {
        let fit_residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let cv_residuals = y.iter().zip(&cv_pred).map(|(a, b)| a - b).collect();
        Self { y, fitted, cv_pred, fit_residuals, cv_residuals, assignment }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

fn fold_predictions(
    spec: &ModelSpec,
    data: &TrainingData,
    assignment: &FoldAssignment,
) -> Result<Vec<f64>> {
    let family = family_for(spec);
    let per_fold: Vec<Result<Vec<(usize, f64)>>> = (0..assignment.q())
        .into_par_iter()
        .map(|fold| {
            let skip: Vec<bool> = assignment.map().iter().map(|&f| f == fold).collect();
            let model = family
                .train(spec, &data.without(&skip))
                .map_err(|e| Error::Fold { fold: fold + 1, source: Box::new(e) })?;
            Ok(assignment
                .members(fold)
                .into_iter()
                .map(|i| (i, model.predict_unit(&data.points[i])))
                .collect())
        })
        .collect();
    let mut cv_pred = vec![f64::NAN; data.n()];
    for fold in per_fold {
        for (i, v) in fold? {
            cv_pred[i] = v;
        }
    }
    Ok(cv_pred)
}

fn check_assignment(design: &DesignMatrix, assignment: &FoldAssignment) -> Result<()> {
    if assignment.n() != design.rows() {
        return Err(Error::Argument(format!(
            "fold assignment covers {} points, design has {}",
            assignment.n(),
            design.rows()
        )));
    }
    Ok(())
}

/// k-fold cross-validation; also returns the full-data model.
pub fn k_fold_cv_with_model(
    spec: &ModelSpec,
    design: &DesignMatrix,
    y: &OutputVector,
    assignment: &FoldAssignment,
) -> Result<(TrainedSurrogate, CvResult)> {
    check_assignment(design, assignment)?;
    let inputs = check_training_shapes(spec, design, y)?;
    let data = training_data(design, &y.values, &inputs);
    let (full, cv_pred) = rayon::join(
        || surrogate::train(spec, design, y),
        || fold_predictions(spec, &data, assignment),
    );
    let full = full?;
    let fitted = data.points.iter().map(|p| full.model().predict_unit(p)).collect();
    Ok((full, CvResult::from_predictions(y.values.clone(), fitted, cv_pred?, assignment.clone())))
}

/// k-fold cross-validation: one model per held-out subset plus the full model.
pub fn k_fold_cv(spec: &ModelSpec, design: &DesignMatrix, y: &OutputVector, assignment: &FoldAssignment) -> Result<CvResult> {
    k_fold_cv_with_model(spec, design, y, assignment).map(|(_, cv)| cv)
}

/// Leave-one-out cross-validation. Families with a closed form (polynomial
/// hat matrix, Kriging with the full-data correlation parameters) skip the
/// `n` retrainings; others retrain explicitly.
pub fn loo_cv(spec: &ModelSpec, design: &DesignMatrix, y: &OutputVector) -> Result<CvResult> {
    let n = design.rows();
    let assignment = FoldAssignment::leave_one_out(n)?;
    let inputs = check_training_shapes(spec, design, y)?;
    let data = training_data(design, &y.values, &inputs);
    match family_for(spec).loo_predictions(spec, &data) {
        Some(cv_pred) => {
            let full = surrogate::train(spec, design, y)?;
            let fitted = data.points.iter().map(|p| full.model().predict_unit(p)).collect();
            Ok(CvResult::from_predictions(y.values.clone(), fitted, cv_pred?, assignment))
        }
        None => k_fold_cv(spec, design, y, &assignment),
    }
}

/// Leave-one-out by explicit retraining, regardless of closed forms.
pub fn loo_cv_explicit(spec: &ModelSpec, design: &DesignMatrix, y: &OutputVector) -> Result<CvResult> {
    k_fold_cv(spec, design, y, &FoldAssignment::leave_one_out(design.rows())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{lhs_sample, Bounds};

    fn unit_design(n: usize, m: usize, seed: u64) -> DesignMatrix {
        lhs_sample(n, &Bounds::uniform(m, 0.0, 1.0).unwrap(), seed).unwrap()
    }

    #[test]
    fn loo_assignment_when_q_equals_n() {
        let d = unit_design(10, 2, 1);
        let a = assign_folds(&d, 10, 3).unwrap();
        assert!(a.is_leave_one_out());
        let mut labels = a.map().to_vec();
        labels.sort_unstable();
        assert_eq!(labels, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn five_folds_of_two() {
        let d = unit_design(10, 2, 1);
        for method in [FoldMethod::Clustered, FoldMethod::Random] {
            let a = assign_folds_with(&d, 5, 3, method).unwrap();
            assert_eq!(a.sizes(), vec![2; 5]);
        }
    }

    #[test]
    fn invalid_fold_counts() {
        let d = unit_design(10, 2, 1);
        assert!(assign_folds(&d, 1, 0).is_err());
        assert!(assign_folds(&d, 11, 0).is_err());
        assert!(FoldAssignment::new(2, vec![0, 0, 0, 1]).is_err());
        assert!(FoldAssignment::new(3, vec![0, 1, 1, 0]).is_err());
    }

    #[test]
    fn assignment_is_seeded() {
        let d = unit_design(40, 3, 1);
        assert_eq!(assign_folds(&d, 5, 9).unwrap(), assign_folds(&d, 5, 9).unwrap());
        assert_ne!(assign_folds(&d, 5, 9).unwrap(), assign_folds(&d, 5, 10).unwrap());
    }

    #[test]
    fn fold_centroids_cover_the_space() {
        let d = unit_design(100, 4, 12);
        let a = assign_folds(&d, 5, 4).unwrap();
        let rows = d.normalized_rows();
        let centroid = |idx: &[usize]| -> Vec<f64> {
            (0..4).map(|j| idx.iter().map(|&i| rows[i][j]).sum::<f64>() / idx.len() as f64).collect()
        };
        let all: Vec<usize> = (0..100).collect();
        let global = centroid(&all);
        for f in 0..5 {
            let c = centroid(&a.members(f));
            assert!(sq_dist(&c, &global).sqrt() < 0.25);
        }
    }
}
