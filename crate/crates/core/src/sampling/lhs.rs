use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bounds, DesignMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Latin hypercube sample: every column has exactly one point in each of the
/// `n` equal-width strata, placed uniformly at random inside its stratum.
pub fn lhs_sample(n: usize, bounds: &Bounds, seed: u64) -> Result<DesignMatrix> {
    if n == 0 {
        return Err(Error::Argument("sample size must be at least 1".into()));
    }
    let m = bounds.dim();
    let mut rng = rng::substream(seed, streams::SAMPLING);
    let mut values = vec![0.0; n * m];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..m {
        strata.shuffle(&mut rng);
        let (lo, width) = (bounds.lower()[j], bounds.width(j));
        for (i, &k) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            let mut v = lo + (k as f64 + u) / n as f64 * width;
            // Rounding can push the last stratum onto the upper edge.
            let stratum_hi = lo + (k + 1) as f64 / n as f64 * width;
            if v >= stratum_hi {
                v = stratum_hi - (stratum_hi.abs().max(width) * f64::EPSILON);
            }
            values[i * m + j] = v;
        }
    }
    let design = DesignMatrix::from_flat(n, values, bounds.clone());
    if let Some((a, b)) = design.find_duplicate() {
        // Only possible with astronomically small strata.
        return Err(Error::Design(format!("sampler produced coinciding rows {} and {}", a + 1, b + 1)));
    }
    Ok(design)
}

/// Default number of swap attempts for [`improve_lhs`].
pub fn default_improve_iterations(n: usize, m: usize) -> usize {
    10 * n * m
}

/// Stratum index of every entry of column `j`.
pub fn stratum_of(bounds: &Bounds, n: usize, j: usize, v: f64) -> usize {
    let u = (v - bounds.lower()[j]) / bounds.width(j);
    ((u * n as f64).floor() as usize).min(n - 1)
}

/// Pearson correlation matrix of the design columns.
pub fn correlation_matrix(design: &DesignMatrix) -> Vec<Vec<f64>> {
    let state = CorrelationState::new(design);
    (0..state.m)
        .map(|j| (0..state.m).map(|k| state.corr(j, k)).collect())
        .collect()
}

/// Largest absolute off-diagonal correlation.
pub fn max_abs_correlation(design: &DesignMatrix) -> f64 {
    CorrelationState::new(design).max_abs()
}

struct CorrelationState {
    m: usize,
    centered: Vec<Vec<f64>>,
    cross: Vec<Vec<f64>>,
}

impl CorrelationState {
    fn new(design: &DesignMatrix) -> Self {
        let m = design.cols();
        let centered: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let col = design.column(j);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                col.into_iter().map(|v| v - mean).collect()
            })
            .collect();
        let cross = (0..m)
            .map(|j| {
                (0..m)
                    .map(|k| centered[j].iter().zip(&centered[k]).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        Self { m, centered, cross }
    }

    fn corr(&self, j: usize, k: usize) -> f64 {
        let denom = (self.cross[j][j] * self.cross[k][k]).sqrt();
        if denom > 0.0 {
            self.cross[j][k] / denom
        } else {
            0.0
        }
    }

    fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.m {
            for k in j + 1..self.m {
                best = best.max(self.corr(j, k).abs());
            }
        }
        best
    }

    /// Max |corr| if entries `r1`, `r2` of column `j` were exchanged.
    fn max_abs_after_swap(&self, j: usize, r1: usize, r2: usize) -> f64 {
        let delta = self.centered[j][r2] - self.centered[j][r1];
        let mut best = 0.0f64;
        for a in 0..self.m {
            if a == j {
                continue;
            }
            let updated = self.cross[j][a] + delta * (self.centered[a][r1] - self.centered[a][r2]);
            let denom = (self.cross[j][j] * self.cross[a][a]).sqrt();
            if denom > 0.0 {
                best = best.max((updated / denom).abs());
            }
            for b in a + 1..self.m {
                if b != j {
                    best = best.max(self.corr(a, b).abs());
                }
            }
        }
        best
    }

    fn swap(&mut self, j: usize, r1: usize, r2: usize) {
        let delta = self.centered[j][r2] - self.centered[j][r1];
        for a in 0..self.m {
            if a != j {
                let change = delta * (self.centered[a][r1] - self.centered[a][r2]);
                self.cross[j][a] += change;
                self.cross[a][j] += change;
            }
        }
        self.centered[j].swap(r1, r2);
    }
}

/// Reduces column correlations of a design by randomly exchanging two
/// entries of one column, keeping an exchange only when the largest absolute
/// pairwise correlation drops. Exchanges within a column keep every stratum
/// occupied, so a Latin hypercube stays a Latin hypercube.
pub fn improve_lhs(design: &DesignMatrix, iterations: usize, seed: u64) -> DesignMatrix {
    let (n, m) = (design.rows(), design.cols());
    if iterations == 0 || m < 2 || n < 2 {
        return design.clone();
    }
    let mut rng = rng::substream(seed, streams::IMPROVE);
    let mut state = CorrelationState::new(design);
    let mut current = state.max_abs();
    let mut out = design.clone();
    for _ in 0..iterations {
        let j = rng.random_range(0..m);
        let r1 = rng.random_range(0..n);
        let mut r2 = rng.random_range(0..n - 1);
        if r2 >= r1 {
            r2 += 1;
        }
        let candidate = state.max_abs_after_swap(j, r1, r2);
        if candidate < current {
            state.swap(j, r1, r2);
            let (a, b) = (out.get(r1, j), out.get(r2, j));
            out.set(r1, j, b);
            out.set(r2, j, a);
            current = candidate;
        }
    }
    // Guard against accumulated rounding in the incremental sums.
    if max_abs_correlation(&out) > max_abs_correlation(design) {
        return design.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strata_counts(d: &DesignMatrix) -> Vec<Vec<usize>> {
        let n = d.rows();
        (0..d.cols())
            .map(|j| {
                let mut counts = vec![0; n];
                for i in 0..n {
                    counts[stratum_of(d.bounds(), n, j, d.get(i, j))] += 1;
                }
                counts
            })
            .collect()
    }

    fn assert_stratified(d: &DesignMatrix) {
        for counts in strata_counts(d) {
            assert!(counts.iter().all(|&c| c == 1), "{counts:?}");
        }
    }

    #[test]
    fn single_point_in_unit_interval() {
        let d = lhs_sample(1, &Bounds::uniform(1, 0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(d.rows(), 1);
        let v = d.get(0, 0);
        assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn four_points_one_per_quarter() {
        let d = lhs_sample(4, &Bounds::uniform(2, 0.0, 1.0).unwrap(), 11).unwrap();
        for j in 0..2 {
            let mut col = d.column(j);
            col.sort_by(f64::total_cmp);
            for (k, v) in col.iter().enumerate() {
                assert!(*v >= k as f64 * 0.25 && *v < (k + 1) as f64 * 0.25);
            }
        }
    }

    #[test]
    fn seeds_give_distinct_stratified_designs() {
        let b = Bounds::uniform(5, -std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let a = lhs_sample(100, &b, 1).unwrap();
        let c = lhs_sample(100, &b, 2).unwrap();
        assert_ne!(a, c);
        assert_stratified(&a);
        assert_stratified(&c);
        assert_eq!(a, lhs_sample(100, &b, 1).unwrap());
    }

    #[test]
    fn zero_size_rejected() {
        assert!(lhs_sample(0, &Bounds::uniform(1, 0.0, 1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn improvement_reduces_correlation_and_keeps_strata() {
        let b = Bounds::uniform(5, 0.0, 1.0).unwrap();
        let d = lhs_sample(50, &b, 5).unwrap();
        let before = max_abs_correlation(&d);
        let improved = improve_lhs(&d, 2500, 9);
        let after = max_abs_correlation(&improved);
        assert!(after <= before, "{after} > {before}");
        assert!(after < before * 0.8, "expected a real reduction: {before} -> {after}");
        assert_stratified(&improved);
    }

    #[test]
    fn improvement_noops() {
        let b = Bounds::uniform(1, 0.0, 1.0).unwrap();
        let d = lhs_sample(20, &b, 5).unwrap();
        assert_eq!(improve_lhs(&d, 1000, 1), d);
        let b3 = Bounds::uniform(3, 0.0, 1.0).unwrap();
        let d3 = lhs_sample(20, &b3, 5).unwrap();
        assert_eq!(improve_lhs(&d3, 0, 1), d3);
    }

    #[test]
    fn incremental_correlation_matches_recompute() {
        let b = Bounds::uniform(4, 0.0, 1.0).unwrap();
        let d = lhs_sample(30, &b, 21).unwrap();
        let mut state = CorrelationState::new(&d);
        let predicted = state.max_abs_after_swap(1, 0, 1);
        state.swap(1, 0, 1);
        let mut swapped = d.clone();
        let (a, c) = (swapped.get(0, 1), swapped.get(1, 1));
        swapped.set(0, 1, c);
        swapped.set(1, 1, a);
        let fresh = CorrelationState::new(&swapped);
        assert!((predicted - fresh.max_abs()).abs() < 1e-12);
        for j in 0..4 {
            for k in 0..4 {
                assert!((state.corr(j, k) - fresh.corr(j, k)).abs() < 1e-12);
            }
        }
    }
}
