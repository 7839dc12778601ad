//! Metamodel of Optimal Prognosis: every candidate family is trained on a
//! nested sequence of input subspaces and scored by its k-fold CoP under one
//! shared fold assignment; the best CoP wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossval::{assign_folds, k_fold_cv, k_fold_cv_with_model, CvResult, FoldAssignment, DEFAULT_FOLDS};
use crate::error::{Error, Result};
use crate::quality::{compute_report, QualityReport};
use crate::sampling::{DesignMatrix, OutputVector};
use crate::sensitivity::{saltelli_design, sobol_indices};
use crate::surrogate::{self, spec_by_name, Anisotropy, Basis, ModelKind, ModelSpec, TrainedSurrogate};

/// Base sample count of the pilot sensitivity run that orders the inputs.
const PILOT_BASE_SAMPLES: usize = 1 << 10;
pub const MIN_SUPPORTS: usize = 10;

/// Eight log-spaced MLS radii between `lo` and `hi`.
pub fn radius_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..8).map(|i| lo * (hi / lo).powf(i as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopConfig {
    pub q: usize,
    pub seed: u64,
    /// Registry names of the competing families.
    pub families: Vec<String>,
    pub mls_radii: Vec<f64>,
}

impl MopConfig {
    pub fn new(q: usize, seed: u64) -> Self {
        Self {
            q,
            seed,
            families: surrogate::model_names().iter().map(|s| s.to_string()).collect(),
            mls_radii: radius_grid(0.05, 2.0),
        }
    }
}

impl Default for MopConfig {
    fn default() -> Self {
        Self::new(DEFAULT_FOLDS, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// Spec including the active inputs (and the selected MLS radius).
    pub spec: ModelSpec,
    /// 0-based active inputs.
    pub inputs: Vec<usize>,
    pub cop: f64,
}

#[derive(Debug)]
pub struct MopResult {
    pub winner: TrainedSurrogate,
    pub winner_cv: CvResult,
    pub winner_report: QualityReport,
    /// Sorted by descending CoP, ties broken by parsimony.
    pub leaderboard: Vec<LeaderboardEntry>,
    pub selected_inputs: Vec<usize>,
    pub assignment: FoldAssignment,
    /// Candidates that could not be trained, with the reason.
    pub failures: Vec<String>,
}

impl MopResult {
    pub fn winner_spec(&self) -> &ModelSpec {
        self.winner.spec()
    }
}

/// Ordering key: CoP (quantized so that sorting is a total order), then
/// fewer inputs, simpler family, lower basis order.
fn entry_key(e: &LeaderboardEntry) -> (i64, usize, u8, u8) {
    let cop = if e.cop.is_finite() { (e.cop * 1e12).round() as i64 } else { i64::MIN / 2 };
    (-cop, e.inputs.len(), e.spec.family_rank(), e.spec.order_rank())
}

pub fn sort_leaderboard(entries: &mut [LeaderboardEntry]) {
    entries.sort_by_key(entry_key);
}

fn rank_by_correlation(design: &DesignMatrix, y: &[f64]) -> Vec<f64> {
    let ny = y.len() as f64;
    let my = y.iter().sum::<f64>() / ny;
    (0..design.cols())
        .map(|j| {
            let col = design.column(j);
            let mx = col.iter().sum::<f64>() / ny;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (x, v) in col.iter().zip(y) {
                sxy += (x - mx) * (v - my);
                sxx += (x - mx) * (x - mx);
                syy += (v - my) * (v - my);
            }
            if sxx > 0.0 && syy > 0.0 {
                (sxy / (sxx * syy).sqrt()).abs()
            } else {
                0.0
            }
        })
        .collect()
}

fn pilot_importance(design: &DesignMatrix, y: &OutputVector, seed: u64) -> Result<Vec<f64>> {
    let bundle = saltelli_design(design.cols(), PILOT_BASE_SAMPLES, design.bounds(), seed)?;
    let mut last_error = None;
    for name in ["kriging-aniso", "polynomial-quadratic"] {
        let spec = spec_by_name(name)?;
        match surrogate::train(&spec, design, y).and_then(|m| sobol_indices(&m, &bundle)) {
            Ok(r) => return Ok(r.s_total),
            Err(e) => {
                log::debug!("pilot {name} failed: {e}");
                last_error = Some(e);
            }
        }
    }
    Err(last_error.expect("two attempts"))
}

/// Nested input subsets `{top-1, top-2, …, all}` ordered by the total-effect
/// indices of a pilot surrogate (anisotropic Kriging, then quadratic
/// polynomial, then absolute Pearson correlation as fallbacks).
pub fn subspace_sequence(design: &DesignMatrix, y: &OutputVector, seed: u64) -> Result<Vec<Vec<usize>>> {
    let m = design.cols();
    if design.rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows, {} outputs", design.rows(), y.len())));
    }
    if m == 1 {
        return Ok(vec![vec![0]]);
    }
    let importance = pilot_importance(design, y, seed).unwrap_or_else(|_| rank_by_correlation(design, &y.values));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    Ok((1..=m)
        .map(|k| {
            let mut subset = order[..k].to_vec();
            subset.sort_unstable();
            subset
        })
        .collect())
}

fn candidate_specs(config: &MopConfig, inputs: &[usize], n: usize) -> Result<Vec<Vec<ModelSpec>>> {
    let mut out = Vec::new();
    for name in &config.families {
        let base = spec_by_name(name)?.with_inputs(inputs.to_vec());
        if n < 2 * base.basis_terms(inputs.len()) {
            continue;
        }
        let variants = match base.kind {
            ModelKind::Mls { basis, .. } => config
                .mls_radii
                .iter()
                .map(|&r| ModelSpec::mls(basis, r).with_inputs(inputs.to_vec()))
                .collect(),
            _ => vec![base],
        };
        out.push(variants);
    }
    Ok(out)
}

/// Scores one candidate; MLS variants pick the radius with the best CoP.
fn score(variants: &[ModelSpec], design: &DesignMatrix, y: &OutputVector, assignment: &FoldAssignment) -> std::result::Result<LeaderboardEntry, String> {
    let mut best: Option<LeaderboardEntry> = None;
    let mut errors = Vec::new();
    for spec in variants {
        match k_fold_cv(spec, design, y, assignment).and_then(|cv| compute_report(&cv)) {
            Ok(report) => {
                let entry = LeaderboardEntry {
                    inputs: spec.resolve_inputs(design.cols()).map_err(|e| e.to_string())?,
                    spec: spec.clone(),
                    cop: report.cop,
                };
                if best.as_ref().is_none_or(|b| entry.cop > b.cop) {
                    best = Some(entry);
                }
            }
            Err(e) => errors.push(format!("{spec} on inputs {:?}: {e}", spec.active_inputs)),
        }
    }
    best.ok_or_else(|| errors.join("; "))
}

pub fn run_competition(design: &DesignMatrix, y: &OutputVector, config: &MopConfig) -> Result<MopResult> {
    let n = design.rows();
    if n < MIN_SUPPORTS {
        return Err(Error::Argument(format!("competition needs at least {MIN_SUPPORTS} supports, got {n}")));
    }
    if n != y.len() {
        return Err(Error::Dimension(format!("{n} rows, {} outputs", y.len())));
    }
    let assignment = assign_folds(design, config.q, config.seed)?;
    let subsets = subspace_sequence(design, y, config.seed)?;
    let mut jobs = Vec::new();
    for subset in &subsets {
        jobs.extend(candidate_specs(config, subset, n)?);
    }
    let scored: Vec<std::result::Result<LeaderboardEntry, String>> =
        jobs.par_iter().map(|variants| score(variants, design, y, &assignment)).collect();
    let mut leaderboard = Vec::new();
    let mut failures = Vec::new();
    for s in scored {
        match s {
            Ok(e) => leaderboard.push(e),
            Err(msg) => failures.push(msg),
        }
    }
    if leaderboard.is_empty() {
        if failures.is_empty() {
            failures.push("no candidate fits the available supports".into());
        }
        return Err(Error::Competition(failures));
    }
    sort_leaderboard(&mut leaderboard);
    let top = &leaderboard[0];
    let (winner, winner_cv) = k_fold_cv_with_model(&top.spec, design, y, &assignment)?;
    let winner_report = compute_report(&winner_cv)?;
    Ok(MopResult {
        selected_inputs: top.inputs.clone(),
        winner,
        winner_cv,
        winner_report,
        leaderboard,
        assignment,
        failures,
    })
}

/// Candidate list used by the competition, for display.
pub fn candidate_labels() -> Vec<&'static str> {
    vec![
        ModelSpec::polynomial(Basis::Linear).label(),
        ModelSpec::polynomial(Basis::Quadratic).label(),
        ModelSpec::mls(Basis::Linear, 1.0).label(),
        ModelSpec::mls(Basis::Quadratic, 1.0).label(),
        ModelSpec::kriging(Anisotropy::Isotropic).label(),
        ModelSpec::kriging(Anisotropy::Anisotropic).label(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{lhs_sample, Bounds};

    fn entry(spec: ModelSpec, inputs: Vec<usize>, cop: f64) -> LeaderboardEntry {
        LeaderboardEntry { spec, inputs, cop }
    }

    #[test]
    fn leaderboard_tie_breaking() {
        let mut board = vec![
            entry(ModelSpec::kriging(Anisotropy::Isotropic), vec![0, 1], 0.9),
            entry(ModelSpec::polynomial(Basis::Quadratic), vec![0, 1], 0.9),
            entry(ModelSpec::polynomial(Basis::Linear), vec![0, 1], 0.9),
            entry(ModelSpec::kriging(Anisotropy::Anisotropic), vec![0], 0.9),
            entry(ModelSpec::mls(Basis::Linear, 0.3), vec![0, 1, 2], 0.95),
            entry(ModelSpec::mls(Basis::Linear, 0.3), vec![0, 1], 0.9),
        ];
        sort_leaderboard(&mut board);
        let names: Vec<(&str, usize)> = board.iter().map(|e| (e.spec.name(), e.inputs.len())).collect();
        assert_eq!(
            names,
            vec![
                ("mls-linear", 3),
                ("kriging-aniso", 1),
                ("polynomial-linear", 2),
                ("polynomial-quadratic", 2),
                ("mls-linear", 2),
                ("kriging-iso", 2),
            ]
        );
    }

    #[test]
    fn single_input_sequence() {
        let d = lhs_sample(12, &Bounds::uniform(1, 0.0, 1.0).unwrap(), 1).unwrap();
        let y = OutputVector::new(d.column(0));
        assert_eq!(subspace_sequence(&d, &y, 0).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn sequence_is_nested_and_led_by_the_active_input() {
        let d = lhs_sample(40, &Bounds::uniform(3, 0.0, 1.0).unwrap(), 4).unwrap();
        let y = OutputVector::new(d.column(1).iter().map(|v| v * v + v).collect());
        let seq = subspace_sequence(&d, &y, 2).unwrap();
        assert_eq!(seq[0], vec![1]);
        assert_eq!(seq.last().unwrap(), &vec![0, 1, 2]);
        for w in seq.windows(2) {
            assert!(w[0].iter().all(|j| w[1].contains(j)));
            assert_eq!(w[1].len(), w[0].len() + 1);
        }
    }

    #[test]
    fn too_few_supports() {
        let d = lhs_sample(9, &Bounds::uniform(2, 0.0, 1.0).unwrap(), 4).unwrap();
        let y = OutputVector::new(d.column(0));
        assert!(matches!(run_competition(&d, &y, &MopConfig::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn radius_grid_is_log_spaced() {
        let g = radius_grid(0.01, 1.0);
        assert_eq!(g.len(), 8);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[7] - 1.0).abs() < 1e-12);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }
}
