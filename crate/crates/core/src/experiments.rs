//! Repeated-run studies on the benchmark functions: fresh supports per run, a
//! fixed test set, k-fold and leave-one-out CV, bootstrap CIs of the CoP and
//! the comparison of CV error estimates against the test error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, bootstrap_residuals, Measure};
use crate::crossval::{assign_folds, k_fold_cv_with_model, loo_cv, DEFAULT_FOLDS};
use crate::error::{Error, Result};
use crate::mop::{run_competition, MopConfig};
use crate::quality::{coefficient_of_determination, compute_report, delta_sse};
use crate::rng::{derive_seed, streams};
use crate::sampling::{default_improve_iterations, eval_benchmark, improve_lhs, lhs_sample, lookup_benchmark, DesignMatrix, OutputVector};
use crate::surrogate::spec_by_name;

/// Largest tolerated share of failed runs.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

fn default_n_test() -> usize {
    500
}
fn default_runs() -> usize {
    50
}
fn default_q() -> usize {
    DEFAULT_FOLDS
}
fn default_reps() -> usize {
    10_000
}
fn default_level() -> f64 {
    bootstrap::DEFAULT_LEVEL
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub benchmark: String,
    pub n_support: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_q")]
    pub q: usize,
    pub seed: u64,
    /// Registry name of the model. With `mop` set it restricts the
    /// competition to this family; without a name all families compete.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub mop: bool,
    #[serde(default = "default_reps")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_true")]
    pub improve_supports: bool,
}

impl StudyConfig {
    pub fn new(benchmark: &str, n_support: usize, model: &str, seed: u64) -> Self {
        Self {
            benchmark: benchmark.to_string(),
            n_support,
            n_test: default_n_test(),
            runs: default_runs(),
            q: default_q(),
            seed,
            model: Some(model.to_string()),
            mop: false,
            bootstrap_reps: default_reps(),
            level: default_level(),
            improve_supports: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        lookup_benchmark(&self.benchmark)?;
        if self.runs == 0 {
            return Err(Error::Argument("a study needs at least one run".into()));
        }
        if self.n_test < self.n_support {
            return Err(Error::Argument(format!("n_test ({}) must be at least n_support ({})", self.n_test, self.n_support)));
        }
        if self.q < 2 || self.q > self.n_support {
            return Err(Error::Argument(format!("q must lie in [2, {}], got {}", self.n_support, self.q)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Argument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.bootstrap_reps == 0 {
            return Err(Error::Argument("bootstrap_reps must be positive".into()));
        }
        match (&self.model, self.mop) {
            (_, true) => Ok(()),
            (Some(name), false) => spec_by_name(name).map(|_| ()),
            (None, false) => Err(Error::Argument("study needs a model name or the MOP flag".into())),
        }
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub model: String,
    pub cop: f64,
    pub cop_loo: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub cod_test: f64,
    pub dss_kfold: f64,
    pub dss_loo: f64,
}

impl RunRecord {
    pub fn covered(&self) -> bool {
        self.ci_lo <= self.cod_test && self.cod_test <= self.ci_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAggregates {
    pub completed: usize,
    pub failed: usize,
    pub coverage: f64,
    pub positive_fraction_kfold: f64,
    pub positive_fraction_loo: f64,
    pub median_abs_dss_kfold: f64,
    pub median_abs_dss_loo: f64,
    pub median_cop: f64,
    pub median_cod_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    /// In run order.
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub aggregates: StudyAggregates,
}

impl StudyResult {
    /// Runs ordered by ascending CoP.
    pub fn sorted_by_cop(&self) -> Vec<&RunRecord> {
        let mut v: Vec<&RunRecord> = self.runs.iter().collect();
        v.sort_by(|a, b| a.cop.total_cmp(&b.cop).then(a.run.cmp(&b.run)));
        v
    }
}

struct TestSet {
    design: DesignMatrix,
    y: OutputVector,
}

fn test_set(config: &StudyConfig) -> Result<TestSet> {
    let bench = lookup_benchmark(&config.benchmark)?;
    let seed = derive_seed(config.seed, streams::TEST_SET);
    let design = lhs_sample(config.n_test, &bench.bounds(), seed)?;
    let y = eval_benchmark(&config.benchmark, &design, Some(seed))?;
    Ok(TestSet { design, y })
}

fn supports(config: &StudyConfig, seed: u64) -> Result<(DesignMatrix, OutputVector)> {
    let bench = lookup_benchmark(&config.benchmark)?;
    let mut design = lhs_sample(config.n_support, &bench.bounds(), seed)?;
    if config.improve_supports {
        design = improve_lhs(&design, default_improve_iterations(design.rows(), design.cols()), seed);
    }
    let y = eval_benchmark(&config.benchmark, &design, Some(seed))?;
    Ok((design, y))
}

fn run_once(config: &StudyConfig, test: &TestSet, r: usize) -> Result<RunRecord> {
    let seed = config.run_seed(r);
    let (design, y) = supports(config, seed)?;
    let spec = if config.mop {
        let mut mop = MopConfig::new(config.q, seed);
        if let Some(name) = &config.model {
            mop.families = vec![name.clone()];
        }
        run_competition(&design, &y, &mop)?.winner_spec().clone()
    } else {
        spec_by_name(config.model.as_deref().unwrap_or_default())?
    };
    let assignment = assign_folds(&design, config.q, seed)?;
    let (model, kfold) = k_fold_cv_with_model(&spec, &design, &y, &assignment)?;
    let loo = loo_cv(&spec, &design, &y)?;
    let report = compute_report(&kfold)?;
    let loo_report = compute_report(&loo)?;
    let dist = bootstrap_residuals(&kfold.cv_residuals, report.ss_t, config.bootstrap_reps, seed)?;
    let ci = bootstrap::confidence_interval(&dist, Measure::Cop, config.level)?;
    let pred = model.predict(&test.design)?;
    Ok(RunRecord {
        run: r,
        seed,
        model: spec.to_string(),
        cop: report.cop,
        cop_loo: loo_report.cop,
        ci_lo: ci.lower,
        ci_hi: ci.upper,
        cod_test: coefficient_of_determination(&test.y.values, &pred.values)?,
        dss_kfold: delta_sse(&kfold, &test.y.values, &pred.values)?,
        dss_loo: delta_sse(&loo, &test.y.values, &pred.values)?,
    })
}

fn fraction(runs: &[RunRecord], pred: impl Fn(&RunRecord) -> bool) -> f64 {
    runs.iter().filter(|r| pred(r)).count() as f64 / runs.len() as f64
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    bootstrap::median(&v)
}

pub fn aggregate(runs: &[RunRecord], failed: usize) -> StudyAggregates {
    if runs.is_empty() {
        return StudyAggregates {
            completed: 0,
            failed,
            coverage: f64::NAN,
            positive_fraction_kfold: f64::NAN,
            positive_fraction_loo: f64::NAN,
            median_abs_dss_kfold: f64::NAN,
            median_abs_dss_loo: f64::NAN,
            median_cop: f64::NAN,
            median_cod_test: f64::NAN,
        };
    }
    StudyAggregates {
        completed: runs.len(),
        failed,
        coverage: fraction(runs, RunRecord::covered),
        positive_fraction_kfold: fraction(runs, |r| r.dss_kfold > 0.0),
        positive_fraction_loo: fraction(runs, |r| r.dss_loo > 0.0),
        median_abs_dss_kfold: median_of(runs.iter().map(|r| r.dss_kfold.abs())),
        median_abs_dss_loo: median_of(runs.iter().map(|r| r.dss_loo.abs())),
        median_cop: median_of(runs.iter().map(|r| r.cop)),
        median_cod_test: median_of(runs.iter().map(|r| r.cod_test)),
    }
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let test = test_set(config)?;
    let outcomes: Vec<Result<RunRecord>> = (0..config.runs).into_par_iter().map(|r| run_once(config, &test, r)).collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(record) => runs.push(record),
            Err(e) => {
                log::warn!("study run {r} failed: {e}");
                failures.push(RunFailure { run: r, message: e.to_string() });
            }
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * config.runs as f64 {
        return Err(Error::Study(format!(
            "{} of {} runs failed; first: {}",
            failures.len(),
            config.runs,
            failures[0].message
        )));
    }
    let aggregates = aggregate(&runs, failures.len());
    Ok(StudyResult { config: config.clone(), runs, failures, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_from_json() {
        let c: StudyConfig = serde_json::from_str(r#"{"benchmark":"coupled5d","n_support":50,"seed":3,"model":"kriging-iso"}"#).unwrap();
        assert_eq!(c.n_test, 500);
        assert_eq!(c.runs, 50);
        assert_eq!(c.q, 5);
        assert!(c.improve_supports);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let mut c = StudyConfig::new("coupled5d", 50, "kriging-iso", 0);
        c.runs = 0;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new("coupled5d", 50, "kriging-iso", 0);
        c.n_test = 10;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::new("coupled5d", 50, "kriging-iso", 0);
        c.model = None;
        assert!(c.validate().is_err());
        assert!(StudyConfig::new("nope", 50, "kriging-iso", 0).validate().is_err());
    }

    #[test]
    fn exact_class_single_run() {
        let mut c = StudyConfig::new("quad1d-noisy", 20, "polynomial-quadratic", 5);
        c.runs = 1;
        c.n_test = 50;
        c.bootstrap_reps = 200;
        let result = run_study(&c).unwrap();
        let r = &result.runs[0];
        // the noise floor keeps CoP below one; the model class is exact
        assert!(r.cop > 0.7 && r.cod_test > 0.7, "{r:?}");
        assert!(r.dss_kfold.abs() < 0.2);
    }

    #[test]
    fn aggregates_are_fractions() {
        let rec = |cop: f64, dss: f64| RunRecord {
            run: 0,
            seed: 0,
            model: String::new(),
            cop,
            cop_loo: cop,
            ci_lo: cop - 0.1,
            ci_hi: cop + 0.1,
            cod_test: cop + 0.05,
            dss_kfold: dss,
            dss_loo: -dss,
        };
        let runs = vec![rec(0.5, 0.1), rec(0.6, -0.2), rec(0.7, 0.3)];
        let a = aggregate(&runs, 0);
        assert_eq!(a.coverage, 1.0);
        assert!((a.positive_fraction_kfold - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.positive_fraction_loo - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.median_abs_dss_kfold - 0.2).abs() < 1e-15);
    }
}
