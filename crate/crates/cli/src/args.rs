use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use prognosis::sampling::Bounds;
use prognosis::surrogate::{spec_by_name, ModelKind, ModelSpec};
use prognosis::{Error, Result};

/// Seed given on the command line: a number, or `auto` for a fresh one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Auto,
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SeedArg::Auto);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected an unsigned integer or 'auto', got '{s}'"))
    }
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Auto => {
                let nanos = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_nanos() as u64)
                    .unwrap_or(0);
                let seed = prognosis::rng::splitmix64(nanos ^ u64::from(std::process::id()));
                log::warn!("using generated seed {seed}");
                seed
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "prognosis", version, about = "Surrogate models and model-independent prediction quality")]
pub struct Cli {
    /// Random seed (unsigned integer) or `auto`.
    #[arg(long, global = true)]
    pub seed: Option<SeedArg>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "PROGNOSIS_THREADS")]
    pub threads: Option<usize>,
    /// Log level (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Latin hypercube design over a benchmark's domain or explicit bounds.
    Sample(SampleArgs),
    /// Evaluates a benchmark function on a design file.
    Eval(EvalArgs),
    /// Trains a surrogate and stores it as JSON.
    Train(TrainArgs),
    /// Cross-validates a surrogate and reports CoD, CoP and residuals.
    Assess(AssessArgs),
    /// Bootstrap confidence intervals of RMSE and CoP.
    Bootstrap(BootstrapArgs),
    /// Sobol indices of a surrogate, scaled by its CoP.
    Sensitivity(SensitivityArgs),
    /// Model and input-subspace competition per output.
    Mop(MopArgs),
    /// Per-point and stationary quality of a field output.
    FieldAssess(FieldArgs),
    /// Repeated-run benchmark study.
    Study(StudyArgs),
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Input columns, comma separated; default: every column except the outputs.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Input bounds `lo:hi,lo:hi,...`; default: column ranges.
    #[arg(long)]
    pub bounds: Option<String>,
}

impl DataArgs {
    pub fn input_names(&self) -> Vec<String> {
        self.inputs.as_deref().map(split_list).unwrap_or_default()
    }

    pub fn parsed_bounds(&self) -> Result<Option<Bounds>> {
        self.bounds.as_deref().map(Bounds::parse).transpose()
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model family: polynomial-linear, polynomial-quadratic, mls-linear,
    /// mls-quadratic, kriging-iso, kriging-aniso.
    #[arg(long, default_value = "kriging-iso")]
    pub model: String,
    /// MLS influence radius as a fraction of the normalized domain diagonal.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Restricts the model to these input columns (comma separated).
    #[arg(long)]
    pub active: Option<String>,
}

impl ModelArgs {
    /// Spec with active inputs resolved against the selected input columns.
    pub fn spec(&self, input_names: &[String]) -> Result<ModelSpec> {
        let mut spec = spec_by_name(&self.model)?;
        if let Some(r) = self.radius {
            match &mut spec.kind {
                ModelKind::Mls { radius, .. } => *radius = r,
                _ => return Err(Error::Argument("--radius applies only to MLS models".into())),
            }
        }
        if let Some(active) = &self.active {
            let idx = split_list(active)
                .iter()
                .map(|name| {
                    input_names
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| Error::Argument(format!("active input '{name}' is not an input column")))
                })
                .collect::<Result<Vec<_>>>()?;
            spec = spec.with_inputs(idx);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Benchmark whose domain is sampled.
    #[arg(long, conflicts_with = "bounds")]
    pub benchmark: Option<String>,
    /// Explicit bounds `lo:hi,lo:hi,...`.
    #[arg(long)]
    pub bounds: Option<String>,
    #[arg(long)]
    pub n: usize,
    /// Skips the correlation-reducing swap pass.
    #[arg(long)]
    pub no_improve: bool,
    /// Column names; default x1, x2, ...
    #[arg(long)]
    pub names: Option<String>,
    /// Output CSV; default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub benchmark: String,
    /// Design CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Input columns; default: all.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Name of the appended output column.
    #[arg(long, default_value = "y")]
    pub output_name: String,
    /// Omits the benchmark's noise term.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output column.
    #[arg(long)]
    pub output: String,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Number of cross-validation subsets.
    #[arg(long, default_value_t = prognosis::crossval::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Leave-one-out instead of k-fold.
    #[arg(long)]
    pub loo: bool,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    /// JSON quality report; default stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Residual CSV `index,y,fitted,cv_pred,fit_residual,cv_residual,fold`.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Points per axis of a local-error lattice.
    #[arg(long)]
    pub local_grid: Option<usize>,
    /// Lattice axes (input names, at most two); other inputs sit at mid-range.
    #[arg(long)]
    pub local_dims: Option<String>,
    /// Lattice CSV `x...,local_rmse,local_cop`.
    #[arg(long, requires = "local_grid")]
    pub local_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    #[arg(long, default_value_t = prognosis::bootstrap::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = prognosis::bootstrap::DEFAULT_LEVEL)]
    pub level: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = prognosis::crossval::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Base sample count N of the Saltelli design.
    #[arg(long, default_value_t = prognosis::sensitivity::DEFAULT_BASE_SAMPLES)]
    pub base: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Index table `input,s_first,s_total,s_first_cv,s_total_cv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MopArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Output columns, comma separated.
    #[arg(long)]
    pub outputs: String,
    /// Input columns; default: every column except the outputs.
    #[arg(long)]
    pub inputs: Option<String>,
    #[arg(long)]
    pub bounds: Option<String>,
    #[arg(long, default_value_t = prognosis::crossval::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Restricts the competition to these families (comma separated).
    #[arg(long)]
    pub families: Option<String>,
    #[arg(long, default_value_t = prognosis::bootstrap::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = prognosis::bootstrap::DEFAULT_LEVEL)]
    pub level: f64,
    /// Independent test data with the same columns, for the test CoD.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Table `name,n,model,k_inputs,cop,ci_lo,ci_hi,cod_test`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

impl MopArgs {
    pub fn output_names(&self) -> Vec<String> {
        split_list(&self.outputs)
    }

    pub fn input_names(&self) -> Option<Vec<String>> {
        self.inputs.as_deref().map(split_list)
    }

    pub fn family_names(&self) -> Option<Vec<String>> {
        self.families.as_deref().map(split_list)
    }
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Design CSV with a header row, one row per sample.
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub inputs: Option<String>,
    #[arg(long)]
    pub bounds: Option<String>,
    /// Field CSV: grid coordinates in the first row, one sample per row.
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = prognosis::crossval::DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Curves `t,rmse_fit,rmse_cv,cod_stat,cop_stat`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FieldArgs {
    pub fn input_names(&self) -> Option<Vec<String>> {
        self.inputs.as_deref().map(split_list)
    }
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Study configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Runs sorted by CoP: `run,cop,ci_lo,ci_hi,cod_test,dss_kfold,dss_loo`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parsing() {
        assert_eq!("42".parse::<SeedArg>().unwrap(), SeedArg::Fixed(42));
        assert_eq!("AUTO".parse::<SeedArg>().unwrap(), SeedArg::Auto);
        assert!("-1".parse::<SeedArg>().is_err());
    }

    #[test]
    fn lists_split_on_commas() {
        assert_eq!(split_list(" a, b ,,c"), vec!["a", "b", "c"]);
    }

    #[test]
    fn active_inputs_resolve_by_name() {
        let args = ModelArgs { model: "polynomial-linear".into(), radius: None, active: Some("b".into()) };
        let spec = args.spec(&["a".into(), "b".into()]).unwrap();
        assert_eq!(spec.active_inputs, Some(vec![1]));
        let bad = ModelArgs { model: "kriging-iso".into(), radius: Some(0.2), active: None };
        assert!(bad.spec(&["a".into()]).is_err());
    }
}
