use std::io::Write;
use std::path::Path;

use serde::Serialize;

use prognosis::bootstrap::{self, bootstrap_residuals, summarize, BootstrapSummary, ConfidenceInterval, Measure};
use prognosis::crossval::{assign_folds, k_fold_cv_with_model, loo_cv, CvResult};
use prognosis::experiments::{run_study, StudyConfig, StudyResult};
use prognosis::field::{field_cross_validate, field_report, FieldDataset, FieldQualityReport};
use prognosis::io::{self, MopTableRow, TabularDataset};
use prognosis::mop::{run_competition, MopConfig};
use prognosis::quality::{coefficient_of_determination, compute_report, LocalErrorField, QualityReport};
use prognosis::sampling::{
    default_improve_iterations, eval_benchmark, improve_lhs, lhs_sample, lookup_benchmark, Bounds, DesignMatrix, OutputVector,
};
use prognosis::sensitivity::{saltelli_design, scale_by_cop, sobol_indices, SensitivityResult};
use prognosis::surrogate::{self, ModelSpec, TrainedSurrogate};
use prognosis::{Error, Result};

use crate::args::*;

const LOW_REPS_WARNING: usize = 1000;

fn emit_csv(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::create(p)?;
            write(&mut f)
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

fn emit_report<T: Serialize>(path: Option<&Path>, kind: &str, report: &T) -> Result<()> {
    match path {
        Some(p) => io::write_report(io::create(p)?, kind, report),
        None => io::write_report(std::io::stdout().lock(), kind, report),
    }
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

struct Loaded {
    design: DesignMatrix,
    y: OutputVector,
    inputs: Vec<String>,
}

fn load(data: &DataArgs, output: &str) -> Result<Loaded> {
    let table = TabularDataset::read(&data.data)?;
    let mut inputs = data.input_names();
    if inputs.is_empty() {
        inputs = table.other_columns(&[output.to_string()]);
    }
    if inputs.iter().any(|c| c == output) {
        return Err(Error::Argument(format!("column '{output}' is both input and output")));
    }
    let design = table.design(&inputs, data.parsed_bounds()?)?;
    Ok(Loaded { design, y: table.output(output)?, inputs })
}

fn cross_validate(spec: &ModelSpec, loaded: &Loaded, cv: &CvArgs, seed: u64) -> Result<(TrainedSurrogate, CvResult)> {
    if cv.loo {
        let model = surrogate::train(spec, &loaded.design, &loaded.y)?;
        Ok((model, loo_cv(spec, &loaded.design, &loaded.y)?))
    } else {
        let assignment = assign_folds(&loaded.design, cv.folds, seed)?;
        k_fold_cv_with_model(spec, &loaded.design, &loaded.y, &assignment)
    }
}

pub fn sample(args: &SampleArgs, seed: u64) -> Result<()> {
    let bounds = match (&args.benchmark, &args.bounds) {
        (Some(name), _) => lookup_benchmark(name)?.bounds(),
        (None, Some(b)) => Bounds::parse(b)?,
        (None, None) => return Err(Error::Argument("give --benchmark or --bounds".into())),
    };
    let mut design = lhs_sample(args.n, &bounds, seed)?;
    if !args.no_improve {
        design = improve_lhs(&design, default_improve_iterations(design.rows(), design.cols()), seed);
    }
    let names = match &args.names {
        Some(n) => split_list(n),
        None => (1..=design.cols()).map(|j| format!("x{j}")).collect(),
    };
    emit_csv(args.out.as_deref(), |w| io::write_design(w, &names, &design, None))
}

pub fn eval(args: &EvalArgs, seed: u64) -> Result<()> {
    let bench = lookup_benchmark(&args.benchmark)?;
    let table = TabularDataset::read(&args.input)?;
    let names = args.inputs.as_deref().map(split_list).unwrap_or_else(|| table.headers.clone());
    let design = table.design(&names, Some(bench.bounds()))?;
    let noise = (!args.noiseless).then_some(seed);
    let y = eval_benchmark(&args.benchmark, &design, noise)?;
    emit_csv(args.out.as_deref(), |w| io::write_design(w, &names, &design, Some((&args.output_name, &y))))
}

#[derive(Serialize)]
struct SavedModel<'a> {
    inputs: &'a [String],
    output: &'a str,
    model: surrogate::ModelDocument,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let loaded = load(&args.data, &args.output)?;
    let spec = args.model.spec(&loaded.inputs)?;
    let model = surrogate::train(&spec, &loaded.design, &loaded.y)?;
    let doc = SavedModel { inputs: &loaded.inputs, output: &args.output, model: model.to_document() };
    io::write_report(io::create(&args.out)?, "model", &doc)
}

#[derive(Serialize)]
struct AssessReport<'a> {
    seed: u64,
    model: &'a ModelSpec,
    inputs: &'a [String],
    output: &'a str,
    cross_validation: &'static str,
    folds: usize,
    cop_clamped: f64,
    quality: &'a QualityReport,
}

fn local_lattice(loaded: &Loaded, dims: &[usize], k: usize) -> Vec<Vec<f64>> {
    let bounds = loaded.design.bounds();
    let mid: Vec<f64> = (0..bounds.dim()).map(|j| bounds.lower()[j] + 0.5 * bounds.width(j)).collect();
    let axis = |j: usize, i: usize| bounds.lower()[j] + bounds.width(j) * i as f64 / (k - 1).max(1) as f64;
    let total = k.pow(dims.len() as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = mid.clone();
            for &j in dims {
                p[j] = axis(j, idx % k);
                idx /= k;
            }
            p
        })
        .collect()
}

pub fn assess(args: &AssessArgs, seed: u64) -> Result<()> {
    let loaded = load(&args.data, &args.output)?;
    let spec = args.model.spec(&loaded.inputs)?;
    let (_, cv) = cross_validate(&spec, &loaded, &args.cv, seed)?;
    let quality = compute_report(&cv)?;
    if let Some(path) = &args.residuals {
        io::write_residuals(io::create(path)?, &cv)?;
    }
    if let Some(k) = args.local_grid {
        if k < 2 {
            return Err(Error::Argument("--local-grid needs at least 2 points per axis".into()));
        }
        let dims: Vec<usize> = match &args.local_dims {
            Some(d) => split_list(d)
                .iter()
                .map(|n| {
                    loaded
                        .inputs
                        .iter()
                        .position(|c| c == n)
                        .ok_or_else(|| Error::Argument(format!("lattice axis '{n}' is not an input column")))
                })
                .collect::<Result<_>>()?,
            None => (0..loaded.inputs.len().min(2)).collect(),
        };
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::Argument("--local-dims takes one or two inputs".into()));
        }
        let field = LocalErrorField::with_default_bandwidth(&loaded.design, &cv)?;
        let points = local_lattice(&loaded, &dims, k);
        let estimates = points.iter().map(|p| field.evaluate(p)).collect::<Result<Vec<_>>>()?;
        emit_csv(args.local_out.as_deref(), |w| io::write_local_grid(w, &loaded.inputs, &points, &estimates))?;
    }
    let report = AssessReport {
        seed,
        model: &spec,
        inputs: &loaded.inputs,
        output: &args.output,
        cross_validation: if args.cv.loo { "leave-one-out" } else { "k-fold" },
        folds: cv.assignment.q(),
        cop_clamped: clamp_unit(quality.cop),
        quality: &quality,
    };
    emit_report(args.report.as_deref(), "assess", &report)
}

#[derive(Serialize)]
struct BootstrapReport<'a> {
    seed: u64,
    model: &'a ModelSpec,
    output: &'a str,
    cop_ci_clamped: ConfidenceInterval,
    summary: &'a BootstrapSummary,
}

fn warn_low_reps(reps: usize) {
    if reps < LOW_REPS_WARNING {
        log::warn!("{reps} bootstrap repetitions give unstable interval bounds; use at least {LOW_REPS_WARNING}");
    }
}

pub fn bootstrap(args: &BootstrapArgs, seed: u64) -> Result<()> {
    warn_low_reps(args.reps);
    let loaded = load(&args.data, &args.output)?;
    let spec = args.model.spec(&loaded.inputs)?;
    let (_, cv) = cross_validate(&spec, &loaded, &args.cv, seed)?;
    let quality = compute_report(&cv)?;
    let dist = bootstrap_residuals(&cv.cv_residuals, quality.ss_t, args.reps, seed)?;
    let summary = summarize(&cv.cv_residuals, &dist, args.level)?;
    let ci = summary.cop.ci;
    let report = BootstrapReport {
        seed,
        model: &spec,
        output: &args.output,
        cop_ci_clamped: ConfidenceInterval { level: ci.level, lower: clamp_unit(ci.lower), upper: clamp_unit(ci.upper) },
        summary: &summary,
    };
    emit_report(args.report.as_deref(), "bootstrap", &report)
}

#[derive(Serialize)]
struct SensitivityReport<'a> {
    seed: u64,
    model: &'a ModelSpec,
    inputs: &'a [String],
    output: &'a str,
    cop: f64,
    indices: &'a SensitivityResult,
}

pub fn sensitivity(args: &SensitivityArgs, seed: u64) -> Result<()> {
    let loaded = load(&args.data, &args.output)?;
    let spec = args.model.spec(&loaded.inputs)?;
    let assignment = assign_folds(&loaded.design, args.folds, seed)?;
    let (model, cv) = k_fold_cv_with_model(&spec, &loaded.design, &loaded.y, &assignment)?;
    let cop = compute_report(&cv)?.cop;
    let bundle = saltelli_design(loaded.design.cols(), args.base, loaded.design.bounds(), seed)?;
    let indices = scale_by_cop(&sobol_indices(&model, &bundle)?, cop);
    if let Some(path) = &args.out {
        let mut w = io::create(path)?;
        writeln!(w, "input,s_first,s_total,s_first_cv,s_total_cv")?;
        for (j, name) in loaded.inputs.iter().enumerate() {
            writeln!(
                w,
                "{name},{},{},{},{}",
                io::format_number(indices.s_first[j]),
                io::format_number(indices.s_total[j]),
                io::format_number(indices.s_first_cv[j]),
                io::format_number(indices.s_total_cv[j])
            )?;
        }
        w.flush()?;
    }
    let report = SensitivityReport { seed, model: &spec, inputs: &loaded.inputs, output: &args.output, cop, indices: &indices };
    emit_report(args.report.as_deref(), "sensitivity", &report)
}

#[derive(Serialize)]
struct LeaderRow {
    model: String,
    inputs: Vec<String>,
    cop: f64,
    spec: ModelSpec,
}

#[derive(Serialize)]
struct MopOutputReport {
    name: String,
    n: usize,
    model: ModelSpec,
    model_label: &'static str,
    selected_inputs: Vec<String>,
    cop: f64,
    cop_clamped: f64,
    ci: ConfidenceInterval,
    cod_test: Option<f64>,
    failures: Vec<String>,
    leaderboard: Vec<LeaderRow>,
}

#[derive(Serialize)]
struct MopReport {
    seed: u64,
    outputs: Vec<MopOutputReport>,
}

pub fn mop(args: &MopArgs, seed: u64) -> Result<()> {
    warn_low_reps(args.reps);
    let outputs = args.output_names();
    if outputs.is_empty() {
        return Err(Error::Argument("--outputs names no column".into()));
    }
    let table = TabularDataset::read(&args.data)?;
    let inputs = args.input_names().unwrap_or_else(|| table.other_columns(&outputs));
    if let Some(clash) = inputs.iter().find(|c| outputs.contains(c)) {
        return Err(Error::Argument(format!("column '{clash}' is both input and output")));
    }
    let bounds = args.bounds.as_deref().map(Bounds::parse).transpose()?;
    let design = table.design(&inputs, bounds)?;
    let test = args.test.as_ref().map(TabularDataset::read).transpose()?;
    let test_design = test.as_ref().map(|t| t.design(&inputs, Some(design.bounds().clone()))).transpose()?;
    let mut config = MopConfig::new(args.folds, seed);
    if let Some(f) = args.family_names() {
        config.families = f;
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for name in &outputs {
        let y = table.output(name)?;
        let result = run_competition(&design, &y, &config)?;
        let dist = bootstrap_residuals(&result.winner_cv.cv_residuals, result.winner_report.ss_t, args.reps, seed)?;
        let ci = bootstrap::confidence_interval(&dist, Measure::Cop, args.level)?;
        let cod_test = match (&test, &test_design) {
            (Some(t), Some(d)) => {
                let pred = result.winner.predict(d)?;
                Some(coefficient_of_determination(&t.output(name)?.values, &pred.values)?)
            }
            _ => None,
        };
        let clamped_ci = ConfidenceInterval { level: ci.level, lower: clamp_unit(ci.lower), upper: clamp_unit(ci.upper) };
        let mut row = MopTableRow::new(name, &result, &clamped_ci, cod_test)?;
        row.cop = clamp_unit(row.cop);
        rows.push(row);
        let names = |idx: &[usize]| idx.iter().map(|&j| inputs[j].clone()).collect::<Vec<_>>();
        reports.push(MopOutputReport {
            name: name.clone(),
            n: design.rows(),
            model: result.winner_spec().clone(),
            model_label: result.winner_spec().label(),
            selected_inputs: names(&result.selected_inputs),
            cop: result.winner_report.cop,
            cop_clamped: clamp_unit(result.winner_report.cop),
            ci,
            cod_test,
            failures: result.failures.clone(),
            leaderboard: result
                .leaderboard
                .iter()
                .map(|e| LeaderRow { model: e.spec.label().to_string(), inputs: names(&e.inputs), cop: e.cop, spec: e.spec.clone() })
                .collect(),
        });
    }
    if let Some(path) = &args.table {
        io::write_mop_table(io::create(path)?, &rows)?;
    }
    emit_report(args.report.as_deref(), "mop", &MopReport { seed, outputs: reports })
}

#[derive(Serialize)]
struct FieldReport<'a> {
    seed: u64,
    model: &'a ModelSpec,
    field: &'a FieldQualityReport,
}

pub fn field_assess(args: &FieldArgs, seed: u64) -> Result<()> {
    let table = TabularDataset::read(&args.design)?;
    let inputs = args.input_names().unwrap_or_else(|| table.headers.clone());
    let bounds = args.bounds.as_deref().map(Bounds::parse).transpose()?;
    let design = table.design(&inputs, bounds)?;
    let (grid, values) = io::load_field_csv(&args.field)?;
    let data = FieldDataset::new(design, grid, values)?;
    let spec = args.model.spec(&inputs)?;
    let cv = field_cross_validate(&spec, &data, args.folds, seed)?;
    for (i, msg) in cv.failures() {
        log::warn!("grid point {}: {msg}", i + 1);
    }
    let report = field_report(&data, &cv)?;
    if let Some(path) = &args.out {
        io::write_field_curves(io::create(path)?, &report)?;
    }
    emit_report(args.report.as_deref(), "field", &FieldReport { seed, model: &spec, field: &report })
}

pub fn study(args: &StudyArgs, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::Data(format!("cannot read {}: {e}", args.config.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Data(format!("invalid study config: {e}")))?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert("seed".into(), seed.into());
    }
    let config: StudyConfig = serde_json::from_value(value).map_err(|e| Error::Data(format!("invalid study config: {e}")))?;
    warn_low_reps(config.bootstrap_reps);
    let result: StudyResult = run_study(&config)?;
    emit_csv(args.out.as_deref(), |w| io::write_study(w, &result))?;
    if let Some(path) = &args.report {
        io::write_report(io::create(path)?, "study", &result)?;
    }
    Ok(())
}
