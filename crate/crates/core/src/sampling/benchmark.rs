//! Closed-form test functions used by the benchmark studies.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use super::{Bounds, DesignMatrix, OutputVector};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// An analytic response with optional additive Gaussian noise.
pub trait Benchmark: Send + Sync {
    fn name(&self) -> &'static str;
    fn arity(&self) -> usize;
    fn bounds(&self) -> Bounds;
    /// Noise-free part of the response.
    fn deterministic(&self, x: &[f64]) -> f64;
    /// Standard deviation of the additive noise term.
    fn noise_sd(&self) -> f64 {
        0.0
    }
}

/// Five inputs: additive linear and sine terms plus one coupling term.
pub struct Coupled5d;

impl Benchmark for Coupled5d {
    fn name(&self) -> &'static str {
        "coupled5d"
    }
    fn arity(&self) -> usize {
        5
    }
    fn bounds(&self) -> Bounds {
        Bounds::uniform(5, -PI, PI).expect("static bounds")
    }
    fn deterministic(&self, x: &[f64]) -> f64 {
        0.5 * x[0] + x[1] + 0.5 * x[0] * x[1] + 5.0 * x[2].sin() + 0.2 * x[3] + 0.1 * x[4]
    }
}

/// Twenty inputs, a quadratic term in `x4`, fifteen weak linear inputs and
/// `0.5·N(0,1)` noise.
pub struct Noisy20d;

impl Benchmark for Noisy20d {
    fn name(&self) -> &'static str {
        "noisy20d"
    }
    fn arity(&self) -> usize {
        20
    }
    fn bounds(&self) -> Bounds {
        Bounds::uniform(20, -PI, PI).expect("static bounds")
    }
    fn deterministic(&self, x: &[f64]) -> f64 {
        0.5 * x[0] + x[1] + 0.5 * x[0] * x[1] + 5.0 * x[2].sin() + 0.5 * x[3] + 0.5 * x[3] * x[3]
            + 0.1 * x[4]
            + x[5..20].iter().map(|v| 0.01 * v).sum::<f64>()
    }
    fn noise_sd(&self) -> f64 {
        0.5
    }
}

/// `x²` on `[-2, 2]` with `N(0, 0.25²)` noise.
pub struct Quad1dNoisy;

impl Benchmark for Quad1dNoisy {
    fn name(&self) -> &'static str {
        "quad1d-noisy"
    }
    fn arity(&self) -> usize {
        1
    }
    fn bounds(&self) -> Bounds {
        Bounds::uniform(1, -2.0, 2.0).expect("static bounds")
    }
    fn deterministic(&self, x: &[f64]) -> f64 {
        x[0] * x[0]
    }
    fn noise_sd(&self) -> f64 {
        0.25
    }
}

/// `sin(2x) + x` on `[0, 5]` with `N(0, 0.2²)` noise.
pub struct Nonlin1dNoisy;

impl Benchmark for Nonlin1dNoisy {
    fn name(&self) -> &'static str {
        "nonlin1d-noisy"
    }
    fn arity(&self) -> usize {
        1
    }
    fn bounds(&self) -> Bounds {
        Bounds::uniform(1, 0.0, 5.0).expect("static bounds")
    }
    fn deterministic(&self, x: &[f64]) -> f64 {
        (2.0 * x[0]).sin() + x[0]
    }
    fn noise_sd(&self) -> f64 {
        0.2
    }
}

static BENCHMARKS: [&dyn Benchmark; 4] = [&Coupled5d, &Noisy20d, &Quad1dNoisy, &Nonlin1dNoisy];

pub fn benchmark_names() -> Vec<&'static str> {
    BENCHMARKS.iter().map(|b| b.name()).collect()
}

pub fn lookup_benchmark(name: &str) -> Result<&'static dyn Benchmark> {
    BENCHMARKS
        .iter()
        .copied()
        .find(|b| b.name() == name)
        .ok_or_else(|| Error::Lookup { kind: "benchmark", name: name.to_string() })
}

/// Evaluates a benchmark on every row. Noise is drawn row by row from the
/// noise substream of `noise_seed`; without a seed only the deterministic
/// part is returned.
pub fn eval_benchmark(name: &str, design: &DesignMatrix, noise_seed: Option<u64>) -> Result<OutputVector> {
    let bench = lookup_benchmark(name)?;
    if design.cols() != bench.arity() {
        return Err(Error::Dimension(format!(
            "benchmark {} takes {} inputs, design has {}",
            bench.name(),
            bench.arity(),
            design.cols()
        )));
    }
    let mut values: Vec<f64> = design.iter_rows().map(|r| bench.deterministic(r)).collect();
    if let Some(seed) = noise_seed {
        let sd = bench.noise_sd();
        if sd > 0.0 {
            let mut rng = rng::substream(seed, streams::NOISE);
            for v in &mut values {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sd * z;
            }
        }
    }
    Ok(OutputVector { values, noise_seed })
}
