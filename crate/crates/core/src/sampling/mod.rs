//! Space-filling designs and analytic benchmark responses.

mod benchmark;
mod bounds;
mod design;
mod lhs;

pub use benchmark::{
    benchmark_names, eval_benchmark, lookup_benchmark, Benchmark, Coupled5d, Nonlin1dNoisy, Noisy20d,
    Quad1dNoisy,
};
pub use bounds::Bounds;
pub use design::{DesignMatrix, OutputVector, DUPLICATE_TOLERANCE};
pub use lhs::{
    correlation_matrix, default_improve_iterations, improve_lhs, lhs_sample, max_abs_correlation,
    stratum_of,
};
