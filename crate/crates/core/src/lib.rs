//! Surrogate models with model-independent estimates of their prediction
//! quality: cross-validated Coefficient of Prognosis (CoP), residual
//! bootstrap confidence bounds, local error fields, CoP-scaled Sobol indices,
//! automatic model and input-subspace selection, and stationary measures for
//! field outputs.

pub mod bootstrap;
pub mod crossval;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod mop;
pub mod quality;
pub mod rng;
pub mod sampling;
pub mod sensitivity;
pub mod surrogate;

pub use error::{Error, Result};
