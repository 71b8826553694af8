//! One-class classification with support vector data description (SVDD) and
//! its subspace variant (S-SVDD), which learns a low-dimensional projection
//! jointly with the enclosing hypersphere.
//!
//! The crate covers the full experimental loop: CSV loading and
//! standardization, stratified train/test partitioning, RBF Gram matrices,
//! the dual SVDD solver, subspace training with four regularizer modes,
//! cross-validated grid search, and a benchmark runner that reports F1 per
//! method. Everything numeric is generic over [`Real`] (`f32` or `f64`);
//! the `*64` aliases below fix `f64` for callers that don't care.

pub mod data;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod model_selection;
pub mod report;
pub mod scalar;
pub mod subspace;
pub mod svdd;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LabeledDataset64 = data::LabeledDataset<f64>;
pub type OneClassDataset64 = data::OneClassDataset<f64>;
pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type SvddSolution64 = svdd::SvddSolution<f64>;
pub type SolverConfig64 = svdd::SolverConfig<f64>;
pub type HyperParams64 = subspace::HyperParams<f64>;
pub type SsvddModel64 = subspace::SsvddModel<f64>;
pub type GridSpec64 = model_selection::GridSpec<f64>;
pub type EvalReport64 = report::EvalReport<f64>;
