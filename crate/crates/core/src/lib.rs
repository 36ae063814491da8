//! Variable-metric ADMM for structured monotone inclusions, an accelerated
//! dynamic-step variant, and the classical splittings they reduce to.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accelerated;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod reductions;
pub mod scalar;
pub mod trace;
pub mod unified;

pub use accelerated::{AccConfig, AccEngine, AccProblem, AccState, MetricFamily, ParamSchedule};
pub use error::{Constraint, Error, Result};
pub use hilbert::{DenseLinearMap, MetricOperator};
pub use linalg::{Matrix, Vector};
pub use operators::{ForwardMap, MonotoneOperator, Operator, ProxFunction, ResolventKernel};
pub use problems::{CompositeProblem, SolutionCertificate};
pub use reductions::{ReductionKind, Scheme};
pub use scalar::Scalar;
pub use trace::{RunError, StopRule, Trace};
pub use unified::{AdmmConfig, AdmmState, InclusionProblem, MetricSchedule, UnifiedAdmm};

pub type VectorF64 = Vector<f64>;
pub type VectorF32 = Vector<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type InclusionProblemF64 = InclusionProblem<f64>;
pub type InclusionProblemF32 = InclusionProblem<f32>;
pub type CompositeProblemF64 = CompositeProblem<f64>;
pub type CompositeProblemF32 = CompositeProblem<f32>;
pub type AdmmConfigF64 = AdmmConfig<f64>;
pub type AdmmConfigF32 = AdmmConfig<f32>;
pub type ParamScheduleF64 = ParamSchedule<f64>;
pub type ParamScheduleF32 = ParamSchedule<f32>;
