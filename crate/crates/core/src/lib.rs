//! Shuffling-type stochastic gradient methods on finite-sum objectives.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
pub mod error;
pub mod optimizer;
pub mod problems;
pub mod scalar;
pub mod schedules;
pub mod shuffling;

pub use data::{
    minmax_scale, parse_libsvm, parse_libsvm_reader, to_libsvm, train_test_split, Dataset, ScalingParams, SparseRow,
};
pub use error::{Error, Result};
pub use optimizer::{run, run_epoch, EpochTrace, InitialPoint, OptimizerConfig, PointMetrics};
pub use problems::{estimate_constants, FiniteSumProblem, LogisticNonconvex, QuadraticSC, RandomQuadratic};
pub use scalar::Scalar;
pub use schedules::{Preset, PresetArgs, ScheduleKind};
pub use shuffling::{Permutation, ShuffleKind, ShuffleStrategy};

pub type Logistic = problems::LogisticNonconvex<f64>;
pub type Quadratic = problems::QuadraticSC<f64>;
pub type Schedule = schedules::Schedule<f64>;
pub type ProblemConstants = problems::ProblemConstants<f64>;
pub type RunResult = optimizer::RunResult<f64>;
pub type Config = optimizer::OptimizerConfig<f64>;

pub type LogisticF32 = problems::LogisticNonconvex<f32>;
pub type QuadraticF32 = problems::QuadraticSC<f32>;
