//! Rate machinery: recursion lemmas, elementary inequalities, theorem bound
//! curves and log-log slope fitting.

mod averaged;
mod bounds;
mod elementary;
mod recursion;
mod slope;

pub use averaged::{averaged_bound, verify_averaged_bound, AveragedBound, AveragedParams, AveragedReport, ZPolicy};
pub use bounds::{theorem_bound_curve, BoundCurveParams, BoundDisplay, BoundTerms};
pub use elementary::{
    elementary_inequalities_suite, integral_comparison, power_difference, ratio_is_decreasing, ElementaryReport,
    StepFunction,
};
pub use recursion::{
    check_sequence, recursion_closed_bound, recursion_geometric_bound, verify_recursion_bound, RecursionParams,
    RecursionReport, SequenceCheck, StepRule,
};
pub use slope::{fit_loglog_slope, SlopeFit};
