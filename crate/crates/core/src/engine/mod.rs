//! End-to-end pipelines: resample-and-test with known, estimated or bounded
//! shift factors, the target heuristic for `m`, shift builders for common
//! reductions and the IPW baseline.

mod builders;
mod config;
mod density;
mod heuristic;
mod ipw;
mod pipeline;
mod shift;
mod split;

pub use builders::{
    ci_reduction_weights, off_policy_weights, two_sample_shift_weights, FixedPolicy, Policy,
    SoftmaxPolicy, UniformPolicy,
};
pub use config::{MChoice, RunConfig};
pub use density::{
    fit_polynomial_gaussian, ratio_weights, BoundDensity, ConditionalDensity, DensityModel,
    DiscreteConditional, Estimator, EstimatorKind, Oracle, PolynomialGaussian,
};
pub use heuristic::{
    choose_m_heuristic, ConstantGof, GofSpec, GofTest, HeuristicChoice, HeuristicConfig,
    HeuristicSpec, RegressionGof,
};
pub use ipw::{clip_largest, evaluate_function, ipw_mean_test};
pub use pipeline::{resample_and_test, run_estimated_shift, run_known_shift, run_rejection_test};
pub use shift::{expression_weights, ShiftConfig, ShiftSpec};
pub use split::SplitPlan;
