//! Numerical gauge for two-weight cumulative-averaging (Hardy-type)
//! inequalities on an interval: condition functionals on an epsilon scale,
//! classical supremum/integral cross-checks, explicit near-extremal witness
//! functions, and an independent estimate of the least admissible constant.
//!
//! The crate is organized bottom-up:
//!
//! * [`weights`]: exact weight representations (power laws, step functions,
//!   log-linear tabulations) and the cumulative profile `V` they induce;
//! * [`quadrature`]: truncation-window grids, composite integration,
//!   cumulative transforms, and Stieltjes sums against `V`;
//! * [`conditions`]: the epsilon-scale functionals, their classical
//!   specializations, and the integration-by-parts identity residual;
//! * [`estimator`]: the discrete ratio of the two sides of the inequality,
//!   its maximization over nonnegative samples, near-extremal witness
//!   functions, and the limiting geometric-mean operator;
//! * [`cli`]: the config format, sweep orchestration, and report
//!   serialization behind the `hardy-gauge` binary.
//!
//! All functionals treat `f64::INFINITY` as a first-class divergence
//! sentinel rather than an error: an infinite condition value is a
//! mathematical statement about the weight pair, not a failure.

#![forbid(unsafe_code)]
// Guards written as `!(x > 0.0)` are deliberate: unlike `x <= 0.0`, they also
// reject NaN, which must never slip past a positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditions;
pub mod estimator;
pub mod quadrature;
pub mod weights;

pub use conditions::{
    a_eps, a_ps, b1_b2_identity_residual, b1_eps, b2_eps, default_epsilons, mazya_rosin,
    muckenhoupt, ConditionError, ConditionKind, ConditionValue, Scenario,
};
pub use estimator::{
    estimate_best_constant, gm_transform, hardy_ratio, ratio_gradient, witness_convex,
    witness_nonconvex, BestConstantEstimate, EstimatorError, OptimizerOptions,
};
pub use quadrature::{
    cumulative_integral, integrate, integrate_with_estimate, stieltjes_vmeasure, Grid, GridError,
    SampledFunction, Spacing,
};
pub use weights::{Exponents, IntPart, Interval, ParamError, Regime, VProfile, Weight, WeightError};
