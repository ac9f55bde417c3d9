//! Volumes of convex relaxations for indicator-constrained convex functions,
//! Monte Carlo oracles for checking them, and a relaxation advisor.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advisor;
pub mod error;
pub mod experiment;
pub mod format;
pub mod function;
pub mod oracle;
pub mod quadrature;
pub mod volume;

pub use advisor::{
    kendall_tau, profile, profiles, rank, spearman_rho, RankingStrategy, VariableProfile,
};
pub use error::{Error, Result};
pub use experiment::{
    generate_knapsack, generate_meanvar, run_budget_sweep, solve_meanvar, solve_relaxation, KnapsackInstance,
    MeanVarianceInstance, SolveResult, SolveStatus, SweepRow,
};
pub use function::{three_secant_holds, BoundPair, Capabilities, ConvexFunctionSpec, FunctionKind, Secant};
pub use volume::{
    exp_asymptotic_ratio, piecewise_gain_ratio, threshold_k, vol_delta, vol_diff, vol_naive_capped,
    vol_naive_simplebound, vol_perspective, vol_piecewise, vol_power_family, vol_ratio, volume, Cap,
    RelaxationKind, RelaxationSpec, VolumeMethod, VolumeRatio, VolumeReport,
};
pub use oracle::{
    contains, mc_volume, mfcq_certificate, perspective_gradient, power_cone_contains, power_cone_form,
    verify_nesting, Body, McEstimate, MfcqCertificate, Point3,
};
