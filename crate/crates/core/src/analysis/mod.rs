//! Statistics and bounds: chaos curves, variance identities and bounds,
//! Hermite variance of polynomials and discrete perturbation.

pub mod chaos;
pub mod discrete;
pub mod hermite;
pub mod variance;

pub use chaos::{
    chaos_curve, chaos_from_interpolation, chaos_from_interpolation_inf, check_complete_monotonicity, default_grid, geometric_grid,
    interpolation_upper_bound, rem_overlap_curve, single_edge_chaos_curve, ChaosCurve, ChaosObservable, Engine,
    EstimatorMode, MonotonicityReport,
};
pub use discrete::{discrete_perturb_experiment, gaussian_gamma, t_k_exact, t_k_monte_carlo, DiscretePerturbReport, FSpec};
pub use hermite::{
    gaussian_variance_oracle, hermite_variance, variance_lower_bound_general, HermiteVariance, Polynomial,
    VarianceLowerBound,
};
pub use variance::{
    ea_variance_lower_bound, laplace_tail_bound, no_chaos_floor, quenched_chaos_statistic,
    superconcentration_bound, variance_direct, variance_from_chaos_integral, ChaosIntegral, NoChaosFloor,
    QuenchedReport, VarianceDirect, VarianceReport,
};
