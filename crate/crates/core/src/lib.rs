//! Distributions of posterior quantiles induced by statistical experiments.
//!
//! The crate computes the bounds that characterize which distributions of a
//! posterior q-quantile can be implemented, builds the q-quantile matching
//! experiment that implements all of them, optimizes linear objectives over
//! the implementable set, perturbs the matching experiment so that a target
//! is implemented with unique quantiles, and checks all of the above on
//! finite instances. [`gerrymander`] applies the machinery to districting.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod gerrymander;
pub mod json;
pub mod objective;
pub mod optimize;
pub mod plot;
pub mod selection;
pub mod unique;
pub mod verify;

pub use bounds::{is_implementable, quantile_bounds, BoundSide, Implementability};
pub use dist::{ks_distance, mix, AtomicDist, Cdf, Domain, Knot, Piece, QuantileInterval, Side};
pub use error::{Error, Result};
pub use experiment::{
    bayes_residual, discretize_experiment, matching_experiment, nam_experiment, Experiment,
    FiniteEntry, FiniteExperiment, ParametricExperiment, ParametricKind,
};
pub use objective::{argmax_interval, stieltjes_integral, ArgmaxInterval, Objective};
pub use optimize::{
    feasible_interval, hp_distribution, optimize_quantile_dist, solution_quasiconcave,
    solution_quasiconvex, Optimum, Uniqueness,
};
pub use selection::{matching_selection, pushforward, Pushforward, Selection};
pub use unique::{
    dyadic_refine, unique_experiment, verify_unique, DyadicRefinement, UniqueVerdict,
};

/// Absolute tolerance for floating comparisons and knot deduplication.
pub const TOL: f64 = 1e-12;
