//! Sharp bounds on the welfare gain of switching between two treatment
//! assignment policies when treatment is not unconfounded, together with
//! cross-fitted, locally robust estimation and inference on the bound
//! endpoints.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`] and [`policy`]: observation storage, outcome support, policy
//!   rules and the newly-treated / no-longer-treated indicators.
//! - [`first_stage`]: fold assignment and nuisance estimators (cell means,
//!   polynomial least squares, logistic regression).
//! - [`identification`]: closed-form CATE bounds per assumption regime and
//!   the welfare-gain bounds built from them.
//! - [`inference`]: orthogonalized moments, point estimates, variances and
//!   confidence intervals.
//! - [`simulation`]: the lognormal data-generating process, its exact
//!   population quantities and the Monte Carlo coverage harness.

pub mod data;
pub mod error;
pub mod first_stage;
pub mod identification;
pub mod inference;
pub mod policy;
pub mod simulation;

pub use data::{Dataset, Observation, Schema, Support};
pub use error::{Error, ErrorKind, Result};
pub use first_stage::{
    fit_cross_fitted, fit_first_stage, make_folds, EmptyCellPolicy, FirstStageConfig,
    FirstStageMethod, FoldAssignment, Nuisance, NuisanceFit, NuisanceNeeds,
};
pub use identification::{
    cate_bounds, plug_in_gain_bounds, population_gain_bounds, weighted_gain_bounds,
    AssumptionSpec, CateBounds, DiscreteDistribution, GainBounds, IvMode, Regime,
};
pub use inference::{
    lr_estimate, normal_quantile, AdjustmentMode, BoundsEstimate, EstimationConfig,
    MomentContext, MomentKind, Side,
};
pub use simulation::{dgp_sample, monte_carlo, population_oracle, DgpSpec, OracleTarget};
pub use policy::{parse_policy, policy_indicators, IndicatorVectors, PolicyPair, PolicyRule};

/// Version tag written into every serialized result.
pub const SPEC_VERSION: &str = "1.0";
