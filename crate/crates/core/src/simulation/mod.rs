//! The lognormal selection model, its exact population quantities, and a
//! Monte Carlo harness for confidence-interval coverage.

mod dgp;
mod monte_carlo;
mod oracle;
mod quadrature;

pub use dgp::{dgp_sample, dgp_sample_with, lognormal_params, DgpNuisance, DgpSpec};
pub use monte_carlo::{
    monte_carlo, replication_rng, CoverageCell, CoverageReport, Fitting, MonteCarloConfig,
    Variant, RNG_DESCRIPTION,
};
pub use oracle::{population_oracle, OracleTarget, OracleValue};
pub use quadrature::{gauss_legendre, integrate};
