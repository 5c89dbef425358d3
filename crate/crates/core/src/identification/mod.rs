//! Closed-form bounds on conditional average treatment effects and on the
//! welfare gain of a policy change.

mod assumptions;
mod cate;
mod gain;
mod population;

pub use assumptions::{
    empirical_levels, quantile_bins, AssumptionSpec, InstrumentLevel, IvMode, Regime,
};
pub use cate::{cate_bounds, CateBounds};
pub use gain::{plug_in_gain_bounds, weighted_gain_bounds, CovariateFn, GainBounds};
pub use population::{population_gain_bounds, Atom, DiscreteDistribution, PopulationNuisance};

pub(crate) use gain::{check_fits, row_cate, RowWarnings};
