//! Locally robust moments, cross-fitted estimation and confidence
//! intervals for the bound endpoints.

mod estimate;
mod moments;
mod orthogonality;
mod quantile;

pub use estimate::{
    estimate_endpoints, folds_for, lr_estimate, BoundsEstimate, EndpointEstimates,
    EstimationConfig, InferenceKind, MomentKind, PolicyText, SideEstimate,
};
pub use moments::{
    adjustment_phi, moment_m, moment_psi, supports_inference, AdjustmentMode, MomentContext, Side,
};
pub use orthogonality::{
    expected_moment, orthogonality_check, Component, Direction, OrthogonalityReport, Perturbed,
};
pub use quantile::{inverse_normal_cdf, normal_quantile};
