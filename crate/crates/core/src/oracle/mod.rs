//! Independent ground truth: quadrature of the Gibbs measure, Monte-Carlo
//! estimators, the IRM variational check and finite-difference derivative checks.

mod adaptive;
mod derivative;
mod estimators;
mod irm;
mod quadrature;

pub use adaptive::integrate_adaptive;
pub use derivative::{
    check_data_model, check_landscape, derivative_check, one_sided_check, DerivativeReport,
};
pub use estimators::{
    empirical_excess_risk, empirical_generalization_gap, estimate_mean, gibbs_oracle, Estimate,
    GapParams, GibbsOracle,
};
pub use irm::{gibbs_density_on_grid, irm_objective};
pub use quadrature::{
    gauss_legendre, quadrature_measure, Integrand, Measure, QuadratureGrid, QuadratureSpec,
    RegionMeasure, Rule1d, MIN_NODES_PER_SD,
};
