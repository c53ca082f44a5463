//! Concrete statistical manifolds.

pub mod beta_mixture;
pub mod gaussian;
pub mod loglinear;
pub mod quadrature;

pub use beta_mixture::{BetaMixtureManifold, BetaMixtureParams};
pub use gaussian::{GaussianIsoManifold, GaussianIsoModel};
pub use loglinear::{LogLinearManifold, LogLinearModel, SubsetIndex};
pub use quadrature::QuadratureRule;
