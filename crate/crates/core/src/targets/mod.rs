//! Benchmark target families: Gaussian mixtures, the autologistic (Ising)
//! image model, the bivariate SUR profile likelihood, and tabular targets
//! used as exactness oracles.

pub mod autologistic;
pub mod mixture;
pub mod sur;
pub mod tabular;

pub use autologistic::{Autologistic, AutologisticParams};
pub use mixture::GaussianMixture;
pub use sur::{SurData, SurProfileTarget};
pub use tabular::TabularTarget;
