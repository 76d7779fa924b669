//! Deterministic numerical kernel shared by every other module: special
//! functions, the standard normal distribution, adaptive quadrature, bracketed
//! root finding and reproducible random-number streams.

mod normal;
mod quadrature;
mod rng;
mod root;
mod special;

pub use normal::{chi2_1_sf, normal_cdf, normal_pdf, normal_quantile};
pub use quadrature::{integrate, integrate_split};
pub use rng::{derive_seed, RngStream};
pub use root::find_root;
pub use special::{
    gamma, ln_gamma, lower_incomplete_gamma, regularized_lower_gamma, regularized_upper_gamma,
    upper_incomplete_gamma,
};

use crate::error::{Error, Result};

/// Tolerances shared by [`integrate`] and [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Relative accuracy requested from adaptive quadrature.
    pub quadrature_rel_tol: f64,
    /// Absolute tolerance on either `|f(x)|` or the bracket width.
    pub root_tol: f64,
    /// Maximum number of subdivisions (quadrature) or iterations (root finding).
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            quadrature_rel_tol: 1e-9,
            root_tol: 1e-8,
            max_iter: 1000,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quadrature_rel_tol > 0.0) || !(self.root_tol > 0.0) {
            return Err(Error::Input("tolerances must be strictly positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}
