//! Approximation engines: penalized least squares over the current spline
//! space and the local multilevel B-spline (MBA) update.

mod lsq;
mod mba;
pub mod smoothing;
pub mod sparse;

pub use lsq::{assemble, lsq_fit, normal_equations, LsqSystem};
pub use mba::mba_update;
pub use smoothing::smoothing_matrix;

use thiserror::Error;

use crate::eval::{Assignment, Locator, PointCloud};
use crate::lr::{LrError, LrSurface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("least squares system is singular: B-spline {bspline} has no data and no smoothing; use a positive smoothing weight")]
    Singular { bspline: usize },

    #[error(
        "conjugate gradients did not converge: relative residual {rel_residual:.3e} after {iterations} iterations"
    )]
    NonConvergence { iterations: usize, rel_residual: f64 },

    #[error(transparent)]
    Lr(#[from] LrError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Smoothing weight; `None` selects `smoothing_ratio * alpha_ls * area`.
    pub alpha_smooth: Option<f64>,
    /// Data weight; `None` selects `1 / K`.
    pub alpha_ls: Option<f64>,
    pub smoothing_ratio: f64,
    /// Loop iterations (counted from 1) that use least squares before MBA.
    pub lsq_iterations: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alpha_smooth: None,
            alpha_ls: None,
            smoothing_ratio: 1e-3,
            lsq_iterations: 2,
            solver_tol: 1e-10,
            solver_max_iter: 20_000,
        }
    }
}

impl FitConfig {
    /// `(alpha_smooth, alpha_ls)` for a cloud of `n_points` over `area`.
    pub fn weights(&self, n_points: usize, area: f64) -> (f64, f64) {
        let alpha_ls = self.alpha_ls.unwrap_or(1.0 / n_points.max(1) as f64);
        let alpha_smooth = self.alpha_smooth.unwrap_or(self.smoothing_ratio * alpha_ls * area);
        (alpha_smooth, alpha_ls)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    LeastSquares,
    Mba,
}

/// Chooses the method for loop iteration `iteration` (least squares while
/// `iteration < lsq_iterations`).
pub fn method_for(cfg: &FitConfig, iteration: usize) -> FitMethod {
    if iteration < cfg.lsq_iterations {
        FitMethod::LeastSquares
    } else {
        FitMethod::Mba
    }
}

/// Runs the approximation for one loop iteration and stores the new
/// coefficients in `surface`.
pub fn fit_step(
    surface: &mut LrSurface,
    locator: &Locator,
    cloud: &PointCloud,
    assignment: &Assignment,
    cfg: &FitConfig,
    iteration: usize,
) -> Result<FitMethod, FitError> {
    let method = method_for(cfg, iteration);
    let coeffs = match method {
        FitMethod::LeastSquares => lsq_fit(surface, locator, cloud, assignment, cfg)?,
        FitMethod::Mba => mba_update(surface, locator, cloud, assignment),
    };
    surface.set_coefficients(&coeffs)?;
    Ok(method)
}

/// Least squares fit of `cloud` into `surface`, building the lookup
/// structures on the fly.
pub fn fit_lsq(surface: &mut LrSurface, cloud: &PointCloud, cfg: &FitConfig) -> Result<(), FitError> {
    let locator = Locator::new(surface);
    let assignment = Assignment::new(&locator, cloud)?;
    let coeffs = lsq_fit(surface, &locator, cloud, &assignment, cfg)?;
    surface.set_coefficients(&coeffs)?;
    Ok(())
}

/// One MBA step on `cloud`, building the lookup structures on the fly.
pub fn fit_mba(surface: &mut LrSurface, cloud: &PointCloud) -> Result<(), FitError> {
    let locator = Locator::new(surface);
    let assignment = Assignment::new(&locator, cloud)?;
    let coeffs = mba_update(surface, &locator, cloud, &assignment);
    surface.set_coefficients(&coeffs)?;
    Ok(())
}
