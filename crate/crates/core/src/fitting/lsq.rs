use rayon::prelude::*;

use super::smoothing::{coupling_pattern, smoothing_matrix};
use super::sparse::{pcg, CsrMatrix};
use super::{FitConfig, FitError};
use crate::eval::{Assignment, Locator, PointCloud};
use crate::lr::LrSurface;

/// Penalized least squares system `(a1 M + a2 A^T A) P = a2 A^T z`.
#[derive(Debug, Clone)]
pub struct LsqSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// `A^T A` and `A^T z` for the collocation matrix `A[k, i] = s_i R_i(x_k, y_k)`.
pub fn normal_equations(
    surface: &LrSurface,
    locator: &Locator,
    cloud: &PointCloud,
    assignment: &Assignment,
) -> (CsrMatrix, Vec<f64>) {
    let mut ata = coupling_pattern(surface, locator);
    let mut atz = vec![0.0; surface.num_coefficients()];
    let end = surface.domain_end();
    let bs = surface.bsplines();
    let locals: Vec<(Vec<f64>, Vec<f64>)> = assignment
        .per_element
        .par_iter()
        .enumerate()
        .map(|(e, pts)| {
            let list = locator.element_bsplines(e);
            let n = list.len();
            let mut gram = vec![0.0; n * n];
            let mut rhs = vec![0.0; n];
            let mut w = vec![0.0; n];
            for &k in pts {
                let [x, y, z] = cloud.points[k];
                for (a, &bi) in list.iter().enumerate() {
                    w[a] = bs[bi as usize].weight(x, y, end);
                }
                for a in 0..n {
                    if w[a] == 0.0 {
                        continue;
                    }
                    rhs[a] += w[a] * z;
                    for c in a..n {
                        gram[a * n + c] += w[a] * w[c];
                    }
                }
            }
            (gram, rhs)
        })
        .collect();
    for (e, (gram, rhs)) in locals.iter().enumerate() {
        let list = locator.element_bsplines(e);
        let n = list.len();
        for a in 0..n {
            let i = list[a] as usize;
            atz[i] += rhs[a];
            for c in a..n {
                let v = gram[a * n + c];
                if v == 0.0 {
                    continue;
                }
                let j = list[c] as usize;
                ata.add(i, j, v);
                if i != j {
                    ata.add(j, i, v);
                }
            }
        }
    }
    (ata, atz)
}

/// Assembles the smoothed system, refusing it when some B-spline has neither
/// data nor smoothing to pin it down.
pub fn assemble(
    surface: &LrSurface,
    locator: &Locator,
    cloud: &PointCloud,
    assignment: &Assignment,
    cfg: &FitConfig,
) -> Result<LsqSystem, FitError> {
    let domain = surface.domain();
    let area = (domain.u1 - domain.u0) * (domain.v1 - domain.v0);
    let (alpha_smooth, alpha_ls) = cfg.weights(cloud.len(), area);
    let (mut matrix, atz) = normal_equations(surface, locator, cloud, assignment);
    let data_diag = matrix.diagonal();
    if alpha_smooth > 0.0 {
        let m = smoothing_matrix(surface, locator);
        matrix.combine(alpha_ls, &m, alpha_smooth);
    } else {
        matrix.combine(alpha_ls, &matrix.clone(), 0.0);
    }
    let diag = matrix.diagonal();
    if let Some(i) = (0..diag.len()).find(|&i| data_diag[i] == 0.0 && diag[i] == 0.0) {
        return Err(FitError::Singular { bspline: i });
    }
    let rhs = atz.into_iter().map(|v| alpha_ls * v).collect();
    Ok(LsqSystem { matrix, rhs })
}

/// Least squares coefficients in the current spline space, warm-started from
/// the surface's present coefficients.
pub fn lsq_fit(
    surface: &LrSurface,
    locator: &Locator,
    cloud: &PointCloud,
    assignment: &Assignment,
    cfg: &FitConfig,
) -> Result<Vec<f64>, FitError> {
    let system = assemble(surface, locator, cloud, assignment, cfg)?;
    let mut coeffs = surface.coefficients();
    let stats = pcg(&system.matrix, &system.rhs, &mut coeffs, cfg.solver_tol, cfg.solver_max_iter)?;
    log::debug!(
        "lsq: {} unknowns, {} cg iterations, residual {:.3e}",
        coeffs.len(),
        stats.iterations,
        stats.rel_residual
    );
    Ok(coeffs)
}
