use rayon::prelude::*;

use crate::eval::{Assignment, Locator, PointCloud};
use crate::lr::LrSurface;

/// One multilevel B-spline step on the residuals `r_c = z_c - F(x_c, y_c)`.
///
/// Each residual is spread over the B-splines overlapping it with the
/// pseudo-inverse weights `phi_ic = w_ic r_c / sum_j w_jc²`; every B-spline
/// then takes the `w²`-weighted mean of its `phi` values as an increment.
/// Returns the new coefficient vector.
pub fn mba_update(surface: &LrSurface, locator: &Locator, cloud: &PointCloud, assignment: &Assignment) -> Vec<f64> {
    let bs = surface.bsplines();
    let end = surface.domain_end();
    let locals: Vec<(Vec<f64>, Vec<f64>)> = assignment
        .per_element
        .par_iter()
        .enumerate()
        .map(|(e, pts)| {
            let list = locator.element_bsplines(e);
            let n = list.len();
            let mut num = vec![0.0; n];
            let mut den = vec![0.0; n];
            let mut w = vec![0.0; n];
            for &k in pts {
                let [x, y, z] = cloud.points[k];
                let mut f = 0.0;
                let mut norm2 = 0.0;
                for (a, &bi) in list.iter().enumerate() {
                    let b = &bs[bi as usize];
                    w[a] = b.weight(x, y, end);
                    f += b.coeff * w[a];
                    norm2 += w[a] * w[a];
                }
                let r = z - f;
                // exact zero residuals carry no information and are left out
                if norm2 == 0.0 || r == 0.0 {
                    continue;
                }
                for a in 0..n {
                    let w2 = w[a] * w[a];
                    let phi = w[a] * r / norm2;
                    num[a] += w2 * phi;
                    den[a] += w2;
                }
            }
            (num, den)
        })
        .collect();

    let mut num = vec![0.0; bs.len()];
    let mut den = vec![0.0; bs.len()];
    for (e, (n_loc, d_loc)) in locals.iter().enumerate() {
        for (a, &bi) in locator.element_bsplines(e).iter().enumerate() {
            num[bi as usize] += n_loc[a];
            den[bi as usize] += d_loc[a];
        }
    }
    bs.iter().enumerate().map(|(i, b)| if den[i] > 0.0 { b.coeff + num[i] / den[i] } else { b.coeff }).collect()
}
