//! Thin-plate energy `J(F) = ∫∫ F_uu² + 2 F_uv² + F_vv² du dv` as a
//! quadratic form over the surface coefficients.
//!
//! The twist term `F_uv` is only included when both degrees are at least 2,
//! so that smoothing is inert on piecewise bilinear spaces.

use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::eval::Locator;
use crate::lr::{basis_derivs, LrSurface};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (&'static [f64], &'static [f64]) {
    const X1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const X2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const X3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const X4: [f64; 4] =
        [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W4: [f64; 4] =
        [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    match n {
        1 => (&X1, &W1),
        2 => (&X2, &W2),
        3 => (&X3, &W3),
        4 => (&X4, &W4),
        _ => unreachable!("quadrature order {n}"),
    }
}

/// Sparsity pattern coupling every pair of B-splines that share an element.
pub fn coupling_pattern(surface: &LrSurface, locator: &Locator) -> CsrMatrix {
    let mut rows = vec![Vec::new(); surface.num_coefficients()];
    for e in 0..locator.elements().len() {
        let list = locator.element_bsplines(e);
        for &a in list {
            rows[a as usize].extend(list.iter().map(|&b| b as usize));
        }
    }
    CsrMatrix::with_pattern(rows)
}

/// Element-wise Gauss–Legendre assembly with `p + 1` nodes per direction,
/// exact for the polynomial integrands. Basis functions are the scaled
/// `s_i R_i`.
pub fn smoothing_matrix(surface: &LrSurface, locator: &Locator) -> CsrMatrix {
    let mut m = coupling_pattern(surface, locator);
    let (p1, p2) = surface.degrees();
    let (xu, wu) = gauss_legendre(p1 + 1);
    let (xv, wv) = gauss_legendre(p2 + 1);
    let end = surface.domain_end();
    let bs = surface.bsplines();
    let twist = if p1 >= 2 && p2 >= 2 { 2.0 } else { 0.0 };

    let locals: Vec<Vec<f64>> = locator
        .elements()
        .par_iter()
        .enumerate()
        .map(|(e, el)| {
            let list = locator.element_bsplines(e);
            let n = list.len();
            let mut local = vec![0.0; n * n];
            let (hu, hv) = (0.5 * (el.u1 - el.u0), 0.5 * (el.v1 - el.v0));
            let mut d2 = vec![[0.0f64; 3]; n];
            for (qu, &xu_) in xu.iter().enumerate() {
                let u = el.u0 + hu * (xu_ + 1.0);
                for (qv, &xv_) in xv.iter().enumerate() {
                    let v = el.v0 + hv * (xv_ + 1.0);
                    let w = wu[qu] * wv[qv] * hu * hv;
                    for (a, &bi) in list.iter().enumerate() {
                        let b = &bs[bi as usize];
                        let du = basis_derivs(&b.knots_u, u, end.0);
                        let dv = basis_derivs(&b.knots_v, v, end.1);
                        d2[a] = [b.scale * du[2] * dv[0], b.scale * du[1] * dv[1], b.scale * du[0] * dv[2]];
                    }
                    for a in 0..n {
                        for c in a..n {
                            local[a * n + c] +=
                                w * (d2[a][0] * d2[c][0] + twist * d2[a][1] * d2[c][1] + d2[a][2] * d2[c][2]);
                        }
                    }
                }
            }
            local
        })
        .collect();

    for (e, local) in locals.iter().enumerate() {
        let list = locator.element_bsplines(e);
        let n = list.len();
        for a in 0..n {
            for c in a..n {
                let v = local[a * n + c];
                if v == 0.0 {
                    continue;
                }
                let (i, j) = (list[a] as usize, list[c] as usize);
                m.add(i, j, v);
                if i != j {
                    m.add(j, i, v);
                }
            }
        }
    }
    m
}
