//! Tensor-product B-splines with local knot vectors.

use std::hash::{Hash, Hasher};

use super::mesh::Direction;
use super::LrError;

/// Evaluates the univariate B-spline with local knots `knots` (degree
/// `knots.len() - 2`) at `x`.
///
/// Degree-zero pieces are half-open `[t_j, t_{j+1})`, except that the last
/// nonempty piece is closed when its right end equals `end` (the domain
/// maximum), so the basis still sums to one on the right boundary.
pub fn basis_value(knots: &[f64], x: f64, end: f64) -> f64 {
    let p = knots.len() - 2;
    if x < knots[0] || x > knots[p + 1] {
        return 0.0;
    }
    let mut n = [0.0f64; 5];
    for j in 0..=p {
        n[j] = degree_zero(knots[j], knots[j + 1], x, end);
    }
    for k in 1..=p {
        for j in 0..=(p - k) {
            let left = ratio(x - knots[j], knots[j + k] - knots[j]);
            let right = ratio(knots[j + k + 1] - x, knots[j + k + 1] - knots[j + 1]);
            n[j] = left * n[j] + right * n[j + 1];
        }
    }
    n[0]
}

/// Value, first and second derivative of the univariate B-spline at `x`.
pub fn basis_derivs(knots: &[f64], x: f64, end: f64) -> [f64; 3] {
    let p = knots.len() - 2;
    if x < knots[0] || x > knots[p + 1] {
        return [0.0; 3];
    }
    // table[k][j] = B_{j,k}(x) on the sub-knot vector knots[j..=j+k+1]
    let mut table = [[0.0f64; 5]; 4];
    for j in 0..=p {
        table[0][j] = degree_zero(knots[j], knots[j + 1], x, end);
    }
    for k in 1..=p {
        for j in 0..=(p - k) {
            let left = ratio(x - knots[j], knots[j + k] - knots[j]);
            let right = ratio(knots[j + k + 1] - x, knots[j + k + 1] - knots[j + 1]);
            table[k][j] = left * table[k - 1][j] + right * table[k - 1][j + 1];
        }
    }
    let mut out = [table[p][0], 0.0, 0.0];
    // D^r B_{0,p} = sum_m c[m] B_{m,p-r}
    let mut coeffs = [0.0f64; 5];
    coeffs[0] = 1.0;
    for r in 1..=2usize {
        if r > p {
            break;
        }
        let k = p - r + 1;
        let mut next = [0.0f64; 5];
        for m in 0..=r {
            let cur = if m < r { coeffs[m] } else { 0.0 };
            let prev = if m > 0 { coeffs[m - 1] } else { 0.0 };
            next[m] = k as f64 * ratio(cur - prev, knots[m + k] - knots[m]);
        }
        coeffs = next;
        out[r] = (0..=r).map(|m| coeffs[m] * table[p - r][m]).sum();
    }
    out
}

fn degree_zero(a: f64, b: f64, x: f64, end: f64) -> f64 {
    if a < b && ((a <= x && x < b) || (x == b && b == end)) {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// One tensor-product B-spline of an LR spline space: local knots in both
/// directions, the height coefficient and the partition-of-unity scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BSpline {
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub coeff: f64,
    pub scale: f64,
}

/// Exact identity of a B-spline: the bit patterns of its local knots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotKey(Vec<u64>);

impl Hash for KnotKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

/// Result of splitting a B-spline at one new knot: `parent = first_weight *
/// first + second_weight * second` pointwise (unscaled functions).
#[derive(Debug, Clone)]
pub struct Split {
    pub first: BSpline,
    pub first_weight: f64,
    pub second: BSpline,
    pub second_weight: f64,
}

impl BSpline {
    pub fn new(knots_u: Vec<f64>, knots_v: Vec<f64>) -> Self {
        Self { knots_u, knots_v, coeff: 0.0, scale: 1.0 }
    }

    pub fn degree_u(&self) -> usize {
        self.knots_u.len() - 2
    }

    pub fn degree_v(&self) -> usize {
        self.knots_v.len() - 2
    }

    pub fn knots(&self, dir: Direction) -> &[f64] {
        match dir {
            Direction::U => &self.knots_u,
            Direction::V => &self.knots_v,
        }
    }

    pub fn u_min(&self) -> f64 {
        self.knots_u[0]
    }
    pub fn u_max(&self) -> f64 {
        *self.knots_u.last().unwrap()
    }
    pub fn v_min(&self) -> f64 {
        self.knots_v[0]
    }
    pub fn v_max(&self) -> f64 {
        *self.knots_v.last().unwrap()
    }

    /// Support extent `(min, max)` along the parameter of `dir`.
    pub fn extent(&self, dir: Direction) -> (f64, f64) {
        let k = self.knots(dir);
        (k[0], k[k.len() - 1])
    }

    pub fn support_area(&self) -> f64 {
        (self.u_max() - self.u_min()) * (self.v_max() - self.v_min())
    }

    pub fn support_center(&self) -> (f64, f64) {
        (0.5 * (self.u_min() + self.u_max()), 0.5 * (self.v_min() + self.v_max()))
    }

    pub fn key(&self) -> KnotKey {
        // +0.0 folds a negative zero onto positive zero
        KnotKey(
            self.knots_u
                .iter()
                .chain(std::iter::once(&f64::NAN))
                .chain(self.knots_v.iter())
                .map(|v| (v + 0.0).to_bits())
                .collect(),
        )
    }

    /// Unscaled tensor-product value `R(u, v)`; `end` is the domain maximum.
    pub fn value(&self, u: f64, v: f64, end: (f64, f64)) -> f64 {
        if u < self.u_min() || u > self.u_max() || v < self.v_min() || v > self.v_max() {
            return 0.0;
        }
        let bu = basis_value(&self.knots_u, u, end.0);
        if bu == 0.0 {
            return 0.0;
        }
        bu * basis_value(&self.knots_v, v, end.1)
    }

    /// Scaled value `s * R(u, v)`, the weight this B-spline carries in the surface.
    pub fn weight(&self, u: f64, v: f64, end: (f64, f64)) -> f64 {
        self.scale * self.value(u, v, end)
    }

    /// True when the box `[u0,u1] x [v0,v1]` lies inside the support.
    pub fn contains_box(&self, u0: f64, u1: f64, v0: f64, v1: f64) -> bool {
        self.u_min() <= u0 && u1 <= self.u_max() && self.v_min() <= v0 && v1 <= self.v_max()
    }

    /// Splits this B-spline by inserting `t` into its knot vector in `dir`.
    ///
    /// Children copy the parent's coefficient and scale; the caller folds the
    /// weights into the scales when merging into a spline space.
    pub fn split(&self, dir: Direction, t: f64) -> Result<Split, LrError> {
        let knots = self.knots(dir);
        let p = knots.len() - 2;
        let (lo, hi) = (knots[0], knots[p + 1]);
        if !(t > lo && t < hi) {
            return Err(LrError::OutsideSupport { value: t, min: lo, max: hi });
        }
        if knots.contains(&t) {
            return Err(LrError::MultiplicityIncrease { value: t });
        }
        let mut refined = Vec::with_capacity(p + 3);
        refined.extend(knots.iter().copied().filter(|&k| k < t));
        refined.push(t);
        refined.extend(knots.iter().copied().filter(|&k| k > t));

        let first_weight = if t >= knots[p] { 1.0 } else { (t - knots[0]) / (knots[p] - knots[0]) };
        let second_weight = if t <= knots[1] { 1.0 } else { (knots[p + 1] - t) / (knots[p + 1] - knots[1]) };

        let mut first = self.clone();
        let mut second = self.clone();
        match dir {
            Direction::U => {
                first.knots_u = refined[..p + 2].to_vec();
                second.knots_u = refined[1..].to_vec();
            }
            Direction::V => {
                first.knots_v = refined[..p + 2].to_vec();
                second.knots_v = refined[1..].to_vec();
            }
        }
        Ok(Split { first, first_weight, second, second_weight })
    }
}
