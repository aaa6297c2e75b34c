//! Surface evaluation, point-to-element assignment and accuracy statistics.

use rayon::prelude::*;
use thiserror::Error;

use crate::lr::{ElementBox, KnotTable, LrError, LrSurface};

/// Projectable points `(x, y, z)`; `(x, y)` doubles as the parameter pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(x_min, x_max, y_min, y_max)`, or `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.points.first()?;
        let init = (first[0], first[0], first[1], first[1]);
        Some(self.points.iter().fold(init, |b, p| (b.0.min(p[0]), b.1.max(p[0]), b.2.min(p[1]), b.3.max(p[1]))))
    }

    /// `(z_min, z_max)`, or `None` for an empty cloud.
    pub fn height_range(&self) -> Option<(f64, f64)> {
        let first = self.points.first()?;
        Some(self.points.iter().fold((first[2], first[2]), |r, p| (r.0.min(p[2]), r.1.max(p[2]))))
    }
}

impl LrSurface {
    /// `F(u, v) = sum_i P_i s_i R_i(u, v)`. The domain is closed; points on
    /// interior meshlines belong to the element on the greater side.
    pub fn evaluate(&self, u: f64, v: f64) -> Result<f64, LrError> {
        let d = self.domain();
        if !(u >= d.u0 && u <= d.u1 && v >= d.v0 && v <= d.v1) {
            return Err(LrError::OutsideDomain { u, v });
        }
        let end = self.domain_end();
        Ok(self.bsplines().iter().map(|b| b.coeff * b.weight(u, v, end)).sum())
    }

    /// `sum_i s_i R_i(u, v)`, identically one on the domain.
    pub fn partition_sum(&self, u: f64, v: f64) -> f64 {
        let end = self.domain_end();
        self.bsplines().iter().map(|b| b.weight(u, v, end)).sum()
    }
}

/// Spatial lookup for one fixed state of a surface: elements in `(v0, u0)`
/// order, the fine knot grid mapped onto them, and element/B-spline overlap
/// lists. Rebuilt after every refinement.
#[derive(Debug, Clone)]
pub struct Locator {
    elements: Vec<ElementBox>,
    table: KnotTable,
    cells: Vec<u32>,
    element_bsplines: Vec<Vec<u32>>,
    bspline_elements: Vec<Vec<u32>>,
    end: (f64, f64),
}

impl Locator {
    pub fn new(surface: &LrSurface) -> Self {
        let elements = surface.mesh().elements();
        let table = surface.mesh().knot_table();
        let (us, vs) = (&table.values_u, &table.values_v);
        let nu = us.len() - 1;
        let idx = |vals: &[f64], x: f64| vals.partition_point(|&k| k < x);

        let mut ranges = Vec::with_capacity(elements.len());
        let mut cells = vec![u32::MAX; nu * (vs.len() - 1)];
        for (e, el) in elements.iter().enumerate() {
            let r = [idx(us, el.u0), idx(us, el.u1), idx(vs, el.v0), idx(vs, el.v1)];
            for j in r[2]..r[3] {
                cells[j * nu + r[0]..j * nu + r[1]].fill(e as u32);
            }
            ranges.push(r);
        }

        let mut element_bsplines = vec![Vec::new(); elements.len()];
        let mut bspline_elements = Vec::with_capacity(surface.num_coefficients());
        for (bi, b) in surface.bsplines().iter().enumerate() {
            let (iu0, iu1) = (idx(us, b.u_min()), idx(us, b.u_max()));
            let (iv0, iv1) = (idx(vs, b.v_min()), idx(vs, b.v_max()));
            let mut mine = Vec::new();
            for j in iv0..iv1 {
                let mut i = iu0;
                while i < iu1 {
                    let e = cells[j * nu + i] as usize;
                    if ranges[e][2] == j {
                        mine.push(e as u32);
                        element_bsplines[e].push(bi as u32);
                    }
                    i = ranges[e][1];
                }
            }
            bspline_elements.push(mine);
        }
        Self { elements, table, cells, element_bsplines, bspline_elements, end: surface.domain_end() }
    }

    pub fn elements(&self) -> &[ElementBox] {
        &self.elements
    }

    pub fn knot_table(&self) -> &KnotTable {
        &self.table
    }

    /// B-spline indices whose support contains element `e`.
    pub fn element_bsplines(&self, e: usize) -> &[u32] {
        &self.element_bsplines[e]
    }

    /// Element indices inside the support of B-spline `b`.
    pub fn bspline_elements(&self, b: usize) -> &[u32] {
        &self.bspline_elements[b]
    }

    /// Element containing `(u, v)` under the half-open convention, or `None`
    /// outside the domain.
    pub fn locate(&self, u: f64, v: f64) -> Option<usize> {
        let (us, vs) = (&self.table.values_u, &self.table.values_v);
        let cell = |vals: &[f64], x: f64| -> Option<usize> {
            if x < vals[0] || x > vals[vals.len() - 1] {
                return None;
            }
            Some(vals.partition_point(|&k| k <= x).saturating_sub(1).min(vals.len() - 2))
        };
        let (i, j) = (cell(us, u)?, cell(vs, v)?);
        Some(self.cells[j * (us.len() - 1) + i] as usize)
    }

    /// Calls `f(bspline_index, s_i R_i(u, v))` for every B-spline of the
    /// element containing the point.
    #[inline]
    pub fn for_each_weight(&self, surface: &LrSurface, e: usize, u: f64, v: f64, mut f: impl FnMut(usize, f64)) {
        let bs = surface.bsplines();
        for &b in &self.element_bsplines[e] {
            let w = bs[b as usize].weight(u, v, self.end);
            if w != 0.0 {
                f(b as usize, w);
            }
        }
    }

    /// Evaluates the surface at a point known to lie in element `e`.
    pub fn evaluate_in(&self, surface: &LrSurface, e: usize, u: f64, v: f64) -> f64 {
        let bs = surface.bsplines();
        let mut z = 0.0;
        self.for_each_weight(surface, e, u, v, |b, w| z += bs[b].coeff * w);
        z
    }

    pub fn evaluate(&self, surface: &LrSurface, u: f64, v: f64) -> Result<f64, LrError> {
        let e = self.locate(u, v).ok_or(LrError::OutsideDomain { u, v })?;
        Ok(self.evaluate_in(surface, e, u, v))
    }
}

/// Points of a cloud grouped by the element containing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Point indices per element, aligned with [`Locator::elements`].
    pub per_element: Vec<Vec<usize>>,
    /// Element index per point.
    pub point_element: Vec<u32>,
}

impl Assignment {
    pub fn new(locator: &Locator, cloud: &PointCloud) -> Result<Self, LrError> {
        let point_element = cloud
            .points
            .par_iter()
            .map(|p| locator.locate(p[0], p[1]).map(|e| e as u32).ok_or(LrError::OutsideDomain { u: p[0], v: p[1] }))
            .collect::<Result<Vec<_>, _>>()?;
        let mut per_element = vec![Vec::new(); locator.elements().len()];
        for (k, &e) in point_element.iter().enumerate() {
            per_element[e as usize].push(k);
        }
        Ok(Self { per_element, point_element })
    }
}

/// Assigns every point to exactly one element of the surface.
pub fn assign_points(surface: &LrSurface, cloud: &PointCloud) -> Result<Assignment, LrError> {
    Assignment::new(&Locator::new(surface), cloud)
}

/// Per-element distance statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElementStats {
    pub n_points: usize,
    pub n_out: usize,
    pub max_dist: f64,
    pub sum_dist: f64,
    pub sum_out_dist: f64,
}

impl ElementStats {
    fn push(&mut self, dist: f64, tolerance: f64) {
        self.n_points += 1;
        self.sum_dist += dist;
        self.max_dist = self.max_dist.max(dist);
        if dist > tolerance {
            self.n_out += 1;
            self.sum_out_dist += dist;
        }
    }

    /// Combines two disjoint groups of points.
    pub fn merged(&self, other: &ElementStats) -> ElementStats {
        ElementStats {
            n_points: self.n_points + other.n_points,
            n_out: self.n_out + other.n_out,
            max_dist: self.max_dist.max(other.max_dist),
            sum_dist: self.sum_dist + other.sum_dist,
            sum_out_dist: self.sum_out_dist + other.sum_out_dist,
        }
    }
}

/// Cloud-wide accuracy figures.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalStats {
    pub n_points: usize,
    pub n_out: usize,
    pub max_dist: f64,
    pub avg_dist: f64,
    pub avg_out_dist: f64,
}

impl GlobalStats {
    pub fn n_resolved(&self) -> usize {
        self.n_points - self.n_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyLedger {
    pub tolerance: f64,
    pub per_element: Vec<ElementStats>,
    pub global: GlobalStats,
}

impl AccuracyLedger {
    /// Aggregates per-element statistics, folding in element order.
    pub fn from_elements(per_element: Vec<ElementStats>, tolerance: f64) -> Self {
        let total = per_element.iter().fold(ElementStats::default(), |acc, s| acc.merged(s));
        let global = GlobalStats {
            n_points: total.n_points,
            n_out: total.n_out,
            max_dist: total.max_dist,
            avg_dist: if total.n_points > 0 { total.sum_dist / total.n_points as f64 } else { 0.0 },
            avg_out_dist: if total.n_out > 0 { total.sum_out_dist / total.n_out as f64 } else { 0.0 },
        };
        Self { tolerance, per_element, global }
    }
}

/// Vertical residual `|F(x_k, y_k) - z_k|` for every point.
pub fn distances(surface: &LrSurface, locator: &Locator, cloud: &PointCloud, assignment: &Assignment) -> Vec<f64> {
    cloud
        .points
        .par_iter()
        .zip(assignment.point_element.par_iter())
        .map(|(p, &e)| (locator.evaluate_in(surface, e as usize, p[0], p[1]) - p[2]).abs())
        .collect()
}

/// Distance statistics per element and globally. A point whose distance
/// equals the tolerance counts as resolved.
pub fn compute_accuracy(
    surface: &LrSurface,
    locator: &Locator,
    cloud: &PointCloud,
    assignment: &Assignment,
    tolerance: f64,
) -> AccuracyLedger {
    let dist = distances(surface, locator, cloud, assignment);
    let per_element = assignment
        .per_element
        .iter()
        .map(|pts| {
            let mut s = ElementStats::default();
            for &k in pts {
                s.push(dist[k], tolerance);
            }
            s
        })
        .collect();
    AccuracyLedger::from_elements(per_element, tolerance)
}

#[derive(Debug, Error, PartialEq)]
#[error("approximation efficiency is undefined for a surface without coefficients")]
pub struct NoCoefficients;

/// Resolved points per surface coefficient.
pub fn approximation_efficiency(n_resolved: usize, n_coeff: usize) -> Result<f64, NoCoefficients> {
    if n_coeff == 0 {
        return Err(NoCoefficients);
    }
    Ok(n_resolved as f64 / n_coeff as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lr::{Direction, MeshSegment};

    fn unit(intervals: usize, p: usize) -> LrSurface {
        LrSurface::uniform((0.0, 1.0, 0.0, 1.0), (intervals, intervals), (p, p)).unwrap()
    }

    #[test]
    fn constant_coefficients_reproduce_constant() {
        let mut s = unit(3, 2);
        s.insert_segment(MeshSegment::new(Direction::U, 0.5, 0.0, 1.0)).unwrap();
        s.fill_coefficients(4.25);
        for &(u, v) in &[(0.0, 0.0), (0.3, 0.9), (1.0, 1.0), (0.5, 0.5), (1.0, 0.2)] {
            assert!((s.evaluate(u, v).unwrap() - 4.25).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_value_is_corner_coefficient() {
        let mut s = unit(2, 2);
        let n = s.num_coefficients();
        let coeffs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        s.set_coefficients(&coeffs).unwrap();
        assert_eq!(s.evaluate(1.0, 1.0).unwrap(), (n - 1) as f64);
        assert_eq!(s.evaluate(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let s = unit(2, 1);
        assert!(matches!(s.evaluate(1.5, 0.0), Err(LrError::OutsideDomain { .. })));
    }

    #[test]
    fn locator_matches_direct_evaluation() {
        let mut s = unit(4, 3);
        s.insert_segment(MeshSegment::new(Direction::V, 0.375, 0.0, 1.0)).unwrap();
        s.insert_segment(MeshSegment::new(Direction::U, 0.125, 0.0, 0.75)).unwrap();
        let coeffs: Vec<f64> = (0..s.num_coefficients()).map(|i| (i as f64 * 0.7).sin()).collect();
        s.set_coefficients(&coeffs).unwrap();
        let loc = Locator::new(&s);
        for i in 0..=20 {
            for j in 0..=20 {
                let (u, v) = (i as f64 / 20.0, j as f64 / 20.0);
                let a = s.evaluate(u, v).unwrap();
                let b = loc.evaluate(&s, u, v).unwrap();
                assert!((a - b).abs() < 1e-14, "({u},{v})");
            }
        }
    }

    #[test]
    fn point_on_meshline_goes_to_greater_side() {
        let s = unit(2, 1);
        let loc = Locator::new(&s);
        let e = loc.locate(0.5, 0.25).unwrap();
        assert_eq!(loc.elements()[e].u0, 0.5);
        let e = loc.locate(1.0, 1.0).unwrap();
        assert_eq!(loc.elements()[e].u1, 1.0);
    }

    #[test]
    fn quadrant_points_one_per_element() {
        let s = unit(2, 1);
        let cloud = PointCloud::new(vec![[0.25, 0.25, 0.0], [0.75, 0.25, 0.0], [0.25, 0.75, 0.0], [0.75, 0.75, 0.0]]);
        let a = assign_points(&s, &cloud).unwrap();
        assert!(a.per_element.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn refinement_subdivides_assignment() {
        let mut s = unit(2, 1);
        let cloud =
            PointCloud::new((0..200).map(|k| [(k as f64 * 0.618).fract(), (k as f64 * 0.382).fract(), 0.0]).collect());
        let before = Locator::new(&s);
        let a0 = Assignment::new(&before, &cloud).unwrap();
        s.insert_segment(MeshSegment::new(Direction::U, 0.25, 0.0, 0.5)).unwrap();
        let after = Locator::new(&s);
        let a1 = Assignment::new(&after, &cloud).unwrap();
        // parent element (lower-left) split in two; its points are shared among the children
        let parent = before.locate(0.1, 0.1).unwrap();
        let mut children: Vec<usize> = a1
            .per_element
            .iter()
            .enumerate()
            .filter(|(e, _)| {
                let el = after.elements()[*e];
                el.u1 <= 0.5 && el.v1 <= 0.5
            })
            .flat_map(|(_, p)| p.clone())
            .collect();
        children.sort();
        assert_eq!(children, a0.per_element[parent]);
        for (k, &e) in a1.point_element.iter().enumerate() {
            let child = after.elements()[e as usize];
            let old = before.elements()[a0.point_element[k] as usize];
            assert!(old.u0 <= child.u0 && child.u1 <= old.u1 && old.v0 <= child.v0 && child.v1 <= old.v1);
        }
    }

    #[test]
    fn accuracy_arithmetic() {
        let s = unit(1, 1);
        let cloud = PointCloud::new(vec![[0.1, 0.1, 0.1], [0.5, 0.5, -0.3], [0.9, 0.2, 0.7]]);
        let loc = Locator::new(&s);
        let a = Assignment::new(&loc, &cloud).unwrap();
        let l = compute_accuracy(&s, &loc, &cloud, &a, 0.5);
        assert_eq!(l.global.n_out, 1);
        assert_eq!(l.global.max_dist, 0.7);
        assert!((l.global.avg_dist - 1.1 / 3.0).abs() < 1e-12);
        assert_eq!(l.global.avg_out_dist, 0.7);

        let zero = PointCloud::new(vec![[0.1, 0.1, 0.0], [0.6, 0.6, 0.0]]);
        let a = Assignment::new(&loc, &zero).unwrap();
        let l = compute_accuracy(&s, &loc, &zero, &a, 0.5);
        assert_eq!((l.global.n_out, l.global.max_dist, l.global.avg_dist), (0, 0.0, 0.0));
    }

    #[test]
    fn distance_equal_to_tolerance_is_inside() {
        let s = unit(1, 1);
        let cloud = PointCloud::new(vec![[0.5, 0.5, 0.5]]);
        let loc = Locator::new(&s);
        let a = Assignment::new(&loc, &cloud).unwrap();
        assert_eq!(compute_accuracy(&s, &loc, &cloud, &a, 0.5).global.n_out, 0);
    }

    #[test]
    fn efficiency() {
        assert_eq!(approximation_efficiency(0, 100), Ok(0.0));
        assert_eq!(approximation_efficiency(50_000, 25_000), Ok(2.0));
        assert_eq!(approximation_efficiency(3, 0), Err(NoCoefficients));
    }
}
