use std::collections::{HashMap, VecDeque};

use super::bspline::{BSpline, KnotKey};
use super::mesh::{Direction, ElementBox, LrMesh, MeshSegment};
use super::LrError;

/// An LR B-spline height function: the mesh, its B-splines (each carrying
/// coefficient and scale) and the bi-degree.
#[derive(Debug, Clone)]
pub struct LrSurface {
    degrees: (usize, usize),
    mesh: LrMesh,
    bsplines: Vec<BSpline>,
}

/// Outcome of one successful segment insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertReport {
    /// The span of the meshline after coalescing with collinear segments.
    pub merged: (f64, f64),
    /// Number of B-spline splits performed, including minimal-support repairs.
    pub splits: usize,
}

impl LrSurface {
    /// Tensor-product surface from open knot vectors (end multiplicity
    /// `p + 1`, interior multiplicity 1). All coefficients are zero and all
    /// scales one.
    pub fn tensor(knots_u: &[f64], knots_v: &[f64], degrees: (usize, usize)) -> Result<Self, LrError> {
        let values_u = check_open_knots(knots_u, degrees.0)?;
        let values_v = check_open_knots(knots_v, degrees.1)?;
        let (p, q) = degrees;
        let mut bsplines = Vec::new();
        for j in 0..knots_v.len() - q - 1 {
            for i in 0..knots_u.len() - p - 1 {
                bsplines.push(BSpline::new(knots_u[i..i + p + 2].to_vec(), knots_v[j..j + q + 2].to_vec()));
            }
        }
        Ok(Self { degrees, mesh: LrMesh::tensor(&values_u, &values_v), bsplines })
    }

    /// Tensor-product surface with `intervals` uniform knot intervals per
    /// direction over `domain = (u_min, u_max, v_min, v_max)`.
    pub fn uniform(
        domain: (f64, f64, f64, f64),
        intervals: (usize, usize),
        degrees: (usize, usize),
    ) -> Result<Self, LrError> {
        let make = |lo: f64, hi: f64, n: usize, p: usize| -> Result<Vec<f64>, LrError> {
            if n == 0 || !(lo < hi) {
                return Err(LrError::InvalidKnots(format!("cannot split [{lo}, {hi}] into {n} intervals")));
            }
            let mut k = vec![lo; p + 1];
            k.extend((1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
            k.extend(std::iter::repeat_n(hi, p + 1));
            Ok(k)
        };
        let ku = make(domain.0, domain.1, intervals.0, degrees.0)?;
        let kv = make(domain.2, domain.3, intervals.1, degrees.1)?;
        Self::tensor(&ku, &kv, degrees)
    }

    /// Assembles a surface from stored parts, checking that every B-spline
    /// is legal on the mesh and has minimal support.
    pub fn from_parts(degrees: (usize, usize), mesh: LrMesh, bsplines: Vec<BSpline>) -> Result<Self, LrError> {
        for d in [degrees.0, degrees.1] {
            if !(1..=3).contains(&d) {
                return Err(LrError::InvalidDegree(d));
            }
        }
        for b in &bsplines {
            if b.degree_u() != degrees.0 || b.degree_v() != degrees.1 {
                return Err(LrError::InvalidKnots(format!("B-spline degree mismatch: {b:?}")));
            }
            if !is_legal(b, &mesh) || !has_minimal_support(b, &mesh) {
                return Err(LrError::InvalidKnots(format!("B-spline does not fit the mesh: {b:?}")));
            }
        }
        Ok(Self { degrees, mesh, bsplines })
    }

    pub fn degrees(&self) -> (usize, usize) {
        self.degrees
    }

    pub fn mesh(&self) -> &LrMesh {
        &self.mesh
    }

    pub fn domain(&self) -> ElementBox {
        self.mesh.domain()
    }

    /// Upper domain corner, the right-closed end used by basis evaluation.
    pub fn domain_end(&self) -> (f64, f64) {
        let d = self.domain();
        (d.u1, d.v1)
    }

    pub fn bsplines(&self) -> &[BSpline] {
        &self.bsplines
    }

    pub fn num_coefficients(&self) -> usize {
        self.bsplines.len()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.bsplines.iter().map(|b| b.coeff).collect()
    }

    pub fn set_coefficients(&mut self, coeffs: &[f64]) -> Result<(), LrError> {
        if coeffs.len() != self.bsplines.len() {
            return Err(LrError::CoefficientCount { expected: self.bsplines.len(), got: coeffs.len() });
        }
        for (b, &c) in self.bsplines.iter_mut().zip(coeffs) {
            b.coeff = c;
        }
        Ok(())
    }

    pub fn fill_coefficients(&mut self, value: f64) {
        for b in &mut self.bsplines {
            b.coeff = value;
        }
    }

    /// Inserts one meshline segment and restores minimal support. The
    /// represented function is unchanged.
    pub fn insert_segment(&mut self, seg: MeshSegment) -> Result<InsertReport, LrError> {
        self.insert_segments(&[seg]).pop().unwrap()
    }

    /// Inserts segments one at a time, in order. Each entry reports that
    /// segment's outcome; a failed segment leaves the surface untouched.
    pub fn insert_segments(&mut self, segs: &[MeshSegment]) -> Vec<Result<InsertReport, LrError>> {
        let mut work = Work::new(std::mem::take(&mut self.bsplines));
        let out = segs.iter().map(|s| self.apply(&mut work, s)).collect();
        self.bsplines = work.finish();
        out
    }

    fn apply(&mut self, work: &mut Work, seg: &MeshSegment) -> Result<InsertReport, LrError> {
        self.mesh.validate_segment(seg)?;
        let (a, b) = self.mesh.merged_extent(seg);
        let hits: Vec<usize> = work
            .slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().filter(|bs| is_traversed(bs, seg.dir, seg.fixed, a, b)).map(|_| i))
            .collect();
        if hits.is_empty() {
            return Err(LrError::NoSplit(*seg));
        }
        let merged = self.mesh.add_segment(seg);

        let mut splits = 0;
        let mut queue: VecDeque<usize> = hits.into();
        while let Some(i) = queue.pop_front() {
            let Some(bs) = work.slots[i].as_ref() else { continue };
            let Some((dir, t)) = violation(bs, &self.mesh) else { continue };
            let parent = work.remove(i);
            let split = parent.split(dir, t).expect("violating line lies inside the support");
            splits += 1;
            for (child, weight) in [(split.first, split.first_weight), (split.second, split.second_weight)] {
                queue.push_back(work.merge(child, weight * parent.scale, parent.coeff));
            }
        }
        Ok(InsertReport { merged, splits })
    }
}

/// Working set of B-splines during a batch of insertions: stable slots plus
/// an exact-knot index for merging identical children.
struct Work {
    slots: Vec<Option<BSpline>>,
    index: HashMap<KnotKey, usize>,
}

impl Work {
    fn new(bsplines: Vec<BSpline>) -> Self {
        let index = bsplines.iter().enumerate().map(|(i, b)| (b.key(), i)).collect();
        Self { slots: bsplines.into_iter().map(Some).collect(), index }
    }

    fn remove(&mut self, i: usize) -> BSpline {
        let b = self.slots[i].take().unwrap();
        self.index.remove(&b.key());
        b
    }

    fn merge(&mut self, mut child: BSpline, scale: f64, coeff: f64) -> usize {
        let key = child.key();
        if let Some(&j) = self.index.get(&key) {
            let old = self.slots[j].as_mut().unwrap();
            let s = old.scale + scale;
            old.coeff = (old.scale * old.coeff + scale * coeff) / s;
            old.scale = s;
            j
        } else {
            child.scale = scale;
            child.coeff = coeff;
            self.slots.push(Some(child));
            let j = self.slots.len() - 1;
            self.index.insert(key, j);
            j
        }
    }

    fn finish(self) -> Vec<BSpline> {
        self.slots.into_iter().flatten().collect()
    }
}

/// True when a line at `fixed` spanning `[a, b]` is a legal new interior knot
/// line for `bs`.
fn is_traversed(bs: &BSpline, dir: Direction, fixed: f64, a: f64, b: f64) -> bool {
    let (lo, hi) = bs.extent(dir);
    let (c, d) = bs.extent(dir.other());
    lo < fixed && fixed < hi && a <= c && d <= b && !bs.knots(dir).contains(&fixed)
}

/// A meshline traversing the support of `bs` that is not one of its knots.
fn violation(bs: &BSpline, mesh: &LrMesh) -> Option<(Direction, f64)> {
    for dir in [Direction::U, Direction::V] {
        let (lo, hi) = bs.extent(dir);
        let (a, b) = bs.extent(dir.other());
        if let Some(t) = mesh.first_traversing_line(dir, lo, hi, a, b, bs.knots(dir)) {
            return Some((dir, t));
        }
    }
    None
}

/// True iff no meshline fully traverses the support of `b` at an interior
/// value missing from its local knots.
pub fn has_minimal_support(b: &BSpline, mesh: &LrMesh) -> bool {
    violation(b, mesh).is_none()
}

/// True iff every distinct local knot of `b` is a meshline covering the whole
/// support in the orthogonal direction.
pub fn is_legal(b: &BSpline, mesh: &LrMesh) -> bool {
    [Direction::U, Direction::V].into_iter().all(|dir| {
        let (a, c) = b.extent(dir.other());
        b.knots(dir).windows(2).all(|w| w[0] <= w[1]) && b.knots(dir).iter().all(|&k| mesh.covers(dir, k, a, c))
    })
}

fn check_open_knots(knots: &[f64], p: usize) -> Result<Vec<f64>, LrError> {
    if !(1..=3).contains(&p) {
        return Err(LrError::InvalidDegree(p));
    }
    if knots.len() < 2 * (p + 1) {
        return Err(LrError::InvalidKnots(format!("need at least {} knots for degree {p}", 2 * (p + 1))));
    }
    if knots.iter().any(|k| !k.is_finite()) {
        return Err(LrError::InvalidKnots("non-finite knot".into()));
    }
    let n = knots.len();
    let (lo, hi) = (knots[0], knots[n - 1]);
    if knots[..=p].iter().any(|&k| k != lo) || knots[n - p - 1..].iter().any(|&k| k != hi) {
        return Err(LrError::InvalidKnots(format!("end knots must have multiplicity {}", p + 1)));
    }
    let mut values = vec![lo];
    values.extend_from_slice(&knots[p + 1..n - p - 1]);
    values.push(hi);
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LrError::InvalidKnots("knots must increase strictly (interior multiplicity 1)".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LrSurface {
        LrSurface::tensor(
            &[1.0, 1.0, 1.0, 2.0, 4.0, 6.0, 7.0, 7.0, 7.0],
            &[1.0, 1.0, 1.0, 3.0, 5.0, 6.0, 6.0, 6.0],
            (2, 2),
        )
        .unwrap()
    }

    #[test]
    fn tensor_counts() {
        assert_eq!(fig1().num_coefficients(), 30);
        let bezier = LrSurface::tensor(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 1.0, 1.0], (1, 1)).unwrap();
        assert_eq!(bezier.num_coefficients(), 4);
        assert_eq!(bezier.mesh().elements().len(), 1);
        let q = LrSurface::tensor(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], (2, 2)).unwrap();
        assert_eq!(q.num_coefficients(), 9);
        assert!(q.bsplines().iter().all(|b| b.scale == 1.0 && b.coeff == 0.0));
    }

    #[test]
    fn tensor_rejects_bad_input() {
        assert!(matches!(
            LrSurface::tensor(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 1.0, 1.0], (4, 1)),
            Err(LrError::InvalidDegree(4))
        ));
        assert!(LrSurface::tensor(&[0.0, 0.0, 2.0, 1.0, 3.0, 3.0], &[0.0, 0.0, 1.0, 1.0], (1, 1)).is_err());
        assert!(LrSurface::tensor(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0], &[0.0, 0.0, 1.0, 1.0], (1, 1)).is_err());
    }

    #[test]
    fn fig1_construction_contains_red_bspline() {
        let mut s = fig1();
        use Direction::*;
        s.insert_segment(MeshSegment::new(V, 2.0, 1.0, 6.0)).unwrap();
        s.insert_segment(MeshSegment::new(V, 4.0, 1.0, 6.0)).unwrap();
        s.insert_segment(MeshSegment::new(U, 3.0, 1.0, 3.0)).unwrap();
        s.insert_segment(MeshSegment::new(U, 5.0, 4.0, 6.0)).unwrap();
        let red = s
            .bsplines()
            .iter()
            .find(|b| b.knots_u == [1.0, 2.0, 4.0, 6.0] && b.knots_v == [2.0, 3.0, 4.0, 5.0])
            .expect("red B-spline present")
            .clone();
        assert!(has_minimal_support(&red, s.mesh()));

        // a full line at u3 over the red support breaks its minimality
        let mut mesh = s.mesh().clone();
        let seg = MeshSegment::new(U, 3.0, 1.0, 6.0);
        mesh.validate_segment(&seg).unwrap();
        mesh.add_segment(&seg);
        assert!(!has_minimal_support(&red, &mesh));
    }

    #[test]
    fn segment_splitting_nothing_is_rejected() {
        let mut s = LrSurface::uniform((0.0, 4.0, 0.0, 4.0), (4, 4), (2, 2)).unwrap();
        // every quadratic support spans three intervals; one interval is too short
        let before = s.num_coefficients();
        let err = s.insert_segment(MeshSegment::new(Direction::U, 1.5, 1.0, 2.0)).unwrap_err();
        assert!(matches!(err, LrError::NoSplit(_)));
        assert_eq!(s.num_coefficients(), before);
        assert_eq!(s.mesh().num_elements(), 16);
    }

    #[test]
    fn full_span_insertion_is_tensor_insertion() {
        let mut s = LrSurface::uniform((0.0, 1.0, 0.0, 1.0), (2, 2), (2, 2)).unwrap();
        s.insert_segment(MeshSegment::new(Direction::U, 0.25, 0.0, 1.0)).unwrap();
        assert_eq!(s.num_coefficients(), 5 * 4);
        assert!(s.bsplines().iter().all(|b| b.scale == 1.0));
    }

    #[test]
    fn extension_of_existing_segment() {
        let mut s = LrSurface::uniform((0.0, 4.0, 0.0, 4.0), (4, 4), (1, 1)).unwrap();
        s.insert_segment(MeshSegment::new(Direction::U, 1.5, 0.0, 2.0)).unwrap();
        let r = s.insert_segment(MeshSegment::new(Direction::U, 1.5, 2.0, 3.0)).unwrap();
        assert_eq!(r.merged, (0.0, 3.0));
        assert_eq!(s.mesh().segments().iter().filter(|g| g.fixed == 1.5).count(), 1);
    }
}
