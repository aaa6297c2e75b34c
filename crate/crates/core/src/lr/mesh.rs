//! Meshlines and the element box partition of an LR-mesh.

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;

use super::LrError;

/// Which parameter a meshline holds constant.
///
/// A `U` line sits at a fixed `u` value and runs along `v`; inserting it adds
/// a knot in the `u` direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    U,
    V,
}

impl Direction {
    pub fn other(self) -> Self {
        match self {
            Direction::U => Direction::V,
            Direction::V => Direction::U,
        }
    }
}

/// An axis-parallel meshline segment: `fixed` is the constant parameter value,
/// `[start, end]` the extent along the running parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSegment {
    pub dir: Direction,
    pub fixed: f64,
    pub start: f64,
    pub end: f64,
}

impl MeshSegment {
    pub fn new(dir: Direction, fixed: f64, start: f64, end: f64) -> Self {
        Self { dir, fixed, start, end }
    }
}

/// One element (minimal rectangle) of the box partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBox {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl ElementBox {
    pub fn range(&self, dir: Direction) -> (f64, f64) {
        match dir {
            Direction::U => (self.u0, self.u1),
            Direction::V => (self.v0, self.v1),
        }
    }

    pub fn width(&self, dir: Direction) -> f64 {
        let (a, b) = self.range(dir);
        b - a
    }

    pub fn midpoint(&self, dir: Direction) -> f64 {
        let (a, b) = self.range(dir);
        0.5 * (a + b)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.midpoint(Direction::U), self.midpoint(Direction::V))
    }

    /// True when a segment crosses the interior of this element.
    pub fn is_split_by(&self, seg: &MeshSegment) -> bool {
        let (a, b) = self.range(seg.dir);
        let (c, d) = self.range(seg.dir.other());
        a < seg.fixed && seg.fixed < b && seg.start < d && seg.end > c
    }
}

/// Sorted distinct knot values of a mesh in each direction.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotTable {
    pub values_u: Vec<f64>,
    pub values_v: Vec<f64>,
}

impl KnotTable {
    pub fn values(&self, dir: Direction) -> &[f64] {
        match dir {
            Direction::U => &self.values_u,
            Direction::V => &self.values_v,
        }
    }

    /// Index of an exact knot value.
    pub fn index_of(&self, dir: Direction, value: f64) -> Option<usize> {
        let vals = self.values(dir);
        vals.binary_search_by(|x| x.total_cmp(&value)).ok()
    }
}

type Lines = BTreeMap<OrderedFloat<f64>, Vec<(f64, f64)>>;

/// Meshlines keyed by their fixed value, each holding sorted, disjoint,
/// non-touching spans, plus the element partition they induce.
#[derive(Debug, Clone)]
pub struct LrMesh {
    lines_u: Lines,
    lines_v: Lines,
    elements: Vec<ElementBox>,
    domain: ElementBox,
}

impl LrMesh {
    /// Full tensor grid over the given distinct knot values.
    pub fn tensor(values_u: &[f64], values_v: &[f64]) -> Self {
        let domain = ElementBox {
            u0: values_u[0],
            u1: *values_u.last().unwrap(),
            v0: values_v[0],
            v1: *values_v.last().unwrap(),
        };
        let mut lines_u = Lines::new();
        for &u in values_u {
            lines_u.insert(OrderedFloat(u), vec![(domain.v0, domain.v1)]);
        }
        let mut lines_v = Lines::new();
        for &v in values_v {
            lines_v.insert(OrderedFloat(v), vec![(domain.u0, domain.u1)]);
        }
        let mut elements = Vec::new();
        for v in values_v.windows(2) {
            for u in values_u.windows(2) {
                elements.push(ElementBox { u0: u[0], u1: u[1], v0: v[0], v1: v[1] });
            }
        }
        Self { lines_u, lines_v, elements, domain }
    }

    /// Rebuilds a mesh from its segments, deriving the element partition by a
    /// sweep over the fine grid of all knot values.
    pub fn from_segments(segments: &[MeshSegment]) -> Result<Self, LrError> {
        let mut lines_u = Lines::new();
        let mut lines_v = Lines::new();
        for s in segments {
            if !(s.start < s.end) {
                return Err(LrError::InvalidSegment(format!("empty span in {s:?}")));
            }
            let lines = match s.dir {
                Direction::U => &mut lines_u,
                Direction::V => &mut lines_v,
            };
            let spans = lines.entry(OrderedFloat(s.fixed)).or_default();
            let merged = merge_span(spans, s.start, s.end);
            add_span(spans, merged);
        }
        let (Some(u0), Some(u1), Some(v0), Some(v1)) =
            (lines_u.keys().next(), lines_u.keys().next_back(), lines_v.keys().next(), lines_v.keys().next_back())
        else {
            return Err(LrError::InvalidSegment("mesh has no lines".into()));
        };
        let domain = ElementBox { u0: u0.0, u1: u1.0, v0: v0.0, v1: v1.0 };
        let mut mesh = Self { lines_u, lines_v, elements: Vec::new(), domain };
        for dir in [Direction::U, Direction::V] {
            let (a, b) = domain.range(dir.other());
            for fixed in [domain.range(dir).0, domain.range(dir).1] {
                if !mesh.covers(dir, fixed, a, b) {
                    return Err(LrError::InvalidSegment(format!("boundary line {dir:?}={fixed} is not full span")));
                }
            }
        }
        mesh.elements = mesh.sweep_elements()?;
        Ok(mesh)
    }

    fn sweep_elements(&self) -> Result<Vec<ElementBox>, LrError> {
        let table = self.knot_table();
        let (us, vs) = (&table.values_u, &table.values_v);
        let (nu, nv) = (us.len() - 1, vs.len() - 1);
        let mut taken = vec![false; nu * nv];
        let mut out = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                if taken[j * nu + i] {
                    continue;
                }
                let mut ie = i + 1;
                while ie < nu && !self.touches(Direction::U, us[ie], vs[j], vs[j + 1]) {
                    ie += 1;
                }
                let mut je = j + 1;
                while je < nv && !self.touches(Direction::V, vs[je], us[i], us[ie]) {
                    je += 1;
                }
                for jj in j..je {
                    for ii in i..ie {
                        if taken[jj * nu + ii] {
                            return Err(LrError::InvalidSegment("segments do not form a box partition".into()));
                        }
                        taken[jj * nu + ii] = true;
                    }
                }
                out.push(ElementBox { u0: us[i], u1: us[ie], v0: vs[j], v1: vs[je] });
            }
        }
        Ok(out)
    }

    fn lines(&self, dir: Direction) -> &Lines {
        match dir {
            Direction::U => &self.lines_u,
            Direction::V => &self.lines_v,
        }
    }

    fn lines_mut(&mut self, dir: Direction) -> &mut Lines {
        match dir {
            Direction::U => &mut self.lines_u,
            Direction::V => &mut self.lines_v,
        }
    }

    pub fn domain(&self) -> ElementBox {
        self.domain
    }

    pub fn knot_table(&self) -> KnotTable {
        KnotTable {
            values_u: self.lines_u.keys().map(|k| k.0).collect(),
            values_v: self.lines_v.keys().map(|k| k.0).collect(),
        }
    }

    /// True when a line at `fixed` covers all of `[a, b]`.
    pub fn covers(&self, dir: Direction, fixed: f64, a: f64, b: f64) -> bool {
        self.lines(dir).get(&OrderedFloat(fixed)).is_some_and(|spans| spans.iter().any(|&(s, e)| s <= a && b <= e))
    }

    /// True when a line at `fixed` overlaps the open interval `(a, b)`.
    fn touches(&self, dir: Direction, fixed: f64, a: f64, b: f64) -> bool {
        self.lines(dir).get(&OrderedFloat(fixed)).is_some_and(|spans| spans.iter().any(|&(s, e)| s < b && e > a))
    }

    /// Values of lines strictly between `lo` and `hi` that fully cover `[a, b]`.
    pub fn traversing_lines(&self, dir: Direction, lo: f64, hi: f64, a: f64, b: f64) -> Vec<f64> {
        use std::ops::Bound::Excluded;
        self.lines(dir)
            .range((Excluded(OrderedFloat(lo)), Excluded(OrderedFloat(hi))))
            .filter(|(_, spans)| spans.iter().any(|&(s, e)| s <= a && b <= e))
            .map(|(k, _)| k.0)
            .collect()
    }

    /// First line strictly inside `(lo, hi)`, not listed in `skip`, covering `[a, b]`.
    pub(crate) fn first_traversing_line(
        &self,
        dir: Direction,
        lo: f64,
        hi: f64,
        a: f64,
        b: f64,
        skip: &[f64],
    ) -> Option<f64> {
        use std::ops::Bound::Excluded;
        self.lines(dir)
            .range((Excluded(OrderedFloat(lo)), Excluded(OrderedFloat(hi))))
            .filter(|(k, _)| !skip.contains(&k.0))
            .find(|(_, spans)| spans.iter().any(|&(s, e)| s <= a && b <= e))
            .map(|(k, _)| k.0)
    }

    /// All stored segments, ordered by direction, fixed value and start.
    pub fn segments(&self) -> Vec<MeshSegment> {
        let mut out = Vec::new();
        for dir in [Direction::U, Direction::V] {
            for (k, spans) in self.lines(dir) {
                for &(s, e) in spans {
                    out.push(MeshSegment::new(dir, k.0, s, e));
                }
            }
        }
        out
    }

    /// Elements ordered by `(v0, u0)`.
    pub fn elements(&self) -> Vec<ElementBox> {
        let mut els = self.elements.clone();
        els.sort_by(|a, b| a.v0.total_cmp(&b.v0).then(a.u0.total_cmp(&b.u0)));
        els
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// The span a segment would occupy after coalescing with collinear lines
    /// it touches or overlaps.
    pub fn merged_extent(&self, seg: &MeshSegment) -> (f64, f64) {
        match self.lines(seg.dir).get(&OrderedFloat(seg.fixed)) {
            Some(spans) => {
                let mut spans = spans.clone();
                merge_span(&mut spans, seg.start, seg.end)
            }
            None => (seg.start, seg.end),
        }
    }

    /// Checks that a segment lies inside the domain and both its ends rest on
    /// orthogonal meshlines.
    pub fn validate_segment(&self, seg: &MeshSegment) -> Result<(), LrError> {
        let (lo, hi) = self.domain.range(seg.dir);
        let (a, b) = self.domain.range(seg.dir.other());
        if !(seg.fixed > lo && seg.fixed < hi) {
            return Err(LrError::InvalidSegment(format!("{seg:?} not inside the domain")));
        }
        if !(seg.start < seg.end && seg.start >= a && seg.end <= b) {
            return Err(LrError::InvalidSegment(format!("{seg:?} has an invalid span")));
        }
        let ortho = seg.dir.other();
        for end in [seg.start, seg.end] {
            if !self.covers(ortho, end, seg.fixed, seg.fixed) {
                return Err(LrError::InvalidSegment(format!("{seg:?} ends at {end} where no meshline crosses")));
            }
        }
        Ok(())
    }

    /// Records a segment (already validated) and splits the elements it crosses.
    pub(crate) fn add_segment(&mut self, seg: &MeshSegment) -> (f64, f64) {
        let spans = self.lines_mut(seg.dir).entry(OrderedFloat(seg.fixed)).or_default();
        let merged = merge_span(spans, seg.start, seg.end);
        add_span(spans, merged);
        let full = MeshSegment::new(seg.dir, seg.fixed, merged.0, merged.1);
        let mut born = Vec::new();
        for el in self.elements.iter_mut() {
            if el.is_split_by(&full) {
                let mut upper = *el;
                match seg.dir {
                    Direction::U => {
                        el.u1 = seg.fixed;
                        upper.u0 = seg.fixed;
                    }
                    Direction::V => {
                        el.v1 = seg.fixed;
                        upper.v0 = seg.fixed;
                    }
                }
                born.push(upper);
            }
        }
        self.elements.extend(born);
        merged
    }
}

/// Removes every span touching `[a, b]` from `spans` and returns the union.
fn merge_span(spans: &mut Vec<(f64, f64)>, a: f64, b: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    spans.retain(|&(s, e)| {
        if s <= hi && e >= lo {
            lo = lo.min(s);
            hi = hi.max(e);
            false
        } else {
            true
        }
    });
    // a merged span may now touch one that was skipped before it grew
    let mut again = true;
    while again {
        again = false;
        spans.retain(|&(s, e)| {
            if s <= hi && e >= lo {
                lo = lo.min(s);
                hi = hi.max(e);
                again = true;
                false
            } else {
                true
            }
        });
    }
    (lo, hi)
}

fn add_span(spans: &mut Vec<(f64, f64)>, span: (f64, f64)) {
    let at = spans.partition_point(|&(s, _)| s < span.0);
    spans.insert(at, span);
}
