//! Turning an accuracy ledger into meshline segments.

use std::collections::HashSet;

use super::label::{DirectionPolicy, MinSpanCriterion, StrategyKind, StrategySpec, ThresholdSet};
use super::threshold::{tn_score, Cutoffs};
use crate::eval::{AccuracyLedger, ElementStats, Locator};
use crate::lr::{Direction, ElementBox, LrSurface, MeshSegment};

/// Newly resolved points per new coefficient below which a switching
/// strategy moves on to full span.
pub const SWITCH_RATIO: f64 = 0.1;

/// Deduplicated segments in planning order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinementPlan {
    segments: Vec<MeshSegment>,
    seen: HashSet<(Direction, u64, u64, u64)>,
}

impl Eq for RefinementPlan {}

impl RefinementPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a segment unless an identical one is already planned.
    pub fn push(&mut self, seg: MeshSegment) -> bool {
        let key = (seg.dir, seg.fixed.to_bits(), seg.start.to_bits(), seg.end.to_bits());
        if self.seen.insert(key) {
            self.segments.push(seg);
            true
        } else {
            false
        }
    }

    pub fn segments(&self) -> &[MeshSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn into_segments(self) -> Vec<MeshSegment> {
        self.segments
    }
}

impl Extend<MeshSegment> for RefinementPlan {
    fn extend<I: IntoIterator<Item = MeshSegment>>(&mut self, iter: I) {
        for s in iter {
            self.push(s);
        }
    }
}

/// Everything a plan is computed from.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub surface: &'a LrSurface,
    pub locator: &'a Locator,
    pub ledger: &'a AccuracyLedger,
    /// Accuracy statistics over each B-spline support.
    pub support: &'a [ElementStats],
    /// Intervals no wider than this are never split (0 disables).
    pub min_interval: f64,
}

impl PlanContext<'_> {
    fn wide_enough(&self, width: f64) -> bool {
        width > self.min_interval
    }
}

/// Parameter directions refined at loop iteration `iteration` (from 1).
pub fn directions_for(policy: DirectionPolicy, iteration: usize) -> &'static [Direction] {
    match policy {
        DirectionPolicy::Both => &[Direction::U, Direction::V],
        DirectionPolicy::Alternating if iteration % 2 == 1 => &[Direction::U],
        DirectionPolicy::Alternating => &[Direction::V],
    }
}

/// Elements with unresolved points that pass the active `td` / `tn` tests.
pub fn flagged_elements(ctx: &PlanContext, thresholds: ThresholdSet, cut: &Cutoffs) -> Vec<usize> {
    let tol = ctx.ledger.tolerance;
    ctx.ledger
        .per_element
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            s.n_out > 0 && (!thresholds.td || s.max_dist > cut.td) && (!thresholds.tn || tn_score(s, tol) >= cut.tn)
        })
        .map(|(e, _)| e)
        .collect()
}

/// B-splines with unresolved points in their support, optionally requiring
/// a support maximum distance above `td`.
pub fn flagged_bsplines(ctx: &PlanContext, td: Option<f64>) -> Vec<usize> {
    ctx.support
        .iter()
        .enumerate()
        .filter(|(_, s)| s.n_out > 0 && td.is_none_or(|c| s.max_dist > c))
        .map(|(b, _)| b)
        .collect()
}

fn midpoint_segment(el: &ElementBox, dir: Direction, extent: (f64, f64)) -> MeshSegment {
    MeshSegment::new(dir, el.midpoint(dir), extent.0, extent.1)
}

/// Splits every B-spline overlapping each element at the element midpoint.
pub fn plan_full_span(ctx: &PlanContext, elements: &[usize], dirs: &[Direction]) -> RefinementPlan {
    let mut plan = RefinementPlan::new();
    for &e in elements {
        for &d in dirs {
            if let Some(seg) = full_span_segment(ctx, e, d) {
                plan.push(seg);
            }
        }
    }
    plan
}

fn full_span_segment(ctx: &PlanContext, e: usize, d: Direction) -> Option<MeshSegment> {
    let el = &ctx.locator.elements()[e];
    if !ctx.wide_enough(el.width(d)) {
        return None;
    }
    let bs = ctx.surface.bsplines();
    let o = d.other();
    let (lo, hi) = ctx
        .locator
        .element_bsplines(e)
        .iter()
        .map(|&b| bs[b as usize].extent(o))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    Some(midpoint_segment(el, d, (lo, hi)))
}

/// Splits one overlapping B-spline per element and direction, chosen by
/// `criterion`; ties go to the B-spline most centred on the element, then to
/// the lowest index.
pub fn plan_min_span(
    ctx: &PlanContext,
    elements: &[usize],
    dirs: &[Direction],
    criterion: MinSpanCriterion,
) -> RefinementPlan {
    let bs = ctx.surface.bsplines();
    let mut plan = RefinementPlan::new();
    for &e in elements {
        let el = &ctx.locator.elements()[e];
        let candidates = ctx.locator.element_bsplines(e);
        if candidates.is_empty() {
            continue;
        }
        let area: Vec<f64> = candidates.iter().map(|&b| bs[b as usize].support_area()).collect();
        let share: Vec<f64> = candidates
            .iter()
            .map(|&b| {
                let s = &ctx.support[b as usize];
                if s.n_points == 0 {
                    0.0
                } else {
                    s.n_out as f64 / s.n_points as f64
                }
            })
            .collect();
        let score: Vec<f64> = match criterion {
            MinSpanCriterion::Largest => area,
            MinSpanCriterion::Unresolved => share,
            MinSpanCriterion::Combined => {
                let (a, u) = (normalized(&area), normalized(&share));
                a.iter().zip(&u).map(|(a, u)| 0.5 * (a + u)).collect()
            }
        };
        let (cu, cv) = el.center();
        let off_centre = |b: u32| {
            let (x, y) = bs[b as usize].support_center();
            (x - cu).powi(2) + (y - cv).powi(2)
        };
        let best = (0..candidates.len())
            .min_by(|&i, &j| {
                score[j]
                    .total_cmp(&score[i])
                    .then(off_centre(candidates[i]).total_cmp(&off_centre(candidates[j])))
                    .then(candidates[i].cmp(&candidates[j]))
            })
            .map(|i| candidates[i] as usize)
            .unwrap();
        for &d in dirs {
            if ctx.wide_enough(el.width(d)) {
                plan.push(midpoint_segment(el, d, bs[best].extent(d.other())));
            }
        }
    }
    plan
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        x.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Halves every knot interval of each B-spline across its full support.
pub fn plan_structured(ctx: &PlanContext, bsplines: &[usize], dirs: &[Direction]) -> RefinementPlan {
    let bs = ctx.surface.bsplines();
    let mut plan = RefinementPlan::new();
    for &b in bsplines {
        let spline = &bs[b];
        for &d in dirs {
            let extent = spline.extent(d.other());
            for w in spline.knots(d).windows(2) {
                if w[1] > w[0] && ctx.wide_enough(w[1] - w[0]) {
                    plan.push(MeshSegment::new(d, 0.5 * (w[0] + w[1]), extent.0, extent.1));
                }
            }
        }
    }
    plan
}

/// Like [`plan_structured`], but a knot interval is only halved when the
/// elements of its strip hold unresolved points, more than `tk` of them when
/// given, and a maximum distance above `td` when given.
pub fn plan_restricted(
    ctx: &PlanContext,
    bsplines: &[usize],
    dirs: &[Direction],
    tk: Option<f64>,
    td: Option<f64>,
) -> RefinementPlan {
    let bs = ctx.surface.bsplines();
    let elements = ctx.locator.elements();
    let mut plan = RefinementPlan::new();
    for &b in bsplines {
        let spline = &bs[b];
        for &d in dirs {
            let knots = spline.knots(d);
            let extent = spline.extent(d.other());
            let mut strips = vec![ElementStats::default(); knots.len() - 1];
            for &e in ctx.locator.bspline_elements(b) {
                let (a, _) = elements[e as usize].range(d);
                // last interval starting at or before the element
                let i = knots.partition_point(|&k| k <= a) - 1;
                strips[i] = strips[i].merged(&ctx.ledger.per_element[e as usize]);
            }
            for (i, s) in strips.iter().enumerate() {
                let (t0, t1) = (knots[i], knots[i + 1]);
                if t1 <= t0 || !ctx.wide_enough(t1 - t0) {
                    continue;
                }
                let keep = s.n_out > 0 && tk.is_none_or(|c| s.n_out as f64 > c) && td.is_none_or(|c| s.max_dist > c);
                if keep {
                    plan.push(MeshSegment::new(d, 0.5 * (t0 + t1), extent.0, extent.1));
                }
            }
        }
    }
    plan
}

/// Adds full span splits for significant elements (`tn` test) that the plan
/// does not already split in a direction.
pub fn plan_element_extension(
    ctx: &PlanContext,
    mut plan: RefinementPlan,
    dirs: &[Direction],
    tn_cutoff: f64,
) -> RefinementPlan {
    let tol = ctx.ledger.tolerance;
    let base: Vec<MeshSegment> = plan.segments().to_vec();
    for (e, s) in ctx.ledger.per_element.iter().enumerate() {
        if s.n_out == 0 || tn_score(s, tol) < tn_cutoff {
            continue;
        }
        let el = &ctx.locator.elements()[e];
        for &d in dirs {
            if base.iter().any(|seg| seg.dir == d && el.is_split_by(seg)) {
                continue;
            }
            if let Some(seg) = full_span_segment(ctx, e, d) {
                plan.push(seg);
            }
        }
    }
    plan
}

/// Change over the last loop iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub resolved_delta: i64,
    pub coeff_delta: i64,
    pub unresolved_remaining: bool,
}

/// True once a switching strategy should move to its second phase.
pub fn should_switch(p: &Progress) -> bool {
    if p.coeff_delta > 0 {
        (p.resolved_delta as f64) / (p.coeff_delta as f64) < SWITCH_RATIO
    } else {
        p.unresolved_remaining
    }
}

/// Segments one phase of a strategy asks for at loop iteration `iteration`.
pub fn build_plan(spec: &StrategySpec, ctx: &PlanContext, cut: &Cutoffs, iteration: usize) -> RefinementPlan {
    let dirs = directions_for(spec.direction, iteration);
    let t = spec.thresholds;
    match spec.kind {
        StrategyKind::FullSpan => plan_full_span(ctx, &flagged_elements(ctx, t, cut), dirs),
        StrategyKind::MinSpan(c) => plan_min_span(ctx, &flagged_elements(ctx, t, cut), dirs, c),
        StrategyKind::Structured => plan_structured(ctx, &flagged_bsplines(ctx, t.td.then_some(cut.td)), dirs),
        StrategyKind::Restricted => {
            let flagged = flagged_bsplines(ctx, None);
            let plan = plan_restricted(ctx, &flagged, dirs, t.tk.then_some(cut.tk), t.td.then_some(cut.td));
            if spec.extension {
                plan_element_extension(ctx, plan, dirs, cut.tn)
            } else {
                plan
            }
        }
    }
}
