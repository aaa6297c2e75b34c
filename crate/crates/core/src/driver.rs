//! The adaptive loop: refine where the surface misses the tolerance, fit in
//! the new space, measure, repeat.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::eval::{approximation_efficiency, compute_accuracy, AccuracyLedger, Assignment, Locator, PointCloud};
use crate::fitting::{fit_step, lsq_fit, FitConfig, FitError};
use crate::lr::{LrError, LrSurface};
use crate::strategy::{
    build_plan, compute_thresholds, should_switch, support_stats, PlanContext, Progress, StrategySpec, ThresholdConfig,
    ThresholdState,
};

/// Elements along the shorter side of the default initial grid.
pub const DEFAULT_GRID: usize = 8;
const MAX_DEFAULT_GRID: usize = 64;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point cloud spans a degenerate domain [{u0}, {u1}] x [{v0}, {v1}]")]
    DegenerateDomain { u0: f64, u1: f64, v0: f64, v1: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fitting failed at iteration {iteration}: {source}")]
    Fit {
        iteration: usize,
        source: FitError,
        /// Rows recorded before the failure.
        ledger: Box<RunLedger>,
    },

    #[error(transparent)]
    Lr(#[from] LrError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub degrees: (usize, usize),
    /// Initial intervals per direction; `None` picks an 8-element short side
    /// adjusted to the domain aspect ratio.
    pub initial_elements: Option<(usize, usize)>,
    pub strategy: StrategySpec,
    pub fit: FitConfig,
    pub thresholds: ThresholdConfig,
    /// Knot intervals no wider than this are never split (0 disables).
    pub min_interval: f64,
    pub intermediate: Option<StagePredicate>,
    /// Stop after two consecutive iterations without new meshlines.
    pub stop_on_stagnation: bool,
}

impl RunConfig {
    pub fn new(tolerance: f64, strategy: StrategySpec) -> Self {
        Self {
            tolerance,
            max_iterations: 40,
            degrees: (2, 2),
            initial_elements: None,
            strategy,
            fit: FitConfig::default(),
            thresholds: ThresholdConfig::default(),
            min_interval: 0.0,
            intermediate: None,
            stop_on_stagnation: true,
        }
    }

    fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: &str| Err(DriverError::InvalidConfig(m.to_string()));
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(1..=3).contains(&self.degrees.0) || !(1..=3).contains(&self.degrees.1) {
            return bad("degrees must be 1, 2 or 3");
        }
        if let Some((nu, nv)) = self.initial_elements {
            if nu == 0 || nv == 0 {
                return bad("initial grid needs at least one element per direction");
            }
        }
        if !(self.min_interval >= 0.0) {
            return bad("minimum interval must be non-negative");
        }
        if !(self.thresholds.decay > 0.0 && self.thresholds.decay <= 1.0) {
            return bad("threshold decay must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combinator {
    All,
    Any,
}

/// Accuracy predicate marking the intermediate stage of a run, written as
/// `out<=0.1%,max<=2` (all must hold) or `out<=0.1%|max<=2` (any).
/// Keys: `out` (fraction, or percent with `%`), `max`, `avgout`.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePredicate {
    pub max_out_fraction: Option<f64>,
    pub max_dist_cap: Option<f64>,
    pub avg_out_cap: Option<f64>,
    pub combinator: Combinator,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid stage predicate {0:?}: expected terms like out<=0.1%, max<=2, avgout<=0.5 joined by ',' (all) or '|' (any)")]
pub struct PredicateError(pub String);

impl FromStr for StagePredicate {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PredicateError(s.to_string());
        let (terms, combinator): (Vec<&str>, _) = match (s.contains(','), s.contains('|')) {
            (true, true) => return Err(err()),
            (_, true) => (s.split('|').collect(), Combinator::Any),
            _ => (s.split(',').collect(), Combinator::All),
        };
        let mut p = StagePredicate { max_out_fraction: None, max_dist_cap: None, avg_out_cap: None, combinator };
        for term in terms {
            let (key, value) = term.trim().split_once("<=").ok_or_else(err)?;
            let value = value.trim();
            let slot = match key.trim() {
                "out" => &mut p.max_out_fraction,
                "max" => &mut p.max_dist_cap,
                "avgout" => &mut p.avg_out_cap,
                _ => return Err(err()),
            };
            let parsed = match value.strip_suffix('%') {
                Some(pct) if key.trim() == "out" => pct.trim().parse::<f64>().map(|x| x / 100.0),
                Some(_) => return Err(err()),
                None => value.parse::<f64>(),
            }
            .map_err(|_| err())?;
            if slot.is_some() || !(parsed >= 0.0) {
                return Err(err());
            }
            *slot = Some(parsed);
        }
        if p.max_out_fraction.is_none() && p.max_dist_cap.is_none() && p.avg_out_cap.is_none() {
            return Err(err());
        }
        Ok(p)
    }
}

impl StagePredicate {
    pub fn holds(&self, row: &LedgerRow) -> bool {
        let out_fraction = if row.n_points > 0 { row.n_out as f64 / row.n_points as f64 } else { 0.0 };
        let checks = [
            self.max_out_fraction.map(|c| out_fraction <= c),
            self.max_dist_cap.map(|c| row.max_dist <= c),
            self.avg_out_cap.map(|c| row.avg_out_dist <= c),
        ];
        let mut set = checks.iter().flatten();
        match self.combinator {
            Combinator::All => set.all(|&b| b),
            Combinator::Any => set.any(|&b| b),
        }
    }
}

/// One report line. Iteration 0 is the initial fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub iter: usize,
    pub n_points: usize,
    pub n_out: usize,
    pub n_coeff: usize,
    pub max_dist: f64,
    pub avg_dist: f64,
    pub avg_out_dist: f64,
    pub efficiency: f64,
    /// Wall time of the iteration in milliseconds.
    pub wall_ms: f64,
    pub segments: usize,
    pub strategy: String,
}

impl LedgerRow {
    /// Equality ignoring `wall_ms`.
    pub fn same_result(&self, other: &LedgerRow) -> bool {
        LedgerRow { wall_ms: 0.0, ..self.clone() } == LedgerRow { wall_ms: 0.0, ..other.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Converged,
    IterationCap,
    Stagnation,
}

impl RunOutcome {
    pub fn exit_code(self) -> i32 {
        match self {
            RunOutcome::Converged => 0,
            RunOutcome::IterationCap => 2,
            RunOutcome::Stagnation => 3,
        }
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunOutcome::Converged => "converged",
            RunOutcome::IterationCap => "iteration cap reached",
            RunOutcome::Stagnation => "no new meshlines could be inserted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    pub rows: Vec<LedgerRow>,
    pub outcome: Option<RunOutcome>,
    pub converged: bool,
    pub stopped_no_segments: bool,
    /// Iteration at which a switching strategy moved to full span.
    pub switched_at: Option<usize>,
    pub intermediate_iter: Option<usize>,
    /// Iterations between the intermediate and the final stage.
    pub tail_length: Option<usize>,
}

impl RunLedger {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            outcome: None,
            converged: false,
            stopped_no_segments: false,
            switched_at: None,
            intermediate_iter: None,
            tail_length: None,
        }
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// Equality ignoring wall times.
    pub fn same_result(&self, other: &RunLedger) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_result(b))
            && (self.outcome, self.switched_at, self.intermediate_iter, self.tail_length)
                == (other.outcome, other.switched_at, other.intermediate_iter, other.tail_length)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub surface: LrSurface,
    pub ledger: RunLedger,
}

impl RunResult {
    pub fn outcome(&self) -> RunOutcome {
        self.ledger.outcome.expect("finished run has an outcome")
    }
}

/// Default initial grid: `DEFAULT_GRID` intervals on the shorter side, the
/// longer side scaled by the aspect ratio (capped).
pub fn default_grid(width: f64, height: f64) -> (usize, usize) {
    let long = |ratio: f64| ((DEFAULT_GRID as f64 * ratio).round() as usize).clamp(DEFAULT_GRID, MAX_DEFAULT_GRID);
    if width >= height {
        (long(width / height), DEFAULT_GRID)
    } else {
        (DEFAULT_GRID, long(height / width))
    }
}

/// Uniform tensor surface over the cloud's bounding box with a least squares
/// fit in the coarse space.
pub fn make_initial_surface(cloud: &PointCloud, cfg: &RunConfig) -> Result<LrSurface, DriverError> {
    let (u0, u1, v0, v1) = cloud.bounding_box().ok_or(DriverError::EmptyCloud)?;
    if !(u1 > u0 && v1 > v0) {
        return Err(DriverError::DegenerateDomain { u0, u1, v0, v1 });
    }
    let grid = cfg.initial_elements.unwrap_or_else(|| default_grid(u1 - u0, v1 - v0));
    let mut surface = LrSurface::uniform((u0, u1, v0, v1), grid, cfg.degrees)?;
    let locator = Locator::new(&surface);
    let assignment = Assignment::new(&locator, cloud)?;
    let coeffs = lsq_fit(&surface, &locator, cloud, &assignment, &cfg.fit).map_err(|source| DriverError::Fit {
        iteration: 0,
        source,
        ledger: Box::new(RunLedger::new()),
    })?;
    surface.set_coefficients(&coeffs)?;
    Ok(surface)
}

fn make_row(
    iter: usize,
    acc: &AccuracyLedger,
    n_coeff: usize,
    segments: usize,
    wall_ms: f64,
    strategy: &str,
) -> LedgerRow {
    let g = &acc.global;
    LedgerRow {
        iter,
        n_points: g.n_points,
        n_out: g.n_out,
        n_coeff,
        max_dist: g.max_dist,
        avg_dist: g.avg_dist,
        avg_out_dist: g.avg_out_dist,
        efficiency: approximation_efficiency(g.n_resolved(), n_coeff).unwrap_or(0.0),
        wall_ms,
        segments,
        strategy: strategy.to_string(),
    }
}

/// Runs the adaptive approximation of `cloud`.
pub fn run(cloud: &PointCloud, cfg: &RunConfig) -> Result<RunResult, DriverError> {
    cfg.validate()?;
    let mut clock = Instant::now();
    let mut surface = make_initial_surface(cloud, cfg)?;
    let mut locator = Locator::new(&surface);
    let mut assignment = Assignment::new(&locator, cloud)?;
    let mut acc = compute_accuracy(&surface, &locator, cloud, &assignment, cfg.tolerance);

    let mut phase: &StrategySpec = &cfg.strategy;
    let mut phase_label = phase.phase_label();
    let mut ledger = RunLedger::new();
    ledger.rows.push(make_row(0, &acc, surface.num_coefficients(), 0, elapsed_ms(&mut clock), &phase_label));
    log::info!(
        "iteration 0: {} of {} points outside tolerance, {} coefficients",
        acc.global.n_out,
        cloud.len(),
        surface.num_coefficients()
    );

    let mut phase_iter = 0;
    let mut empty_streak = 0;
    let mut outcome = if acc.global.n_out == 0 { Some(RunOutcome::Converged) } else { None };

    for it in 1..=cfg.max_iterations {
        if outcome.is_some() {
            break;
        }
        let support = support_stats(&locator, &acc, surface.num_coefficients());
        let cut = compute_thresholds(&acc, &support, &cfg.thresholds, ThresholdState { iteration: phase_iter });
        let ctx = PlanContext {
            surface: &surface,
            locator: &locator,
            ledger: &acc,
            support: &support,
            min_interval: cfg.min_interval,
        };
        let plan = build_plan(phase, &ctx, &cut, it);
        let planned = plan.len();
        let mut inserted = 0;
        for (seg, res) in plan.segments().iter().zip(surface.insert_segments(plan.segments())) {
            match res {
                Ok(_) => inserted += 1,
                // earlier segments of the same plan may already have done its work
                Err(LrError::NoSplit(_)) => log::debug!("planned segment {seg:?} became redundant"),
                Err(e) => log::warn!("dropping planned segment {seg:?}: {e}"),
            }
        }
        phase_iter += 1;
        empty_streak = if inserted == 0 { empty_streak + 1 } else { 0 };
        if inserted > 0 {
            locator = Locator::new(&surface);
            assignment = Assignment::new(&locator, cloud)?;
        }

        let prev = ledger.rows.last().expect("initial row").clone();
        if let Err(source) = fit_step(&mut surface, &locator, cloud, &assignment, &cfg.fit, it) {
            ledger.outcome = None;
            return Err(DriverError::Fit { iteration: it, source, ledger: Box::new(ledger) });
        }
        acc = compute_accuracy(&surface, &locator, cloud, &assignment, cfg.tolerance);
        let row = make_row(it, &acc, surface.num_coefficients(), inserted, elapsed_ms(&mut clock), &phase_label);
        log::info!(
            "iteration {it} [{phase_label}]: {planned} planned, {inserted} inserted, {} outside, {} coefficients, max {:.4}",
            row.n_out,
            row.n_coeff,
            row.max_dist
        );
        ledger.rows.push(row.clone());

        if acc.global.n_out == 0 {
            outcome = Some(RunOutcome::Converged);
            break;
        }
        if cfg.stop_on_stagnation && empty_streak >= 2 {
            ledger.stopped_no_segments = true;
            outcome = Some(RunOutcome::Stagnation);
            break;
        }
        if let (Some(next), None) = (phase.switch_to.as_deref(), ledger.switched_at) {
            let progress = Progress {
                resolved_delta: (row.n_points - row.n_out) as i64 - (prev.n_points - prev.n_out) as i64,
                coeff_delta: row.n_coeff as i64 - prev.n_coeff as i64,
                unresolved_remaining: row.n_out > 0,
            };
            if should_switch(&progress) {
                log::info!("iteration {it}: switching from {phase_label} to {}", next.phase_label());
                phase = next;
                phase_label = next.phase_label();
                ledger.switched_at = Some(it);
                empty_streak = 0;
                if cfg.thresholds.reset_on_switch {
                    phase_iter = 0;
                }
            }
        }
    }

    let outcome = outcome.unwrap_or(RunOutcome::IterationCap);
    ledger.outcome = Some(outcome);
    ledger.converged = outcome == RunOutcome::Converged;
    if let Some(pred) = &cfg.intermediate {
        ledger.intermediate_iter = detect_intermediate(&ledger.rows, pred);
        let last = ledger.rows.last().map(|r| r.iter);
        ledger.tail_length = ledger.intermediate_iter.zip(last).map(|(i, f)| f - i);
    }
    Ok(RunResult { surface, ledger })
}

fn elapsed_ms(clock: &mut Instant) -> f64 {
    let ms = clock.elapsed().as_secs_f64() * 1e3;
    *clock = Instant::now();
    ms
}

/// First iteration whose row satisfies the predicate.
pub fn detect_intermediate(rows: &[LedgerRow], predicate: &StagePredicate) -> Option<usize> {
    rows.iter().find(|r| predicate.holds(r)).map(|r| r.iter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Oscillation {
    None,
    Low,
    Medium,
    High,
}

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let v: Vec<f64> = values.collect();
    let signs: Vec<bool> = v.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).map(|d| d > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Grades how much `max_dist` and `n_out` go up and down over a run.
pub fn oscillation_grade(rows: &[LedgerRow]) -> Oscillation {
    if rows.len() < 3 {
        return Oscillation::None;
    }
    let changes = sign_changes(rows.iter().map(|r| r.max_dist)).max(sign_changes(rows.iter().map(|r| r.n_out as f64)));
    match changes {
        0 => Oscillation::None,
        1..=2 => Oscillation::Low,
        3..=5 => Oscillation::Medium,
        _ => Oscillation::High,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, n_out: usize, max_dist: f64) -> LedgerRow {
        LedgerRow {
            iter,
            n_points: 1000,
            n_out,
            n_coeff: 10,
            max_dist,
            avg_dist: 0.0,
            avg_out_dist: 0.0,
            efficiency: 0.0,
            wall_ms: 0.0,
            segments: 0,
            strategy: "eFB".into(),
        }
    }

    fn plane_cloud(n: usize) -> PointCloud {
        let mut pts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (i as f64 / (n - 1) as f64 * 3.0, j as f64 / (n - 1) as f64 * 2.0);
                pts.push([x, y, 2.0 * x - y + 3.0]);
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn plane_is_fitted_initially() {
        for p in 1..=3 {
            let mut cfg = RunConfig::new(0.01, "eFB".parse().unwrap());
            cfg.degrees = (p, p);
            let cloud = plane_cloud(100);
            let s = make_initial_surface(&cloud, &cfg).unwrap();
            let worst = cloud.points.iter().map(|q| (s.evaluate(q[0], q[1]).unwrap() - q[2]).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-8, "p={p}: {worst}");
        }
    }

    #[test]
    fn bilinear_sheet() {
        let mut cfg = RunConfig::new(0.01, "eFB".parse().unwrap());
        cfg.degrees = (1, 1);
        cfg.initial_elements = Some((1, 1));
        let s = make_initial_surface(&plane_cloud(10), &cfg).unwrap();
        assert_eq!(s.num_coefficients(), 4);
    }

    #[test]
    fn degenerate_clouds() {
        let cfg = RunConfig::new(0.01, "eFB".parse().unwrap());
        assert!(matches!(
            make_initial_surface(&PointCloud::new(vec![[1.0, 2.0, 3.0]]), &cfg),
            Err(DriverError::DegenerateDomain { .. })
        ));
        assert!(matches!(make_initial_surface(&PointCloud::new(vec![]), &cfg), Err(DriverError::EmptyCloud)));
    }

    #[test]
    fn exact_cloud_converges_at_once() {
        let res = run(&plane_cloud(30), &RunConfig::new(0.01, "eFB".parse().unwrap())).unwrap();
        assert_eq!(res.outcome(), RunOutcome::Converged);
        assert_eq!(res.ledger.rows.len(), 1);
        assert_eq!(res.ledger.rows[0].segments, 0);
    }

    #[test]
    fn zero_iterations_reports_initial_row() {
        let cloud = PointCloud::new(
            (0..400)
                .map(|k| {
                    let (x, y) = ((k % 20) as f64, (k / 20) as f64);
                    [x, y, (x * 1.3).sin() * (y * 0.7).cos()]
                })
                .collect(),
        );
        let mut cfg = RunConfig::new(1e-4, "eFB".parse().unwrap());
        cfg.max_iterations = 0;
        let res = run(&cloud, &cfg).unwrap();
        assert_eq!(res.outcome(), RunOutcome::IterationCap);
        assert_eq!(res.outcome().exit_code(), 2);
        assert_eq!(res.ledger.rows.len(), 1);
    }

    #[test]
    fn predicates() {
        let p: StagePredicate = "out<=1%".parse().unwrap();
        assert_eq!(p.max_out_fraction, Some(0.01));
        let rows: Vec<LedgerRow> = (0..10).map(|i| row(i, 100 - 10 * i.min(9), 3.0)).collect();
        // 1% of 1000 points = 10 unresolved, reached at iteration 9
        assert_eq!(detect_intermediate(&rows, &p), Some(9));
        let never: StagePredicate = "max<=1".parse().unwrap();
        assert_eq!(detect_intermediate(&rows, &never), None);
        let at_once: StagePredicate = "out<=0.5|max<=1".parse().unwrap();
        assert_eq!(at_once.combinator, Combinator::Any);
        assert_eq!(detect_intermediate(&rows, &at_once), Some(0));
        let both: StagePredicate = "out<=0.1%, max<=2".parse().unwrap();
        assert_eq!(both.combinator, Combinator::All);
        assert_eq!(both.max_dist_cap, Some(2.0));
        for bad in ["", "out", "out<=x", "max<=1%", "foo<=1", "out<=1,max<=2|avgout<=1", "max<=1,max<=2"] {
            assert!(bad.parse::<StagePredicate>().is_err(), "{bad}");
        }
    }

    #[test]
    fn oscillation_bands() {
        let dec: Vec<LedgerRow> = (0..6).map(|i| row(i, 100 - i, 10.0 - i as f64)).collect();
        assert_eq!(oscillation_grade(&dec), Oscillation::None);
        let bump: Vec<LedgerRow> =
            [5.0, 4.0, 4.5, 3.0, 2.0].iter().enumerate().map(|(i, &m)| row(i, 100 - i, m)).collect();
        assert_eq!(oscillation_grade(&bump), Oscillation::Low);
        let alt: Vec<LedgerRow> = (0..9).map(|i| row(i, 50, if i % 2 == 0 { 2.0 } else { 1.0 })).collect();
        assert_eq!(oscillation_grade(&alt), Oscillation::High);
    }

    #[test]
    fn default_grid_follows_aspect() {
        assert_eq!(default_grid(1.0, 1.0), (8, 8));
        assert_eq!(default_grid(2.0, 1.0), (16, 8));
        assert_eq!(default_grid(1.0, 3.0), (8, 24));
        assert_eq!(default_grid(100.0, 1.0), (64, 8));
    }
}
