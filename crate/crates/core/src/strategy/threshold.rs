//! Per-iteration cutoffs for the `td`, `tn` and `tk` thresholds.

use crate::eval::{AccuracyLedger, ElementStats, Locator};

/// Weights and decay of the threshold formulas. All cutoffs are multiplied by
/// `decay^i` where `i` counts iterations since the active phase started.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    pub decay: f64,
    /// `(max distance, average unresolved distance, tolerance)` weights of `td`.
    pub td_weights: (f64, f64, f64),
    /// `(minimum score, maximum score)` weights of `tn`.
    pub tn_weights: (f64, f64),
    /// `tk` falls back to a fraction of the mean support population when that
    /// exceeds the mean unresolved count by this ratio.
    pub tk_fallback_ratio: f64,
    pub tk_fallback_fraction: f64,
    /// Restart the decay when the strategy switches.
    pub reset_on_switch: bool,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            decay: 0.9,
            td_weights: (0.3, 0.4, 0.3),
            tn_weights: (0.5, 0.5),
            tk_fallback_ratio: 100.0,
            tk_fallback_fraction: 0.01,
            reset_on_switch: true,
        }
    }
}

/// Decay bookkeeping for the active strategy phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ThresholdState {
    pub iteration: usize,
}

/// Accuracy statistics over the support of each B-spline.
pub fn support_stats(locator: &Locator, ledger: &AccuracyLedger, n_bsplines: usize) -> Vec<ElementStats> {
    (0..n_bsplines)
        .map(|b| {
            locator
                .bspline_elements(b)
                .iter()
                .fold(ElementStats::default(), |acc, &e| acc.merged(&ledger.per_element[e as usize]))
        })
        .collect()
}

/// Element significance used by `tn`: `n_out * (1 + max_dist / tol)`.
pub fn tn_score(stats: &ElementStats, tolerance: f64) -> f64 {
    stats.n_out as f64 * (1.0 + stats.max_dist / tolerance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoffs {
    pub td: f64,
    pub tn: f64,
    pub tk: f64,
}

/// Cutoffs for the current ledger; `support` holds per-B-spline statistics.
pub fn compute_thresholds(
    ledger: &AccuracyLedger,
    support: &[ElementStats],
    cfg: &ThresholdConfig,
    state: ThresholdState,
) -> Cutoffs {
    let factor = cfg.decay.powi(state.iteration as i32);
    let g = &ledger.global;
    let tol = ledger.tolerance;

    let (w1, w2, w3) = cfg.td_weights;
    let td = factor * (w1 * g.max_dist + w2 * g.avg_out_dist + w3 * tol);

    let (lo, hi) = ledger
        .per_element
        .iter()
        .map(|s| tn_score(s, tol))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let tn = if ledger.per_element.is_empty() { 0.0 } else { factor * (cfg.tn_weights.0 * lo + cfg.tn_weights.1 * hi) };

    let tk = factor * tk_base(support, cfg);
    Cutoffs { td, tn, tk }
}

fn tk_base(support: &[ElementStats], cfg: &ThresholdConfig) -> f64 {
    if support.is_empty() {
        return 0.0;
    }
    let n = support.len() as f64;
    let mean_out = support.iter().map(|s| s.n_out as f64).sum::<f64>() / n;
    let mean_points = support.iter().map(|s| s.n_points as f64).sum::<f64>() / n;
    tk_cutoff(mean_out, mean_points, cfg)
}

/// Undecayed `tk` cutoff from the mean unresolved count and mean point count
/// over B-spline supports.
pub fn tk_cutoff(mean_out: f64, mean_points: f64, cfg: &ThresholdConfig) -> f64 {
    if mean_points > cfg.tk_fallback_ratio * mean_out {
        cfg.tk_fallback_fraction * mean_points
    } else {
        mean_out
    }
}
