//! Refinement strategies: label parsing, thresholds and refinement plans.

mod label;
mod plan;
mod threshold;

pub use label::{
    parse_label, DirectionPolicy, LabelError, MinSpanCriterion, StrategyKind, StrategySpec, ThresholdSet, Trigger,
    GRAMMAR,
};
pub use plan::{
    build_plan, directions_for, flagged_bsplines, flagged_elements, plan_element_extension, plan_full_span,
    plan_min_span, plan_restricted, plan_structured, should_switch, PlanContext, Progress, RefinementPlan,
    SWITCH_RATIO,
};
pub use threshold::{compute_thresholds, support_stats, tk_cutoff, tn_score, Cutoffs, ThresholdConfig, ThresholdState};
