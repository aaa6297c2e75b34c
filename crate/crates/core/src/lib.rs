//! Approximation of scattered, projectable point clouds by locally refined
//! (LR) B-spline height surfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`lr`]: LR-mesh, tensor-product B-splines and local refinement.
//! - [`eval`]: evaluation, point location and accuracy bookkeeping.
//! - [`fitting`]: penalized least squares and multilevel B-spline updates.
//! - [`strategy`]: strategy labels, thresholds and refinement plans.
//! - [`driver`]: the iterate-refine-fit loop and its run ledger.
//! - [`io`] and [`synth`]: file formats and synthetic test clouds.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod eval;
pub mod fitting;
pub mod io;
pub mod lr;
pub mod strategy;
pub mod synth;

pub use driver::{run, DriverError, LedgerRow, RunConfig, RunLedger, RunOutcome, RunResult, StagePredicate};
pub use eval::{AccuracyLedger, ElementStats, Locator, PointCloud};
pub use fitting::FitConfig;
pub use lr::{BSpline, Direction, ElementBox, LrMesh, LrSurface, MeshSegment};
pub use strategy::StrategySpec;
