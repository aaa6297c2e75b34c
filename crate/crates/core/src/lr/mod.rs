//! LR-mesh, tensor-product B-splines and local refinement.

pub mod bspline;
pub mod mesh;
mod surface;

pub use bspline::{basis_derivs, basis_value, BSpline, KnotKey, Split};
pub use mesh::{Direction, ElementBox, KnotTable, LrMesh, MeshSegment};
pub use surface::{has_minimal_support, is_legal, InsertReport, LrSurface};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LrError {
    #[error("degree {0} is not supported (expected 1, 2 or 3)")]
    InvalidDegree(usize),

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("knot {value} lies outside the open support ({min}, {max})")]
    OutsideSupport { value: f64, min: f64, max: f64 },

    #[error("knot {value} is already a local knot; raising multiplicity is not supported")]
    MultiplicityIncrease { value: f64 },

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("segment {0:?} splits no B-spline")]
    NoSplit(MeshSegment),

    #[error("point ({u}, {v}) lies outside the surface domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
}
