//! Text formats: XYZ point files, the surface document, ASCII rasters and
//! CSV run reports.

mod document;
mod points;
mod raster;
mod report;

pub use document::{
    read_surface, surface_from_str, surface_to_string, write_surface, Provenance, SurfaceDocument, SCHEMA_VERSION,
};
pub use points::{parse_points, read_points, write_points};
pub use raster::{raster_values, sample_raster, write_raster, RasterGrid};
pub use report::{read_report, write_report, REPORT_HEADER};

use std::path::PathBuf;

use thiserror::Error;

use crate::lr::LrError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("point file contains no points")]
    NoPoints,

    #[error("surface document: {0}")]
    Schema(String),

    #[error("surface document version {found} is not supported (expected {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("surface document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("raster needs at least 2 samples per direction, got {nx} x {ny}")]
    RasterSize { nx: usize, ny: usize },

    #[error("report: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Lr(#[from] LrError),
}

pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File, IoError> {
    std::fs::File::open(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

pub(crate) fn create(path: &std::path::Path) -> Result<std::fs::File, IoError> {
    std::fs::File::create(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}
