use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create, open, IoError};
use crate::lr::{BSpline, Direction, KnotTable, LrMesh, LrSurface, MeshSegment};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a surface came from; free-form and optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub strategy: Option<String>,
    pub iterations: Option<usize>,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    /// `"U"` for lines of constant u, `"V"` for constant v.
    pub dir: String,
    /// Index of the fixed value in its own direction's knot table.
    pub fixed: usize,
    /// Indices of the span ends in the running direction's table.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineRecord {
    pub knots_u: Vec<usize>,
    pub knots_v: Vec<usize>,
    pub coeff: f64,
    pub scale: f64,
}

/// Serialized form of an [`LrSurface`]: knot values are stored once per
/// direction, everything else refers to them by index. Floats are written
/// in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDocument {
    pub schema_version: u32,
    pub degrees: (usize, usize),
    pub domain: [f64; 4],
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub segments: Vec<SegmentRecord>,
    pub bsplines: Vec<BSplineRecord>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl SurfaceDocument {
    pub fn from_surface(surface: &LrSurface, provenance: Provenance) -> Self {
        let table = surface.mesh().knot_table();
        let idx = |dir: Direction, x: f64| table.index_of(dir, x).expect("mesh knot");
        let d = surface.domain();
        let segments = surface
            .mesh()
            .segments()
            .iter()
            .map(|s| SegmentRecord {
                dir: match s.dir {
                    Direction::U => "U".into(),
                    Direction::V => "V".into(),
                },
                fixed: idx(s.dir, s.fixed),
                start: idx(s.dir.other(), s.start),
                end: idx(s.dir.other(), s.end),
            })
            .collect();
        let bsplines = surface
            .bsplines()
            .iter()
            .map(|b| BSplineRecord {
                knots_u: b.knots_u.iter().map(|&k| idx(Direction::U, k)).collect(),
                knots_v: b.knots_v.iter().map(|&k| idx(Direction::V, k)).collect(),
                coeff: b.coeff,
                scale: b.scale,
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            degrees: surface.degrees(),
            domain: [d.u0, d.u1, d.v0, d.v1],
            knots_u: table.values_u,
            knots_v: table.values_v,
            segments,
            bsplines,
            provenance,
        }
    }

    pub fn to_surface(&self) -> Result<LrSurface, IoError> {
        let schema = |m: String| IoError::Schema(m);
        if self.schema_version != SCHEMA_VERSION {
            return Err(IoError::UnsupportedVersion { found: self.schema_version, supported: SCHEMA_VERSION });
        }
        if self.bsplines.is_empty() {
            return Err(schema("no B-splines".into()));
        }
        let table = KnotTable { values_u: self.knots_u.clone(), values_v: self.knots_v.clone() };
        for dir in [Direction::U, Direction::V] {
            let v = table.values(dir);
            if v.len() < 2 || v.windows(2).any(|w| !(w[0] < w[1])) || v.iter().any(|x| !x.is_finite()) {
                return Err(schema(format!("knot table {dir:?} is not strictly increasing")));
            }
        }
        let lookup = |dir: Direction, i: usize| -> Result<f64, IoError> {
            table.values(dir).get(i).copied().ok_or_else(|| schema(format!("knot index {i} out of range in {dir:?}")))
        };
        let mut segments = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            let dir = match s.dir.as_str() {
                "U" => Direction::U,
                "V" => Direction::V,
                other => return Err(schema(format!("unknown segment direction {other:?}"))),
            };
            segments.push(MeshSegment::new(
                dir,
                lookup(dir, s.fixed)?,
                lookup(dir.other(), s.start)?,
                lookup(dir.other(), s.end)?,
            ));
        }
        let mesh = LrMesh::from_segments(&segments)?;
        let d = mesh.domain();
        if [d.u0, d.u1, d.v0, d.v1] != self.domain {
            return Err(schema("domain does not match the boundary meshlines".into()));
        }
        let mut bsplines = Vec::with_capacity(self.bsplines.len());
        for r in &self.bsplines {
            let ku = r.knots_u.iter().map(|&i| lookup(Direction::U, i)).collect::<Result<Vec<_>, _>>()?;
            let kv = r.knots_v.iter().map(|&i| lookup(Direction::V, i)).collect::<Result<Vec<_>, _>>()?;
            if ku.len() != self.degrees.0 + 2 || kv.len() != self.degrees.1 + 2 {
                return Err(schema("B-spline knot count does not match the degrees".into()));
            }
            if !(r.scale > 0.0 && r.scale.is_finite()) || !r.coeff.is_finite() {
                return Err(schema("B-spline scale must be positive and coefficients finite".into()));
            }
            let mut b = BSpline::new(ku, kv);
            b.coeff = r.coeff;
            b.scale = r.scale;
            bsplines.push(b);
        }
        Ok(LrSurface::from_parts(self.degrees, mesh, bsplines)?)
    }
}

pub fn surface_to_string(surface: &LrSurface, provenance: Provenance) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(&SurfaceDocument::from_surface(surface, provenance))?)
}

pub fn surface_from_str(text: &str) -> Result<(LrSurface, Provenance), IoError> {
    let doc: SurfaceDocument = serde_json::from_str(text)?;
    Ok((doc.to_surface()?, doc.provenance))
}

pub fn write_surface(path: impl AsRef<Path>, surface: &LrSurface, provenance: Provenance) -> Result<(), IoError> {
    let mut w = BufWriter::new(create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut w, &SurfaceDocument::from_surface(surface, provenance))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_surface(path: impl AsRef<Path>) -> Result<(LrSurface, Provenance), IoError> {
    let doc: SurfaceDocument = serde_json::from_reader(BufReader::new(open(path.as_ref())?))?;
    Ok((doc.to_surface()?, doc.provenance))
}
