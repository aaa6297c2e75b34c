use std::io::{BufWriter, Write};
use std::path::Path;

use super::{create, IoError};
use crate::lr::LrSurface;

/// Samples of a surface on a regular grid including the domain edges.
/// `rows[0]` is the northernmost (largest v) row.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub rows: Vec<Vec<f64>>,
}

pub fn raster_values(surface: &LrSurface, nx: usize, ny: usize) -> Result<RasterGrid, IoError> {
    if nx < 2 || ny < 2 {
        return Err(IoError::RasterSize { nx, ny });
    }
    let d = surface.domain();
    let at =
        |lo: f64, hi: f64, i: usize, n: usize| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let locator = crate::eval::Locator::new(surface);
    let mut rows = Vec::with_capacity(ny);
    for j in (0..ny).rev() {
        let y = at(d.v0, d.v1, j, ny);
        let row =
            (0..nx).map(|i| locator.evaluate(surface, at(d.u0, d.u1, i, nx), y)).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(RasterGrid {
        nx,
        ny,
        x0: d.u0,
        y0: d.v0,
        dx: (d.u1 - d.u0) / (nx - 1) as f64,
        dy: (d.v1 - d.v0) / (ny - 1) as f64,
        rows,
    })
}

/// ESRI ASCII grid with cell-centre registration and separate `dx`/`dy`.
pub fn write_raster(mut w: impl Write, grid: &RasterGrid) -> Result<(), IoError> {
    writeln!(w, "ncols {}", grid.nx)?;
    writeln!(w, "nrows {}", grid.ny)?;
    writeln!(w, "xllcenter {}", grid.x0)?;
    writeln!(w, "yllcenter {}", grid.y0)?;
    writeln!(w, "dx {}", grid.dx)?;
    writeln!(w, "dy {}", grid.dy)?;
    writeln!(w, "nodata_value -9999")?;
    for row in &grid.rows {
        let line: Vec<String> = row.iter().map(|z| z.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn sample_raster(surface: &LrSurface, nx: usize, ny: usize, path: impl AsRef<Path>) -> Result<(), IoError> {
    let grid = raster_values(surface, nx, ny)?;
    let mut w = BufWriter::new(create(path.as_ref())?);
    write_raster(&mut w, &grid)?;
    w.flush()?;
    Ok(())
}
