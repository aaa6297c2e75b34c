use std::io::{Read, Write};

use super::IoError;
use crate::driver::LedgerRow;

pub const REPORT_HEADER: [&str; 10] =
    ["iter", "n_out", "n_coeff", "max", "avg", "avg_out", "efficiency", "segments", "wall_ms", "strategy"];

/// Writes the run ledger as CSV, one row per iteration.
pub fn write_report(w: impl Write, rows: &[LedgerRow]) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record([
            r.iter.to_string(),
            r.n_out.to_string(),
            r.n_coeff.to_string(),
            r.max_dist.to_string(),
            r.avg_dist.to_string(),
            r.avg_out_dist.to_string(),
            r.efficiency.to_string(),
            r.segments.to_string(),
            format!("{:.3}", r.wall_ms),
            r.strategy.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a report written by [`write_report`]. The point count is not part
/// of the report and is left at zero.
pub fn read_report(r: impl Read) -> Result<Vec<LedgerRow>, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(REPORT_HEADER) {
        return Err(IoError::Parse { line: 1, message: format!("expected header {}", REPORT_HEADER.join(",")) });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |f: &str| IoError::Parse { line, message: format!("invalid {f}") };
        let num = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(REPORT_HEADER[k]));
        let int = |k: usize| rec.get(k).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(REPORT_HEADER[k]));
        rows.push(LedgerRow {
            iter: int(0)?,
            n_points: 0,
            n_out: int(1)?,
            n_coeff: int(2)?,
            max_dist: num(3)?,
            avg_dist: num(4)?,
            avg_out_dist: num(5)?,
            efficiency: num(6)?,
            segments: int(7)?,
            wall_ms: num(8)?,
            strategy: rec.get(9).ok_or_else(|| bad("strategy"))?.to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let row = LedgerRow {
            iter: 3,
            n_points: 0,
            n_out: 12,
            n_coeff: 400,
            max_dist: 1.25,
            avg_dist: 0.1 + 0.2,
            avg_out_dist: 0.7,
            efficiency: 2.5,
            wall_ms: 12.0,
            segments: 17,
            strategy: "eFA tn".into(),
        };
        let mut buf = Vec::new();
        write_report(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,n_out,n_coeff,max,avg,avg_out,efficiency,segments,wall_ms,strategy\n"));
        assert_eq!(read_report(buf.as_slice()).unwrap(), vec![row]);
    }
}
