use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{create, open, IoError};
use crate::eval::PointCloud;

/// Reads `x y z` triples separated by whitespace and/or commas. Text after
/// `#` is a comment; blank lines are skipped.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointCloud, IoError> {
    parse_points(BufReader::new(open(path.as_ref())?))
}

pub fn parse_points(reader: impl BufRead) -> Result<PointCloud, IoError> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let number = i + 1;
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> =
            content.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(IoError::Parse { line: number, message: format!("expected 3 values, found {}", fields.len()) });
        }
        let mut p = [0.0; 3];
        for (slot, f) in p.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::Parse { line: number, message: format!("not a finite number: {f:?}") })?;
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(IoError::NoPoints);
    }
    Ok(PointCloud::new(points))
}

/// Writes one `x y z` line per point with round-trip precision.
pub fn write_points(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<(), IoError> {
    let mut w = BufWriter::new(create(path.as_ref())?);
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines() {
        let c = parse_points("0 0 1\n1 0 2\n".as_bytes()).unwrap();
        assert_eq!(c.points, vec![[0.0, 0.0, 1.0], [1.0, 0.0, 2.0]]);
    }

    #[test]
    fn comma_and_comment() {
        let c = parse_points("# header\n0,0,1 # note\n\n".as_bytes()).unwrap();
        assert_eq!(c.points, vec![[0.0, 0.0, 1.0]]);
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse_points("0 0\n".as_bytes()) {
            Err(IoError::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_points("0 0 1\n1 x 2\n".as_bytes()) {
            Err(IoError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_points("# nothing\n".as_bytes()), Err(IoError::NoPoints)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.xyz");
        let cloud = PointCloud::new(vec![[0.1, 1.0 / 3.0, -2.5e-7], [1e6, 2.0, 3.0]]);
        write_points(&path, &cloud).unwrap();
        assert_eq!(read_points(&path).unwrap(), cloud);
    }
}
