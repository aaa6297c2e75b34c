//! Seeded synthetic point clouds with known ground truth, standing in for
//! measured terrain: smooth dunes, a gridded mountain, sparse scan lines with
//! outliers, and terraces with sharp steps.

use std::fmt;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::eval::PointCloud;

/// Side length of the square synthetic domain in meters.
pub const EXTENT: f64 = 1000.0;
pub const MIN_POINTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("unknown synthetic kind {0:?} (expected dunes, peaks, scanlines or steps)")]
    UnknownKind(String),

    #[error("at least {MIN_POINTS} points are required, got {0}")]
    TooFewPoints(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Dunes,
    Peaks,
    Scanlines,
    Steps,
}

impl FromStr for SynthKind {
    type Err = SynthError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dunes" => Ok(SynthKind::Dunes),
            "peaks" => Ok(SynthKind::Peaks),
            "scanlines" => Ok(SynthKind::Scanlines),
            "steps" => Ok(SynthKind::Steps),
            _ => Err(SynthError::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthKind::Dunes => "dunes",
            SynthKind::Peaks => "peaks",
            SynthKind::Scanlines => "scanlines",
            SynthKind::Steps => "steps",
        })
    }
}

/// Franke's bivariate test function on the unit square.
pub fn franke(x: f64, y: f64) -> f64 {
    let a = 0.75 * (-((9.0 * x - 2.0).powi(2) + (9.0 * y - 2.0).powi(2)) / 4.0).exp();
    let b = 0.75 * (-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0).exp();
    let c = 0.5 * (-((9.0 * x - 7.0).powi(2) + (9.0 * y - 3.0).powi(2)) / 4.0).exp();
    let d = 0.2 * (-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2)).exp();
    a + b + c - d
}

/// Noise-free height of `kind` at `(x, y)` in meters.
pub fn ground_truth(kind: SynthKind, x: f64, y: f64) -> f64 {
    let (s, t) = (x / EXTENT, y / EXTENT);
    match kind {
        SynthKind::Dunes => {
            // Franke background with a field of oblique ridges
            let ridges = (std::f64::consts::TAU * (7.0 * s + 2.0 * t)).sin() * (-(t - 0.55).powi(2) / 0.06).exp();
            10.0 * franke(s, t) + 0.8 * ridges
        }
        SynthKind::Peaks => {
            let g = |cx: f64, cy: f64, w: f64| (-((s - cx).powi(2) + (t - cy).powi(2)) / (2.0 * w * w)).exp();
            1200.0 + 600.0 * g(0.45, 0.55, 0.12) + 250.0 * g(0.75, 0.3, 0.06) + 150.0 * g(0.2, 0.2, 0.1)
                - 80.0 * (-(s - t).powi(2) / 0.002).exp() * t
        }
        SynthKind::Scanlines => -40.0 + 6.0 * (6.0 * s).sin() * (4.0 * t).cos() + 3.0 * s,
        SynthKind::Steps => 2.0 * (4.0 * franke(s, t)).floor(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCloud {
    pub kind: SynthKind,
    pub cloud: PointCloud,
    /// Noise- and outlier-free height per point.
    pub truth: Vec<f64>,
    pub outlier: Vec<bool>,
}

impl SyntheticCloud {
    pub fn num_outliers(&self) -> usize {
        self.outlier.iter().filter(|&&o| o).count()
    }
}

/// Generates `n_points` points of `kind`. Deterministic in `seed`. Exactly
/// `floor(outlier_fraction * n_points)` points are displaced vertically and
/// flagged.
pub fn gen_synthetic(
    kind: SynthKind,
    seed: u64,
    n_points: usize,
    noise: f64,
    outlier_fraction: f64,
) -> Result<SyntheticCloud, SynthError> {
    if n_points < MIN_POINTS {
        return Err(SynthError::TooFewPoints(n_points));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(SynthError::InvalidParameter(format!("noise must be non-negative, got {noise}")));
    }
    if !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(SynthError::InvalidParameter(format!(
            "outlier fraction must lie in [0, 1], got {outlier_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xy = match kind {
        SynthKind::Dunes | SynthKind::Steps => uniform_xy(&mut rng, n_points),
        SynthKind::Peaks => grid_xy(n_points),
        SynthKind::Scanlines => scanline_xy(&mut rng, n_points),
    };
    let truth: Vec<f64> = xy.iter().map(|&(x, y)| ground_truth(kind, x, y)).collect();
    let normal = Normal::new(0.0, noise).expect("valid deviation");
    let mut points: Vec<[f64; 3]> = xy
        .iter()
        .zip(&truth)
        .map(|(&(x, y), &z)| [x, y, if noise > 0.0 { z + normal.sample(&mut rng) } else { z }])
        .collect();

    let (lo, hi) = truth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &z| (a.min(z), b.max(z)));
    let range = (hi - lo).max(1.0);
    let n_out = (outlier_fraction * n_points as f64).floor() as usize;
    let mut outlier = vec![false; n_points];
    let mut picked = sample(&mut rng, n_points, n_out).into_vec();
    picked.sort_unstable();
    for k in picked {
        let offset = rng.random_range(0.2..0.5) * range;
        points[k][2] += if rng.random_bool(0.5) { offset } else { -offset };
        outlier[k] = true;
    }
    Ok(SyntheticCloud { kind, cloud: PointCloud::new(points), truth, outlier })
}

fn uniform_xy(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    let mut xy: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.random_range(0.0..=EXTENT), rng.random_range(0.0..=EXTENT))).collect();
    // pin the corners so the domain is the full square
    xy[0] = (0.0, 0.0);
    xy[1] = (EXTENT, EXTENT);
    xy
}

fn grid_xy(n: usize) -> Vec<(f64, f64)> {
    let nx = (n as f64).sqrt().round() as usize;
    let ny = n.div_ceil(nx);
    let step = |i: usize, m: usize| EXTENT * i as f64 / (m - 1).max(1) as f64;
    (0..n).map(|k| (step(k % nx, nx), step(k / nx, ny))).collect()
}

/// Roughly east-west lines at irregular spacing with random along-line
/// sampling.
fn scanline_xy(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    let mut ys = vec![0.0];
    while *ys.last().unwrap() < EXTENT {
        let next = ys.last().unwrap() + rng.random_range(5.0..40.0);
        ys.push(next.min(EXTENT));
    }
    let per_line = n.div_ceil(ys.len());
    let mut xy = Vec::with_capacity(n);
    'outer: for &y in &ys {
        let tilt = rng.random_range(-0.01..0.01);
        for _ in 0..per_line {
            if xy.len() == n {
                break 'outer;
            }
            let x: f64 = rng.random_range(0.0..=EXTENT);
            xy.push((x, (y + tilt * (x - EXTENT / 2.0)).clamp(0.0, EXTENT)));
        }
    }
    xy[0] = (0.0, 0.0);
    xy[1] = (EXTENT, EXTENT);
    xy
}

/// Writes `x,y,z,truth_z,outlier` per point.
pub fn write_truth(path: impl AsRef<Path>, synth: &SyntheticCloud) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,z,truth_z,outlier")?;
    for ((p, t), o) in synth.cloud.points.iter().zip(&synth.truth).zip(&synth.outlier) {
        writeln!(w, "{},{},{},{},{}", p[0], p[1], p[2], t, u8::from(*o))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = gen_synthetic(SynthKind::Dunes, 1, 100_000, 0.0, 0.0).unwrap();
        let b = gen_synthetic(SynthKind::Dunes, 1, 100_000, 0.0, 0.0).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(SynthKind::Dunes, 2, 100_000, 0.0, 0.0).unwrap();
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn exact_outlier_count() {
        for kind in [SynthKind::Dunes, SynthKind::Peaks, SynthKind::Scanlines, SynthKind::Steps] {
            let s = gen_synthetic(kind, 7, 12_345, 0.05, 0.001).unwrap();
            assert_eq!(s.cloud.len(), 12_345);
            assert_eq!(s.num_outliers(), 12);
        }
    }

    #[test]
    fn domain_is_full_square() {
        for kind in [SynthKind::Dunes, SynthKind::Peaks, SynthKind::Scanlines, SynthKind::Steps] {
            let s = gen_synthetic(kind, 3, 1000, 0.0, 0.0).unwrap();
            assert_eq!(s.cloud.bounding_box(), Some((0.0, EXTENT, 0.0, EXTENT)), "{kind}");
        }
    }

    #[test]
    fn steps_are_piecewise_constant() {
        let s = gen_synthetic(SynthKind::Steps, 4, 2000, 0.0, 0.0).unwrap();
        assert!(s.truth.iter().all(|z| (z / 2.0).fract() == 0.0));
        let levels: std::collections::BTreeSet<i64> = s.truth.iter().map(|z| *z as i64).collect();
        assert!(levels.len() >= 3);
    }

    #[test]
    fn errors() {
        assert!(matches!("lava".parse::<SynthKind>(), Err(SynthError::UnknownKind(_))));
        assert!(matches!(gen_synthetic(SynthKind::Dunes, 0, 99, 0.0, 0.0), Err(SynthError::TooFewPoints(99))));
    }

    #[test]
    fn sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let s = gen_synthetic(SynthKind::Scanlines, 5, 2000, 0.0, 0.01).unwrap();
        write_truth(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let flagged = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
        assert_eq!(flagged, 20);
    }
}
