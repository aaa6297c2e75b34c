//! Fixtures shared by the criterion benchmarks in `benches/`.

use lrfit::synth::{gen_synthetic, SynthKind};
use lrfit::{LrSurface, MeshSegment, PointCloud, RunConfig};

/// Dunes cloud of `n` points and a tolerance of 1% of its height range.
pub fn dunes(n: usize) -> (PointCloud, f64) {
    let s = gen_synthetic(SynthKind::Dunes, 1, n, 0.0, 0.0).expect("valid parameters");
    let (lo, hi) = s.cloud.height_range().expect("non-empty cloud");
    (s.cloud, 0.01 * (hi - lo))
}

/// A surface fitted by a few full-span iterations, for evaluation benches.
pub fn fitted_surface(n: usize, iterations: usize) -> (LrSurface, PointCloud) {
    let (cloud, tol) = dunes(n);
    let mut cfg = RunConfig::new(tol, "eFB".parse().expect("valid label"));
    cfg.max_iterations = iterations;
    let res = lrfit::run(&cloud, &cfg).expect("run succeeds");
    (res.surface, cloud)
}

/// Local segments over a uniform 16x16 mesh: one per element along the
/// diagonal, each long enough to split a B-spline.
pub fn diagonal_segments(surface: &LrSurface) -> Vec<MeshSegment> {
    let d = surface.domain();
    let (w, h) = ((d.u1 - d.u0) / 16.0, (d.v1 - d.v0) / 16.0);
    (0..13)
        .map(|i| {
            let u = d.u0 + (i as f64 + 0.5) * w;
            MeshSegment::new(lrfit::Direction::U, u, d.v0 + i as f64 * h, d.v0 + (i as f64 + 4.0) * h)
        })
        .collect()
}
