use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use lrfit::eval::{assign_points, compute_accuracy};
use lrfit::fitting::{fit_lsq, fit_mba, FitConfig};
use lrfit::{run, Locator, LrSurface, RunConfig};
use lrfit_bench::{diagonal_segments, dunes, fitted_surface};

fn evaluation(c: &mut Criterion) {
    let (surface, cloud) = fitted_surface(50_000, 3);
    let loc = Locator::new(&surface);
    c.bench_function("evaluate 10k points", |b| {
        b.iter(|| cloud.points[..10_000].iter().map(|p| loc.evaluate(&surface, p[0], p[1]).unwrap()).sum::<f64>())
    });
    c.bench_function("accuracy 50k points", |b| {
        b.iter(|| {
            let loc = Locator::new(&surface);
            let a = assign_points(&surface, &cloud).unwrap();
            black_box(compute_accuracy(&surface, &loc, &cloud, &a, 0.1))
        })
    });
}

fn insertion(c: &mut Criterion) {
    let base = LrSurface::uniform((0.0, 1.0, 0.0, 1.0), (16, 16), (2, 2)).unwrap();
    let segs = diagonal_segments(&base);
    c.bench_function("insert 13 local segments", |b| {
        b.iter_batched(
            || base.clone(),
            |mut s| {
                for seg in &segs {
                    s.insert_segment(*seg).unwrap();
                }
                s
            },
            BatchSize::SmallInput,
        )
    });
}

fn fitting(c: &mut Criterion) {
    let (surface, cloud) = fitted_surface(20_000, 2);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("lsq 20k points", |b| {
        b.iter_batched(
            || surface.clone(),
            |mut s| fit_lsq(&mut s, &cloud, &FitConfig::default()).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("mba 20k points", |b| {
        b.iter_batched(|| surface.clone(), |mut s| fit_mba(&mut s, &cloud).unwrap(), BatchSize::LargeInput)
    });
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let (cloud, tol) = dunes(20_000);
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for label in ["eFA", "bSB", "eMcB"] {
        let cfg = RunConfig::new(tol, label.parse().unwrap());
        group.bench_function(label, |b| b.iter(|| run(&cloud, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, evaluation, insertion, fitting, full_run);
criterion_main!(benches);
