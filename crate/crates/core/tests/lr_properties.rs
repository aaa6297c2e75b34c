mod common;

use common::*;
use lrfit::lr::has_minimal_support;
use lrfit::{Direction, LrSurface, MeshSegment};
use proptest::prelude::*;
use rand::Rng;

fn degrees() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn refinement_keeps_partition_geometry_and_minimal_support(deg in degrees(), seed in any::<u64>(), n in 5usize..25) {
        let mut r = rng(seed);
        let mut s = random_tensor(&mut r, deg);
        random_coefficients(&mut r, &mut s);
        let probes: Vec<(f64, f64)> = (0..50).map(|_| random_point(&mut r, &s)).collect();
        let before: Vec<f64> = probes.iter().map(|&(u, v)| s.evaluate(u, v).unwrap()).collect();
        for _ in 0..n {
            let seg = random_segment(&mut r, &s);
            s.insert_segment(seg).unwrap();
            for b in s.bsplines() {
                prop_assert!(has_minimal_support(b, s.mesh()));
                prop_assert!(b.scale > 0.0 && b.scale <= 1.0 + 1e-14);
            }
        }
        for (&(u, v), z) in probes.iter().zip(&before) {
            prop_assert!((s.evaluate(u, v).unwrap() - z).abs() <= 1e-10);
            prop_assert!((s.partition_sum(u, v) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn elements_match_sweep_oracle(deg in degrees(), seed in any::<u64>(), n in 0usize..20) {
        let mut r = rng(seed);
        let mut s = random_tensor(&mut r, deg);
        for _ in 0..n {
            let seg = random_segment(&mut r, &s);
            s.insert_segment(seg).unwrap();
        }
        let (count, rectangular) = sweep_element_count(&s.mesh().segments());
        prop_assert!(rectangular);
        prop_assert_eq!(count, s.mesh().elements().len());
        // elements tile the domain
        let d = s.domain();
        let area: f64 = s.mesh().elements().iter().map(|e| (e.u1 - e.u0) * (e.v1 - e.v0)).sum();
        prop_assert!((area - (d.u1 - d.u0) * (d.v1 - d.v0)).abs() < 1e-12);
    }

    #[test]
    fn bundling_does_not_change_values(deg in degrees(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut a = random_tensor(&mut r, deg);
        random_coefficients(&mut r, &mut a);
        let mut plan = Vec::new();
        let mut probe = a.clone();
        for _ in 0..10 {
            let seg = random_segment(&mut r, &probe);
            probe.insert_segment(seg).unwrap();
            plan.push(seg);
        }
        let mut b = a.clone();
        for res in b.insert_segments(&plan) {
            prop_assert!(res.is_ok());
        }
        for seg in &plan {
            a.insert_segment(*seg).unwrap();
        }
        for _ in 0..50 {
            let (u, v) = random_point(&mut r, &a);
            prop_assert!((a.evaluate(u, v).unwrap() - b.evaluate(u, v).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn tensor_equivalence_of_full_span_insertions() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let deg = (1 + seed as usize % 3, 1 + (seed as usize / 3) % 3);
        let mut s = random_tensor(&mut r, deg);
        let mut ku = s.bsplines().iter().flat_map(|b| b.knots_u.clone()).collect::<Vec<_>>();
        ku.sort_by(f64::total_cmp);
        ku.dedup();
        let mut kv = s.bsplines().iter().flat_map(|b| b.knots_v.clone()).collect::<Vec<_>>();
        kv.sort_by(f64::total_cmp);
        kv.dedup();
        let d = s.domain();
        for _ in 0..6 {
            let dir = if r.random_bool(0.5) { Direction::U } else { Direction::V };
            let vals = if dir == Direction::U { &mut ku } else { &mut kv };
            let i = r.random_range(0..vals.len() - 1);
            let x = 0.5 * (vals[i] + vals[i + 1]);
            vals.insert(i + 1, x);
            let (a, b) = if dir == Direction::U { (d.v0, d.v1) } else { (d.u0, d.u1) };
            s.insert_segment(MeshSegment::new(dir, x, a, b)).unwrap();
        }
        let open = |vals: &[f64], p: usize| {
            let mut k = vec![vals[0]; p];
            k.extend_from_slice(vals);
            k.extend(std::iter::repeat_n(*vals.last().unwrap(), p));
            k
        };
        let expected = LrSurface::tensor(&open(&ku, deg.0), &open(&kv, deg.1), deg).unwrap();
        let key = |b: &lrfit::BSpline| {
            (
                b.knots_u.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.knots_v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            )
        };
        let mut got: Vec<_> = s.bsplines().iter().map(key).collect();
        let mut want: Vec<_> = expected.bsplines().iter().map(key).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want, "seed {seed}");
        assert!(s.bsplines().iter().all(|b| (b.scale - 1.0).abs() < 1e-12));
    }
}
