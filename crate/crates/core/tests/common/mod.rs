//! Shared helpers for the integration tests: random legal refinements and
//! independent oracles (tensor-product de Boor evaluation with Boehm knot
//! insertion, a cell-merging element count).
#![allow(dead_code)]

use lrfit::{Direction, LrSurface, MeshSegment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Open knot vector over `[lo, hi]` with `n` random interior knots.
pub fn random_open_knots(rng: &mut ChaCha8Rng, p: usize, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut interior: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    interior.retain(|&x| x > lo && x < hi);
    let mut k = vec![lo; p + 1];
    k.extend(interior);
    k.extend(std::iter::repeat_n(hi, p + 1));
    k
}

pub fn random_tensor(rng: &mut ChaCha8Rng, degrees: (usize, usize)) -> LrSurface {
    let nu = rng.random_range(1..4);
    let nv = rng.random_range(1..4);
    let ku = random_open_knots(rng, degrees.0, nu, 0.0, 1.0);
    let kv = random_open_knots(rng, degrees.1, nv, -1.0, 2.0);
    LrSurface::tensor(&ku, &kv, degrees).unwrap()
}

/// A segment halving a random knot interval of a random B-spline across its
/// support. Such a segment always splits that B-spline.
pub fn random_segment(rng: &mut ChaCha8Rng, s: &LrSurface) -> MeshSegment {
    let bs = s.bsplines();
    loop {
        let b = &bs[rng.random_range(0..bs.len())];
        let dir = if rng.random_bool(0.5) { Direction::U } else { Direction::V };
        let knots = b.knots(dir);
        let i = rng.random_range(0..knots.len() - 1);
        if knots[i + 1] > knots[i] {
            let (a, e) = b.extent(dir.other());
            return MeshSegment::new(dir, 0.5 * (knots[i] + knots[i + 1]), a, e);
        }
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, s: &LrSurface) -> (f64, f64) {
    let d = s.domain();
    (rng.random_range(d.u0..=d.u1), rng.random_range(d.v0..=d.v1))
}

pub fn random_coefficients(rng: &mut ChaCha8Rng, s: &mut LrSurface) {
    let c: Vec<f64> = (0..s.num_coefficients()).map(|_| rng.random_range(-1.0..1.0)).collect();
    s.set_coefficients(&c).unwrap();
}

/// Knot span index `k` with `t[k] <= x < t[k+1]`, clamped at the right end.
fn span(t: &[f64], p: usize, x: f64) -> usize {
    let n = t.len() - p - 1;
    if x >= t[n] {
        return n - 1;
    }
    t.partition_point(|&k| k <= x) - 1
}

/// Classical de Boor evaluation of a univariate spline.
pub fn de_boor(t: &[f64], c: &[f64], p: usize, x: f64) -> f64 {
    let k = span(t, p, x);
    let mut d: Vec<f64> = (0..=p).map(|j| c[j + k - p]).collect();
    for r in 1..=p {
        for j in (r..=p).rev() {
            let i = j + k - p;
            let a = (x - t[i]) / (t[i + p + 1 - r] - t[i]);
            d[j] = (1.0 - a) * d[j - 1] + a * d[j];
        }
    }
    d[p]
}

/// Tensor-product spline with coefficients `c[j * nu + i]`.
#[derive(Debug, Clone)]
pub struct TensorSpline {
    pub ku: Vec<f64>,
    pub kv: Vec<f64>,
    pub p: usize,
    pub q: usize,
    pub c: Vec<f64>,
}

impl TensorSpline {
    pub fn nu(&self) -> usize {
        self.ku.len() - self.p - 1
    }

    pub fn nv(&self) -> usize {
        self.kv.len() - self.q - 1
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let nu = self.nu();
        let col: Vec<f64> =
            (0..self.nv()).map(|j| de_boor(&self.ku, &self.c[j * nu..(j + 1) * nu], self.p, u)).collect();
        de_boor(&self.kv, &col, self.q, v)
    }

    /// Boehm single knot insertion in u (`dir == U`) or v.
    pub fn insert(&mut self, dir: Direction, x: f64) {
        let (nu, nv) = (self.nu(), self.nv());
        match dir {
            Direction::U => {
                let rows: Vec<Vec<f64>> =
                    (0..nv).map(|j| boehm(&self.ku, &self.c[j * nu..(j + 1) * nu], self.p, x)).collect();
                self.ku = inserted(&self.ku, x);
                self.c = rows.concat();
            }
            Direction::V => {
                let cols: Vec<Vec<f64>> = (0..nu)
                    .map(|i| {
                        let col: Vec<f64> = (0..nv).map(|j| self.c[j * nu + i]).collect();
                        boehm(&self.kv, &col, self.q, x)
                    })
                    .collect();
                self.kv = inserted(&self.kv, x);
                let nv2 = nv + 1;
                self.c = (0..nv2 * nu).map(|k| cols[k % nu][k / nu]).collect();
            }
        }
    }

    /// Knot-vector pairs of the tensor basis, in the coefficient order.
    pub fn basis(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for j in 0..self.nv() {
            for i in 0..self.nu() {
                out.push((self.ku[i..i + self.p + 2].to_vec(), self.kv[j..j + self.q + 2].to_vec()));
            }
        }
        out
    }
}

fn inserted(t: &[f64], x: f64) -> Vec<f64> {
    let mut t2 = t.to_vec();
    let pos = t.partition_point(|&k| k <= x);
    t2.insert(pos, x);
    t2
}

fn boehm(t: &[f64], c: &[f64], p: usize, x: f64) -> Vec<f64> {
    let k = span(t, p, x);
    let mut q = Vec::with_capacity(c.len() + 1);
    for i in 0..=c.len() {
        let v = if i + p <= k {
            c[i]
        } else if i > k {
            c[i - 1]
        } else {
            let a = (x - t[i]) / (t[i + p] - t[i]);
            (1.0 - a) * c[i - 1] + a * c[i]
        };
        q.push(v);
    }
    q
}

/// Counts the rectangles of the box partition drawn by `segments` by merging
/// the cells of the fine grid across every edge no segment covers. Returns
/// the component count and whether every component is a full rectangle.
pub fn sweep_element_count(segments: &[MeshSegment]) -> (usize, bool) {
    let mut us: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    for s in segments {
        match s.dir {
            Direction::U => {
                us.push(s.fixed);
                vs.extend([s.start, s.end]);
            }
            Direction::V => {
                vs.push(s.fixed);
                us.extend([s.start, s.end]);
            }
        }
    }
    for v in [&mut us, &mut vs] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let (nu, nv) = (us.len() - 1, vs.len() - 1);
    let covered = |dir: Direction, fixed: f64, a: f64, b: f64| {
        segments.iter().any(|s| s.dir == dir && s.fixed == fixed && s.start <= a && s.end >= b)
    };
    let mut parent: Vec<usize> = (0..nu * nv).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..nv {
        for i in 0..nu {
            if i + 1 < nu && !covered(Direction::U, us[i + 1], vs[j], vs[j + 1]) {
                let (a, b) = (find(&mut parent, j * nu + i), find(&mut parent, j * nu + i + 1));
                parent[a] = b;
            }
            if j + 1 < nv && !covered(Direction::V, vs[j + 1], us[i], us[i + 1]) {
                let (a, b) = (find(&mut parent, j * nu + i), find(&mut parent, (j + 1) * nu + i));
                parent[a] = b;
            }
        }
    }
    let mut boxes: std::collections::HashMap<usize, (usize, usize, usize, usize, usize)> = Default::default();
    for j in 0..nv {
        for i in 0..nu {
            let r = find(&mut parent, j * nu + i);
            let e = boxes.entry(r).or_insert((i, i, j, j, 0));
            e.0 = e.0.min(i);
            e.1 = e.1.max(i);
            e.2 = e.2.min(j);
            e.3 = e.3.max(j);
            e.4 += 1;
        }
    }
    let rectangular = boxes.values().all(|&(i0, i1, j0, j1, n)| (i1 - i0 + 1) * (j1 - j0 + 1) == n);
    (boxes.len(), rectangular)
}
