//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric positive definite fitting systems.

use rayon::prelude::*;

use super::FitError;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sparsity pattern (column lists per row;
    /// sorted and deduplicated here).
    pub fn with_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.position(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside sparsity pattern"));
        self.vals[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self = a * self + b * other`, with both sharing one pattern.
    pub fn combine(&mut self, a: f64, other: &CsrMatrix, b: f64) {
        assert_eq!(self.cols, other.cols, "patterns differ");
        for (x, y) in self.vals.iter_mut().zip(&other.vals) {
            *x = a * *x + b * y;
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[s..e].iter().zip(&self.vals[s..e]).map(|(&j, &v)| v * x[j]).sum();
        });
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        dot(x, &y)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| self.get(self.cols[k], i) == self.vals[k]))
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|&v| v == 0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[k]] = self.vals[k];
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||A x - b|| / ||b||`, recomputed from the final iterate.
    pub rel_residual: f64,
}

/// Solves `A x = b` in place, starting from the incoming `x`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats, FitError> {
    let n = a.dim();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats { iterations: 0, rel_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    // restart from the true residual whenever the recurrence drifts
    loop {
        a.mul_vec(x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok(SolveStats { iterations, rel_residual: rel });
        }
        if iterations >= max_iter {
            return Err(FitError::NonConvergence { iterations, rel_residual: rel });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            a.mul_vec(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) / b_norm <= 0.5 * tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let rows = (0..n).map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect()).collect();
        let mut m = CsrMatrix::with_pattern(rows);
        for i in 0..n {
            m.add(i, i, 2.0 + 1e-3);
            if i > 0 {
                m.add(i, i - 1, -1.0);
                m.add(i - 1, i, -1.0);
            }
        }
        m
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian(50);
        let truth: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; 50];
        a.mul_vec(&truth, &mut b);
        let mut x = vec![0.0; 50];
        let stats = pcg(&a, &b, &mut x, 1e-13, 1000).unwrap();
        assert!(stats.rel_residual <= 1e-13);
        for (xi, ti) in x.iter().zip(&truth) {
            assert!((xi - ti).abs() < 1e-9);
        }
        assert!(a.is_symmetric());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian(5);
        let mut x = vec![1.0; 5];
        pcg(&a, &[0.0; 5], &mut x, 1e-12, 10).unwrap();
        assert_eq!(x, vec![0.0; 5]);
    }

    #[test]
    fn reports_non_convergence() {
        let a = laplacian(200);
        let b = vec![1.0; 200];
        let mut x = vec![0.0; 200];
        assert!(matches!(pcg(&a, &b, &mut x, 1e-14, 3), Err(FitError::NonConvergence { .. })));
    }
}
