use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric positive definite matrix in CSR form with both triangles stored.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
    diag: Vec<f64>,
    /// For a weighted Laplacian: each row's conductance to the fixed states.
    leak: Option<Vec<f64>>,
}

impl SpdMatrix {
    /// Builds from per-row entries; every row must include its diagonal.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let (mut col, mut val) = (Vec::new(), Vec::new());
        let mut diag = vec![0.0; n];
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|e| e.0);
            for (j, v) in row {
                if j as usize == i {
                    diag[i] += v;
                }
                if col.last() == Some(&j) && row_ptr[i] < col.len() {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val, diag, leak: None }
    }

    /// Marks the matrix as a Laplacian whose diagonal is the off-diagonal sum plus `leak`,
    /// which enables cancellation-free elimination.
    pub fn with_leak(mut self, leak: Vec<f64>) -> Self {
        assert_eq!(leak.len(), self.n);
        self.leak = Some(leak);
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nonzeros(&self) -> usize {
        self.val.len()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul(x, &mut ax);
        let r = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nb == 0.0 { r } else { r / nb }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    Direct,
    ConjugateGradient,
    /// Dense elimination on conductances, free of subtraction.
    Elimination,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveInfo {
    pub method: Method,
    pub unknowns: usize,
    pub iterations: usize,
    /// Largest relative residual over the right-hand sides.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Sparse Cholesky at or below this many unknowns.
    pub direct_limit: usize,
    /// Above `direct_limit`, a CG failure falls back to Cholesky up to this size.
    pub fallback_limit: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Laplacians at or below this size are eliminated densely; a failed
    /// Cholesky falls back to elimination up to four times this size.
    pub elimination_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { direct_limit: 20_000, fallback_limit: 200_000, tol: 1e-12, max_iter: 20_000, elimination_limit: 1000 }
    }
}

/// Solves `m x = b` for each right-hand side.
pub fn solve(m: &SpdMatrix, rhs: &[Vec<f64>], opts: &SolverOptions) -> Result<(Vec<Vec<f64>>, SolveInfo)> {
    if m.n == 0 {
        return Ok((rhs.iter().map(|_| Vec::new()).collect(), info(Method::Direct, 0, 0, 0.0)));
    }
    if m.leak.is_some() && m.n <= opts.elimination_limit {
        return eliminate(m, rhs);
    }
    if m.n <= opts.direct_limit {
        return direct(m, rhs).or_else(|e| match m.leak {
            Some(_) if m.n <= 4 * opts.elimination_limit => eliminate(m, rhs),
            _ => Err(e),
        });
    }
    let mut xs = Vec::with_capacity(rhs.len());
    let (mut iters, mut worst) = (0, 0.0f64);
    for b in rhs {
        match pcg(m, b, opts.tol, opts.max_iter) {
            Some((x, it)) => {
                iters = iters.max(it);
                worst = worst.max(m.residual(&x, b));
                xs.push(x);
            }
            None if m.n <= opts.fallback_limit => return direct(m, rhs),
            None => {
                return Err(Error::Solver(format!(
                    "conjugate gradient did not reach {} in {} iterations on {} unknowns",
                    opts.tol, opts.max_iter, m.n
                )))
            }
        }
    }
    Ok((xs, info(Method::ConjugateGradient, m.n, iters, worst)))
}

fn info(method: Method, unknowns: usize, iterations: usize, residual: f64) -> SolveInfo {
    SolveInfo { method, unknowns, iterations, residual }
}

fn direct(m: &SpdMatrix, rhs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, SolveInfo)> {
    let mut trip = Vec::with_capacity(m.val.len());
    for i in 0..m.n {
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            trip.push(Triplet::new(i, m.col[k] as usize, m.val[k]));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(m.n, m.n, &trip)
        .map_err(|e| Error::Solver(format!("assembly failed: {e:?}")))?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("Cholesky failed: {e:?}")))?;
    let mut b = Mat::<f64>::zeros(m.n, rhs.len());
    for (j, col) in rhs.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            b[(i, j)] = v;
        }
    }
    llt.solve_in_place(b.as_mut());
    let xs: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..m.n).map(|i| b[(i, j)]).collect()).collect();
    let worst = xs.iter().zip(rhs).map(|(x, b)| m.residual(x, b)).fold(0.0, f64::max);
    Ok((xs, info(Method::Direct, m.n, 1, worst)))
}

/// Star-mesh reduction of a weighted Laplacian: pivots are sums of the remaining
/// conductances, so a spread of scales far beyond `1/ε` stays accurate.
fn eliminate(m: &SpdMatrix, rhs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, SolveInfo)> {
    let n = m.n;
    let mut leak = m.leak.clone().expect("elimination needs the leak vector");
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            let j = m.col[k] as usize;
            if j != i {
                w[i * n + j] = -m.val[k];
            }
        }
    }
    let mut b: Vec<Vec<f64>> = rhs.to_vec();
    let mut pivot = vec![0.0; n];
    for k in 0..n {
        let s: f64 = w[k * n + k + 1..(k + 1) * n].iter().sum::<f64>() + leak[k];
        if s.is_nan() || s <= 0.0 {
            return Err(Error::Solver(format!("elimination found a floating state at {k}")));
        }
        pivot[k] = s;
        for i in k + 1..n {
            let wik = w[i * n + k];
            if wik == 0.0 {
                continue;
            }
            let f = wik / s;
            for j in k + 1..n {
                if j != i {
                    w[i * n + j] += f * w[k * n + j];
                }
            }
            leak[i] += f * leak[k];
            for col in b.iter_mut() {
                col[i] += f * col[k];
            }
        }
    }
    for col in b.iter_mut() {
        for k in (0..n).rev() {
            let t: f64 = (k + 1..n).map(|j| w[k * n + j] * col[j]).sum();
            col[k] = (col[k] + t) / pivot[k];
        }
    }
    let worst = b.iter().zip(rhs).map(|(x, r)| m.residual(x, r)).fold(0.0, f64::max);
    Ok((b, info(Method::Elimination, n, 1, worst)))
}

/// Jacobi-preconditioned conjugate gradient; `None` without convergence.
pub fn pcg(m: &SpdMatrix, b: &[f64], tol: f64, max_iter: usize) -> Option<(Vec<f64>, usize)> {
    let n = m.n;
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Some((x, 0));
    }
    let inv: Vec<f64> = m.diag.iter().map(|&d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        m.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 || !pap.is_finite() {
            return None;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * nb {
            return Some((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SpdMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i as u32, 2.0 + i as f64 * 0.01)];
                if i > 0 {
                    r.push((i as u32 - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i as u32 + 1, -1.0));
                }
                r
            })
            .collect();
        SpdMatrix::from_rows(rows)
    }

    #[test]
    fn two_by_two_by_hand() {
        // [[2, -1], [-1, 2]] x = [1, 0] → x = [2/3, 1/3]
        let m = SpdMatrix::from_rows(vec![vec![(0, 2.0), (1, -1.0)], vec![(1, 2.0), (0, -1.0)]]);
        let (x, info) = solve(&m, &[vec![1.0, 0.0]], &SolverOptions::default()).unwrap();
        assert_eq!(info.method, Method::Direct);
        assert!((x[0][0] - 2.0 / 3.0).abs() < 1e-15 && (x[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cg_and_direct_agree() {
        let m = tridiagonal(300);
        let b: Vec<f64> = (0..300).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let (d, _) = solve(&m, std::slice::from_ref(&b), &SolverOptions::default()).unwrap();
        let opts = SolverOptions { direct_limit: 0, ..Default::default() };
        let (c, info) = solve(&m, &[b], &opts).unwrap();
        assert_eq!(info.method, Method::ConjugateGradient);
        assert!(info.residual < 1e-11);
        for (x, y) in d[0].iter().zip(&c[0]) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    /// Series chain `fixed – 0 – 1 – … – (n−1) – fixed` with the given conductances.
    fn chain(c: &[f64]) -> SpdMatrix {
        let n = c.len() - 1;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i as u32, c[i] + c[i + 1])];
                if i > 0 {
                    r.push((i as u32 - 1, -c[i]));
                }
                if i + 1 < n {
                    r.push((i as u32 + 1, -c[i + 1]));
                }
                r
            })
            .collect();
        let mut leak = vec![0.0; n];
        leak[0] += c[0];
        leak[n - 1] += c[n];
        SpdMatrix::from_rows(rows).with_leak(leak)
    }

    #[test]
    fn elimination_survives_wide_scales() {
        // unit potential on the left: x_i is the share of the resistance right of node i
        let c = [1e-30, 1e20, 1e-25, 1e18, 1.0, 1e-10];
        let m = chain(&c);
        let mut b = vec![0.0; c.len() - 1];
        b[0] = c[0];
        let (x, info) = solve(&m, &[b], &SolverOptions::default()).unwrap();
        assert_eq!(info.method, Method::Elimination);
        let r: Vec<f64> = c.iter().map(|v| 1.0 / v).collect();
        let total: f64 = r.iter().sum();
        for i in 0..x[0].len() {
            let right: f64 = r[i + 1..].iter().sum();
            assert!((x[0][i] - right / total).abs() <= 1e-14 * (right / total), "{i}");
        }
    }

    #[test]
    fn elimination_matches_cholesky() {
        let c: Vec<f64> = (0..40).map(|i| 1.0 + (i % 7) as f64).collect();
        let m = chain(&c);
        let b: Vec<f64> = (0..39).map(|i| (i % 5) as f64).collect();
        let (e, _) = solve(&m, std::slice::from_ref(&b), &SolverOptions::default()).unwrap();
        let (d, info) = solve(&m, &[b], &SolverOptions { elimination_limit: 0, ..Default::default() }).unwrap();
        assert_eq!(info.method, Method::Direct);
        for (x, y) in e[0].iter().zip(&d[0]) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let m = SpdMatrix::from_rows(vec![vec![(0, 1.0), (0, 1.0)]]);
        assert_eq!(m.nonzeros(), 1);
        let (x, _) = solve(&m, &[vec![4.0]], &SolverOptions::default()).unwrap();
        assert!((x[0][0] - 2.0).abs() < 1e-15);
    }
}
