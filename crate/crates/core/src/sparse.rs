//! Compressed-row sparse matrices and Jacobi-preconditioned Krylov solvers.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }
}

/// Row-by-row assembly. Entries pushed for the current row may repeat a column;
/// duplicates are summed when the row is closed.
#[derive(Debug)]
pub struct RowBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pending: Vec<(usize, f64)>,
}

impl RowBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
            pending: Vec::with_capacity(32),
        }
    }

    #[inline]
    pub fn add(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.n);
        self.pending.push((col, val));
    }

    pub fn finish_row(&mut self) {
        self.pending.sort_by_key(|&(c, _)| c);
        let mut last = usize::MAX;
        for &(c, v) in &self.pending {
            if c == last {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = c;
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.n + 1, "not every row was closed");
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    /// Target `||b - A x|| / ||b||`.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 1000,
            restart: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Solves `A x = b` starting from the guess in `x`: BiCGSTAB first, restarted GMRES if it stalls.
pub fn solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> Result<SolveStats> {
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let first = bicgstab(a, b, x, &inv_diag, bnorm, cfg);
    if first.rel_residual <= cfg.rel_tol {
        return Ok(first);
    }
    let second = gmres(a, b, x, &inv_diag, bnorm, cfg);
    let stats = SolveStats {
        iterations: first.iterations + second.iterations,
        rel_residual: second.rel_residual,
    };
    if stats.rel_residual <= cfg.rel_tol {
        Ok(stats)
    } else {
        Err(Error::LinearSolver {
            iterations: stats.iterations,
            residual: stats.rel_residual,
        })
    }
}

/// Right-preconditioned BiCGSTAB; always returns the true relative residual of `x`.
fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    inv_diag: &[f64],
    bnorm: f64,
    cfg: &KrylovConfig,
) -> SolveStats {
    let n = a.n();
    let mut r = vec![0.0; n];
    let mut res = true_residual(a, x, b, &mut r) / bnorm;
    if res <= cfg.rel_tol {
        return SolveStats {
            iterations: 0,
            rel_residual: res,
        };
    }
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let (mut rho_old, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut it = 0;
    while it < cfg.max_iter {
        it += 1;
        let rho = dot(&r_hat, &r);
        if rho == 0.0 || !rho.is_finite() {
            break;
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        a.mul_vec_into(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= cfg.rel_tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            res = true_residual(a, x, b, &mut r) / bnorm;
            if res <= cfg.rel_tol {
                return SolveStats {
                    iterations: it,
                    rel_residual: res,
                };
            }
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|v| *v = 0.0);
            v.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho_old = rho;
        if norm(&r) / bnorm <= cfg.rel_tol {
            res = true_residual(a, x, b, &mut r) / bnorm;
            if res <= cfg.rel_tol {
                return SolveStats {
                    iterations: it,
                    rel_residual: res,
                };
            }
        }
        if omega == 0.0 {
            break;
        }
    }
    res = true_residual(a, x, b, &mut r) / bnorm;
    SolveStats {
        iterations: it,
        rel_residual: res,
    }
}

/// Restarted GMRES with right Jacobi preconditioning.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    inv_diag: &[f64],
    bnorm: f64,
    cfg: &KrylovConfig,
) -> SolveStats {
    let n = a.n();
    let m = cfg.restart.max(2);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut zbuf = vec![0.0; n];
    let mut total = 0;
    let mut res = true_residual(a, x, b, &mut r) / bnorm;
    while total < cfg.max_iter && res > cfg.rel_tol {
        let beta = res * bnorm;
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < cfg.max_iter {
            total += 1;
            for i in 0..n {
                zbuf[i] = inv_diag[i] * basis[k][i];
            }
            a.mul_vec_into(&zbuf, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for j in 0..k {
                let tmp = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = tmp;
            }
            let denom = (hess[k][k].powi(2) + hess[k + 1][k].powi(2)).sqrt();
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if g[k].abs() / bnorm <= 0.1 * cfg.rel_tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut coef = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[i][j] * coef[j];
            }
            coef[i] = s / hess[i][i];
        }
        for (j, c) in coef.iter().enumerate() {
            for i in 0..n {
                x[i] += c * inv_diag[i] * basis[j][i];
            }
        }
        res = true_residual(a, x, b, &mut r) / bnorm;
        if k == 0 {
            break;
        }
    }
    SolveStats {
        iterations: total,
        rel_residual: res,
    }
}
