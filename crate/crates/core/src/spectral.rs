//! Perron–Frobenius data for nonnegative irreducible matrices.
//!
//! The default solver is a shifted power iteration certified by the
//! Collatz–Wielandt bounds `min_i (Mx)_i/x_i ≤ ρ ≤ max_i (Mx)_i/x_i`. The shift
//! tracks the current estimate of `ρ`, which keeps periodic matrices (where
//! `−ρ` is also an eigenvalue) from oscillating. Small matrices that do not
//! reach the tolerance fall back to a dense eigensolve.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative gap between the Collatz–Wielandt bounds accepted as converged.
pub const PERRON_TOL: f64 = 1e-14;

/// Largest matrix handed to the dense fallback.
pub const DENSE_FALLBACK_MAX: usize = 512;

const MAX_ITER: usize = 20_000;

/// Nonnegative matrix in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists. Zero values are dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                debug_assert!(c < n);
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn from_dense(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n);
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (j, entries[i * n + j])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                rows[c].push((i, v));
            }
        }
        Self::from_rows(rows)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }
}

/// How the Perron data was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerronMethod {
    PowerIteration,
    DenseEigensolve,
}

/// Perron root with strictly positive right and left eigenvectors.
///
/// `right` is normalized to max-norm 1 and `left` so that `left · right = 1`.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub root: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub method: PerronMethod,
    pub iterations: usize,
}

struct Side {
    root: f64,
    vector: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn power_side(m: &SparseMatrix) -> Side {
    let n = m.dim();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut best = Side {
        root: f64::NAN,
        vector: x.clone(),
        iterations: 0,
        converged: false,
    };
    let mut best_gap = f64::INFINITY;
    for it in 1..=MAX_ITER {
        m.mul_vec(&x, &mut y);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(hi > 0.0) || !lo.is_finite() {
            return best;
        }
        let gap = (hi - lo) / hi;
        if gap < best_gap {
            best_gap = gap;
            best.root = 0.5 * (lo + hi);
            best.vector.copy_from_slice(&x);
            best.iterations = it;
        }
        if gap <= PERRON_TOL {
            best.converged = true;
            return best;
        }
        let shift = 0.5 * (lo + hi);
        let mut norm = 0.0f64;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi + shift * *xi;
            norm = norm.max(*xi);
        }
        for xi in x.iter_mut() {
            *xi /= norm;
        }
        if x.iter().any(|&v| !(v > 0.0)) {
            return best;
        }
    }
    best
}

fn dense_side(m: &SparseMatrix) -> Result<(f64, Vec<f64>)> {
    let dense = m.to_dense();
    let eig = dense.clone().complex_eigenvalues();
    let root = eig.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let n = m.dim();
    let shifted = dense - DMatrix::identity(n, n) * root;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NotConverged("dense eigensolve"))?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut v: Vec<f64> = v_t.row(k).iter().map(|x| x.abs()).collect();
    let mx = v.iter().cloned().fold(0.0, f64::max);
    if !(mx > 0.0) {
        return Err(Error::NotConverged("dense eigensolve"));
    }
    for x in v.iter_mut() {
        *x /= mx;
    }
    Ok((root, v))
}

/// Computes the Perron data of an irreducible nonnegative matrix.
pub fn perron(m: &SparseMatrix) -> Result<PerronData> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let right = power_side(m);
    let left = power_side(&m.transpose());
    let (root, r, l, method, iterations) = if right.converged && left.converged {
        (
            right.root,
            right.vector,
            left.vector,
            PerronMethod::PowerIteration,
            right.iterations.max(left.iterations),
        )
    } else if n <= DENSE_FALLBACK_MAX {
        let (root, r) = dense_side(m)?;
        let (_, l) = dense_side(&m.transpose())?;
        (root, r, l, PerronMethod::DenseEigensolve, 0)
    } else {
        return Err(Error::NotConverged("Perron power iteration"));
    };
    if r.iter().chain(&l).any(|&v| !(v > 0.0)) {
        return Err(Error::NotConverged("Perron eigenvector positivity"));
    }
    let dot: f64 = r.iter().zip(&l).map(|(a, b)| a * b).sum();
    let left = l.into_iter().map(|v| v / dot).collect();
    Ok(PerronData {
        root,
        right: r,
        left,
        method,
        iterations,
    })
}

/// Perron root only.
pub fn spectral_radius(m: &SparseMatrix) -> Result<f64> {
    Ok(perron(m)?.root)
}

/// Spectral radius of a nonnegative matrix that may be reducible (for
/// instance a power of a periodic matrix). Uses the certified iteration when
/// it succeeds and the dense eigenvalues otherwise.
pub fn spectral_radius_nonnegative(m: &SparseMatrix) -> Result<f64> {
    match perron(m) {
        Ok(p) => Ok(p.root),
        Err(_) if m.dim() <= DENSE_FALLBACK_MAX => Ok(m
            .to_dense()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max)),
        Err(e) => Err(e),
    }
}

/// `log ρ` of the matrix with entries `exp(log_weights)`, computed after
/// factoring out the largest exponent.
pub fn log_perron_root(n: usize, log_weights: &[(usize, usize, f64)]) -> Result<f64> {
    let shift = log_weights.iter().map(|&(_, _, w)| w).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::invalid("transfer matrix has no finite weight"));
    }
    let mut rows = vec![Vec::new(); n];
    for &(i, j, w) in log_weights {
        rows[i].push((j, (w - shift).exp()));
    }
    let m = SparseMatrix::from_rows(rows);
    Ok(spectral_radius_nonnegative(&m)?.ln() + shift)
}
