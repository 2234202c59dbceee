//! Small dense/sparse linear algebra helpers shared by the operators.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>`. Coupling-constraint matrices
//! are typically very sparse (two nonzeros per row for pairwise rows), so they
//! are stored in compressed-row form. Norms and extreme eigenvalues are
//! computed by power iteration against the [`LinearOperator`] trait so that
//! structured operators never need to be assembled.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrix-free linear map `R^ncols -> R^nrows`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = M x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = M^T x`
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, col) in self.column_iter().enumerate() {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for (yi, mij) in y.iter_mut().zip(col.iter()) {
                *yi += mij * xj;
            }
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        for (j, col) in self.column_iter().enumerate() {
            y[j] = col.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from row-major nested rows, dropping exact zeros.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self::from_rows(&rows, m.ncols()).expect("dense rows are rectangular")
    }

    /// Row-wise triplet builder; entries within a row are sorted by column.
    pub fn from_row_entries(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            let mut row = row.clone();
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::Shape(format!("column {c} out of range {cols}")));
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| {
                let mut row = vec![0.0; self.cols];
                for (c, v) in self.row(r) {
                    row[c] = v;
                }
                row
            })
            .collect()
    }

    /// `C^T C`, accumulated row by row.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            for a in span.clone() {
                for b in span.clone() {
                    g[(self.indices[a], self.indices[b])] += self.values[a] * self.values[b];
                }
            }
        }
        g
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.rows) {
            let span = self.indptr[r]..self.indptr[r + 1];
            *yr = self.indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate().take(self.rows) {
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k] * xr;
            }
        }
    }
}

/// `B ⊗ I_n`.
pub fn kron_identity(b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    b.kronecker(&DMatrix::<f64>::identity(n, n))
}

/// `B` such that `m = B ⊗ I_n` exactly, if there is one.
pub fn kron_identity_factor(m: &DMatrix<f64>, n: usize) -> Option<DMatrix<f64>> {
    if n == 0 || m.nrows() % n != 0 || m.ncols() % n != 0 {
        return None;
    }
    let (r, c) = (m.nrows() / n, m.ncols() / n);
    let b = DMatrix::from_fn(r, c, |i, j| m[(i * n, j * n)]);
    for (i, j) in (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))) {
        let want = if i % n == j % n { b[(i / n, j / n)] } else { 0.0 };
        if m[(i, j)] != want {
            return None;
        }
    }
    Some(b)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x * x).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fixed pseudo-random start vector. Structured matrices (Laplacians,
/// Kronecker products) often annihilate the all-ones vector, so power
/// iterations never start from it.
fn start_vector(len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7f4a_7c15_9e37_79b9);
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

/// Largest singular value of a small dense matrix, by SVD.
pub fn dense_norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest eigenvalue of a small dense symmetric matrix.
pub fn max_eigenvalue_sym(m: DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.symmetric_eigenvalues().max()
}

/// Largest singular value by power iteration on `M^T M`.
///
/// Stops once the relative change of the estimate falls below `tol`.
pub fn spectral_norm<O: LinearOperator + ?Sized>(op: &O, tol: f64, max_iter: usize) -> Result<f64> {
    let (m, n) = (op.nrows(), op.ncols());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    let mut v = start_vector(n);
    let mut w = vec![0.0; m];
    let mut u = vec![0.0; n];
    let mut sigma_old = 0.0;
    for _ in 0..max_iter {
        op.apply(&v, &mut w);
        let sigma = norm2(&w);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        op.apply_transpose(&w, &mut u);
        let unorm = norm2(&u);
        if unorm == 0.0 {
            return Ok(sigma);
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / unorm;
        }
        if (sigma - sigma_old).abs() <= tol * sigma {
            // u = M^T M v_old, so sqrt(|u|) is the sharper estimate
            return Ok(unorm.sqrt().max(sigma));
        }
        sigma_old = sigma;
    }
    Err(Error::IterationLimit {
        what: "spectral norm",
        iters: max_iter,
        residual: sigma_old,
    })
}

/// `x ↦ opᵀ op x`.
pub struct Normal<'a, O: LinearOperator + ?Sized> {
    pub op: &'a O,
}

impl<O: LinearOperator + ?Sized> LinearOperator for Normal<'_, O> {
    fn nrows(&self) -> usize {
        self.op.ncols()
    }

    fn ncols(&self) -> usize {
        self.op.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut w = vec![0.0; self.op.nrows()];
        self.op.apply(x, &mut w);
        self.op.apply_transpose(&w, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Largest,
    Smallest,
}

/// Extreme eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization.
///
/// Converges when the Ritz residual `|β_j y_j|` drops below
/// `tol·max(|θ|, 1)`. `start` seeds the Krylov space and receives the Ritz
/// vector on return, so consecutive calls on nearby operators warm-start.
/// Clustered spectra that stall power iteration are handled in a few dozen
/// steps.
pub fn lanczos_extreme<O: LinearOperator + ?Sized>(
    op: &O,
    which: Extreme,
    start: &mut Vec<f64>,
    tol: f64,
    max_steps: usize,
) -> Result<f64> {
    let n = op.ncols();
    if n == 0 {
        return Ok(0.0);
    }
    if start.len() != n || norm2(start) == 0.0 {
        *start = start_vector(n);
    }
    let nrm = norm2(start);
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|x| x / nrm).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::<f64>::new());
    let mut w = vec![0.0; n];
    let steps = max_steps.min(n).max(1);
    let mut last = (f64::NAN, f64::INFINITY);
    for j in 0..steps {
        op.apply(&basis[j], &mut w);
        alpha.push(dot(&basis[j], &w));
        // two passes of classical Gram-Schmidt keep the basis orthogonal
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = norm2(&w);
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c || c + 1 == r {
                beta[r.min(c)]
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(t);
        let idx = match which {
            Extreme::Largest => eig.eigenvalues.imax(),
            Extreme::Smallest => eig.eigenvalues.imin(),
        };
        let theta = eig.eigenvalues[idx];
        let y = eig.eigenvectors.column(idx);
        let resid = (b * y[m - 1]).abs();
        last = (theta, resid);
        let done = resid <= tol * theta.abs().max(1.0) || b <= f64::EPSILON * theta.abs().max(1.0);
        if done || j + 1 == steps {
            let mut ritz = vec![0.0; n];
            for (bv, yi) in basis.iter().zip(y.iter()) {
                ritz.iter_mut().zip(bv).for_each(|(r, v)| *r += yi * v);
            }
            *start = ritz;
            if done || steps == n {
                return Ok(theta);
            }
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Err(Error::IterationLimit {
        what: "Lanczos",
        iters: steps,
        residual: last.1,
    })
}

/// Largest singular value via Lanczos on `opᵀ op`, warm-started from `start`.
pub fn spectral_norm_lanczos<O: LinearOperator + ?Sized>(
    op: &O,
    start: &mut Vec<f64>,
    tol: f64,
    max_steps: usize,
) -> Result<f64> {
    if op.nrows() == 0 || op.ncols() == 0 {
        return Ok(0.0);
    }
    let top = lanczos_extreme(&Normal { op }, Extreme::Largest, start, tol, max_steps)?;
    Ok(top.max(0.0).sqrt())
}
