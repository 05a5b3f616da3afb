//! Checkerboard copulas.
//!
//! A checkerboard copula of resolution `n` spreads mass uniformly over each
//! cell of the uniform `n × n` grid. It is stored as the doubly stochastic
//! matrix `A` with `a[k][l] = n · mass(cell(k, l))`, so the Markov product of
//! two checkerboards is the checkerboard of the matrix product.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{CopulaError, Result};

/// Tolerance for row and column sums of user-supplied matrices.
pub const DOUBLY_STOCHASTIC_TOL: f64 = 1e-9;

/// Which cell a point on a cell boundary is attributed to when evaluating a
/// piecewise-constant partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellSide {
    /// The cell to the right (right-continuous derivative).
    #[default]
    Right,
    /// The cell to the left (left-hand derivative).
    Left,
}

/// Checkerboard copula backed by an `n × n` doubly stochastic matrix.
#[derive(Debug, Clone)]
pub struct GridCopula {
    matrix: DMatrix<f64>,
    /// `cum[(i, j)] = Σ_{k<i, l<j} a[k][l]`, shape `(n+1) × (n+1)`.
    cum: DMatrix<f64>,
    /// `row_cum[(k, j)] = Σ_{l<j} a[k][l]`, shape `n × (n+1)`.
    row_cum: DMatrix<f64>,
    /// `col_cum[(i, l)] = Σ_{k<i} a[k][l]`, shape `(n+1) × n`.
    col_cum: DMatrix<f64>,
}

impl PartialEq for GridCopula {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl GridCopula {
    /// Validates `matrix` as doubly stochastic (tolerance 1e-9) and builds
    /// the checkerboard. The matrix is never renormalised.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        validate_doubly_stochastic(&matrix, DOUBLY_STOCHASTIC_TOL)?;
        Ok(Self::from_matrix_unchecked(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(CopulaError::InvalidMatrix("matrix is empty".into()));
        }
        if let Some(k) = rows.iter().position(|r| r.len() != n) {
            return Err(CopulaError::InvalidMatrix(format!(
                "row {k} has {} entries, expected {n}",
                rows[k].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Sinkhorn–Knopp rescaling of a nonnegative matrix into a doubly
    /// stochastic one. Only used on explicit request.
    pub fn renormalized(matrix: DMatrix<f64>, tol: f64, max_iter: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(CopulaError::InvalidMatrix("matrix must be square".into()));
        }
        if matrix.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(CopulaError::InvalidMatrix(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let mut m = matrix;
        for _ in 0..max_iter {
            for mut row in m.row_iter_mut() {
                let s = row.sum();
                if s <= 0.0 {
                    return Err(CopulaError::InvalidMatrix("zero row".into()));
                }
                row /= s;
            }
            for mut col in m.column_iter_mut() {
                let s = col.sum();
                if s <= 0.0 {
                    return Err(CopulaError::InvalidMatrix("zero column".into()));
                }
                col /= s;
            }
            if max_margin_error(&m) <= tol {
                return Ok(Self::from_matrix_unchecked(m));
            }
        }
        Err(CopulaError::InvalidMatrix(format!(
            "Sinkhorn rescaling did not reach tolerance {tol:e} in {max_iter} iterations"
        )))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let mut row_cum = DMatrix::zeros(n, n + 1);
        let mut col_cum = DMatrix::zeros(n + 1, n);
        let mut cum = DMatrix::zeros(n + 1, n + 1);
        for k in 0..n {
            for l in 0..n {
                row_cum[(k, l + 1)] = row_cum[(k, l)] + matrix[(k, l)];
                col_cum[(k + 1, l)] = col_cum[(k, l)] + matrix[(k, l)];
            }
        }
        for i in 0..n {
            for j in 0..=n {
                cum[(i + 1, j)] = cum[(i, j)] + row_cum[(i, j)];
            }
        }
        Self {
            matrix,
            cum,
            row_cum,
            col_cum,
        }
    }

    /// Identity matrix: the checkerboard image of the upper Fréchet bound.
    pub fn identity(n: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(n, n))
    }

    /// Constant matrix `1/n`: the independence copula, exactly.
    pub fn independence(n: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_element(n, n, 1.0 / n as f64))
    }

    /// Anti-diagonal permutation: the checkerboard image of the lower bound.
    pub fn countermonotone(n: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_fn(n, n, |i, j| {
            if i + j + 1 == n {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn resolution(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Copula value at the grid corner `(i/n, j/n)`.
    pub fn corner_value(&self, i: usize, j: usize) -> f64 {
        self.cum[(i, j)] / self.resolution() as f64
    }

    /// Cumulative row sum `Σ_{l<j} a[k][l]`, i.e. `∂₁C(u, j/n)` for `u` in cell `k`.
    pub fn row_cumulative(&self, k: usize, j: usize) -> f64 {
        self.row_cum[(k, j)]
    }

    /// Cumulative column sum `Σ_{k<i} a[k][l]`, i.e. `∂₂C(i/n, v)` for `v` in cell `l`.
    pub fn column_cumulative(&self, i: usize, l: usize) -> f64 {
        self.col_cum[(i, l)]
    }

    /// Bilinear evaluation; exact because the density is constant per cell.
    pub fn value(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let n = self.resolution();
        let nf = n as f64;
        let (i, fu) = split(u, n);
        let (j, fv) = split(v, n);
        let c00 = self.cum[(i, j)];
        let c10 = self.cum[(i + 1, j)];
        let c01 = self.cum[(i, j + 1)];
        let c11 = self.cum[(i + 1, j + 1)];
        let lower = c00 + fu * (c10 - c00);
        let upper = c01 + fu * (c11 - c01);
        (lower + fv * (upper - lower)) / nf
    }

    /// Partial derivative in `component` (1 or 2). The coordinate being
    /// differentiated picks its cell according to `side`; the other one is
    /// interpolated linearly inside its cell.
    pub fn partial(&self, component: u8, u: f64, v: f64, side: CellSide) -> f64 {
        let n = self.resolution();
        match component {
            1 => {
                let k = cell_index(u, n, side);
                let (j, fv) = split(v.clamp(0.0, 1.0), n);
                let lo = self.row_cum[(k, j)];
                let hi = self.row_cum[(k, j + 1)];
                lo + fv * (hi - lo)
            }
            2 => {
                let l = cell_index(v, n, side);
                let (i, fu) = split(u.clamp(0.0, 1.0), n);
                let lo = self.col_cum[(i, l)];
                let hi = self.col_cum[(i + 1, l)];
                lo + fu * (hi - lo)
            }
            _ => panic!("component must be 1 or 2"),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_matrix_unchecked(self.matrix.transpose())
    }

    /// Reverses the row order; the checkerboard of `C⁻ * C`.
    pub fn reverse_rows(&self) -> Self {
        let n = self.resolution();
        Self::from_matrix_unchecked(DMatrix::from_fn(n, n, |i, j| self.matrix[(n - 1 - i, j)]))
    }

    /// Reverses the column order; the checkerboard of `C * C⁻`.
    pub fn reverse_columns(&self) -> Self {
        let n = self.resolution();
        Self::from_matrix_unchecked(DMatrix::from_fn(n, n, |i, j| self.matrix[(i, n - 1 - j)]))
    }

    /// The same copula written at resolution `factor · n`.
    pub fn refine(&self, factor: usize) -> Self {
        assert!(factor > 0);
        if factor == 1 {
            return self.clone();
        }
        let n = self.resolution();
        let f = factor as f64;
        Self::from_matrix_unchecked(DMatrix::from_fn(n * factor, n * factor, |i, j| {
            self.matrix[(i / factor, j / factor)] / f
        }))
    }

    /// Matrix product; both operands must share a resolution.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.resolution(), other.resolution());
        Self::from_matrix_unchecked(&self.matrix * &other.matrix)
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn margin_error(&self) -> f64 {
        max_margin_error(&self.matrix)
    }

    /// Conditional quantile: smallest `v` with `∂₁C(u, v) ≥ w`.
    pub fn conditional_quantile(&self, u: f64, w: f64) -> f64 {
        let n = self.resolution();
        let k = cell_index(u, n, CellSide::Right);
        let target = w.clamp(0.0, 1.0);
        for l in 0..n {
            let a = self.matrix[(k, l)];
            let next = self.row_cum[(k, l + 1)];
            if a > 0.0 && next >= target {
                let lo = self.row_cum[(k, l)];
                let frac = ((target - lo) / a).clamp(0.0, 1.0);
                return (l as f64 + frac) / n as f64;
            }
        }
        1.0
    }
}

fn split(x: f64, n: usize) -> (usize, f64) {
    let s = x * n as f64;
    let i = (s.floor() as usize).min(n - 1);
    (i, s - i as f64)
}

pub(crate) fn cell_index(x: f64, n: usize, side: CellSide) -> usize {
    let s = x.clamp(0.0, 1.0) * n as f64;
    match side {
        CellSide::Right => (s.floor() as usize).min(n - 1),
        CellSide::Left => (s.ceil() as usize).clamp(1, n) - 1,
    }
}

fn max_margin_error(m: &DMatrix<f64>) -> f64 {
    let rows = m.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = m.column_iter().map(|c| (c.sum() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

pub fn validate_doubly_stochastic(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(CopulaError::InvalidMatrix(format!(
            "matrix must be square and nonempty, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let x = m[(i, j)];
            if !x.is_finite() || x < 0.0 {
                return Err(CopulaError::InvalidMatrix(format!(
                    "entry ({i}, {j}) = {x} is negative or not finite"
                )));
            }
        }
    }
    for (i, r) in m.row_iter().enumerate() {
        let s = r.sum();
        if (s - 1.0).abs() > tol {
            return Err(CopulaError::InvalidMatrix(format!("row {i} sums to {s}")));
        }
    }
    for (j, c) in m.column_iter().enumerate() {
        let s = c.sum();
        if (s - 1.0).abs() > tol {
            return Err(CopulaError::InvalidMatrix(format!(
                "column {j} sums to {s}"
            )));
        }
    }
    Ok(())
}

/// Random doubly stochastic matrix: a convex combination of `n + 1` random
/// permutation matrices with random weights.
pub fn random_doubly_stochastic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let terms = n + 1;
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = DMatrix::zeros(n, n);
    let mut perm: Vec<usize> = (0..n).collect();
    for w in weights {
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] += w;
        }
    }
    m
}

/// Random checkerboard copula, see [`random_doubly_stochastic`].
pub fn random_grid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GridCopula {
    GridCopula::from_matrix_unchecked(random_doubly_stochastic(n, rng))
}
