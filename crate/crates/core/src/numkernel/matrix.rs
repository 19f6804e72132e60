use std::fmt;
use std::ops::{Index, IndexMut};

use super::Cplx;
use crate::error::{contract, Error, Result};

/// Dense complex matrix, row-major.
///
/// Arithmetic helpers on this type (`matmul`, `conj_transpose`, norms) are
/// not ledger-routed; they exist for setup, oracles and verification.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Cplx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cplx::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = Cplx::new(*v, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Cplx>) -> Result<Self> {
        if rows * cols != data.len() {
            return contract(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Cplx>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return contract("ragged rows");
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Cplx] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Cplx] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Cplx] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Cplx> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies rows `0..r` and columns `0..c` into a new matrix.
    pub fn leading(&self, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |i, j| self[(i, j)])
    }

    /// Copies the sub-matrix picked out by the row and column index lists.
    pub fn gather(&self, rows: &[usize], cols: &[usize]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn conj_transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Cplx::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `||A - A^H||_inf`.
    pub fn hermitian_defect(&self) -> f64 {
        self.sub(&self.conj_transpose()).norm_inf()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn require_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    /// Exchanges rows `a` and `b`, touching only columns `0..width`.
    pub fn swap_rows(&mut self, a: usize, b: usize, width: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..lo * self.cols + width].swap_with_slice(&mut tail[..width]);
    }

    /// Exchanges columns `a` and `b`, touching only rows `0..height`.
    pub fn swap_cols(&mut self, a: usize, b: usize, height: usize) {
        if a == b {
            return;
        }
        for i in 0..height {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Symmetric permutation of the leading `m x m` block.
    pub fn swap_rows_cols(&mut self, a: usize, b: usize, m: usize) {
        self.swap_rows(a, b, m);
        self.swap_cols(a, b, m);
    }

    /// Copies the strict upper triangle of the leading `m x m` block into the
    /// strict lower one, conjugated.
    pub fn mirror_upper(&mut self, m: usize) {
        for i in 0..m {
            for j in i + 1..m {
                let v = self[(i, j)].conj();
                self[(j, i)] = v;
            }
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Cplx;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cplx {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Hermitian matrix holding only its upper triangle, packed column by
/// column: entry `(i, j)` with `i <= j` lives at `j (j + 1) / 2 + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermPacked {
    dim: usize,
    upper: Vec<Cplx>,
}

impl HermPacked {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, upper: vec![Cplx::new(0.0, 0.0); dim * (dim + 1) / 2] }
    }

    /// Packs the upper triangle of the leading `dim x dim` block of `a`.
    pub fn from_upper(a: &CMat, dim: usize) -> Self {
        let mut p = Self::zeros(dim);
        for j in 0..dim {
            for i in 0..=j {
                p.upper[Self::slot(i, j)] = a[(i, j)];
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored complex words.
    pub fn words(&self) -> usize {
        self.upper.len()
    }

    #[inline]
    pub fn slot(i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        j * (j + 1) / 2 + i
    }

    /// Entry `(i, j)` of the full Hermitian matrix.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx {
        if i <= j {
            self.upper[Self::slot(i, j)]
        } else {
            self.upper[Self::slot(j, i)].conj()
        }
    }

    /// Stored upper entry, `i <= j`.
    #[inline]
    pub fn upper(&self, i: usize, j: usize) -> Cplx {
        self.upper[Self::slot(i, j)]
    }

    #[inline]
    pub fn upper_mut(&mut self, i: usize, j: usize) -> &mut Cplx {
        &mut self.upper[Self::slot(i, j)]
    }

    /// Writes entry `(i, j)` of the full matrix, storing the conjugate when
    /// `(i, j)` falls below the diagonal.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx) {
        if i <= j {
            self.upper[Self::slot(i, j)] = v;
        } else {
            self.upper[Self::slot(j, i)] = v.conj();
        }
    }

    pub fn to_full(&self) -> CMat {
        CMat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Largest `|im|` over the diagonal.
    pub fn diag_imag_max(&self) -> f64 {
        (0..self.dim).map(|i| self.upper(i, i).im.abs()).fold(0.0, f64::max)
    }
}
