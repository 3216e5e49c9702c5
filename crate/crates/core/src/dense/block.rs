use super::gemm::{gemm, Trans};

/// Column-major dense matrix of doubles.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DenseBlock {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Borrowed column-major view with an explicit leading dimension.
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub ld: usize,
}

/// Mutable column-major view with an explicit leading dimension.
#[derive(Debug)]
pub struct MatMut<'a> {
    pub data: &'a mut [f64],
    pub rows: usize,
    pub cols: usize,
    pub ld: usize,
}

impl<'a> MatRef<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize, ld: usize) -> Self {
        debug_assert!(rows == 0 || cols == 0 || data.len() >= (cols - 1) * ld + rows);
        Self { data, rows, cols, ld }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.ld]
    }

    /// View of rows `r0..r0+nr` and columns `c0..c0+nc`.
    pub fn sub(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> MatRef<'a> {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        if nr == 0 || nc == 0 {
            return MatRef { data: &[], rows: nr, cols: nc, ld: self.ld.max(1) };
        }
        let start = r0 + c0 * self.ld;
        let end = start + (nc - 1) * self.ld + nr;
        MatRef { data: &self.data[start..end], rows: nr, cols: nc, ld: self.ld }
    }
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize, ld: usize) -> Self {
        debug_assert!(rows == 0 || cols == 0 || data.len() >= (cols - 1) * ld + rows);
        Self { data, rows, cols, ld }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.ld]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i + j * self.ld]
    }

    pub fn rb(&self) -> MatRef<'_> {
        MatRef { data: self.data, rows: self.rows, cols: self.cols, ld: self.ld }
    }

    pub fn sub_mut(&mut self, r0: usize, c0: usize, nr: usize, nc: usize) -> MatMut<'_> {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        if nr == 0 || nc == 0 {
            return MatMut { data: &mut [], rows: nr, cols: nc, ld: self.ld.max(1) };
        }
        let start = r0 + c0 * self.ld;
        let end = start + (nc - 1) * self.ld + nr;
        MatMut { data: &mut self.data[start..end], rows: nr, cols: nc, ld: self.ld }
    }
}

impl DenseBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m.data[i + i * k] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major nested slices; handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i + j * self.rows]
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn view(&self) -> MatRef<'_> {
        MatRef { data: &self.data, rows: self.rows, cols: self.cols, ld: self.rows.max(1) }
    }

    pub fn view_mut(&mut self) -> MatMut<'_> {
        let ld = self.rows.max(1);
        MatMut { data: &mut self.data, rows: self.rows, cols: self.cols, ld }
    }

    pub fn transpose(&self) -> DenseBlock {
        DenseBlock::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Gathers the submatrix with the given row and column positions.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseBlock {
        let mut out = DenseBlock::zeros(rows.len(), cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            let src = self.col(j);
            let dst = out.col_mut(jj);
            for (ii, &i) in rows.iter().enumerate() {
                dst[ii] = src[i];
            }
        }
        out
    }

    pub fn select_cols(&self, cols: &[usize]) -> DenseBlock {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        DenseBlock { rows: self.rows, cols: cols.len(), data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self + other`, elementwise.
    pub fn add(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        DenseBlock { rows: self.rows, cols: self.cols, data }
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &DenseBlock) -> DenseBlock {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        DenseBlock { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &DenseBlock) -> DenseBlock {
        self.matmul_t(Trans::No, other, Trans::No)
    }

    /// `op(self) * op(other)`.
    pub fn matmul_t(&self, ta: Trans, other: &DenseBlock, tb: Trans) -> DenseBlock {
        let m = if ta == Trans::No { self.rows } else { self.cols };
        let n = if tb == Trans::No { other.cols } else { other.rows };
        let mut out = DenseBlock::zeros(m, n);
        gemm(1.0, self.view(), ta, other.view(), tb, &mut out.view_mut());
        out
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.col(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    /// Copies the lower triangle onto the upper triangle.
    pub fn symmetrize_from_lower(&mut self) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        for j in 0..n {
            for i in (j + 1)..n {
                let v = self.data[i + j * n];
                self.data[j + i * n] = v;
            }
        }
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Stacks blocks with equal column counts on top of each other.
    pub fn vstack(blocks: &[&DenseBlock]) -> DenseBlock {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = DenseBlock::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            assert_eq!(b.cols, cols);
            for j in 0..cols {
                out.col_mut(j)[r0..r0 + b.rows].copy_from_slice(b.col(j));
            }
            r0 += b.rows;
        }
        out
    }
}
