use super::{CoefficientField, GeometryError, GridSpec};
use crate::dense::DenseBlock;

/// Symmetric sparse matrix in compressed-row form, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// each off-diagonal entry must be given for both triangles.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, GeometryError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if r >= dim || c >= dim {
                return Err(GeometryError::DimensionMismatch { expected: dim, found: r.max(c) + 1 });
            }
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let m = SparseSymMatrix { dim, row_ptr, cols, vals };
        for i in 0..dim {
            for (k, v) in m.row(i) {
                if m.get(k, i) != v {
                    return Err(GeometryError::Format(format!("entry ({i},{k}) has no symmetric partner")));
                }
            }
        }
        Ok(m)
    }

    pub fn from_dense(a: &DenseBlock) -> Result<Self, GeometryError> {
        let mut t = Vec::new();
        for j in 0..a.cols() {
            for i in 0..a.rows() {
                if a.get(i, j) != 0.0 {
                    t.push((i, j, a.get(i, j)));
                }
            }
        }
        Self::from_triplets(a.rows(), &t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&k) {
            Ok(pos) => self.vals[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| self.row(i).map(|(k, v)| v * x[k]).sum()).collect()
    }

    pub fn to_dense(&self) -> DenseBlock {
        let mut d = DenseBlock::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (k, v) in self.row(i) {
                d.set(i, k, v);
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(k, v)| self.get(k, i) == v))
    }

    /// Triplets of the lower triangle, row-major.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for (k, v) in self.row(i) {
                if k <= i {
                    out.push((i, k, v));
                }
            }
        }
        out
    }
}

/// Seven-point stencil on the periodic grid.
pub fn assemble_stencil(spec: &GridSpec, field: &CoefficientField) -> Result<SparseSymMatrix, GeometryError> {
    let n = spec.n;
    let n3 = spec.num_dofs();
    if field.n != n || field.a.len() != n3 || field.b.len() != n3 {
        return Err(GeometryError::DimensionMismatch { expected: n3, found: field.a.len() });
    }
    if let Some((index, &value)) = field.a.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(GeometryError::NonPositiveCoefficient { index, value });
    }
    let inv_h2 = (n * n) as f64;
    let mut row_ptr = Vec::with_capacity(n3 + 1);
    let mut cols = Vec::with_capacity(7 * n3);
    let mut vals = Vec::with_capacity(7 * n3);
    row_ptr.push(0);
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(7);
    for i in 0..n3 {
        let p = spec.coords(i);
        entries.clear();
        let mut sum_a = 0.0;
        for d in 0..3 {
            for step in [1, n - 1] {
                let mut q = p;
                q[d] = (q[d] + step) % n;
                let k = spec.linear(q);
                let ae = field.edge(i, k);
                sum_a += ae;
                entries.push((k, -inv_h2 * ae));
            }
        }
        entries.push((i, inv_h2 * sum_a + field.b[i]));
        entries.sort_by_key(|e| e.0);
        let start = cols.len();
        for &(k, v) in &entries {
            if cols.len() > start && *cols.last().unwrap() == k {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(k);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseSymMatrix { dim: n3, row_ptr, cols, vals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_entries() {
        let spec = GridSpec::with_leaf(4, 4).unwrap();
        let a = assemble_stencil(&spec, &CoefficientField::constant(&spec)).unwrap();
        for i in 0..a.dim() {
            assert_eq!(a.row_nnz(i), 7);
            for (k, v) in a.row(i) {
                if k == i {
                    assert_eq!(v, 96.1);
                } else {
                    assert_eq!(v, -16.0);
                }
            }
        }
    }

    #[test]
    fn row_sums_and_symmetry() {
        let spec = GridSpec::new(8).unwrap();
        for f in [CoefficientField::checkerboard(&spec), CoefficientField::random_high_contrast(&spec, 3)] {
            let a = assemble_stencil(&spec, &f).unwrap();
            assert!(a.is_symmetric());
            for i in 0..a.dim() {
                let s: f64 = a.row(i).map(|(_, v)| v).sum();
                let scale: f64 = a.row(i).map(|(_, v)| v.abs()).sum();
                assert!((s - f.b[i]).abs() <= 8.0 * f64::EPSILON * scale);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_coefficient() {
        let spec = GridSpec::new(8).unwrap();
        let mut f = CoefficientField::constant(&spec);
        f.a[5] = 0.0;
        assert!(matches!(assemble_stencil(&spec, &f), Err(GeometryError::NonPositiveCoefficient { index: 5, .. })));
    }
}
