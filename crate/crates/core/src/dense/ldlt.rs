use super::block::{DenseBlock, MatMut, MatRef};
use super::gemm::{gemm, Trans};
use super::{DenseError, TILE};

/// Pivots smaller than this fraction of the largest diagonal entry are rejected.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-14;

/// `A = L·diag(d)·Lᵀ` with `L` unit lower triangular.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LdltFactor {
    /// Unit lower triangle; the strict upper triangle is zero.
    pub l: DenseBlock,
    pub d: Vec<f64>,
}

impl LdltFactor {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Dense `L·diag(d)·Lᵀ`, for tests and oracles.
    pub fn reconstruct(&self) -> DenseBlock {
        let mut ld = self.l.clone();
        for (j, &dj) in self.d.iter().enumerate() {
            ld.col_mut(j).iter_mut().for_each(|v| *v *= dj);
        }
        ld.matmul_t(Trans::No, &self.l, Trans::Yes)
    }

    /// `x ← A⁻¹x`.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), DenseError> {
        super::apply_unit_lower_inverse(&self.l, x);
        super::solve_diagonal(&self.d, x)?;
        super::apply_unit_lower_inverse_transpose(&self.l, x);
        Ok(())
    }
}

/// Threshold used by [`ldlt`] for a matrix whose largest diagonal magnitude is `max_diag`.
pub fn pivot_threshold(max_diag: f64) -> f64 {
    PIVOT_RELATIVE_THRESHOLD * max_diag
}

/// Largest `|a_ii|`.
pub fn max_abs_diag(a: &DenseBlock) -> f64 {
    (0..a.rows().min(a.cols())).fold(0.0f64, |m, i| m.max(a.get(i, i).abs()))
}

/// Factors a symmetric matrix; only the lower triangle is read.
pub fn ldlt(a: &DenseBlock) -> Result<LdltFactor, DenseError> {
    ldlt_in_place(a.clone())
}

pub fn ldlt_in_place(a: DenseBlock) -> Result<LdltFactor, DenseError> {
    let thr = pivot_threshold(max_abs_diag(&a));
    ldlt_with_threshold(a, thr)
}

/// Tiled right-looking factorization with an explicit pivot threshold.
///
/// The per-tile steps are exposed separately ([`ldlt_diag_tile`],
/// [`ldlt_panel_tile`]) so a block-cyclic implementation can reproduce this
/// routine exactly.
pub fn ldlt_with_threshold(mut a: DenseBlock, thr: f64) -> Result<LdltFactor, DenseError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(DenseError::Shape(format!("ldlt of a {}x{} matrix", n, a.cols())));
    }
    let mut d = vec![0.0; n];
    let nt = n.div_ceil(TILE);
    for kt in 0..nt {
        let k0 = kt * TILE;
        let bk = TILE.min(n - k0);
        {
            let mut view = a.view_mut();
            let mut tile = view.sub_mut(k0, k0, bk, bk);
            ldlt_diag_tile(&mut tile, &mut d[k0..k0 + bk], k0, thr)?;
        }
        let r0 = k0 + bk;
        let rest = n - r0;
        if rest == 0 {
            continue;
        }
        let lkk = a.select(&(k0..k0 + bk).collect::<Vec<_>>(), &(k0..k0 + bk).collect::<Vec<_>>());
        let mut panel = DenseBlock::from_fn(rest, bk, |i, j| a.get(r0 + i, k0 + j));
        let z = ldlt_panel_tile(lkk.view(), &d[k0..k0 + bk], &mut panel.view_mut());
        for j in 0..bk {
            a.col_mut(k0 + j)[r0..].copy_from_slice(panel.col(j));
        }
        let mut view = a.view_mut();
        for jt in (kt + 1)..nt {
            let j0 = jt * TILE;
            let bj = TILE.min(n - j0);
            let zs = z.view().sub(j0 - r0, 0, n - j0, bk);
            let ls = panel.view().sub(j0 - r0, 0, bj, bk);
            let mut c = view.sub_mut(j0, j0, n - j0, bj);
            gemm(-1.0, zs, Trans::No, ls, Trans::Yes, &mut c);
        }
    }
    for j in 0..n {
        let col = a.col_mut(j);
        col[..j].fill(0.0);
        col[j] = 1.0;
    }
    Ok(LdltFactor { l: a, d })
}

/// Unblocked right-looking LDLᵀ of one diagonal tile, in place.
///
/// On return the strict lower triangle holds `L`, the diagonal is one and the
/// upper triangle is zero. `offset` only labels errors.
pub fn ldlt_diag_tile(t: &mut MatMut<'_>, d: &mut [f64], offset: usize, thr: f64) -> Result<(), DenseError> {
    let b = t.rows;
    for c in 0..b {
        let dc = t.at(c, c);
        if !(dc.abs() > thr) || !dc.is_finite() {
            return Err(DenseError::SmallPivot { index: offset + c, value: dc, threshold: thr });
        }
        d[c] = dc;
        for j in (c + 1)..b {
            let wj = t.at(j, c);
            for i in j..b {
                let li = t.at(i, c) / dc;
                *t.at_mut(i, j) -= li * wj;
            }
        }
        for i in (c + 1)..b {
            *t.at_mut(i, c) /= dc;
        }
    }
    for j in 0..b {
        for i in 0..j {
            *t.at_mut(i, j) = 0.0;
        }
        *t.at_mut(j, j) = 1.0;
    }
    Ok(())
}

/// Turns a panel `A_ik` below a factored diagonal tile into `L_ik` in place and
/// returns `Z = A_ik·L_kk⁻ᵀ = L_ik·D_k`, the operand of the trailing update.
pub fn ldlt_panel_tile(lkk: MatRef<'_>, d: &[f64], panel: &mut MatMut<'_>) -> DenseBlock {
    let (rows, bk) = (panel.rows, panel.cols);
    let mut z = DenseBlock::zeros(rows, bk);
    // Row r, column c: z = a - Σ_{p<c} z_p·L(c,p), subtracted in increasing p.
    for c in 0..bk {
        let mut col: Vec<f64> = (0..rows).map(|r| panel.at(r, c)).collect();
        for p in 0..c {
            let l = lkk.at(c, p);
            for (v, zp) in col.iter_mut().zip(z.col(p)) {
                *v -= zp * l;
            }
        }
        z.col_mut(c).copy_from_slice(&col);
    }
    for c in 0..bk {
        for r in 0..rows {
            *panel.at_mut(r, c) = z.get(r, c) / d[c];
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = DenseBlock::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]);
        let f = ldlt(&a).unwrap();
        assert_eq!(f.d, vec![4.0, 4.0]);
        assert_eq!(f.l, DenseBlock::from_rows(&[&[1.0, 0.0], &[0.5, 1.0]]));
    }

    #[test]
    fn identity_factor() {
        let f = ldlt(&DenseBlock::identity(40)).unwrap();
        assert_eq!(f.l, DenseBlock::identity(40));
        assert!(f.d.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn singular_reports_pivot() {
        let a = DenseBlock::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        match ldlt(&a) {
            Err(DenseError::SmallPivot { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_round_trip() {
        let n = 70;
        let a = DenseBlock::from_fn(n, n, |i, j| {
            if i == j {
                4.0 + i as f64 * 0.01
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let f = ldlt(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut y = a.matvec(&x);
        f.solve_in_place(&mut y).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}
