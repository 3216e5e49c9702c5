//! Unit lower triangular application, tiled so that a block-cyclic solver
//! can reproduce the same operation order.

use super::block::{DenseBlock, MatRef};
use super::gemm::{gemm, Trans};
use super::{DenseError, TILE};

/// Forward substitution with a unit lower tile.
pub fn tile_lower_solve(l: MatRef<'_>, x: &mut [f64]) {
    let b = l.rows;
    for p in 0..b {
        let xp = x[p];
        for i in (p + 1)..b {
            x[i] -= l.at(i, p) * xp;
        }
    }
}

/// Back substitution with the transpose of a unit lower tile.
pub fn tile_lower_transpose_solve(l: MatRef<'_>, x: &mut [f64]) {
    let b = l.rows;
    for c in (0..b).rev() {
        let xc = x[c];
        for i in 0..c {
            x[i] -= l.at(c, i) * xc;
        }
    }
}

/// `A·x`, each element accumulated in increasing column order (the same
/// order [`gemm`] uses).
pub fn tile_gemv(a: MatRef<'_>, x: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; a.rows];
    for (p, &xp) in x.iter().enumerate().take(a.cols) {
        let col = &a.data[p * a.ld..p * a.ld + a.rows];
        for (s, &v) in acc.iter_mut().zip(col) {
            *s += v * xp;
        }
    }
    acc
}

/// `Aᵀ·x`, each element accumulated in increasing row order.
pub fn tile_gemv_t(a: MatRef<'_>, x: &[f64]) -> Vec<f64> {
    (0..a.cols)
        .map(|j| {
            let col = &a.data[j * a.ld..j * a.ld + a.rows];
            let mut s = 0.0;
            for (&v, &xi) in col.iter().zip(x) {
                s += v * xi;
            }
            s
        })
        .collect()
}

/// `y -= A·x`.
pub fn tile_gemv_sub(a: MatRef<'_>, x: &[f64], y: &mut [f64]) {
    for (yi, s) in y.iter_mut().zip(tile_gemv(a, x)) {
        *yi -= s;
    }
}

/// `y -= Aᵀ·x`.
pub fn tile_gemv_t_sub(a: MatRef<'_>, x: &[f64], y: &mut [f64]) {
    for (yi, s) in y.iter_mut().zip(tile_gemv_t(a, x)) {
        *yi -= s;
    }
}

/// `x ← L⁻¹x`.
pub fn apply_unit_lower_inverse(l: &DenseBlock, x: &mut [f64]) {
    let n = l.rows();
    assert_eq!(x.len(), n);
    let lv = l.view();
    for k0 in (0..n).step_by(TILE) {
        let bk = TILE.min(n - k0);
        tile_lower_solve(lv.sub(k0, k0, bk, bk), &mut x[k0..k0 + bk]);
        let r0 = k0 + bk;
        if r0 < n {
            let (head, tail) = x.split_at_mut(r0);
            tile_gemv_sub(lv.sub(r0, k0, n - r0, bk), &head[k0..], tail);
        }
    }
}

/// `x ← L⁻ᵀx`.
pub fn apply_unit_lower_inverse_transpose(l: &DenseBlock, x: &mut [f64]) {
    let n = l.rows();
    assert_eq!(x.len(), n);
    let lv = l.view();
    let nt = n.div_ceil(TILE);
    for kt in (0..nt).rev() {
        let k0 = kt * TILE;
        let bk = TILE.min(n - k0);
        tile_lower_transpose_solve(lv.sub(k0, k0, bk, bk), &mut x[k0..k0 + bk]);
        if k0 > 0 {
            let (head, tail) = x.split_at_mut(k0);
            tile_gemv_t_sub(lv.sub(k0, 0, bk, k0), &tail[..bk], head);
        }
    }
}

/// `x ← L·x`.
pub fn apply_unit_lower(l: &DenseBlock, x: &mut [f64]) {
    let n = l.rows();
    assert_eq!(x.len(), n);
    for i in (0..n).rev() {
        let mut s = 0.0;
        for p in 0..i {
            s += l.get(i, p) * x[p];
        }
        x[i] += s;
    }
}

/// `x ← Lᵀ·x`.
pub fn apply_unit_lower_transpose(l: &DenseBlock, x: &mut [f64]) {
    let n = l.rows();
    assert_eq!(x.len(), n);
    for j in 0..n {
        let col = l.col(j);
        let mut s = 0.0;
        for i in (j + 1)..n {
            s += col[i] * x[i];
        }
        x[j] += s;
    }
}

/// `x ← D⁻¹x`.
pub fn solve_diagonal(d: &[f64], x: &mut [f64]) -> Result<(), DenseError> {
    assert_eq!(d.len(), x.len());
    for (i, (xi, &di)) in x.iter_mut().zip(d).enumerate() {
        if di == 0.0 {
            return Err(DenseError::ZeroDiagonal(i));
        }
        *xi /= di;
    }
    Ok(())
}

/// `X ← D⁻¹X` for a multi-column right-hand side.
pub fn solve_diagonal_mat(d: &[f64], x: &mut DenseBlock) -> Result<(), DenseError> {
    assert_eq!(d.len(), x.rows());
    if let Some(i) = d.iter().position(|&v| v == 0.0) {
        return Err(DenseError::ZeroDiagonal(i));
    }
    for j in 0..x.cols() {
        for (v, &di) in x.col_mut(j).iter_mut().zip(d) {
            *v /= di;
        }
    }
    Ok(())
}

/// `X ← L⁻¹X` for a multi-column right-hand side.
pub fn apply_unit_lower_inverse_mat(l: &DenseBlock, x: &mut DenseBlock) {
    let n = l.rows();
    assert_eq!(x.rows(), n);
    let nc = x.cols();
    let lv = l.view();
    for k0 in (0..n).step_by(TILE) {
        let bk = TILE.min(n - k0);
        let ltile = lv.sub(k0, k0, bk, bk);
        for j in 0..nc {
            tile_lower_solve(ltile, &mut x.col_mut(j)[k0..k0 + bk]);
        }
        let r0 = k0 + bk;
        if r0 < n {
            let xk = DenseBlock::from_fn(bk, nc, |i, j| x.get(k0 + i, j));
            let mut xv = x.view_mut();
            let mut below = xv.sub_mut(r0, 0, n - r0, nc);
            gemm(-1.0, lv.sub(r0, k0, n - r0, bk), Trans::No, xk.view(), Trans::No, &mut below);
        }
    }
}

/// `X ← L⁻ᵀX` for a multi-column right-hand side.
pub fn apply_unit_lower_inverse_transpose_mat(l: &DenseBlock, x: &mut DenseBlock) {
    let n = l.rows();
    assert_eq!(x.rows(), n);
    let nc = x.cols();
    let lv = l.view();
    let nt = n.div_ceil(TILE);
    for kt in (0..nt).rev() {
        let k0 = kt * TILE;
        let bk = TILE.min(n - k0);
        let ltile = lv.sub(k0, k0, bk, bk);
        for j in 0..nc {
            tile_lower_transpose_solve(ltile, &mut x.col_mut(j)[k0..k0 + bk]);
        }
        if k0 > 0 {
            let xk = DenseBlock::from_fn(bk, nc, |i, j| x.get(k0 + i, j));
            let mut xv = x.view_mut();
            let mut above = xv.sub_mut(0, 0, k0, nc);
            gemm(-1.0, lv.sub(k0, 0, bk, k0), Trans::Yes, xk.view(), Trans::No, &mut above);
        }
    }
}
