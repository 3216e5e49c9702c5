//! Dense elimination and skeletonization steps, independent of how the level
//! matrix is stored. Sequential and distributed drivers both call these, so
//! identical inputs give identical factors.

use crate::dense::{
    apply_unit_lower, apply_unit_lower_inverse, apply_unit_lower_inverse_mat,
    apply_unit_lower_inverse_transpose, apply_unit_lower_transpose, interpolative_decomposition,
    ldlt_in_place, solve_diagonal_mat, symmetric_product, DenseBlock, DenseError, IdResult,
    LdltFactor, Trans,
};

/// Block elimination of a set `a` against its coupled set `b`:
/// `S = [[L⁻ᵀ, −X], [0, I]]` with `X = A_aa⁻¹·A_ab = L⁻ᵀ·D⁻¹·Z` and
/// `Z = L⁻¹·A_ab`. Only `L`, `D` and `Z` are stored.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Elimination {
    pub ldlt: LdltFactor,
    pub z: DenseBlock,
}

impl Elimination {
    pub fn dim(&self) -> usize {
        self.ldlt.dim()
    }

    /// The dense `X = A_aa⁻¹·A_ab`.
    pub fn x_matrix(&self) -> DenseBlock {
        let mut x = self.z.clone();
        for j in 0..x.cols() {
            let col = x.col_mut(j);
            for (v, &d) in col.iter_mut().zip(&self.ldlt.d) {
                *v /= d;
            }
            apply_unit_lower_inverse_transpose(&self.ldlt.l, col);
        }
        x
    }

    fn dz_times(&self, xb: &[f64]) -> Vec<f64> {
        let mut out = self.z.matvec(xb);
        for (v, &d) in out.iter_mut().zip(&self.ldlt.d) {
            *v /= d;
        }
        out
    }

    fn zt_d_times(&self, xa: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = xa.iter().zip(&self.ldlt.d).map(|(v, d)| v / d).collect();
        (0..self.z.cols())
            .map(|j| self.z.col(j).iter().zip(&scaled).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(xa, xb) ← S·(xa, xb)`.
    pub fn apply_s(&self, xa: &mut [f64], xb: &[f64]) {
        let t = self.dz_times(xb);
        for (v, s) in xa.iter_mut().zip(t) {
            *v -= s;
        }
        apply_unit_lower_inverse_transpose(&self.ldlt.l, xa);
    }

    /// `(xa, xb) ← Sᵀ·(xa, xb)`.
    pub fn apply_st(&self, xa: &mut [f64], xb: &mut [f64]) {
        let t = self.apply_st_split(xa);
        for (v, s) in xb.iter_mut().zip(t) {
            *v -= s;
        }
    }

    /// The part of [`Self::apply_st`] local to `a`: updates `xa` and returns
    /// the vector `t` with `xb ← xb − t`.
    pub fn apply_st_split(&self, xa: &mut [f64]) -> Vec<f64> {
        apply_unit_lower_inverse(&self.ldlt.l, xa);
        self.zt_d_times(xa)
    }

    /// `(xa, xb) ← S⁻¹·(xa, xb)`.
    pub fn apply_s_inv(&self, xa: &mut [f64], xb: &[f64]) {
        apply_unit_lower_transpose(&self.ldlt.l, xa);
        let t = self.dz_times(xb);
        for (v, s) in xa.iter_mut().zip(t) {
            *v += s;
        }
    }

    /// `(xa, xb) ← S⁻ᵀ·(xa, xb)`.
    pub fn apply_s_inv_t(&self, xa: &mut [f64], xb: &mut [f64]) {
        let t = self.zt_d_times(xa);
        for (v, s) in xb.iter_mut().zip(t) {
            *v += s;
        }
        apply_unit_lower(&self.ldlt.l, xa);
    }

    /// Stored entries: the lower triangle of `L`, `D`, and `Z`.
    pub fn stored_entries(&self) -> usize {
        let k = self.dim();
        k * k.saturating_sub(1) / 2 + k + self.z.rows() * self.z.cols()
    }
}

/// Eliminates `a` given `A_aa` and `A_ab`; returns the factor and the
/// symmetric update `−A_ba·A_aa⁻¹·A_ab` for the `b × b` block.
pub fn eliminate_block(a_aa: DenseBlock, a_ab: DenseBlock) -> Result<(Elimination, DenseBlock), DenseError> {
    if a_aa.rows() != a_ab.rows() {
        return Err(DenseError::Shape(format!("A_aa has {} rows, A_ab {}", a_aa.rows(), a_ab.rows())));
    }
    let ldlt = ldlt_in_place(a_aa)?;
    let mut z = a_ab;
    apply_unit_lower_inverse_mat(&ldlt.l, &mut z);
    let mut w = z.clone();
    solve_diagonal_mat(&ldlt.d, &mut w)?;
    let update = symmetric_product(-1.0, &z, &w);
    Ok((Elimination { ldlt, z }, update))
}

/// Result of compressing one face.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeletonized {
    pub id: IdResult,
    /// Present when the face has redundant points.
    pub elim: Option<Elimination>,
    /// New skeleton-skeleton block.
    pub b_hat: DenseBlock,
}

/// Skeletonizes a face from its diagonal block `A_FF` and its exterior
/// coupling `M = Ã(R, F)`.
pub fn skeletonize_block(a_ff: &DenseBlock, m: &DenseBlock, eps: f64) -> Result<Skeletonized, DenseError> {
    let id = interpolative_decomposition(m, eps);
    if id.redundant.is_empty() {
        return Ok(Skeletonized { id, elim: None, b_hat: a_ff.clone() });
    }
    let (sk, rd, t) = (&id.skeleton, &id.redundant, &id.t);
    let a_hh = a_ff.select(sk, sk);
    let a_hr = a_ff.select(sk, rd);
    let a_rr = a_ff.select(rd, rd);

    // B_rr = A_rr − TᵀA_hr − A_hrᵀT + TᵀA_hhT
    let t_a_hr = t.matmul_t(Trans::Yes, &a_hr, Trans::No);
    let a_hh_t = a_hh.matmul(t);
    let t_a_hh_t = t.matmul_t(Trans::Yes, &a_hh_t, Trans::No);
    let mut b_rr = a_rr.sub(&t_a_hr).sub(&t_a_hr.transpose()).add(&t_a_hh_t);
    b_rr.symmetrize_from_lower();
    // B_hr = A_hr − A_hh·T
    let b_hr = a_hr.sub(&a_hh_t);

    let (elim, update) = eliminate_block(b_rr, b_hr.transpose())?;
    let mut b_hat = a_hh.add(&update);
    b_hat.symmetrize_from_lower();
    Ok(Skeletonized { id, elim: Some(elim), b_hat })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DenseBlock {
        DenseBlock::from_fn(n, n, |i, j| {
            if i == j {
                3.0 + 0.1 * i as f64
            } else {
                0.5 / (1.0 + (i as f64 - j as f64).powi(2))
            }
        })
    }

    #[test]
    fn congruence_diagonalizes() {
        let a = spd(9);
        let ia: Vec<usize> = (0..4).collect();
        let ib: Vec<usize> = (4..9).collect();
        let (e, u) = eliminate_block(a.select(&ia, &ia), a.select(&ia, &ib)).unwrap();
        // Build S densely column by column and check SᵀAS.
        let mut s = DenseBlock::zeros(9, 9);
        for j in 0..9 {
            let mut x = vec![0.0; 9];
            x[j] = 1.0;
            let (xa, xb) = x.split_at_mut(4);
            e.apply_s(xa, xb);
            s.col_mut(j).copy_from_slice(&x);
        }
        let c = s.matmul_t(Trans::Yes, &a.matmul(&s), Trans::No);
        for i in 0..4 {
            assert!((c.get(i, i) - e.ldlt.d[i]).abs() < 1e-13);
            for j in 0..9 {
                if j != i {
                    assert!(c.get(i, j).abs() < 1e-13);
                }
            }
        }
        let schur = a.select(&ib, &ib).add(&u);
        for i in 0..5 {
            for j in 0..5 {
                assert!((c.get(4 + i, 4 + j) - schur.get(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_applications_round_trip() {
        let a = spd(7);
        let ia: Vec<usize> = (0..3).collect();
        let ib: Vec<usize> = (3..7).collect();
        let (e, _) = eliminate_block(a.select(&ia, &ia), a.select(&ia, &ib)).unwrap();
        let x0: Vec<f64> = (0..7).map(|i| (i as f64 + 0.5).ln()).collect();
        let mut x = x0.clone();
        {
            let (xa, xb) = x.split_at_mut(3);
            e.apply_s(xa, xb);
            e.apply_s_inv(xa, xb);
            e.apply_st(xa, xb);
            e.apply_s_inv_t(xa, xb);
        }
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-14);
        }
        let xm = e.x_matrix();
        let want = {
            let f = crate::dense::ldlt(&a.select(&ia, &ia)).unwrap();
            let mut m = a.select(&ia, &ib);
            for j in 0..m.cols() {
                f.solve_in_place(m.col_mut(j)).unwrap();
            }
            m
        };
        assert!(xm.sub(&want).max_abs() < 1e-14);
    }
}
