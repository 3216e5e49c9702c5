//! Application of `F⁻¹ = G₁⋯G_K·D⁻¹·G_Kᵀ⋯G₁ᵀ` and of `F`, where the `G_k`
//! are the stored eliminations in factorization order.

use super::factor::{ElimFactor, HifFactorization, SkelFactor};
use super::HifError;
use crate::dense::{
    apply_unit_lower, apply_unit_lower_inverse, apply_unit_lower_inverse_transpose,
    apply_unit_lower_transpose,
};

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

fn scatter(x: &mut [f64], idx: &[usize], v: &[f64]) {
    for (&i, &val) in idx.iter().zip(v) {
        x[i] = val;
    }
}

/// One stored congruence step, applied to gathered local values.
pub trait Step {
    /// `x ← Gᵀx`.
    fn transpose(&self, x: &mut [f64]);
    /// `x ← Gx`.
    fn forward(&self, x: &mut [f64]);
    /// `x ← G⁻¹x`.
    fn inverse(&self, x: &mut [f64]);
    /// `x ← G⁻ᵀx`.
    fn inverse_transpose(&self, x: &mut [f64]);
    /// `x ← D⁻¹x` on the eliminated points, or `x ← Dx` when `inverse` is false.
    fn diagonal(&self, x: &mut [f64], inverse: bool);
}

impl ElimFactor {
    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (gather(x, &self.interior), gather(x, &self.face))
    }

    fn put(&self, x: &mut [f64], a: &[f64], b: &[f64]) {
        scatter(x, &self.interior, a);
        scatter(x, &self.face, b);
    }
}

impl Step for ElimFactor {
    fn transpose(&self, x: &mut [f64]) {
        let (mut a, mut b) = self.split(x);
        self.elim.apply_st(&mut a, &mut b);
        self.put(x, &a, &b);
    }

    fn forward(&self, x: &mut [f64]) {
        let (mut a, b) = self.split(x);
        self.elim.apply_s(&mut a, &b);
        scatter(x, &self.interior, &a);
    }

    fn inverse(&self, x: &mut [f64]) {
        let (mut a, b) = self.split(x);
        self.elim.apply_s_inv(&mut a, &b);
        scatter(x, &self.interior, &a);
    }

    fn inverse_transpose(&self, x: &mut [f64]) {
        let (mut a, mut b) = self.split(x);
        self.elim.apply_s_inv_t(&mut a, &mut b);
        self.put(x, &a, &b);
    }

    fn diagonal(&self, x: &mut [f64], inverse: bool) {
        scale(x, &self.interior, &self.elim.ldlt.d, inverse);
    }
}

fn scale(x: &mut [f64], idx: &[usize], d: &[f64], inverse: bool) {
    for (&i, &di) in idx.iter().zip(d) {
        if inverse {
            x[i] /= di;
        } else {
            x[i] *= di;
        }
    }
}

impl SkelFactor {
    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (gather(x, &self.redundant), gather(x, &self.skeleton))
    }

    fn put(&self, x: &mut [f64], r: &[f64], s: &[f64]) {
        scatter(x, &self.redundant, r);
        scatter(x, &self.skeleton, s);
    }

    // Q (ordering redundant, skeleton): x_s −= T x_r.
    fn q(&self, r: &[f64], s: &mut [f64], sign: f64) {
        let t = self.t.matvec(r);
        for (v, w) in s.iter_mut().zip(t) {
            *v -= sign * w;
        }
    }

    // Qᵀ: x_r −= Tᵀ x_s.
    fn qt(&self, r: &mut [f64], s: &[f64], sign: f64) {
        for (j, v) in r.iter_mut().enumerate() {
            let w: f64 = self.t.col(j).iter().zip(s).map(|(a, b)| a * b).sum();
            *v -= sign * w;
        }
    }
}

impl Step for SkelFactor {
    fn transpose(&self, x: &mut [f64]) {
        let (mut r, mut s) = self.split(x);
        self.qt(&mut r, &s, 1.0);
        self.elim.apply_st(&mut r, &mut s);
        self.put(x, &r, &s);
    }

    fn forward(&self, x: &mut [f64]) {
        let (mut r, mut s) = self.split(x);
        self.elim.apply_s(&mut r, &s);
        self.q(&r, &mut s, 1.0);
        self.put(x, &r, &s);
    }

    fn inverse(&self, x: &mut [f64]) {
        let (mut r, mut s) = self.split(x);
        self.q(&r, &mut s, -1.0);
        self.elim.apply_s_inv(&mut r, &s);
        self.put(x, &r, &s);
    }

    fn inverse_transpose(&self, x: &mut [f64]) {
        let (mut r, mut s) = self.split(x);
        self.elim.apply_s_inv_t(&mut r, &mut s);
        self.qt(&mut r, &s, -1.0);
        self.put(x, &r, &s);
    }

    fn diagonal(&self, x: &mut [f64], inverse: bool) {
        scale(x, &self.redundant, &self.elim.ldlt.d, inverse);
    }
}

impl HifFactorization {
    fn steps(&self) -> impl DoubleEndedIterator<Item = &dyn Step> + '_ {
        self.levels.iter().flat_map(|l| {
            l.elims.iter().map(|e| e as &dyn Step).chain(l.skels.iter().map(|s| s as &dyn Step))
        })
    }

    fn check_len(&self, x: &[f64]) -> Result<(), HifError> {
        if x.len() != self.num_dofs() {
            return Err(HifError::LengthMismatch { expected: self.num_dofs(), found: x.len() });
        }
        Ok(())
    }

    /// `y = F⁻¹x`.
    pub fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>, HifError> {
        self.check_len(x)?;
        let mut y = x.to_vec();
        self.apply_wt_in_place(&mut y);
        for s in self.steps() {
            s.diagonal(&mut y, true);
        }
        let root = &self.root;
        let mut r = gather(&y, &root.dofs);
        crate::dense::solve_diagonal(&root.ldlt.d, &mut r)?;
        scatter(&mut y, &root.dofs, &r);
        self.apply_w_in_place(&mut y);
        Ok(y)
    }

    /// `y = Fx ≈ Ax`.
    pub fn apply_forward(&self, x: &[f64]) -> Result<Vec<f64>, HifError> {
        self.check_len(x)?;
        let mut y = x.to_vec();
        for s in self.steps() {
            s.inverse(&mut y);
        }
        let root = &self.root;
        let mut r = gather(&y, &root.dofs);
        apply_unit_lower_transpose(&root.ldlt.l, &mut r);
        for (v, d) in r.iter_mut().zip(&root.ldlt.d) {
            *v *= d;
        }
        apply_unit_lower(&root.ldlt.l, &mut r);
        scatter(&mut y, &root.dofs, &r);
        for s in self.steps() {
            s.diagonal(&mut y, false);
        }
        for s in self.steps().rev() {
            s.inverse_transpose(&mut y);
        }
        Ok(y)
    }

    /// `x ← G₁⋯G_K·x`, where the root contributes `L⁻ᵀ`.
    pub fn apply_w_in_place(&self, x: &mut [f64]) {
        let root = &self.root;
        let mut r = gather(x, &root.dofs);
        apply_unit_lower_inverse_transpose(&root.ldlt.l, &mut r);
        scatter(x, &root.dofs, &r);
        for s in self.steps().rev() {
            s.forward(x);
        }
    }

    /// `x ← G_Kᵀ⋯G₁ᵀ·x`.
    pub fn apply_wt_in_place(&self, x: &mut [f64]) {
        for s in self.steps() {
            s.transpose(x);
        }
        let root = &self.root;
        let mut r = gather(x, &root.dofs);
        apply_unit_lower_inverse(&root.ldlt.l, &mut r);
        scatter(x, &root.dofs, &r);
    }

    /// The block diagonal `D` of `WᵀAW ≈ D`, as a vector over all points.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![1.0; self.num_dofs()];
        for s in self.steps() {
            s.diagonal(&mut d, false);
        }
        scale(&mut d, &self.root.dofs, &self.root.ldlt.d, false);
        d
    }
}
