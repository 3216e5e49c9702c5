use super::block::DenseBlock;
use super::gemm::{gemm, Trans};

const PANEL: usize = 32;

/// Column interpolative decomposition `M(:, redundant) ≈ M(:, skeleton) · t`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IdResult {
    /// Skeleton column positions, ascending.
    pub skeleton: Vec<usize>,
    /// Redundant column positions, ascending.
    pub redundant: Vec<usize>,
    /// `|skeleton| × |redundant|` interpolation matrix.
    pub t: DenseBlock,
}

impl IdResult {
    fn all_skeleton(cols: usize) -> Self {
        IdResult { skeleton: (0..cols).collect(), redundant: Vec::new(), t: DenseBlock::zeros(cols, 0) }
    }

    /// `‖M(:, redundant) − M(:, skeleton)·t‖_F`.
    pub fn residual(&self, m: &DenseBlock) -> f64 {
        let approx = m.select_cols(&self.skeleton).matmul(&self.t);
        m.select_cols(&self.redundant).sub(&approx).frobenius_norm()
    }
}

/// Computes an ID by column-pivoted Householder QR.
///
/// Pivoting picks the largest remaining column norm, lowest index on ties.
/// The rank is the smallest `k` whose trailing block satisfies
/// `‖R22‖_F ≤ eps·‖M‖_F`, which makes the Frobenius bound hold by construction.
/// `eps == 0` keeps every column.
pub fn interpolative_decomposition(m: &DenseBlock, eps: f64) -> IdResult {
    let cols = m.cols();
    if eps <= 0.0 || cols == 0 {
        return IdResult::all_skeleton(cols);
    }
    let work = if m.rows() > 2 * cols { householder_r(m) } else { m.clone() };
    pivoted_id(work, eps)
}

fn pivoted_id(mut w: DenseBlock, eps: f64) -> IdResult {
    let (rows, cols) = (w.rows(), w.cols());
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols).map(|j| sq_norm(w.col(j))).collect();
    let mut saved = norms.clone();
    let total: f64 = norms.iter().sum();
    let budget = eps * eps * total;

    let steps = rows.min(cols);
    let mut rank = steps;
    for k in 0..steps {
        let tail: f64 = norms[k..].iter().sum();
        if tail <= budget {
            let exact: f64 = (k..cols).map(|j| sq_norm(&w.col(j)[k..])).sum();
            if exact <= budget {
                rank = k;
                break;
            }
            for j in k..cols {
                norms[j] = sq_norm(&w.col(j)[k..]);
                saved[j] = norms[j];
            }
        }
        let mut best = k;
        for j in (k + 1)..cols {
            if norms[j] > norms[best] || (norms[j] == norms[best] && perm[j] < perm[best]) {
                best = j;
            }
        }
        if best != k {
            swap_cols(&mut w, k, best);
            perm.swap(k, best);
            norms.swap(k, best);
            saved.swap(k, best);
        }
        let (v, tau, beta) = householder(&w.col(k)[k..]);
        {
            let col = w.col_mut(k);
            col[k] = beta;
            col[k + 1..].fill(0.0);
        }
        for j in (k + 1)..cols {
            let col = &mut w.col_mut(j)[k..];
            reflect(&v, tau, col);
            let r = col[0];
            norms[j] -= r * r;
            if norms[j] <= 1e-6 * saved[j] {
                norms[j] = sq_norm(&col[1..]);
                saved[j] = norms[j];
            }
        }
    }

    // T = R11⁻¹ R12 by back substitution.
    let nred = cols - rank;
    let mut t = DenseBlock::from_fn(rank, nred, |i, j| w.get(i, rank + j));
    for j in 0..nred {
        let col = t.col_mut(j);
        for i in (0..rank).rev() {
            let mut s = col[i];
            for p in (i + 1)..rank {
                s -= w.get(i, p) * col[p];
            }
            col[i] = s / w.get(i, i);
        }
    }

    let mut sk_order: Vec<usize> = (0..rank).collect();
    sk_order.sort_by_key(|&i| perm[i]);
    let mut rd_order: Vec<usize> = (0..nred).collect();
    rd_order.sort_by_key(|&j| perm[rank + j]);
    IdResult {
        skeleton: sk_order.iter().map(|&i| perm[i]).collect(),
        redundant: rd_order.iter().map(|&j| perm[rank + j]).collect(),
        t: t.select(&sk_order, &rd_order),
    }
}

/// Upper triangular `R` (`min(rows, cols) × cols`) of an unpivoted QR, via
/// blocked Householder reflections with compact-WY trailing updates.
pub fn householder_r(m: &DenseBlock) -> DenseBlock {
    let (rows, cols) = (m.rows(), m.cols());
    let steps = rows.min(cols);
    let mut a = m.clone();
    for j0 in (0..steps).step_by(PANEL) {
        let jb = PANEL.min(steps - j0);
        let h = rows - j0;
        let mut v = DenseBlock::zeros(h, jb);
        let mut taus = vec![0.0; jb];
        for jj in 0..jb {
            let j = j0 + jj;
            let (vec, tau, beta) = householder(&a.col(j)[j..]);
            {
                let col = a.col_mut(j);
                col[j] = beta;
                col[j + 1..].fill(0.0);
            }
            for c in (j + 1)..(j0 + jb) {
                reflect(&vec, tau, &mut a.col_mut(c)[j..]);
            }
            v.col_mut(jj)[jj..].copy_from_slice(&vec);
            taus[jj] = tau;
        }
        let c0 = j0 + jb;
        if c0 >= cols {
            continue;
        }
        // Block reflector I − V·T·Vᵀ with T upper triangular.
        let mut t = DenseBlock::zeros(jb, jb);
        for i in 0..jb {
            t.set(i, i, taus[i]);
            if i == 0 {
                continue;
            }
            let mut s = vec![0.0; i];
            for (p, sp) in s.iter_mut().enumerate() {
                *sp = v.col(p).iter().zip(v.col(i)).map(|(x, y)| x * y).sum();
            }
            for r in 0..i {
                let mut acc = 0.0;
                for p in r..i {
                    acc += t.get(r, p) * s[p];
                }
                t.set(r, i, -taus[i] * acc);
            }
        }
        let nc = cols - c0;
        let mut wmat = DenseBlock::zeros(jb, nc);
        {
            let av = a.view().sub(j0, c0, h, nc);
            gemm(1.0, v.view(), Trans::Yes, av, Trans::No, &mut wmat.view_mut());
        }
        let tw = t.matmul_t(Trans::Yes, &wmat, Trans::No);
        let mut avm = a.view_mut();
        let mut trailing = avm.sub_mut(j0, c0, h, nc);
        gemm(-1.0, v.view(), Trans::No, tw.view(), Trans::No, &mut trailing);
    }
    DenseBlock::from_fn(steps, cols, |i, j| if i <= j { a.get(i, j) } else { 0.0 })
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn swap_cols(w: &mut DenseBlock, a: usize, b: usize) {
    let rows = w.rows();
    let data = w.as_mut_slice();
    for i in 0..rows {
        data.swap(a * rows + i, b * rows + i);
    }
}

/// Reflector `H = I − tau·v·vᵀ` with `v[0] = 1` mapping `x` to `beta·e1`.
fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let alpha = x[0];
    let tail = sq_norm(&x[1..]);
    let mut v = x.to_vec();
    v[0] = 1.0;
    if tail == 0.0 {
        v[1..].fill(0.0);
        return (v, 0.0, alpha);
    }
    let norm = (alpha * alpha + tail).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let scale = 1.0 / (alpha - beta);
    v[1..].iter_mut().for_each(|e| *e *= scale);
    (v, (beta - alpha) / beta, beta)
}

fn reflect(v: &[f64], tau: f64, x: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = tau * w;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_columns() {
        let m = DenseBlock::from_rows(&[&[1.0, 1.0], &[2.0, 2.0], &[-1.0, -1.0]]);
        let id = interpolative_decomposition(&m, 1e-8);
        assert_eq!(id.skeleton, vec![0]);
        assert_eq!(id.redundant, vec![1]);
        assert!((id.t.get(0, 0) - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn scaled_column_pivots_first() {
        let v = [0.3, -1.2, 0.7, 2.0];
        let m = DenseBlock::from_fn(4, 2, |i, j| v[i] * (j + 1) as f64);
        let id = interpolative_decomposition(&m, 1e-8);
        assert_eq!(id.skeleton, vec![1]);
        assert!((id.t.get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_mode_keeps_everything() {
        let m = DenseBlock::from_fn(3, 5, |i, j| (i * j) as f64);
        let id = interpolative_decomposition(&m, 0.0);
        assert_eq!(id.skeleton, (0..5).collect::<Vec<_>>());
        assert!(id.redundant.is_empty());
    }

    #[test]
    fn zero_matrix_is_fully_redundant() {
        let id = interpolative_decomposition(&DenseBlock::zeros(4, 3), 1e-3);
        assert!(id.skeleton.is_empty());
        assert_eq!(id.redundant, vec![0, 1, 2]);
    }

    #[test]
    fn blocked_r_matches_column_norms() {
        let m = DenseBlock::from_fn(200, 45, |i, j| ((i * 31 + j * 17) % 23) as f64 - 11.0 + (i as f64).sin());
        let r = householder_r(&m);
        // RᵀR = MᵀM.
        let lhs = r.matmul_t(Trans::Yes, &r, Trans::No);
        let rhs = m.matmul_t(Trans::Yes, &m, Trans::No);
        assert!(lhs.sub(&rhs).max_abs() < 1e-9 * rhs.max_abs());
    }
}
