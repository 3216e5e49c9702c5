use std::cell::RefCell;

use super::block::{DenseBlock, MatMut, MatRef};

/// Whether an operand enters a product as stored or transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trans {
    No,
    Yes,
}

const MR: usize = 16;
const NR: usize = 6;
const KC: usize = 256;
const MC: usize = 96;
const NC: usize = 1020;

thread_local! {
    static PACK: RefCell<(Vec<f64>, Vec<f64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// `C += alpha * op(A) * op(B)`.
///
/// Each element of `C` is updated as `c += alpha * acc` once per `KC`-wide
/// chunk of the inner dimension, where `acc` starts at zero and accumulates
/// the chunk's products in increasing index order. That order is a function
/// of the inner dimension alone, so any split of `C` into sub-blocks computed
/// by separate calls produces identical bits.
pub fn gemm(alpha: f64, a: MatRef<'_>, ta: Trans, b: MatRef<'_>, tb: Trans, c: &mut MatMut<'_>) {
    let (m, k) = match ta {
        Trans::No => (a.rows, a.cols),
        Trans::Yes => (a.cols, a.rows),
    };
    let (kb, n) = match tb {
        Trans::No => (b.rows, b.cols),
        Trans::Yes => (b.cols, b.rows),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "output shape mismatch");
    if m == 0 || n == 0 || k == 0 {
        return;
    }

    PACK.with(|cell| {
        let mut bufs = cell.borrow_mut();
        let (apack, bpack) = &mut *bufs;
        let need_a = MC.div_ceil(MR) * MR * KC;
        let need_b = NC.div_ceil(NR) * NR * KC;
        if apack.len() < need_a {
            apack.resize(need_a, 0.0);
        }
        if bpack.len() < need_b {
            bpack.resize(need_b, 0.0);
        }

        for jc in (0..n).step_by(NC) {
            let nc = NC.min(n - jc);
            for pc in (0..k).step_by(KC) {
                let kc = KC.min(k - pc);
                pack_b(b, tb, pc, kc, jc, nc, bpack);
                for ic in (0..m).step_by(MC) {
                    let mc = MC.min(m - ic);
                    pack_a(a, ta, ic, mc, pc, kc, apack);
                    for jr in (0..nc).step_by(NR) {
                        let nr = NR.min(nc - jr);
                        let bp = &bpack[(jr / NR) * NR * kc..][..NR * kc];
                        for ir in (0..mc).step_by(MR) {
                            let mr = MR.min(mc - ir);
                            let ap = &apack[(ir / MR) * MR * kc..][..MR * kc];
                            let acc = kernel(kc, ap, bp);
                            for j in 0..nr {
                                let col = jc + jr + j;
                                for (i, &v) in acc[j].iter().enumerate().take(mr) {
                                    *c.at_mut(ic + ir + i, col) += alpha * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

/// `alpha·Zᵀ·W` for operands whose product is symmetric in exact arithmetic.
///
/// Only the lower triangle is computed, in column panels; the upper triangle
/// is a mirror copy, so the result is exactly symmetric.
pub fn symmetric_product(alpha: f64, z: &DenseBlock, w: &DenseBlock) -> DenseBlock {
    const PANEL: usize = 192;
    assert_eq!(z.rows(), w.rows());
    assert_eq!(z.cols(), w.cols());
    let n = z.cols();
    let k = z.rows();
    let mut c = DenseBlock::zeros(n, n);
    for j0 in (0..n).step_by(PANEL) {
        let jb = PANEL.min(n - j0);
        let zs = z.view().sub(0, j0, k, n - j0);
        let ws = w.view().sub(0, j0, k, jb);
        let mut cv = c.view_mut();
        let mut out = cv.sub_mut(j0, j0, n - j0, jb);
        gemm(alpha, zs, Trans::Yes, ws, Trans::No, &mut out);
    }
    c.symmetrize_from_lower();
    c
}

#[inline(always)]
fn kernel(kc: usize, ap: &[f64], bp: &[f64]) -> [[f64; MR]; NR] {
    let mut acc = [[0.0f64; MR]; NR];
    for (a, b) in ap.chunks_exact(MR).zip(bp.chunks_exact(NR)).take(kc) {
        for j in 0..NR {
            let bj = b[j];
            for i in 0..MR {
                acc[j][i] += a[i] * bj;
            }
        }
    }
    acc
}

fn pack_a(a: MatRef<'_>, ta: Trans, ic: usize, mc: usize, pc: usize, kc: usize, out: &mut [f64]) {
    for (panel, ir) in (0..mc).step_by(MR).enumerate() {
        let mr = MR.min(mc - ir);
        let dst = &mut out[panel * MR * kc..][..MR * kc];
        for p in 0..kc {
            let row = &mut dst[p * MR..p * MR + MR];
            for i in 0..mr {
                let (r, cidx) = (ic + ir + i, pc + p);
                row[i] = match ta {
                    Trans::No => a.at(r, cidx),
                    Trans::Yes => a.at(cidx, r),
                };
            }
            row[mr..].fill(0.0);
        }
    }
}

fn pack_b(b: MatRef<'_>, tb: Trans, pc: usize, kc: usize, jc: usize, nc: usize, out: &mut [f64]) {
    for (panel, jr) in (0..nc).step_by(NR).enumerate() {
        let nr = NR.min(nc - jr);
        let dst = &mut out[panel * NR * kc..][..NR * kc];
        for p in 0..kc {
            let row = &mut dst[p * NR..p * NR + NR];
            for j in 0..nr {
                let (r, cidx) = (pc + p, jc + jr + j);
                row[j] = match tb {
                    Trans::No => b.at(r, cidx),
                    Trans::Yes => b.at(cidx, r),
                };
            }
            row[nr..].fill(0.0);
        }
    }
}
