//! Right-preconditioned GMRES and the one-shot solve error.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum KrylovError {
    #[error("tolerance {0} outside (0, 1)")]
    Tolerance(f64),
    #[error("operator returned length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("operator failed: {0}")]
    Operator(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// True relative residual `‖f − Au‖/‖f‖` of the returned iterate.
    pub relative_residual: f64,
    /// Estimated relative residual after each iteration.
    pub history: Vec<f64>,
    pub seconds: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (v, w) in y.iter_mut().zip(x) {
        *v += alpha * w;
    }
}

/// Solves `A u = f` with full GMRES on `A·M z = f`, `u = M z`.
///
/// Orthogonalization is modified Gram–Schmidt with one reorthogonalization
/// pass whenever the new vector loses more than half its norm. The returned
/// iterate is the last one when `max_iter` is reached without convergence.
pub fn gmres<A, M, E>(
    mut apply_a: A,
    mut apply_m: M,
    f: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), KrylovError>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    M: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    E: std::fmt::Display,
{
    if !(tol > 0.0 && tol < 1.0) {
        return Err(KrylovError::Tolerance(tol));
    }
    let n = f.len();
    let start = Instant::now();
    let call = |op: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>, E>, x: &[f64]| {
        let y = op(x).map_err(|e| KrylovError::Operator(e.to_string()))?;
        if y.len() != n {
            return Err(KrylovError::Dimension { expected: n, found: y.len() });
        }
        Ok(y)
    };

    let beta = norm(f);
    if beta == 0.0 {
        let report = SolveReport {
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
            history: Vec::new(),
            seconds: start.elapsed().as_secs_f64(),
        };
        return Ok((vec![0.0; n], report));
    }

    let mut basis: Vec<Vec<f64>> = vec![f.iter().map(|v| v / beta).collect()];
    // Hessenberg columns already rotated into upper-triangular form.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut history = Vec::new();
    let mut converged = false;

    for j in 0..max_iter {
        let z = call(&mut apply_m, &basis[j])?;
        let mut w = call(&mut apply_a, &z)?;
        let mut h = vec![0.0; j + 2];
        let before = norm(&w);
        for (i, q) in basis.iter().enumerate() {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
            h[i] = c;
        }
        if norm(&w) < 0.5 * before {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
                h[i] += c;
            }
        }
        let hnext = norm(&w);
        h[j + 1] = hnext;

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (a, b) = (h[j], h[j + 1]);
        let r = a.hypot(b);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        h[j] = r;
        h.truncate(j + 1);
        rotations.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        r_cols.push(h);

        let est = g[j + 1].abs() / beta;
        history.push(est);
        if est <= tol || hnext == 0.0 {
            converged = est <= tol;
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }

    // Back substitution for the Krylov coefficients.
    let k = r_cols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (p, yp) in y.iter().enumerate().skip(i + 1) {
            s -= r_cols[p][i] * yp;
        }
        y[i] = s / r_cols[i][i];
    }
    let mut zsum = vec![0.0; n];
    for (q, &yi) in basis.iter().zip(&y) {
        axpy(yi, q, &mut zsum);
    }
    let u = call(&mut apply_m, &zsum)?;
    let au = call(&mut apply_a, &u)?;
    let res: Vec<f64> = f.iter().zip(&au).map(|(a, b)| a - b).collect();
    let report = SolveReport {
        iterations: k,
        converged,
        relative_residual: norm(&res) / beta,
        history,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((u, report))
}

/// A seeded standard Gaussian vector.
pub fn gaussian_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `‖(I − F⁻¹A)x‖/‖x‖` for a seeded Gaussian `x`.
pub fn solve_error<A, F, E>(mut apply_a: A, mut apply_finv: F, len: usize, seed: u64) -> Result<f64, E>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let x = gaussian_vector(len, seed);
    let y = apply_finv(&apply_a(&x)?)?;
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    Ok(norm(&diff) / norm(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn id(x: &[f64]) -> Result<Vec<f64>, Infallible> {
        Ok(x.to_vec())
    }

    #[test]
    fn identity_converges_in_one_step() {
        let f = gaussian_vector(20, 3);
        let (u, rep) = gmres(id, id, &f, 1e-12, 50).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(u.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn tridiagonal_converges_and_history_decreases() {
        let n = 40;
        let a = |x: &[f64]| -> Result<Vec<f64>, Infallible> {
            Ok((0..n)
                .map(|i| {
                    let l = if i > 0 { x[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                    2.5 * x[i] - l - r
                })
                .collect())
        };
        let f = gaussian_vector(n, 9);
        let (_, rep) = gmres(a, id, &f, 1e-10, 100).unwrap();
        assert!(rep.converged);
        assert!(rep.relative_residual <= 1e-9);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(gmres(id, id, &[1.0], 1.5, 10), Err(KrylovError::Tolerance(_))));
    }

    #[test]
    fn solve_error_is_zero_for_exact_inverse() {
        let e = solve_error(id, id, 30, 1).unwrap();
        assert_eq!(e, 0.0);
    }
}
