use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Seed of the Lanczos start vector; fixed so that reports are reproducible.
pub const DEFAULT_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    /// Largest Ritz value, a lower bound for the largest eigenvalue.
    pub value: f64,
    pub iterations: usize,
    /// `‖G y - θ y‖` for the Ritz pair `(θ, y)`.
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a Hermitian operator of size `n` given by `apply`.
///
/// Stops when the Ritz residual is below `tol · θ`, when the Krylov space
/// becomes invariant, or when the predicted remaining gap is below `tol · θ`.
/// The prediction assumes the `O(m⁻²)` convergence of the top Ritz value that
/// Toeplitz sections with a smooth symbol show, where eigenvalues cluster at
/// the top of the spectrum and the residual stays large: after `m` steps the
/// gap is about `(θ_m - θ_{m/2}) / 3`.
pub(crate) fn largest_eigenvalue(
    n: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
) -> Result<NormEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let steps = max_iter.min(n).max(1);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut theta = 0.0;
    let mut history: Vec<f64> = Vec::with_capacity(steps);

    for m in 0..steps {
        let mut w = apply(&v);
        let a = dot(&v, &w).re;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= a * vi;
        }
        if let (Some(prev), Some(b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= *b * pi;
            }
        }
        basis.push(v);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= h * qi;
                }
            }
        }
        let b = norm(&w);

        let (t, last) = top_ritz(&alpha, &beta);
        theta = t;
        history.push(theta);
        let residual = b * last.abs();
        let scale = theta.abs().max(f64::MIN_POSITIVE);
        let predicted = if m >= 16 {
            (theta - history[m / 2]).max(0.0) / 3.0
        } else {
            f64::INFINITY
        };
        let invariant = b <= 1e-14 * scale.max(alpha.iter().fold(0.0f64, |x, y| x.max(y.abs())));
        if residual <= tol * scale || predicted <= tol * scale || invariant || m + 1 == n {
            return Ok(NormEstimate {
                value: theta,
                iterations: m + 1,
                residual,
            });
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    Err(Error::NormNotConverged {
        iterations: steps,
        last: theta,
    })
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, with the last component of its unit
/// eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    if m == 1 {
        return (alpha[0], 1.0);
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // bisection on the Sturm count: number of eigenvalues below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..m {
            let off = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - off / d;
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = hi;
    (theta, last_component(alpha, beta, theta))
}

/// Last entry of the normalized eigenvector for `theta`, by three steps of
/// inverse iteration on the tridiagonal system.
fn last_component(alpha: &[f64], beta: &[f64], theta: f64) -> f64 {
    let m = alpha.len();
    let shift = theta + (theta.abs() + 1.0) * 1e-13;
    let mut y = vec![1.0; m];
    for _ in 0..3 {
        // Thomas algorithm on (T - shift I) x = y
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut piv = alpha[0] - shift;
        if piv == 0.0 {
            piv = 1e-300;
        }
        if m > 1 {
            c[0] = beta[0] / piv;
        }
        d[0] = y[0] / piv;
        for i in 1..m {
            piv = alpha[i] - shift - beta[i - 1] * c[i - 1];
            if piv == 0.0 {
                piv = 1e-300;
            }
            if i + 1 < m {
                c[i] = beta[i] / piv;
            }
            d[i] = (y[i] - beta[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..m - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        let s = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(s.is_finite() && s > 0.0) {
            break;
        }
        y = d.into_iter().map(|x| x / s).collect();
    }
    y[m - 1]
}
