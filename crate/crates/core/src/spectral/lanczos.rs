//! Lowest eigenvalue of a sparse Hamiltonian by the Lanczos recursion.
//!
//! No reorthogonalization: loss of orthogonality only produces spurious
//! copies of converged Ritz values, and the bottom of the spectrum is what
//! we need. Convergence is judged on the Ritz residual `β_k |s_k|`.

use crate::model::HamiltonianMatrix;
use crate::{Error, Result};

const CHECK_EVERY: usize = 4;

pub(crate) fn lowest(h: &HamiltonianMatrix, tol: f64) -> Result<f64> {
    let n = h.dim();
    let scale = h.max_row_norm().max(1.0);
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * (0.7 * i as f64).sin()).collect();
    normalize(&mut q);
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let max_iter = n.min(3000);

    for j in 0..max_iter {
        h.apply(&q, &mut w);
        let beta_prev = betas.last().copied().unwrap_or(0.0);
        for (wi, pi) in w.iter_mut().zip(&q_prev) {
            *wi -= beta_prev * pi;
        }
        let mut alpha = dot(&w, &q);
        axpy(-alpha, &q, &mut w);
        // one local correction pass keeps α accurate
        let again = dot(&w, &q);
        axpy(-again, &q, &mut w);
        alpha += again;
        alphas.push(alpha);
        let beta = dot(&w, &w).sqrt();

        let invariant = beta <= 1e-14 * scale;
        let final_step = j + 1 == max_iter;
        if invariant || final_step || j % CHECK_EVERY == CHECK_EVERY - 1 {
            let theta = smallest_tridiagonal(&alphas, &betas);
            let residual = beta * last_eigvec_component(&alphas, &betas, theta, scale).abs();
            if invariant || residual <= tol * theta.abs().max(1.0) {
                return Ok(theta);
            }
            if final_step {
                return Err(Error::NoConvergence { residual: residual / scale });
            }
        }
        betas.push(beta);
        std::mem::swap(&mut q_prev, &mut q);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / beta;
        }
    }
    unreachable!("loop returns on its last iteration")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Number of eigenvalues of the tridiagonal matrix below `x` (Sturm count).
fn count_below(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for (i, &a) in alphas.iter().enumerate() {
        let off = if i == 0 { 0.0 } else { betas[i - 1] * betas[i - 1] / d };
        d = a - x - off;
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(1e-300);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

pub(crate) fn smallest_tridiagonal(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { betas[i - 1].abs() } else { 0.0 } + if i + 1 < k { betas[i].abs() } else { 0.0 };
        lo = lo.min(alphas[i] - r);
        hi = hi.max(alphas[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alphas, betas, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Last component of the normalized eigenvector of `T` for eigenvalue `theta`,
/// by two steps of inverse iteration.
fn last_eigvec_component(alphas: &[f64], betas: &[f64], theta: f64, scale: f64) -> f64 {
    let k = alphas.len();
    if k == 1 {
        return 1.0;
    }
    let shift = theta - 1e-10 * scale;
    let mut s = vec![1.0; k];
    for _ in 0..2 {
        // Thomas algorithm on the (positive definite) shifted system
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        let mut denom = alphas[0] - shift;
        c[0] = betas[0] / denom;
        d[0] = s[0] / denom;
        for i in 1..k {
            denom = alphas[i] - shift - betas[i - 1] * c[i - 1];
            if denom.abs() < 1e-300 {
                denom = 1e-300;
            }
            if i + 1 < k {
                c[i] = betas[i] / denom;
            }
            d[i] = (s[i] - betas[i - 1] * d[i - 1]) / denom;
        }
        s[k - 1] = d[k - 1];
        for i in (0..k - 1).rev() {
            s[i] = d[i] - c[i] * s[i + 1];
        }
        normalize(&mut s);
    }
    s[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_bottom_of_path_laplacian() {
        // path of 6 sites: eigenvalues 2 - 2cos(jπ/7)
        let alphas = vec![2.0; 6];
        let betas = vec![-1.0; 5];
        let want = 2.0 - 2.0 * (std::f64::consts::PI / 7.0).cos();
        assert!((smallest_tridiagonal(&alphas, &betas) - want).abs() < 1e-13);
    }
}
