//! Conjugate-gradient solves of `(H - E) g = b` for matrices too large to
//! factor densely.

use crate::model::HamiltonianMatrix;
use crate::{Error, Result};

/// Jacobi-preconditioned CG; requires `H - E` positive definite.
pub(crate) fn pcg_shifted(h: &HamiltonianMatrix, energy: f64, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = h.dim();
    let inv_diag: Vec<f64> = h.diagonal().iter().map(|d| 1.0 / (d - energy)).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        h.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= energy * xi;
        }
    };
    let b_norm = norm(rhs).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..(20 * n).max(100) {
        if norm(&r) <= tol * b_norm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let ratio = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + ratio * p[i];
        }
    }
    Err(Error::NoConvergence { residual: norm(&r) / b_norm })
}

/// CG on the normal equations `(H - E)^2 g = (H - E) b`, for indefinite shifts.
pub(crate) fn cgnr_shifted(h: &HamiltonianMatrix, energy: f64, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = h.dim();
    let mut tmp = vec![0.0; n];
    let apply = |x: &[f64], y: &mut [f64]| {
        h.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= energy * xi;
        }
    };
    let b_norm = norm(rhs).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec(); // residual of the original system
    let mut s = vec![0.0; n];
    apply(&r, &mut s);
    let mut p = s.clone();
    let mut q = vec![0.0; n];
    let mut ss = dot(&s, &s);
    for _ in 0..(50 * n).max(200) {
        if norm(&r) <= tol * b_norm {
            return Ok(x);
        }
        apply(&p, &mut q);
        let step = ss / dot(&q, &q);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        apply(&r, &mut tmp);
        std::mem::swap(&mut s, &mut tmp);
        let ss_next = dot(&s, &s);
        let ratio = ss_next / ss;
        ss = ss_next;
        for i in 0..n {
            p[i] = s[i] + ratio * p[i];
        }
    }
    Err(Error::NoConvergence { residual: norm(&r) / b_norm })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
