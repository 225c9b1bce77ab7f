//! Dense linear algebra helpers: LU solve with partial pivoting and a
//! matrix-free power iteration. Row-major `Vec<f64>` storage throughout.

use crate::{Error, Result};

/// Solve `A x = b` for dense row-major `a` (consumed) via LU with partial
/// pivoting.
pub fn lu_solve(mut a: Vec<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < f64::MIN_POSITIVE * 16.0 {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Dominant eigenvalue (by absolute value) of the linear map `apply`, by
/// power iteration with a Euclidean Rayleigh quotient. Converges when two
/// successive estimates differ by at most `tol`. On exhaustion the last
/// iterate is reported through the error.
pub fn power_iteration(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    // Deterministic start with overlap on generic directions.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i % 17) as f64) / 37.0).collect();
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for it in 0..max_iter {
        apply(&v, &mut w);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let next = vw / vv;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if it > 0 && (next - lambda).abs() <= tol {
            return Ok(next.abs());
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: lambda.abs(),
    })
}
