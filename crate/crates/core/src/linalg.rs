//! Small dense symmetric-matrix helpers used by the kernel paths.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
///
/// Intended for the modest matrices that show up in Gram validation; cost is
/// O(n^3) per sweep. Returns eigenvalues sorted ascending.
pub fn sym_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(n, a.ncols()));
    }
    if n == 0 {
        return Err(Error::EmptyInput("matrix"));
    }
    let mut m = a.clone();
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Minimum eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Array2<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(a)?[0])
}

/// Check that a symmetric matrix is positive semidefinite up to `tol`,
/// i.e. its minimum eigenvalue is at least `-tol`.
///
/// Attempts a Cholesky factorization of `a + tol·I`, which is O(n^3/6) and
/// much cheaper than a full eigendecomposition for large Gram matrices.
pub fn is_psd_within(a: &Array2<f64>, tol: f64) -> bool {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return false;
    }
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]] + if i == j { tol } else { 0.0 };
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                // allow exact zeros on the shifted diagonal
                if sum < -1e-14 * (1.0 + a[[i, i]].abs()) {
                    return false;
                }
                l[i * n + i] = sum.max(0.0).sqrt();
            } else {
                let d = l[j * n + j];
                l[i * n + j] = if d > 0.0 { sum / d } else { 0.0 };
            }
        }
    }
    true
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}
