//! Minimum-norm linear least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `min ||A x - b||_2` returning the minimum-norm minimizer.
///
/// Singular values below `cutoff * sigma_max` are treated as zero. Tall
/// systems are first reduced with a Householder QR, so the SVD only sees the
/// `n x n` triangular factor; `A = (Q U) S V^T` is then a thin SVD of `A` and
/// the pseudo-inverse solution is unchanged.
pub fn solve_min_norm(a: DMatrix<f64>, b: DVector<f64>, cutoff: f64) -> Result<DVector<f64>> {
    let (rows, cols) = a.shape();
    if b.len() != rows {
        return Err(Error::invalid(format!(
            "right-hand side has {} entries, matrix has {rows} rows",
            b.len()
        )));
    }
    if cols == 0 {
        return Ok(DVector::zeros(0));
    }
    if rows == 0 {
        return Ok(DVector::zeros(cols));
    }

    let (core, rhs) = if rows > cols {
        let qr = a.qr();
        let mut qtb = b;
        qr.q_tr_mul(&mut qtb);
        (qr.r(), qtb.rows(0, cols).into_owned())
    } else {
        (a, b)
    };

    pinv_solve(&core, &rhs, cutoff)
}

/// `x = V S^+ U^T b` from a thin SVD of `a`. The SVD comes from faer, whose
/// bidiagonal solver stays accurate on the triangular factors produced
/// above, where nalgebra's can return factors off by up to ~1e-4 relative.
fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, cutoff: f64) -> Result<DVector<f64>> {
    let (rows, cols) = a.shape();
    let svd = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)])
        .thin_svd()
        .map_err(|e| Error::invalid(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let smax = (0..s.nrows()).map(|k| s[k]).fold(0.0f64, f64::max);
    let mut x = DVector::zeros(cols);
    if smax == 0.0 {
        return Ok(x);
    }
    for k in 0..s.nrows() {
        if s[k] <= cutoff * smax {
            continue;
        }
        let coef = (0..rows).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k];
        for j in 0..cols {
            x[j] += coef * v[(j, k)];
        }
    }
    Ok(x)
}
