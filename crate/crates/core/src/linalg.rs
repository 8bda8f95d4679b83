//! Shared numeric kernels: penalized least squares on the smaller Gram
//! matrix, Pearson correlation, and row standardization.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::triangular::{Diag, SolveTriangular};
use ndarray_linalg::{Cholesky, Eigh, UPLO};

use crate::error::{Error, Result};
use crate::form::FormMatrix;

/// Solve `A X = B` for symmetric positive semi-definite `A`.
///
/// Cholesky first. The factorization can spuriously succeed on a singular
/// matrix when rounding turns a zero pivot into a tiny positive one, so the
/// factor's diagonal is checked for rank deficiency; on failure or
/// deficiency the solve falls back to a symmetric eigendecomposition
/// pseudoinverse, which yields the minimum-norm solution.
pub fn solve_spd(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    debug_assert_eq!(a.nrows(), a.ncols());
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "system is {}x{} but rhs has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if let Ok(l) = a.cholesky(UPLO::Lower) {
        let diag = l.diag();
        let max = diag.iter().fold(0.0_f64, |m, &v| m.max(v));
        let rcond = ((a.nrows() as f64) * f64::EPSILON).sqrt();
        if diag.iter().all(|&v| v > max * rcond) {
            let z = l
                .solve_triangular(UPLO::Lower, Diag::NonUnit, b)
                .map_err(|e| Error::Linalg(e.to_string()))?;
            let lt = l.t().to_owned();
            return lt
                .solve_triangular(UPLO::Upper, Diag::NonUnit, &z)
                .map_err(|e| Error::Linalg(e.to_string()));
        }
    }
    eigh_pinv_solve(a, b)
}

/// Minimum-norm solution of `A X = B` through the eigendecomposition of a
/// symmetric `A`, zeroing eigenvalues below a scaled cutoff.
fn eigh_pinv_solve(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let (vals, vecs) = a
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e}")))?;
    let max = vals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let cutoff = max * (a.nrows() as f64) * f64::EPSILON;
    // pinv(A) B = V diag(1/lambda) V^T B over the non-null space
    let vtb = vecs.t().dot(b);
    let mut scaled = vtb;
    for (i, mut row) in scaled.axis_iter_mut(Axis(0)).enumerate() {
        let v = vals[i];
        if v.abs() > cutoff {
            row.mapv_inplace(|x| x / v);
        } else {
            row.fill(0.0);
        }
    }
    Ok(vecs.dot(&scaled))
}

/// Minimum-norm / ridge least squares: find W minimizing
/// ||X W - Y||^2 + lambda ||W||^2.
///
/// Solved through whichever Gram matrix is smaller. For lambda = 0 on a
/// rank-deficient problem this returns the minimum-norm solution.
pub fn lstsq(x: &Array2<f64>, y: &Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::Argument(format!("ridge penalty must be non-negative, got {lambda}")));
    }
    let (n, p) = (x.nrows(), x.ncols());
    if p <= n {
        // (X^T X + lambda I) W = X^T Y
        let mut a = x.t().dot(x);
        if lambda > 0.0 {
            for i in 0..p {
                a[[i, i]] += lambda;
            }
        }
        let b = x.t().dot(y);
        solve_spd(&a, &b)
    } else {
        // W = X^T (X X^T + lambda I)^{-1} Y
        let mut g = x.dot(&x.t());
        if lambda > 0.0 {
            for i in 0..n {
                g[[i, i]] += lambda;
            }
        }
        let alpha = solve_spd(&g, y)?;
        Ok(x.t().dot(&alpha))
    }
}

/// `lstsq` with a sparse binary design matrix. The Gram matrix is accumulated
/// from the incidence lists, never materializing the dense design.
pub fn lstsq_sparse(x: &FormMatrix, y: &Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, targets have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::Argument(format!("ridge penalty must be non-negative, got {lambda}")));
    }
    let (n, p) = (x.nrows(), x.ncols());
    if p <= n {
        // A[i][j] = number of words containing both cue i and cue j
        let mut a = Array2::<f64>::zeros((p, p));
        for row in x.rows() {
            for &i in row {
                for &j in row {
                    a[[i as usize, j as usize]] += 1.0;
                }
            }
        }
        if lambda > 0.0 {
            for i in 0..p {
                a[[i, i]] += lambda;
            }
        }
        let b = sparse_t_dot(x, y);
        solve_spd(&a, &b)
    } else {
        // G[i][j] = number of cues shared by words i and j
        let mut by_cue: Vec<Vec<u32>> = vec![Vec::new(); p];
        for (w, row) in x.rows().enumerate() {
            for &c in row {
                by_cue[c as usize].push(w as u32);
            }
        }
        let mut g = Array2::<f64>::zeros((n, n));
        for members in &by_cue {
            for &i in members {
                for &j in members {
                    g[[i as usize, j as usize]] += 1.0;
                }
            }
        }
        if lambda > 0.0 {
            for i in 0..n {
                g[[i, i]] += lambda;
            }
        }
        let alpha = solve_spd(&g, y)?;
        Ok(sparse_t_dot(x, &alpha))
    }
}

/// X^T B for a sparse binary X: scatter each B row into the rows of the
/// result selected by the word's cues.
pub fn sparse_t_dot(x: &FormMatrix, b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((x.ncols(), b.ncols()));
    for (w, row) in x.rows().enumerate() {
        let src = b.row(w);
        for &c in row {
            let mut dst = out.row_mut(c as usize);
            dst += &src;
        }
    }
    out
}

/// X W for a sparse binary X: each output row is the column-wise sum of the
/// weight rows of the word's active cues.
pub fn sparse_dot(x: &FormMatrix, w: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != w.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} columns, weights have {} rows",
            x.ncols(),
            w.nrows()
        )));
    }
    let mut out = Array2::<f64>::zeros((x.nrows(), w.ncols()));
    for (i, row) in x.rows().enumerate() {
        let mut dst = out.row_mut(i);
        for &c in row {
            dst += &w.row(c as usize);
        }
    }
    Ok(out)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Center each row and scale it to unit Euclidean norm, so that the dot
/// product of two standardized rows is their Pearson correlation. Returns the
/// standardized matrix and a flag per row marking zero variance (those rows
/// are left at zero).
pub fn standardize_rows(m: &Array2<f64>) -> (Array2<f64>, Vec<bool>) {
    let mut out = m.to_owned();
    let mut degenerate = vec![false; m.nrows()];
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        row.mapv_inplace(|v| v - mean);
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            degenerate[i] = true;
            row.fill(0.0);
        }
    }
    (out, degenerate)
}

/// Centered unit-norm copy of one vector, or `None` for zero variance.
pub fn standardize_vec(v: ArrayView1<f64>) -> Option<Array1<f64>> {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let centered = v.mapv(|x| x - mean);
    let norm = centered.dot(&centered).sqrt();
    if norm > 0.0 {
        Some(centered / norm)
    } else {
        None
    }
}

/// Scale each row to unit Euclidean norm without centering, so dot products
/// of prepared rows are cosine similarities. Zero rows are flagged.
pub fn normalize_rows(m: &Array2<f64>) -> (Array2<f64>, Vec<bool>) {
    let mut out = m.to_owned();
    let mut degenerate = vec![false; m.nrows()];
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            degenerate[i] = true;
        }
    }
    (out, degenerate)
}

/// Unit-norm copy of one vector, or `None` for a zero vector.
pub fn normalize_vec(v: ArrayView1<f64>) -> Option<Array1<f64>> {
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        Some(v.to_owned() / norm)
    } else {
        None
    }
}

/// Sum of squared residuals ||X W - Y||^2 with a dense design.
pub fn sse(x: &Array2<f64>, w: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let r = x.dot(w) - y;
    r.iter().map(|v| v * v).sum()
}
