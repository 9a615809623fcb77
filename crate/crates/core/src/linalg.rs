//! Small dense linear-algebra helpers shared by the spectral and dynamics modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{config, Error, Result};

/// Checks that `m` is square, non-negative and has rows summing to one within `tol`.
pub fn check_row_stochastic(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(config(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    for (i, row) in m.row_iter().enumerate() {
        if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < -tol) {
            return Err(config(format!("row {i} has invalid probability {bad}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(config(format!("row {i} sums to {sum}, expected 1")));
        }
    }
    Ok(())
}

/// Symmetric positive semi-definite square root.
///
/// Rejects matrices that are not symmetric or have an eigenvalue below
/// `-1e-10 * max(1, ||sigma||)`. Tiny negative eigenvalues are clamped to zero.
pub fn psd_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sigma.is_square() {
        return Err(config("covariance must be square"));
    }
    let scale = sigma.amax().max(1.0);
    let asym = (sigma - sigma.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(config(format!("covariance is not symmetric (max asymmetry {asym:e})")));
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(config(format!(
            "covariance is not positive semi-definite (min eigenvalue {min:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Flip `v` so that its first entry with magnitude above `1e-10 * max|v|` is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let cutoff = 1e-10 * v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > cutoff) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Canonical orthonormal basis of the column span of `basis`.
///
/// The columns of `basis` must be orthonormal. The result depends only on the
/// span: it is the Gram-Schmidt orthonormalisation of the reduced row-echelon
/// form of `basisᵀ`, with each vector's pivot entry positive. For the full
/// space this returns the canonical directions e_1, e_2, ...
pub fn canonical_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let k = basis.ncols();
    let n = basis.nrows();
    let mut rows = basis.transpose();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, val) = (pivot_row..k)
            .map(|r| (r, rows[(r, col)].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val < 1e-8 {
            continue;
        }
        rows.swap_rows(pivot_row, best);
        let p = rows[(pivot_row, col)];
        for c in 0..n {
            rows[(pivot_row, c)] /= p;
        }
        for r in 0..k {
            if r != pivot_row {
                let f = rows[(r, col)];
                if f != 0.0 {
                    for c in 0..n {
                        rows[(r, c)] -= f * rows[(pivot_row, c)];
                    }
                }
            }
        }
        pivot_row += 1;
    }
    let mut out = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let mut v: DVector<f64> = rows.row(j).transpose();
        for _ in 0..2 {
            for i in 0..j {
                let q = out.column(i).clone_owned();
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let norm = v.norm();
        v /= norm;
        fix_sign(&mut v);
        out.set_column(j, &v);
    }
    out
}

pub(crate) fn require_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(config(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub(crate) fn require_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite entries")))
    }
}
