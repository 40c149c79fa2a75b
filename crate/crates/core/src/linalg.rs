//! Dense complex linear algebra shared by every module: ranks, kernels and
//! minimal-norm least-squares solves, all driven by one SVD policy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value threshold below which a direction counts as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Singular values closer than this factor to the threshold make a rank
/// decision ambiguous.
pub const RANK_MARGIN: f64 = 100.0;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Full SVD data: singular values (descending) and a complete right basis.
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Columns are right singular vectors, `ncols` of them.
    pub v: CMat,
    pub u: CMat,
}

/// SVD with a square right factor even for wide matrices (zero rows are
/// appended so the kernel basis is complete).
pub fn full_svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    let rows = m.max(n).max(1);
    let mut padded = CMat::zeros(rows, n);
    if m > 0 {
        padded.view_mut((0, 0), (m, n)).copy_from(a);
    }
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::zeros(n, order.len());
    let mut uu = CMat::zeros(rows, order.len());
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &v_t.row(i).adjoint());
        uu.set_column(k, &u.column(i));
    }
    Svd {
        singular_values,
        v,
        u: uu.rows(0, m).into_owned(),
    }
}

/// Numerical rank under a relative threshold. Returns the rank and the
/// smallest ratio margin observed around the threshold.
pub fn rank_with_tol(a: &CMat, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Rank under [`RANK_TOL`], refusing to decide when a singular value sits
/// within [`RANK_MARGIN`] of the threshold.
pub fn rank(a: &CMat) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    let thr = RANK_TOL * max;
    for &s in sv.iter() {
        if s > thr / RANK_MARGIN && s < thr * RANK_MARGIN {
            return Err(Error::RankIndeterminate {
                singular_value: s / max,
                threshold: RANK_TOL,
            });
        }
    }
    Ok(sv.iter().filter(|&&s| s > thr).count())
}

/// Orthonormal kernel basis (columns) of `a` under the relative threshold.
pub fn kernel(a: &CMat) -> Result<CMat> {
    let n = a.ncols();
    let r = rank(a)?;
    if a.nrows() == 0 {
        return Ok(CMat::identity(n, n));
    }
    let svd = full_svd(a);
    Ok(svd.v.columns(r, n - r).into_owned())
}

/// Minimal-norm least-squares solution of `a x = b` via the pseudoinverse.
pub fn solve_min_norm(a: &CMat, b: &CVec) -> CVec {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return CVec::zeros(n);
    }
    let svd = full_svd(a);
    let max = svd.singular_values.first().cloned().unwrap_or(0.0);
    let mut x = CVec::zeros(n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if k >= svd.u.ncols() || s <= RANK_TOL * max || s == 0.0 {
            continue;
        }
        let uk = svd.u.column(k);
        let coeff = uk.dotc(b) / cr(s);
        x += svd.v.column(k) * coeff;
    }
    x
}

/// Relative residual `‖a x − b‖ / max(‖b‖, tiny)`.
pub fn relative_residual(a: &CMat, x: &CVec, b: &CVec) -> f64 {
    let r = (a * x - b).norm();
    let bn = b.norm();
    if bn < 1e-300 {
        r
    } else {
        r / bn
    }
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Stack the columns of a matrix into one vector (column-major).
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().cloned())
}
