use nalgebra::{DMatrix, DVector};

/// Solves `a x = b`, returning `None` when `a` is numerically singular.
pub(crate) fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let lu = a.clone().lu();
    let x = lu.solve(b)?;
    let cond_ok = {
        let u = lu.u();
        let diag_min = u.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let diag_max = u.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        diag_max > 0.0 && diag_min / diag_max > 1e-13
    };
    if cond_ok && x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

pub(crate) fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        out.set_column(j, &solve(a, &e)?);
    }
    Some(out)
}

pub(crate) fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
