//! Sandwich covariance, standard errors and relative-efficiency measures.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pmm2::{self, Pmm2Design, Pmm2Fit};

/// `sigma = A^-1 B A^-T` with `A` the mean Jacobian and `B` the mean outer
/// product of `psi_t = x_t s_t` at the estimate.
#[derive(Clone, Debug)]
pub struct CovarianceReport {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub se: Vec<f64>,
    pub n_eff: usize,
    pub ridge_used: bool,
}

pub fn sandwich(fit: &Pmm2Fit, design: &Pmm2Design) -> Result<CovarianceReport> {
    if fit.theta_hat.len() != design.k() {
        return Err(Error::Parameter(
            "fit and design have different parameter counts".into(),
        ));
    }
    if fit.moments.is_degenerate() {
        return Err(Error::Degenerate("moment set has non-positive delta".into()));
    }
    let n = design.n_eff();
    let nf = n as f64;
    let a = pmm2::jacobian(&fit.theta_hat, design, &fit.moments) / nf;
    let s = pmm2::score_terms(&fit.theta_hat, design, &fit.moments);
    let mut psi = design.x().clone();
    for (mut row, st) in psi.row_iter_mut().zip(s.iter()) {
        row *= *st;
    }
    let b = psi.transpose() * &psi / nf;

    let (a_inv, ridge_used) = match linalg::inverse(&a) {
        Some(inv) => (inv, false),
        None => {
            let lambda = 1e-10 * a.diagonal().iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            let k = a.nrows();
            let sign = if a.trace() < 0.0 { -1.0 } else { 1.0 };
            let ridged = &a + DMatrix::identity(k, k) * (sign * lambda);
            let inv = linalg::inverse(&ridged)
                .ok_or_else(|| Error::Rank("score Jacobian is singular even after ridge".into()))?;
            (inv, true)
        }
    };
    let mut sigma = &a_inv * &b * a_inv.transpose();
    // Symmetrize away rounding.
    sigma = (&sigma + sigma.transpose()) * 0.5;
    let se = sigma.diagonal().iter().map(|v| (v.max(0.0) / nf).sqrt()).collect();
    Ok(CovarianceReport {
        a,
        b,
        sigma,
        se,
        n_eff: n,
        ridge_used,
    })
}

fn check_re_domain(gamma3: f64, gamma4: f64, denom: f64) -> Result<()> {
    if !(gamma3.is_finite() && gamma4.is_finite()) {
        return Err(Error::Domain("non-finite cumulants".into()));
    }
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "moment condition (2 + gamma4) - gamma3^2 > 0 violated (gamma3 = {gamma3}, gamma4 = {gamma4})"
        )));
    }
    Ok(())
}

/// Asymptotic variance ratio least-squares / PMM2 for a scalar parameter:
/// `mu2 (mu4 - mu2^2) / delta = (2 + gamma4) / ((2 + gamma4) - gamma3^2)`.
pub fn re_theoretical(gamma3: f64, gamma4: f64) -> Result<f64> {
    let num = 2.0 + gamma4;
    let denom = num - gamma3 * gamma3;
    check_re_domain(gamma3, gamma4, denom)?;
    Ok(num / denom)
}

/// The alternative printed form `(4 + 2 gamma4) / (4 + 2 gamma4 - gamma3^2)`,
/// kept for reporting alongside [`re_theoretical`].
pub fn re_theoretical_printed(gamma3: f64, gamma4: f64) -> Result<f64> {
    let num = 4.0 + 2.0 * gamma4;
    let denom = num - gamma3 * gamma3;
    check_re_domain(gamma3, gamma4, 2.0 + gamma4 - gamma3 * gamma3)?;
    Ok(num / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReMatrix {
    pub re_det: f64,
    pub re_trace: f64,
}

/// Determinant- and trace-based efficiency of `sigma_pmm2` relative to `sigma_ols`.
pub fn re_matrix(sigma_ols: &DMatrix<f64>, sigma_pmm2: &DMatrix<f64>) -> Result<ReMatrix> {
    let k = sigma_ols.nrows();
    if k == 0 || !sigma_ols.is_square() || sigma_pmm2.shape() != sigma_ols.shape() {
        return Err(Error::Domain(
            "covariance matrices must be square, non-empty and of equal size".into(),
        ));
    }
    let check_pd = |m: &DMatrix<f64>, name: &str| -> Result<f64> {
        let asym = (m - m.transpose()).abs().max();
        if asym > 1e-8 * m.abs().max().max(1.0) {
            return Err(Error::Domain(format!("{name} is not symmetric")));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain(format!("{name} is not positive definite")))?;
        // log-determinant from the Cholesky diagonal
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    };
    let logdet_ols = check_pd(sigma_ols, "sigma_ols")?;
    let logdet_pmm2 = check_pd(sigma_pmm2, "sigma_pmm2")?;
    Ok(ReMatrix {
        re_det: ((logdet_ols - logdet_pmm2) / k as f64).exp(),
        re_trace: sigma_ols.trace() / sigma_pmm2.trace(),
    })
}
