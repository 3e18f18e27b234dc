//! Classical first-stage estimators: least squares for pure AR models and
//! conditional sum of squares (CSS) for ARMA.

use nalgebra::{DMatrix, DVector};

use crate::arima::{self, ModelSpec, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::linalg;
use crate::{FittedArima, Method};

/// Result of a baseline fit on a differenced series.
///
/// `theta_hat` is laid out as `[phi_1..phi_p, theta_1..theta_q, c?]`. When the
/// series was demeaned instead of fitting an intercept, `center` holds the
/// removed mean and `model.intercept` carries the equivalent constant.
#[derive(Clone, Debug)]
pub struct BaselineFit {
    pub method: Method,
    pub model: ModelSpec,
    pub theta_hat: Vec<f64>,
    pub intercept: bool,
    pub sigma2_hat: f64,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub covariance: DMatrix<f64>,
    pub se: Vec<f64>,
    pub center: f64,
}

impl FittedArima for BaselineFit {
    fn model(&self) -> &ModelSpec {
        &self.model
    }
    fn residuals(&self) -> &[f64] {
        &self.residuals
    }
    fn n_params(&self) -> usize {
        self.theta_hat.len()
    }
    fn method(&self) -> Method {
        self.method
    }
}

#[derive(Clone, Debug)]
pub struct CssConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Relative objective decrease below which an accepted step ends the
    /// search; the finite-difference gradient has a noise floor near `grad_tol`.
    pub obj_tol: f64,
    pub max_halvings: usize,
    /// Step doublings tried after an accepted full step.
    pub max_expansions: usize,
    pub margin: f64,
    /// Demean when no intercept is fitted but `|mean| > demean_ratio * sd`.
    pub demean_ratio: Option<f64>,
}

impl Default for CssConfig {
    fn default() -> Self {
        CssConfig {
            max_iter: 50,
            grad_tol: 1e-8,
            step_tol: 1e-10,
            obj_tol: 1e-10,
            max_halvings: 30,
            max_expansions: 8,
            margin: DEFAULT_MARGIN,
            demean_ratio: Some(0.5),
        }
    }
}

/// Returns the series to fit and the mean removed from it.
pub(crate) fn center_series(z: &[f64], intercept: bool, demean_ratio: Option<f64>) -> (Vec<f64>, f64) {
    if intercept || z.len() < 2 {
        return (z.to_vec(), 0.0);
    }
    let Some(ratio) = demean_ratio else {
        return (z.to_vec(), 0.0);
    };
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if mean.abs() > ratio * sd {
        // Routine inside Monte Carlo runs, so not a warning.
        log::info!(
            "series mean {mean:.4} is large relative to its spread ({sd:.4}) but no intercept was requested; demeaning before fitting"
        );
        (z.iter().map(|v| v - mean).collect(), mean)
    } else {
        (z.to_vec(), 0.0)
    }
}

/// Model for the centered series implied by a parameter vector.
pub(crate) fn centered_model(params: &[f64], p: usize, q: usize, intercept: bool) -> ModelSpec {
    ModelSpec {
        d: 0,
        phi: params[..p].to_vec(),
        theta: params[p..p + q].to_vec(),
        intercept: intercept.then(|| params[p + q]),
    }
}

/// Model on the original differenced scale, folding a removed mean back into
/// the constant.
pub(crate) fn reported_model(params: &[f64], p: usize, d: usize, q: usize, intercept: bool, center: f64) -> ModelSpec {
    let mut m = centered_model(params, p, q, intercept);
    m.d = d;
    if !intercept && center != 0.0 {
        m.intercept = Some(center * (1.0 - m.phi.iter().sum::<f64>()));
    }
    m
}

pub fn param_names(p: usize, q: usize, intercept: bool) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|i| format!("phi{i}")).collect();
    names.extend((1..=q).map(|j| format!("theta{j}")));
    if intercept {
        names.push("intercept".into());
    }
    names
}

fn ar_design(z: &[f64], p: usize, intercept: bool) -> (DMatrix<f64>, DVector<f64>) {
    let rows = z.len() - p;
    let k = p + usize::from(intercept);
    let mut x = DMatrix::zeros(rows, k);
    let mut y = DVector::zeros(rows);
    for (r, t) in (p..z.len()).enumerate() {
        for i in 0..p {
            x[(r, i)] = z[t - 1 - i];
        }
        if intercept {
            x[(r, p)] = 1.0;
        }
        y[r] = z[t];
    }
    (x, y)
}

fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Rank("X'X is not positive definite (constant or collinear series?)".into()))?;
    let beta = chol.solve(&xty);
    let inv = chol.inverse();
    // Cholesky succeeds on some nearly singular matrices; guard the condition.
    let diag_ratio = {
        let l = chol.l();
        let d = l.diagonal();
        let mx = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mn = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        mn / mx
    };
    if !(diag_ratio > 1e-7) || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Rank("X'X is numerically singular".into()));
    }
    Ok((beta, inv))
}

fn std_errors(cov: &DMatrix<f64>) -> Vec<f64> {
    cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
}

/// Least squares for a pure AR(p) on the differenced series. The series is
/// used as given; see [`ols_ar_with`] for automatic demeaning.
pub fn ols_ar(z: &[f64], p: usize, intercept: bool) -> Result<BaselineFit> {
    let cfg = CssConfig {
        demean_ratio: None,
        ..CssConfig::default()
    };
    ols_ar_with(z, p, intercept, &cfg)
}

pub fn ols_ar_with(z: &[f64], p: usize, intercept: bool, cfg: &CssConfig) -> Result<BaselineFit> {
    let k = p + usize::from(intercept);
    if z.len() < p + k.max(1) {
        return Err(Error::Length {
            needed: p + k.max(1),
            got: z.len(),
        });
    }
    check_finite(z)?;
    let (zc, center) = center_series(z, intercept, cfg.demean_ratio);
    let (x, y) = ar_design(&zc, p, intercept);
    let (mut params, cov_unscaled) = if k == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    } else {
        normal_equations(&x, &y)?
    };
    arima::project_param_vector(params.as_mut_slice(), p, 0, cfg.margin);
    let params: Vec<f64> = params.iter().copied().collect();
    let resid = arima::residuals(&zc, &centered_model(&params, p, 0, intercept))?;
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let sigma2 = rss / resid.len() as f64;
    let covariance = cov_unscaled * sigma2;
    Ok(BaselineFit {
        method: Method::Ols,
        model: reported_model(&params, p, 0, 0, intercept, center),
        se: std_errors(&covariance),
        theta_hat: params,
        intercept,
        sigma2_hat: sigma2,
        residuals: resid,
        objective: rss,
        objective_trace: vec![rss],
        iterations: 1,
        converged: true,
        covariance,
        center,
    })
}

fn check_finite(z: &[f64]) -> Result<()> {
    match z.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

struct CssProblem<'a> {
    z: &'a [f64],
    p: usize,
    q: usize,
    intercept: bool,
}

impl CssProblem<'_> {
    fn k(&self) -> usize {
        self.p + self.q + usize::from(self.intercept)
    }

    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        // Length is checked once up front.
        arima::residuals(self.z, &centered_model(params, self.p, self.q, self.intercept))
            .expect("series length checked")
    }

    fn jacobian(&self, params: &[f64], base: &[f64]) -> DMatrix<f64> {
        let k = self.k();
        let mut jac = DMatrix::zeros(base.len(), k);
        let mut shifted = params.to_vec();
        for j in 0..k {
            let h = 1e-6 * (1.0 + params[j].abs());
            shifted[j] = params[j] + h;
            let r = self.residuals(&shifted);
            shifted[j] = params[j];
            for (i, (a, b)) in r.iter().zip(base).enumerate() {
                jac[(i, j)] = (a - b) / h;
            }
        }
        jac
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|e| e * e).sum()
}

/// Conditional-sum-of-squares ARMA(p,q) by damped Gauss-Newton.
pub fn css_estimate(z: &[f64], p: usize, q: usize, intercept: bool, init: Option<&[f64]>) -> Result<BaselineFit> {
    css_estimate_with(z, p, q, intercept, init, &CssConfig::default())
}

pub fn css_estimate_with(
    z: &[f64],
    p: usize,
    q: usize,
    intercept: bool,
    init: Option<&[f64]>,
    cfg: &CssConfig,
) -> Result<BaselineFit> {
    let needed = p + q + 10;
    if z.len() < needed {
        return Err(Error::Length { needed, got: z.len() });
    }
    check_finite(z)?;
    let (zc, center) = center_series(z, intercept, cfg.demean_ratio);
    let problem = CssProblem {
        z: &zc,
        p,
        q,
        intercept,
    };
    let k = problem.k();

    let mut params = match init {
        Some(v) => {
            if v.len() != k {
                return Err(Error::Parameter(format!(
                    "initial vector has length {}, expected {k}",
                    v.len()
                )));
            }
            v.to_vec()
        }
        None => {
            let mut v = vec![0.0; k];
            if p > 0 || intercept {
                let ols = ols_ar_with(
                    &zc,
                    p,
                    intercept,
                    &CssConfig {
                        demean_ratio: None,
                        ..cfg.clone()
                    },
                )?;
                v[..p].copy_from_slice(&ols.theta_hat[..p]);
                if intercept {
                    v[p + q] = ols.theta_hat[p];
                }
            }
            v
        }
    };
    arima::project_param_vector(&mut params, p, q, cfg.margin);

    let mut resid = problem.residuals(&params);
    let mut obj = sum_sq(&resid);
    let mut trace = vec![obj];
    let n_eff = resid.len() as f64;
    let mut converged = k == 0;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let jac = problem.jacobian(&params, &resid);
        let r = DVector::from_column_slice(&resid);
        let grad = jac.transpose() * &r;
        if linalg::inf_norm(&grad) / n_eff < cfg.grad_tol {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let step = linalg::solve(&jtj, &(-&grad)).unwrap_or_else(|| linalg::pseudo_solve(&jtj, &(-&grad)));

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut cand: Vec<f64> = params.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            arima::project_param_vector(&mut cand, p, q, cfg.margin);
            let r_c = problem.residuals(&cand);
            let obj_c = sum_sq(&r_c);
            if obj_c.is_finite() && obj_c <= obj {
                accepted = Some((cand, r_c, obj_c));
                break;
            }
            t *= 0.5;
        }
        // Along flat ridges full Gauss-Newton steps are far too short; keep
        // doubling while the objective still decreases.
        if t == 1.0 {
            if let Some((_, _, mut best_obj)) = accepted {
                for _ in 0..cfg.max_expansions {
                    t *= 2.0;
                    let mut cand: Vec<f64> = params.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
                    arima::project_param_vector(&mut cand, p, q, cfg.margin);
                    let r_c = problem.residuals(&cand);
                    let obj_c = sum_sq(&r_c);
                    if !(obj_c.is_finite() && obj_c < best_obj) {
                        break;
                    }
                    best_obj = obj_c;
                    accepted = Some((cand, r_c, obj_c));
                }
            }
        }
        let Some((cand, r_c, obj_c)) = accepted else {
            // No descent along the Gauss-Newton direction: stationary up to
            // finite-difference noise, or stuck on the admissibility boundary.
            converged = linalg::inf_norm(&grad) / n_eff < 1e-5;
            break;
        };
        let moved = cand.iter().zip(&params).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = 1.0 + params.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rel_drop = (obj - obj_c) / obj.max(f64::MIN_POSITIVE);
        params = cand;
        resid = r_c;
        obj = obj_c;
        trace.push(obj);
        if moved < cfg.step_tol * scale || rel_drop < cfg.obj_tol {
            converged = true;
        }
    }

    let sigma2 = obj / n_eff;
    let covariance = if k == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let jac = problem.jacobian(&params, &resid);
        let jtj = jac.transpose() * &jac;
        linalg::inverse(&jtj)
            .map(|inv| inv * sigma2)
            .unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN))
    };
    Ok(BaselineFit {
        method: Method::Css,
        model: reported_model(&params, p, 0, q, intercept, center),
        se: std_errors(&covariance),
        theta_hat: params,
        intercept,
        sigma2_hat: sigma2,
        residuals: resid,
        objective: obj,
        objective_trace: trace,
        iterations,
        converged,
        covariance,
        center,
    })
}

/// Fits the baseline to an undifferenced series.
pub fn fit_arima(y: &[f64], p: usize, d: usize, q: usize, method: Method, intercept: bool) -> Result<BaselineFit> {
    let z = arima::difference(y, d)?;
    let mut fit = match method {
        Method::Ols => {
            if q > 0 {
                return Err(Error::Parameter("least squares baseline requires q = 0".into()));
            }
            ols_ar_with(&z, p, intercept, &CssConfig::default())?
        }
        Method::Css => css_estimate(&z, p, q, intercept, None)?,
        Method::Pmm2 => return Err(Error::Parameter("PMM2 is not a baseline method".into())),
    };
    fit.model.d = d;
    Ok(fit)
}
