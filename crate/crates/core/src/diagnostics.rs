//! Residual diagnostics, post-hoc information criteria, method selection and
//! one-step-ahead forecast validation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::arima::{self, ModelSpec};
use crate::asymptotics;
use crate::baseline;
use crate::error::{Error, Result};
use crate::moments::central_moments;
use crate::pmm2::{self, Pmm2Config};
use crate::{FittedArima, Method};

pub const DEFAULT_LJUNG_BOX_LAGS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub stat: f64,
    pub p_value: f64,
    pub df: usize,
}

fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    // df >= 1 is guaranteed by callers.
    ChiSquared::new(df as f64).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Sample autocorrelations at lags `1..=max_lag`.
pub fn autocorrelations(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (1..=max_lag)
        .map(|h| {
            let ch: f64 = (h..n).map(|t| (x[t] - mean) * (x[t - h] - mean)).sum();
            ch / c0
        })
        .collect()
}

/// Ljung-Box portmanteau test with `lags - fitted_params` degrees of freedom.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<TestResult> {
    if lags <= fitted_params {
        return Err(Error::Parameter(format!(
            "lags ({lags}) must exceed the number of fitted parameters ({fitted_params})"
        )));
    }
    let n = residuals.len();
    if n <= lags + 5 {
        return Err(Error::Length {
            needed: lags + 6,
            got: n,
        });
    }
    let (var, _, _) = central_moments(residuals);
    if !(var > 0.0) {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let nf = n as f64;
    let acf = autocorrelations(residuals, lags);
    let q = nf
        * (nf + 2.0)
        * acf
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    let df = lags - fitted_params;
    Ok(TestResult {
        stat: q,
        p_value: chi2_sf(q, df),
        df,
    })
}

/// `n (gamma3^2 / 6 + gamma4^2 / 24)`.
pub fn jarque_bera_stat(n: usize, gamma3: f64, gamma4: f64) -> f64 {
    n as f64 * (gamma3 * gamma3 / 6.0 + gamma4 * gamma4 / 24.0)
}

pub fn jarque_bera(residuals: &[f64]) -> Result<TestResult> {
    if residuals.len() < 3 {
        return Err(Error::Length {
            needed: 3,
            got: residuals.len(),
        });
    }
    let (m2, m3, m4) = central_moments(residuals);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let stat = jarque_bera_stat(residuals.len(), m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0);
    Ok(TestResult {
        stat,
        p_value: chi2_sf(stat, 2),
        df: 2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InformationCriteria {
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_eff: usize,
    pub k: usize,
    /// Set for estimators that do not maximize the Gaussian likelihood; the
    /// values are then post-hoc and only roughly comparable.
    pub post_hoc: bool,
}

/// Gaussian log-likelihood at `sigma^2 = RSS / n`; the variance counts as an
/// extra parameter.
pub fn information_criteria_from_rss(rss: f64, n_eff: usize, k: usize) -> Result<InformationCriteria> {
    if n_eff == 0 || !(rss > 0.0) {
        return Err(Error::Degenerate("residual variance must be positive".into()));
    }
    let n = n_eff as f64;
    let sigma2 = rss / n;
    let loglik = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);
    let kk = (k + 1) as f64;
    Ok(InformationCriteria {
        loglik,
        aic: -2.0 * loglik + 2.0 * kk,
        bic: -2.0 * loglik + kk * n.ln(),
        n_eff,
        k,
        post_hoc: false,
    })
}

pub fn information_criteria<F: FittedArima + ?Sized>(fit: &F) -> Result<InformationCriteria> {
    let r = fit.residuals();
    let rss: f64 = r.iter().map(|e| e * e).sum();
    let mut ic = information_criteria_from_rss(rss, r.len(), fit.n_params())?;
    ic.post_hoc = fit.method() == Method::Pmm2;
    Ok(ic)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    UseBaseline,
    UsePmm2,
    UseBaselineSmallSample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionThresholds {
    pub gamma3_gaussian: f64,
    pub gamma4_gaussian: f64,
    pub min_n: usize,
    pub re_min: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds {
            gamma3_gaussian: 0.5,
            gamma4_gaussian: 1.0,
            min_n: 200,
            re_min: 1.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionDecision {
    pub recommendation: Recommendation,
    pub gamma3_hat: f64,
    pub gamma4_hat: f64,
    pub n: usize,
    /// `None` when the cumulants fall outside the formula's domain.
    pub re_theoretical: Option<f64>,
    pub rationale: &'static str,
}

/// Decision rule on residual cumulants and sample size.
pub fn decide(gamma3: f64, gamma4: f64, n: usize, th: &SelectionThresholds) -> SelectionDecision {
    let re = asymptotics::re_theoretical(gamma3, gamma4).ok();
    let (recommendation, rationale) = if gamma3.abs() < th.gamma3_gaussian && gamma4.abs() < th.gamma4_gaussian {
        (Recommendation::UseBaseline, "near-gaussian-residuals")
    } else if n < th.min_n {
        (Recommendation::UseBaselineSmallSample, "small-sample")
    } else if re.is_some_and(|r| r > th.re_min) {
        (Recommendation::UsePmm2, "asymmetry-gain")
    } else {
        (Recommendation::UseBaseline, "insufficient-asymmetry")
    };
    SelectionDecision {
        recommendation,
        gamma3_hat: gamma3,
        gamma4_hat: gamma4,
        n,
        re_theoretical: re,
        rationale,
    }
}

/// Fits the CSS baseline (least squares for pure AR when `q = 0` is not
/// required) and applies [`decide`] to its residual cumulants.
pub fn select_method(
    y: &[f64],
    p: usize,
    d: usize,
    q: usize,
    intercept: bool,
    th: &SelectionThresholds,
) -> Result<SelectionDecision> {
    let fit = baseline::fit_arima(y, p, d, q, Method::Css, intercept)?;
    let (m2, m3, m4) = central_moments(&fit.residuals);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("baseline residuals have zero variance".into()));
    }
    Ok(decide(m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, y.len(), th))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One-step-ahead conditional mean of `y_{T+1}` given `history = y_1..y_T`.
pub fn forecast_model(model: &ModelSpec, history: &[f64]) -> Result<f64> {
    let d = model.d;
    let m = model.presample();
    let needed = d + m + 1;
    if history.len() < needed {
        return Err(Error::Length {
            needed,
            got: history.len(),
        });
    }
    let z = arima::difference(history, d)?;
    let eps = arima::residuals(&z, model)?;
    let n = z.len();
    // eps[i] corresponds to z[m + i]
    let eps_at = |s: usize| if s < m { 0.0 } else { eps[s - m] };
    let mut z_next = model.intercept_or_zero();
    for (i, phi) in model.phi.iter().enumerate() {
        z_next += phi * z[n - 1 - i];
    }
    for (j, theta) in model.theta.iter().enumerate() {
        z_next += theta * eps_at(n - 1 - j);
    }
    // y_{T+1} = z_{T+1} - sum_{j=1..d} C(d,j) (-1)^j y_{T+1-j}
    let t = history.len();
    let mut y_next = z_next;
    for j in 1..=d {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        y_next += sign * binomial(d, j) * history[t - j];
    }
    Ok(y_next)
}

pub fn forecast_one_step<F: FittedArima + ?Sized>(fit: &F, history: &[f64]) -> Result<f64> {
    forecast_model(fit.model(), history)
}

/// One-step errors `y_t - yhat_t` for `t = start..len(y)` with a fixed model.
pub fn one_step_errors(model: &ModelSpec, y: &[f64], start: usize) -> Result<Vec<f64>> {
    (start..y.len())
        .map(|t| forecast_model(model, &y[..t]).map(|f| y[t] - f))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ValidationMode {
    /// Fit once on the leading `train_fraction` of the series.
    Fixed { train_fraction: f64 },
    /// Refit on the trailing `window` observations every `refit_every` steps.
    Rolling { window: usize, refit_every: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastScore {
    pub rmse: f64,
    pub mae: f64,
    pub errors: Vec<f64>,
}

impl ForecastScore {
    pub fn from_errors(errors: Vec<f64>) -> Self {
        let n = errors.len() as f64;
        ForecastScore {
            rmse: (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
            mae: errors.iter().map(|e| e.abs()).sum::<f64>() / n,
            errors,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub n_forecasts: usize,
    pub first_forecast_index: usize,
    pub refits: usize,
    pub baseline: ForecastScore,
    pub pmm2: ForecastScore,
    /// `100 (rmse_baseline - rmse_pmm2) / rmse_baseline`.
    pub rmse_improvement_pct: f64,
    pub mae_improvement_pct: f64,
}

/// Out-of-sample one-step validation of the CSS baseline against PMM2 on the
/// original (undifferenced) scale.
pub fn rolling_validate(
    y: &[f64],
    p: usize,
    d: usize,
    q: usize,
    mode: ValidationMode,
    cfg: &Pmm2Config,
) -> Result<ValidationReport> {
    let min_fit = d + p + q + 11;
    let (start, window, refit_every) = match mode {
        ValidationMode::Fixed { train_fraction } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::Parameter(format!(
                    "train fraction must lie in (0, 1), got {train_fraction}"
                )));
            }
            let train = (train_fraction * y.len() as f64).floor() as usize;
            (train, None, usize::MAX)
        }
        ValidationMode::Rolling { window, refit_every } => {
            if refit_every == 0 {
                return Err(Error::Parameter("refit_every must be at least 1".into()));
            }
            (window, Some(window), refit_every)
        }
    };
    if start < min_fit {
        return Err(Error::Length {
            needed: min_fit,
            got: start,
        });
    }
    if start >= y.len() {
        return Err(Error::Length {
            needed: start + 1,
            got: y.len(),
        });
    }

    let fit_both = |train: &[f64]| -> Result<(ModelSpec, ModelSpec)> {
        let est = pmm2::fit_detailed(train, p, d, q, cfg)?;
        Ok((est.baseline.model, est.fit.model))
    };

    let mut refits = 0;
    let mut current: Option<(ModelSpec, ModelSpec)> = None;
    let (mut e_base, mut e_pmm2) = (Vec::new(), Vec::new());
    for (step, t) in (start..y.len()).enumerate() {
        if current.is_none() || step % refit_every == 0 && window.is_some() {
            let train = match window {
                Some(w) => &y[t - w..t],
                None => &y[..t],
            };
            current = Some(fit_both(train)?);
            refits += 1;
        }
        let (mb, mp) = current.as_ref().expect("fitted above");
        e_base.push(y[t] - forecast_model(mb, &y[..t])?);
        e_pmm2.push(y[t] - forecast_model(mp, &y[..t])?);
    }
    let baseline = ForecastScore::from_errors(e_base);
    let pmm2 = ForecastScore::from_errors(e_pmm2);
    let pct = |b: f64, p: f64| if b > 0.0 { 100.0 * (b - p) / b } else { 0.0 };
    Ok(ValidationReport {
        mode,
        n_forecasts: baseline.errors.len(),
        first_forecast_index: start,
        refits,
        rmse_improvement_pct: pct(baseline.rmse, pmm2.rmse),
        mae_improvement_pct: pct(baseline.mae, pmm2.mae),
        baseline,
        pmm2,
    })
}
