//! Python bindings for the `pmm2_arima` crate.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pmm2_arima::arima::{self, ModelSpec, DEFAULT_BURN_IN};
use pmm2_arima::baseline::{self, param_names};
use pmm2_arima::diagnostics::{self, SelectionThresholds};
use pmm2_arima::pmm2::{self, Pmm2Config};
use pmm2_arima::{asymptotics, distributions, InnovationSpec, Method};

fn py_err(e: pmm2_arima::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_law(s: &str) -> PyResult<InnovationSpec> {
    s.parse().map_err(py_err)
}

/// Draw `n` standardized innovations, e.g. `sample_innovations("gamma:shape=2", 500, 1)`.
#[pyfunction]
#[pyo3(signature = (innovation, n, seed = 42))]
fn sample_innovations(innovation: &str, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    distributions::sample(&parse_law(innovation)?, n, seed).map_err(py_err)
}

/// Theoretical `(gamma3, gamma4)` of an innovation law.
#[pyfunction]
fn innovation_cumulants(innovation: &str) -> PyResult<(f64, f64)> {
    Ok(parse_law(innovation)?.skew_kurtosis())
}

/// Simulate `n` observations of ARIMA(p,d,q) after a burn-in.
#[pyfunction]
#[pyo3(signature = (n, phi = vec![], d = 0, theta = vec![], innovation = "gaussian", seed = 42, burn_in = DEFAULT_BURN_IN, constant = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    n: usize,
    phi: Vec<f64>,
    d: usize,
    theta: Vec<f64>,
    innovation: &str,
    seed: u64,
    burn_in: usize,
    constant: Option<f64>,
) -> PyResult<Vec<f64>> {
    let mut model = ModelSpec::new(phi, d, theta);
    model.intercept = constant;
    let eps = distributions::sample(&parse_law(innovation)?, n + burn_in, seed).map_err(py_err)?;
    arima::simulate(&model, &eps, burn_in).map_err(py_err)
}

/// Fit ARIMA(p,d,q) with `method` in {"ols", "css", "pmm2"} and return a dict.
#[pyfunction]
#[pyo3(signature = (y, order, method = "pmm2", intercept = false, adaptive = false))]
fn fit<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    order: (usize, usize, usize),
    method: &str,
    intercept: bool,
    adaptive: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let (p, d, q) = order;
    let method: Method = method.parse().map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("method", method.name())?;
    out.set_item("names", param_names(p, q, intercept))?;
    match method {
        Method::Ols | Method::Css => {
            let f = baseline::fit_arima(&y, p, d, q, method, intercept).map_err(py_err)?;
            out.set_item("estimates", &f.theta_hat)?;
            out.set_item("se", &f.se)?;
            out.set_item("converged", f.converged)?;
            out.set_item("iterations", f.iterations)?;
            out.set_item("sigma2", f.sigma2_hat)?;
            out.set_item("residuals", &f.residuals)?;
        }
        Method::Pmm2 => {
            let cfg = Pmm2Config {
                intercept,
                adaptive,
                ..Pmm2Config::default()
            };
            let est = pmm2::fit_detailed(&y, p, d, q, &cfg).map_err(py_err)?;
            let f = &est.fit;
            let se = if f.fallback_used {
                est.baseline.se.clone()
            } else {
                asymptotics::sandwich(f, &est.design).map_err(py_err)?.se
            };
            let n = f.residuals.len() as f64;
            out.set_item("estimates", &f.theta_hat)?;
            out.set_item("se", se)?;
            out.set_item("converged", f.converged)?;
            out.set_item("iterations", f.iterations)?;
            out.set_item("sigma2", f.residuals.iter().map(|r| r * r).sum::<f64>() / n)?;
            out.set_item("residuals", &f.residuals)?;
            out.set_item("gamma3", f.moments.gamma3)?;
            out.set_item("gamma4", f.moments.gamma4)?;
            out.set_item("fallback_used", f.fallback_used)?;
            out.set_item("note", f.note.clone())?;
            out.set_item(
                "re_theoretical",
                asymptotics::re_theoretical(f.moments.gamma3, f.moments.gamma4).ok(),
            )?;
        }
    }
    Ok(out)
}

/// Asymptotic variance ratio of the baseline to PMM2 for given cumulants.
#[pyfunction]
fn re_theoretical(gamma3: f64, gamma4: f64) -> PyResult<f64> {
    asymptotics::re_theoretical(gamma3, gamma4).map_err(py_err)
}

/// Recommend the baseline or PMM2 from the baseline residual cumulants.
#[pyfunction]
#[pyo3(signature = (y, order, intercept = false))]
fn select_method<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    order: (usize, usize, usize),
    intercept: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let (p, d, q) = order;
    let s = diagnostics::select_method(&y, p, d, q, intercept, &SelectionThresholds::default()).map_err(py_err)?;
    let rec = recommendation_name(&s.recommendation);
    let out = PyDict::new(py);
    out.set_item("recommendation", rec)?;
    out.set_item("gamma3", s.gamma3_hat)?;
    out.set_item("gamma4", s.gamma4_hat)?;
    out.set_item("n", s.n)?;
    out.set_item("re_theoretical", s.re_theoretical)?;
    out.set_item("rationale", s.rationale)?;
    Ok(out)
}

fn recommendation_name(r: &diagnostics::Recommendation) -> &'static str {
    match r {
        diagnostics::Recommendation::UseBaseline => "use_baseline",
        diagnostics::Recommendation::UsePmm2 => "use_pmm2",
        diagnostics::Recommendation::UseBaselineSmallSample => "use_baseline_small_sample",
    }
}

/// Ljung-Box `(stat, p_value, df)` for residuals of a model with `fitted_params` coefficients.
#[pyfunction]
#[pyo3(signature = (residuals, lags = 10, fitted_params = 0))]
fn ljung_box(residuals: Vec<f64>, lags: usize, fitted_params: usize) -> PyResult<(f64, f64, usize)> {
    let t = diagnostics::ljung_box(&residuals, lags, fitted_params).map_err(py_err)?;
    Ok((t.stat, t.p_value, t.df))
}

/// Adds the module's functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(sample_innovations, m)?)?;
    m.add_function(wrap_pyfunction!(innovation_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(re_theoretical, m)?)?;
    m.add_function(wrap_pyfunction!(select_method, m)?)?;
    m.add_function(wrap_pyfunction!(ljung_box, m)?)?;
    Ok(())
}

#[pymodule]
fn pmm2arima(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
