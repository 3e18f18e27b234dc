use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde_json::{json, Value};

use pmm2_arima::arima::{self, ModelSpec};
use pmm2_arima::asymptotics;
use pmm2_arima::baseline::{self, param_names, BaselineFit};
use pmm2_arima::diagnostics::{self, SelectionThresholds, ValidationMode};
use pmm2_arima::montecarlo::{self, ExperimentConfig};
use pmm2_arima::numfmt::{fmt_sig, round_json};
use pmm2_arima::pmm2::{self, Pmm2Config};
use pmm2_arima::InnovationSpec;
use pmm2_arima::{Error, FittedArima, Method, MomentSet};

use crate::series::{read_series, Series};
use crate::{FitArgs, FitMethod, McArgs, Mode, SelectArgs, SimulateArgs, ValidateArgs};

/// Version of the JSON report layout.
const SCHEMA_VERSION: u32 = 1;
const IC_CAVEAT: &str =
    "PMM2 does not maximize the Gaussian likelihood; AIC/BIC are evaluated post hoc on its residuals";

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: e.into(),
    }
}

/// Library errors about the request itself are usage errors; the rest
/// concern the data.
fn classify(e: Error) -> Failure {
    match e {
        Error::NotStationary | Error::NotInvertible | Error::Parameter(_) | Error::Config { .. } => usage(e),
        _ => data(e),
    }
}

pub fn parse_order(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected p,d,q, got `{s}`"));
    }
    let num = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| format!("`{v}` is not a non-negative integer"))
    };
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> CmdResult {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(data(anyhow!("cannot write output: {e}"))),
        _ => Ok(()),
    }
}

fn print_json(mut v: Value) -> CmdResult {
    round_json(&mut v);
    emit(&(serde_json::to_string_pretty(&v).expect("JSON value serializes") + "\n"))
}

fn load(path: &std::path::Path) -> Result<Series, Failure> {
    read_series(path).map_err(data)
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let (p, d, q) = a.order.model;
    if a.phi.len() != p || a.theta.len() != q {
        return Err(usage(anyhow!(
            "--model {p},{d},{q} needs {p} --phi and {q} --theta values, got {} and {}",
            a.phi.len(),
            a.theta.len()
        )));
    }
    let mut model = ModelSpec::new(a.phi.clone(), d, a.theta.clone());
    model.intercept = a.constant;
    let law = a.innovation.parse::<InnovationSpec>().map_err(usage)?;
    let eps = pmm2_arima::distributions::sample(&law, a.n + a.burn_in, a.seed).map_err(classify)?;
    let y = arima::simulate(&model, &eps, a.burn_in).map_err(classify)?;
    let mut out = String::with_capacity(16 * y.len() + 8);
    out.push_str("value\n");
    for v in &y {
        writeln!(out, "{}", fmt_sig(*v)).expect("write to string");
    }
    emit(&out)
}

fn moments_json(m: &MomentSet) -> Value {
    json!({
        "mu2": m.mu2,
        "mu3": m.mu3,
        "mu4": m.mu4,
        "delta": m.delta,
        "gamma3": m.gamma3,
        "gamma4": m.gamma4,
    })
}

fn diagnostics_json<F: FittedArima>(fit: &F, lags: usize) -> Value {
    let r = fit.residuals();
    let lb = match diagnostics::ljung_box(r, lags, fit.n_params()) {
        Ok(t) => json!({"lags": lags, "stat": t.stat, "p_value": t.p_value, "df": t.df}),
        Err(e) => json!({"lags": lags, "error": e.to_string()}),
    };
    let jb = match diagnostics::jarque_bera(r) {
        Ok(t) => json!({"stat": t.stat, "p_value": t.p_value, "df": t.df}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let ic = match diagnostics::information_criteria(fit) {
        Ok(ic) => json!({
            "loglik": ic.loglik,
            "aic": ic.aic,
            "bic": ic.bic,
            "n_eff": ic.n_eff,
            "post_hoc": ic.post_hoc,
            "caveat": if ic.post_hoc { Value::from(IC_CAVEAT) } else { Value::Null },
        }),
        Err(e) => json!({"error": e.to_string()}),
    };
    json!({"ljung_box": lb, "jarque_bera": jb, "information_criteria": ic})
}

fn estimates_json(names: &[String], values: &[f64], se: &[f64]) -> Value {
    Value::Array(
        names
            .iter()
            .zip(values)
            .zip(se)
            .map(|((n, v), s)| json!({"name": n, "estimate": v, "se": s}))
            .collect(),
    )
}

fn model_json(m: &ModelSpec) -> Value {
    json!({"d": m.d, "phi": m.phi, "theta": m.theta, "constant": m.intercept})
}

fn baseline_block(fit: &BaselineFit, names: &[String], lags: usize, seconds: Option<f64>) -> Value {
    let resid_moments = pmm2_arima::moments::central_moments(&fit.residuals);
    let mut v = json!({
        "method": fit.method,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "estimates": estimates_json(names, &fit.theta_hat, &fit.se),
        "model": model_json(&fit.model),
        "center": fit.center,
        "sigma2": fit.sigma2_hat,
        "objective": fit.objective,
        "n_eff": fit.residuals.len(),
        "residual_moments": {
            "mu2": resid_moments.0,
            "mu3": resid_moments.1,
            "mu4": resid_moments.2,
        },
        "diagnostics": diagnostics_json(fit, lags),
    });
    if let Some(s) = seconds {
        v["timing_seconds"] = json!(s);
    }
    v
}

pub fn fit(a: &FitArgs) -> CmdResult {
    let (p, d, q) = a.order.model;
    if a.method == FitMethod::Ols && q > 0 {
        return Err(usage(anyhow!("least squares applies to pure AR models (q = 0)")));
    }
    let series = load(&a.input)?;
    let y = &series.values;
    let names = param_names(p, q, a.intercept);
    let timing = |s: f64| if a.omit_timing { None } else { Some(s) };
    let mut fits = Vec::new();

    if a.method == FitMethod::Ols {
        let t = Instant::now();
        let f = baseline::fit_arima(y, p, d, q, Method::Ols, a.intercept).map_err(classify)?;
        fits.push(baseline_block(&f, &names, a.lags, timing(t.elapsed().as_secs_f64())));
    }
    if matches!(a.method, FitMethod::Css | FitMethod::Both) {
        let t = Instant::now();
        let f = baseline::fit_arima(y, p, d, q, Method::Css, a.intercept).map_err(classify)?;
        fits.push(baseline_block(&f, &names, a.lags, timing(t.elapsed().as_secs_f64())));
    }
    if matches!(a.method, FitMethod::Pmm2 | FitMethod::Both) {
        let cfg = Pmm2Config {
            intercept: a.intercept,
            adaptive: a.adaptive,
            ..Pmm2Config::default()
        };
        let t = Instant::now();
        let est = pmm2::fit_detailed(y, p, d, q, &cfg).map_err(classify)?;
        let (se, ridge) = if est.fit.fallback_used {
            (est.baseline.se.clone(), false)
        } else {
            match asymptotics::sandwich(&est.fit, &est.design) {
                Ok(c) => (c.se, c.ridge_used),
                Err(e) => {
                    log::warn!("sandwich covariance unavailable: {e}");
                    (vec![f64::NAN; est.fit.theta_hat.len()], false)
                }
            }
        };
        let seconds = t.elapsed().as_secs_f64();
        let f = &est.fit;
        let re = asymptotics::re_theoretical(f.moments.gamma3, f.moments.gamma4).ok();
        let mut v = json!({
            "method": Method::Pmm2,
            "converged": f.converged,
            "iterations": f.iterations,
            "estimates": estimates_json(&names, &f.theta_hat, &se),
            "model": model_json(&f.model),
            "center": est.baseline.center,
            "n_eff": f.residuals.len(),
            "sigma2": f.residuals.iter().map(|r| r * r).sum::<f64>() / f.residuals.len() as f64,
            "score_norm": f.score_norm,
            "moments": moments_json(&f.moments),
            "re_theoretical": re,
            "fallback_used": f.fallback_used,
            "pinv_used": f.pinv_used,
            "ridge_used": ridge,
            "moment_rounds": f.moment_rounds,
            "note": f.note,
            "diagnostics": diagnostics_json(f, a.lags),
        });
        if let Some(s) = timing(seconds) {
            v["timing_seconds"] = json!(s);
        }
        fits.push(v);
    }

    if let Some(c) = fits.iter().filter_map(|f| f["center"].as_f64()).find(|c| *c != 0.0) {
        eprintln!("warning: differenced series has mean {c:.4} and no --intercept; it was demeaned before fitting");
    }
    print_json(json!({
        "schema_version": SCHEMA_VERSION,
        "input": series.info,
        "order": {"p": p, "d": d, "q": q},
        "intercept": a.intercept,
        "fits": fits,
    }))
}

pub fn select(a: &SelectArgs) -> CmdResult {
    let (p, d, q) = a.order.model;
    let series = load(&a.input)?;
    let th = SelectionThresholds {
        gamma3_gaussian: a.gamma3_threshold,
        gamma4_gaussian: a.gamma4_threshold,
        min_n: a.min_n,
        re_min: a.re_min,
    };
    let decision = diagnostics::select_method(&series.values, p, d, q, a.intercept, &th).map_err(classify)?;
    print_json(json!({
        "schema_version": SCHEMA_VERSION,
        "input": series.info,
        "order": {"p": p, "d": d, "q": q},
        "thresholds": th,
        "decision": decision,
    }))
}

pub fn mc(a: &McArgs) -> CmdResult {
    let src = std::fs::read_to_string(&a.config)
        .with_context(|| format!("cannot read {}", a.config.display()))
        .map_err(usage)?;
    let cfg = ExperimentConfig::from_toml_str(&src).map_err(usage)?;
    let report = match a.threads {
        Some(0) => return Err(usage(anyhow!("--threads must be at least 1"))),
        Some(t) => montecarlo::run_with_threads(&cfg, t),
        None => montecarlo::run(&cfg),
    }
    .map_err(classify)?;
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("cannot create {}", a.out.display()))
        .map_err(data)?;
    let write = |name: &str, body: String| {
        let path = a.out.join(name);
        std::fs::write(&path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(data)
    };
    write("report.csv", report.to_csv())?;
    write("summary.json", report.to_json() + "\n")?;
    write("re_curve.csv", report.re_curve_csv())?;
    eprintln!(
        "{} cells, {} replications, {} failures -> {}",
        report.cells.len(),
        report.total_replications,
        report.total_failures,
        a.out.display()
    );
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> CmdResult {
    let (p, d, q) = a.order.model;
    let series = load(&a.input)?;
    let mode = match a.mode {
        Mode::Fixed => ValidationMode::Fixed {
            train_fraction: a.split,
        },
        Mode::Rolling => {
            let window = a
                .window
                .ok_or_else(|| usage(anyhow!("--window is required in rolling mode")))?;
            if window >= series.values.len() {
                return Err(usage(anyhow!(
                    "window {window} does not fit in a series of {} observations",
                    series.values.len()
                )));
            }
            ValidationMode::Rolling {
                window,
                refit_every: a.refit_every,
            }
        }
    };
    let cfg = Pmm2Config {
        intercept: a.intercept,
        ..Pmm2Config::default()
    };
    let report = diagnostics::rolling_validate(&series.values, p, d, q, mode, &cfg).map_err(classify)?;
    print_json(json!({
        "schema_version": SCHEMA_VERSION,
        "input": series.info,
        "order": {"p": p, "d": d, "q": q},
        "report": report,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_parsing() {
        assert_eq!(parse_order("1,1,0"), Ok((1, 1, 0)));
        assert_eq!(parse_order(" 2, 0 ,1"), Ok((2, 0, 1)));
        assert!(parse_order("1,1").is_err());
        assert!(parse_order("1,-1,0").is_err());
    }
}
