//! Full-factorial Monte Carlo comparison of the baseline estimators with PMM2.
//!
//! Every (model, sample size, innovation law) cell is replicated with seeds
//! derived from the root seed, the cell label and the replication index, so
//! the report is bit-identical for any number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arima::{self, ModelSpec, DEFAULT_BURN_IN};
use crate::asymptotics;
use crate::baseline::{self, param_names};
use crate::diagnostics;
use crate::distributions::InnovationSpec;
use crate::error::{Error, Result};
use crate::moments::central_moments;
use crate::numfmt::{fmt_sig, round_json};
use crate::pmm2::{self, Pmm2Config};
use crate::rng::SeedTree;
use crate::Method;

const LB_LAGS: usize = 10;
const LB_ALPHA: f64 = 0.05;
const Z_975: f64 = 1.959_963_984_540_054;
/// Cells with more failed replications than this share are flagged invalid.
pub const MAX_FAILURE_RATE: f64 = 0.01;

fn default_bootstrap() -> usize {
    1000
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_estimators() -> Vec<Method> {
    vec![Method::Css, Method::Pmm2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub root_seed: u64,
    pub replications: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    pub sample_sizes: Vec<usize>,
    pub models: Vec<ModelSpec>,
    pub innovations: Vec<InnovationSpec>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Method>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Fit a constant in every estimator.
    #[serde(default)]
    pub intercept: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            // Surface the offending key when the parser knows it.
            let path = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("<root>")
                .to_string();
            Error::config(path, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 30 {
            return Err(Error::config(
                "replications",
                format!("at least 30 replications are required, got {}", self.replications),
            ));
        }
        if self.bootstrap_resamples < 100 {
            return Err(Error::config(
                "bootstrap_resamples",
                format!("at least 100 resamples are required, got {}", self.bootstrap_resamples),
            ));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::config("sample_sizes", "must not be empty"));
        }
        if self.models.is_empty() {
            return Err(Error::config("models", "must not be empty"));
        }
        if self.innovations.is_empty() {
            return Err(Error::config("innovations", "must not be empty"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if let Err(e) = arima::check_admissible(m) {
                return Err(Error::config(format!("models[{i}]"), e.to_string()));
            }
            let needed = m.d + m.p() + m.q() + 11;
            if let Some(n) = self.sample_sizes.iter().find(|n| **n < needed) {
                return Err(Error::config(
                    "sample_sizes",
                    format!("size {n} is too short for {} (need {needed})", m.label()),
                ));
            }
        }
        for (i, inn) in self.innovations.iter().enumerate() {
            if let Err(e) = inn.validate() {
                return Err(Error::config(format!("innovations[{i}]"), e.to_string()));
            }
        }
        if !self.estimators.contains(&Method::Pmm2) {
            return Err(Error::config("estimators", "must include pmm2"));
        }
        let mut sorted = self.estimators.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.estimators.len() {
            return Err(Error::config("estimators", "duplicate entries"));
        }
        Ok(())
    }

    /// Desk-scale default: ARIMA(1,1,0) with phi = 0.7, N in {100, 500},
    /// Gaussian, Gamma(2) and chi-square(3) innovations, 500 replications.
    pub fn desk_default() -> Self {
        ExperimentConfig {
            root_seed: 20_250_101,
            replications: 500,
            bootstrap_resamples: default_bootstrap(),
            sample_sizes: vec![100, 500],
            models: vec![ModelSpec::new(vec![0.7], 1, vec![])],
            innovations: vec![
                InnovationSpec::Gaussian,
                InnovationSpec::GAMMA_DEFAULT,
                InnovationSpec::CHISQUARE_DEFAULT,
            ],
            estimators: default_estimators(),
            burn_in: DEFAULT_BURN_IN,
            intercept: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub bias_ci: [f64; 2],
    pub mse: f64,
    pub mse_ci: [f64; 2],
    pub rmse: f64,
    pub mae: f64,
    pub coverage95: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub method: Method,
    pub params: Vec<ParamSummary>,
}

/// `mse_baseline / mse_pmm2` for one parameter with a paired bootstrap CI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReSummary {
    pub name: String,
    pub re: f64,
    pub re_ci: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDiagnostics {
    pub pmm2_resid_gamma3_mean: f64,
    pub pmm2_resid_gamma3_sd: f64,
    /// Share of replications whose true-innovation residuals pass Ljung-Box.
    pub lb_pass_rate_true: f64,
    pub lb_pass_rate_pmm2: f64,
    /// Share of non-fallback PMM2 solves that converged within 10 iterations.
    pub converged_within_10: f64,
    pub mean_iterations: f64,
    pub fallback_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub model: ModelSpec,
    pub model_label: String,
    pub n: usize,
    pub innovation: InnovationSpec,
    pub gamma3: f64,
    pub gamma4: f64,
    pub re_theoretical: Option<f64>,
    pub replications: usize,
    pub completed: usize,
    pub failures: usize,
    pub failure_reasons: Vec<String>,
    pub valid: bool,
    /// Estimator in the numerator of the efficiency ratios.
    pub baseline: Method,
    pub estimators: Vec<EstimatorSummary>,
    pub re: Vec<ReSummary>,
    /// Sum of baseline MSEs over sum of PMM2 MSEs across all parameters.
    pub re_total: f64,
    pub diagnostics: CellDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub root_seed: u64,
    pub replications: usize,
    pub bootstrap_resamples: usize,
    pub total_replications: usize,
    pub total_failures: usize,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReCurveRow {
    pub model_label: String,
    pub n: usize,
    pub innovation: String,
    pub gamma3: f64,
    pub gamma4: f64,
    pub re_empirical: f64,
    pub re_theoretical: Option<f64>,
}

struct Cell {
    model: ModelSpec,
    n: usize,
    innovation: InnovationSpec,
}

impl Cell {
    fn label(&self) -> String {
        format!("{}|n={}|{}", self.model.label(), self.n, self.innovation)
    }
}

/// Estimates and standard errors of one estimator.
type EstimateSe = (Vec<f64>, Vec<f64>);

struct Replication {
    /// Estimates and standard errors per configured estimator, or the reason
    /// the replication was discarded.
    fits: std::result::Result<Vec<EstimateSe>, String>,
    lb_true_pass: Option<bool>,
    lb_pmm2_pass: Option<bool>,
    pmm2_gamma3: Option<f64>,
    iterations: usize,
    fallback: bool,
}

fn replicate(cell: &Cell, tree: SeedTree, cfg: &ExperimentConfig) -> Replication {
    let mut out = Replication {
        fits: Err(String::new()),
        lb_true_pass: None,
        lb_pmm2_pass: None,
        pmm2_gamma3: None,
        iterations: 0,
        fallback: false,
    };
    let eps = match cell.innovation.sample_with(cell.n + cfg.burn_in, &mut tree.rng()) {
        Ok(e) => e,
        Err(e) => {
            out.fits = Err(e.to_string());
            return out;
        }
    };
    let y = match arima::simulate(&cell.model, &eps, cfg.burn_in) {
        Ok(y) => y,
        Err(e) => {
            out.fits = Err(e.to_string());
            return out;
        }
    };
    let (p, d, q) = (cell.model.p(), cell.model.d, cell.model.q());
    let k = p + q;

    if let Ok(z) = arima::difference(&y, d) {
        let mut truth = cell.model.clone();
        truth.d = 0;
        if let Ok(r) = arima::residuals(&z, &truth) {
            out.lb_true_pass = diagnostics::ljung_box(&r, LB_LAGS, 0)
                .ok()
                .map(|t| t.p_value > LB_ALPHA);
        }
    }

    let pcfg = Pmm2Config {
        intercept: cfg.intercept,
        ..Pmm2Config::default()
    };
    let est = match pmm2::fit_detailed(&y, p, d, q, &pcfg) {
        Ok(e) => e,
        Err(e) => {
            out.fits = Err(format!("pmm2: {e}"));
            return out;
        }
    };
    out.iterations = est.fit.iterations;
    out.fallback = est.fit.fallback_used;
    let (m2, m3, _) = central_moments(&est.fit.residuals);
    if m2 > 0.0 {
        out.pmm2_gamma3 = Some(m3 / m2.powf(1.5));
    }
    if LB_LAGS > k {
        out.lb_pmm2_pass = diagnostics::ljung_box(&est.fit.residuals, LB_LAGS, k)
            .ok()
            .map(|t| t.p_value > LB_ALPHA);
    }

    let mut fits = Vec::with_capacity(cfg.estimators.len());
    for method in &cfg.estimators {
        let r = match method {
            Method::Pmm2 => {
                if !est.fit.converged {
                    Err("pmm2: solver did not converge".to_string())
                } else if est.fit.fallback_used {
                    Ok((est.fit.theta_hat[..k].to_vec(), est.baseline.se[..k].to_vec()))
                } else {
                    asymptotics::sandwich(&est.fit, &est.design)
                        .map(|c| (est.fit.theta_hat[..k].to_vec(), c.se[..k].to_vec()))
                        .map_err(|e| format!("pmm2 covariance: {e}"))
                }
            }
            Method::Css => {
                if est.baseline.converged {
                    Ok((est.baseline.theta_hat[..k].to_vec(), est.baseline.se[..k].to_vec()))
                } else {
                    Err("css: did not converge".to_string())
                }
            }
            Method::Ols => {
                if q > 0 {
                    // Not applicable; recorded as NaN and skipped in aggregation.
                    Ok((vec![f64::NAN; k], vec![f64::NAN; k]))
                } else {
                    baseline::fit_arima(&y, p, d, 0, Method::Ols, cfg.intercept)
                        .map(|f| (f.theta_hat[..k].to_vec(), f.se[..k].to_vec()))
                        .map_err(|e| format!("ols: {e}"))
                }
            }
        };
        match r {
            Ok(v) => fits.push(v),
            Err(e) => {
                out.fits = Err(e);
                return out;
            }
        }
    }
    out.fits = Ok(fits);
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn percentile_ci(mut v: Vec<f64>) -> [f64; 2] {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    [quantile(&v, 0.025), quantile(&v, 0.975)]
}

fn baseline_for(cell: &Cell, estimators: &[Method]) -> Method {
    if cell.model.q() == 0 && estimators.contains(&Method::Ols) {
        Method::Ols
    } else {
        Method::Css
    }
}

fn aggregate(cell: &Cell, reps: &[Replication], cfg: &ExperimentConfig, tree: SeedTree) -> CellReport {
    let k = cell.model.p() + cell.model.q();
    let truth = cell.model.arma_params();
    let names = param_names(cell.model.p(), cell.model.q(), false);
    let ok: Vec<&Vec<EstimateSe>> = reps.iter().filter_map(|r| r.fits.as_ref().ok()).collect();
    let mut failure_reasons: Vec<String> = reps.iter().filter_map(|r| r.fits.as_ref().err().cloned()).collect();
    failure_reasons.sort();
    failure_reasons.dedup();
    let failures = reps.len() - ok.len();
    let n_ok = ok.len();

    // errors[e][j][r] and half-widths
    let ne = cfg.estimators.len();
    let mut errors = vec![vec![Vec::with_capacity(n_ok); k]; ne];
    let mut covered = vec![vec![Vec::with_capacity(n_ok); k]; ne];
    for fits in &ok {
        for (e, (est, se)) in fits.iter().enumerate() {
            for j in 0..k {
                let err = est[j] - truth[j];
                errors[e][j].push(err);
                covered[e][j].push(if err.abs() <= Z_975 * se[j] { 1.0 } else { 0.0 });
            }
        }
    }

    let base_method = baseline_for(cell, &cfg.estimators);
    let ib = cfg.estimators.iter().position(|m| *m == base_method);
    let ip = cfg
        .estimators
        .iter()
        .position(|m| *m == Method::Pmm2)
        .expect("validated");
    let applicable = |e: usize| !(cfg.estimators[e] == Method::Ols && cell.model.q() > 0);

    // Paired bootstrap over replication indices, shared by all statistics.
    let b = cfg.bootstrap_resamples;
    let mut boot_bias = vec![vec![Vec::with_capacity(b); k]; ne];
    let mut boot_mse = vec![vec![Vec::with_capacity(b); k]; ne];
    let mut boot_re = vec![Vec::with_capacity(b); k];
    if n_ok > 1 {
        let mut rng = tree.child_label("bootstrap").rng();
        let mut idx = vec![0usize; n_ok];
        for _ in 0..b {
            for i in idx.iter_mut() {
                *i = rng.random_range(0..n_ok);
            }
            for e in 0..ne {
                for j in 0..k {
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for &i in &idx {
                        let v = errors[e][j][i];
                        s1 += v;
                        s2 += v * v;
                    }
                    boot_bias[e][j].push(s1 / n_ok as f64);
                    boot_mse[e][j].push(s2 / n_ok as f64);
                }
            }
            if let Some(ib) = ib {
                for j in 0..k {
                    boot_re[j].push(boot_mse[ib][j].last().unwrap() / boot_mse[ip][j].last().unwrap());
                }
            }
        }
    }

    let mut estimators = Vec::with_capacity(ne);
    for e in 0..ne {
        if !applicable(e) {
            continue;
        }
        let params = (0..k)
            .map(|j| {
                let errs = &errors[e][j];
                let mse = errs.iter().map(|v| v * v).sum::<f64>() / n_ok as f64;
                ParamSummary {
                    name: names[j].clone(),
                    truth: truth[j],
                    bias: mean(errs),
                    bias_ci: percentile_ci(boot_bias[e][j].clone()),
                    mse,
                    mse_ci: percentile_ci(boot_mse[e][j].clone()),
                    rmse: mse.sqrt(),
                    mae: errs.iter().map(|v| v.abs()).sum::<f64>() / n_ok as f64,
                    coverage95: mean(&covered[e][j]),
                }
            })
            .collect();
        estimators.push(EstimatorSummary {
            method: cfg.estimators[e],
            params,
        });
    }

    let mse_of = |m: Method, j: usize| {
        estimators
            .iter()
            .find(|s| s.method == m)
            .map(|s| s.params[j].mse)
            .unwrap_or(f64::NAN)
    };
    let mut re = Vec::new();
    let (mut sum_base, mut sum_pmm2) = (0.0, 0.0);
    if ib.is_some() {
        for j in 0..k {
            let (mb, mp) = (mse_of(base_method, j), mse_of(Method::Pmm2, j));
            sum_base += mb;
            sum_pmm2 += mp;
            re.push(ReSummary {
                name: names[j].clone(),
                re: mb / mp,
                re_ci: percentile_ci(boot_re[j].clone()),
            });
        }
    }

    let g3: Vec<f64> = reps.iter().filter_map(|r| r.pmm2_gamma3).collect();
    let rate = |v: Vec<bool>| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().filter(|b| **b).count() as f64 / v.len() as f64
        }
    };
    let solved: Vec<&Replication> = reps.iter().filter(|r| r.fits.is_ok() && !r.fallback).collect();
    let diagnostics = CellDiagnostics {
        pmm2_resid_gamma3_mean: if g3.is_empty() { f64::NAN } else { mean(&g3) },
        pmm2_resid_gamma3_sd: if g3.len() < 2 { f64::NAN } else { sd(&g3) },
        lb_pass_rate_true: rate(reps.iter().filter_map(|r| r.lb_true_pass).collect()),
        lb_pass_rate_pmm2: rate(reps.iter().filter_map(|r| r.lb_pmm2_pass).collect()),
        converged_within_10: rate(solved.iter().map(|r| r.iterations <= 10).collect()),
        mean_iterations: if solved.is_empty() {
            f64::NAN
        } else {
            solved.iter().map(|r| r.iterations as f64).sum::<f64>() / solved.len() as f64
        },
        fallback_rate: rate(reps.iter().filter(|r| r.fits.is_ok()).map(|r| r.fallback).collect()),
    };

    let (gamma3, gamma4) = cell.innovation.skew_kurtosis();
    CellReport {
        model: cell.model.clone(),
        model_label: cell.model.label(),
        n: cell.n,
        innovation: cell.innovation,
        gamma3,
        gamma4,
        re_theoretical: asymptotics::re_theoretical(gamma3, gamma4).ok(),
        replications: reps.len(),
        completed: n_ok,
        failures,
        failure_reasons,
        valid: n_ok > 1 && failures as f64 <= MAX_FAILURE_RATE * reps.len() as f64,
        baseline: base_method,
        estimators,
        re,
        re_total: if ib.is_some() { sum_base / sum_pmm2 } else { f64::NAN },
        diagnostics,
    }
}

/// Runs the experiment on the global rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<McReport> {
    cfg.validate()?;
    let cells: Vec<Cell> = cfg
        .models
        .iter()
        .flat_map(|m| {
            cfg.sample_sizes.iter().flat_map(move |&n| {
                cfg.innovations.iter().map(move |inn| Cell {
                    model: m.clone(),
                    n,
                    innovation: *inn,
                })
            })
        })
        .collect();
    let root = SeedTree::new(cfg.root_seed);
    let trees: Vec<SeedTree> = cells.iter().map(|c| root.child_label(&c.label())).collect();

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replications).map(move |r| (c, r)))
        .collect();
    // `collect` on an indexed parallel iterator preserves job order.
    let outcomes: Vec<Replication> = jobs
        .par_iter()
        .map(|&(c, r)| replicate(&cells[c], trees[c].child(r as u64), cfg))
        .collect();

    let reports: Vec<CellReport> = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let reps = &outcomes[c * cfg.replications..(c + 1) * cfg.replications];
            aggregate(cell, reps, cfg, trees[c])
        })
        .collect();
    let total_failures = reports.iter().map(|r| r.failures).sum();
    for r in reports.iter().filter(|r| !r.valid) {
        log::warn!(
            "cell {} n={} {} invalid: {} of {} replications failed",
            r.model_label,
            r.n,
            r.innovation,
            r.failures,
            r.replications
        );
    }
    Ok(McReport {
        root_seed: cfg.root_seed,
        replications: cfg.replications,
        bootstrap_resamples: cfg.bootstrap_resamples,
        total_replications: jobs.len(),
        total_failures,
        cells: reports,
    })
}

/// Runs the experiment on a dedicated pool with `threads` workers.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<McReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

/// Empirical RE (summed over parameters) next to the theoretical value at
/// the law's exact cumulants, one row per cell.
pub fn re_curve(report: &McReport) -> Vec<ReCurveRow> {
    report
        .cells
        .iter()
        .map(|c| ReCurveRow {
            model_label: c.model_label.clone(),
            n: c.n,
            innovation: c.innovation.to_string(),
            gamma3: c.gamma3,
            gamma4: c.gamma4,
            re_empirical: c.re_total,
            re_theoretical: c.re_theoretical,
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl McReport {
    pub fn cell(&self, model: &ModelSpec, n: usize, innovation: &InnovationSpec) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| &c.model == model && c.n == n && &c.innovation == innovation)
    }

    /// One row per cell, estimator and parameter. Efficiency columns are
    /// filled on PMM2 rows only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,d,n,innovation,estimator,param,truth,bias,bias_lo,bias_hi,mse,mse_lo,mse_hi,rmse,mae,coverage95,completed,failures,valid,baseline,re,re_lo,re_hi\n",
        );
        for c in &self.cells {
            for est in &c.estimators {
                for (j, p) in est.params.iter().enumerate() {
                    let re_cols = match (est.method, c.re.get(j)) {
                        (Method::Pmm2, Some(r)) => {
                            format!("{},{},{}", fmt_sig(r.re), fmt_sig(r.re_ci[0]), fmt_sig(r.re_ci[1]))
                        }
                        _ => ",,".to_string(),
                    };
                    let fields = [
                        csv_field(&c.model_label),
                        c.model.d.to_string(),
                        c.n.to_string(),
                        csv_field(&c.innovation.to_string()),
                        est.method.to_string(),
                        p.name.clone(),
                        fmt_sig(p.truth),
                        fmt_sig(p.bias),
                        fmt_sig(p.bias_ci[0]),
                        fmt_sig(p.bias_ci[1]),
                        fmt_sig(p.mse),
                        fmt_sig(p.mse_ci[0]),
                        fmt_sig(p.mse_ci[1]),
                        fmt_sig(p.rmse),
                        fmt_sig(p.mae),
                        fmt_sig(p.coverage95),
                        c.completed.to_string(),
                        c.failures.to_string(),
                        c.valid.to_string(),
                        c.baseline.to_string(),
                        re_cols,
                    ];
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Pretty JSON with every float rounded to 10 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_json(&mut v);
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn re_curve_csv(&self) -> String {
        let mut out = String::from("model,n,innovation,gamma3,gamma4,re_empirical,re_theoretical\n");
        for r in re_curve(self) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&r.model_label),
                r.n,
                csv_field(&r.innovation),
                fmt_sig(r.gamma3),
                fmt_sig(r.gamma4),
                fmt_sig(r.re_empirical),
                r.re_theoretical.map(fmt_sig).unwrap_or_else(|| "NA".into())
            ));
        }
        out
    }
}
