//! Simulation oracles for the estimators, diagnostics and the experiment runner.

use pmm2_arima::arima::{self, ModelSpec};
use pmm2_arima::asymptotics;
use pmm2_arima::baseline;
use pmm2_arima::diagnostics::{self, ValidationMode};
use pmm2_arima::distributions::{sample, theoretical_cumulants, InnovationSpec};
use pmm2_arima::moments::sample_moments;
use pmm2_arima::montecarlo::{self, ExperimentConfig};
use pmm2_arima::pmm2::{self, Pmm2Config, SolverConfig};
use pmm2_arima::{FittedArima, Method};

const LAWS: [InnovationSpec; 4] = [
    InnovationSpec::Gaussian,
    InnovationSpec::GAMMA_DEFAULT,
    InnovationSpec::LOGNORMAL_DEFAULT,
    InnovationSpec::CHISQUARE_DEFAULT,
];

fn simulate(model: &ModelSpec, law: InnovationSpec, n: usize, seed: u64) -> Vec<f64> {
    let eps = sample(&law, n + 200, seed).unwrap();
    arima::simulate(model, &eps, 200).unwrap()
}

fn sd(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn lag1(x: &[f64]) -> f64 {
    diagnostics::autocorrelations(x, 1)[0]
}

#[test]
fn sample_cumulants_within_three_standard_errors() {
    for (i, law) in LAWS.iter().enumerate() {
        let n = 1_000_000;
        let x = sample(law, n, 100 + i as u64).unwrap();
        let truth = theoretical_cumulants(law).unwrap();
        let m = sample_moments(&x).unwrap();
        // Influence functions of skewness and kurtosis at a standardized law.
        let (g3, mu4) = (truth.gamma3, truth.mu4);
        let if3: Vec<f64> = x
            .iter()
            .map(|v| v.powi(3) - g3 - 3.0 * v - 1.5 * g3 * (v * v - 1.0))
            .collect();
        let if4: Vec<f64> = x
            .iter()
            .map(|v| v.powi(4) - mu4 - 4.0 * g3 * v - 2.0 * mu4 * (v * v - 1.0))
            .collect();
        let se3 = sd(&if3) / (n as f64).sqrt();
        let se4 = sd(&if4) / (n as f64).sqrt();
        assert!(
            (m.gamma3 - g3).abs() < 3.0 * se3,
            "{law}: g3 {} vs {g3} (se {se3})",
            m.gamma3
        );
        assert!(
            (m.gamma4 - truth.gamma4).abs() < 3.0 * se4,
            "{law}: g4 {} vs {} (se {se4})",
            m.gamma4,
            truth.gamma4
        );
    }
}

#[test]
fn moment_estimates_on_large_samples() {
    let g = sample_moments(&sample(&InnovationSpec::GAMMA_DEFAULT, 1_000_000, 3).unwrap()).unwrap();
    assert!((g.gamma3 - 2f64.sqrt()).abs() < 0.02);
    let n = sample_moments(&sample(&InnovationSpec::Gaussian, 1_000_000, 4).unwrap()).unwrap();
    assert!(n.gamma4.abs() < 0.03);
}

#[test]
fn simulated_autocorrelation() {
    let ar = ModelSpec::new(vec![0.7], 0, vec![]);
    let y = simulate(&ar, InnovationSpec::Gaussian, 50_000, 9);
    assert!((lag1(&y) - 0.7).abs() < 0.03);
    let ari = ModelSpec::new(vec![0.7], 1, vec![]);
    let y = simulate(&ari, InnovationSpec::GAMMA_DEFAULT, 50_000, 10);
    assert_eq!(y.len(), 50_000);
    let z = arima::difference(&y, 1).unwrap();
    assert!((lag1(&z) - 0.7).abs() < 0.03);
}

#[test]
fn ma_residual_variance_matches_innovations() {
    let ma = ModelSpec::new(vec![], 0, vec![-0.5]);
    let z = simulate(&ma, InnovationSpec::Gaussian, 100_000, 11);
    let r = arima::residuals(&z, &ma).unwrap();
    let var = r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64;
    assert!((var - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn css_recovers_ma_and_arma() {
    let ma = ModelSpec::new(vec![], 0, vec![-0.5]);
    let z = simulate(&ma, InnovationSpec::Gaussian, 100_000, 12);
    let fit = baseline::css_estimate(&z, 0, 1, false, None).unwrap();
    assert!(fit.converged);
    assert!((fit.theta_hat[0] + 0.5).abs() < 0.02);

    let arma = ModelSpec::new(vec![0.6], 0, vec![-0.4]);
    let z = simulate(&arma, InnovationSpec::GAMMA_DEFAULT, 100_000, 13);
    let fit = baseline::css_estimate(&z, 1, 1, false, None).unwrap();
    assert!((fit.theta_hat[0] - 0.6).abs() < 0.03, "{:?}", fit.theta_hat);
    assert!((fit.theta_hat[1] + 0.4).abs() < 0.03, "{:?}", fit.theta_hat);
}

#[test]
fn pmm2_is_close_to_truth_on_skewed_data() {
    let model = ModelSpec::new(vec![0.6], 1, vec![-0.4]);
    let y = simulate(&model, InnovationSpec::GAMMA_DEFAULT, 20_000, 14);
    let est = pmm2::fit_detailed(&y, 1, 1, 1, &Pmm2Config::default()).unwrap();
    assert!(est.fit.converged && !est.fit.fallback_used);
    assert!((est.fit.theta_hat[0] - 0.6).abs() < 0.05);
    assert!((est.fit.theta_hat[1] + 0.4).abs() < 0.05);
    assert_eq!(est.fit.model.d, 1);
    assert_eq!(est.fit.residuals.len(), y.len() - 1 - 1);
    assert!((est.fit.moments.gamma3 - 2f64.sqrt()).abs() < 0.15);
}

#[test]
fn symmetric_residuals_keep_baseline() {
    let model = ModelSpec::new(vec![0.5], 0, vec![]);
    let y = simulate(&model, InnovationSpec::Gaussian, 3000, 15);
    let est = pmm2::fit_detailed(&y, 1, 0, 0, &Pmm2Config::default()).unwrap();
    assert!(est.fit.moments.gamma3.abs() < 0.1);
    assert!(est.fit.fallback_used);
    assert_eq!(est.fit.theta_hat, est.baseline.theta_hat);
    assert_eq!(est.fit.residuals, est.baseline.residuals);
}

#[test]
fn adaptive_moments_stay_close_to_one_pass() {
    let model = ModelSpec::new(vec![0.7], 1, vec![]);
    let y = simulate(&model, InnovationSpec::CHISQUARE_DEFAULT, 2000, 16);
    let one = pmm2::fit(&y, 1, 1, 0, &Pmm2Config::default()).unwrap();
    let cfg = Pmm2Config {
        adaptive: true,
        ..Pmm2Config::default()
    };
    let many = pmm2::fit(&y, 1, 1, 0, &cfg).unwrap();
    assert!(many.moment_rounds >= 1 && many.moment_rounds <= 5);
    assert!((one.theta_hat[0] - many.theta_hat[0]).abs() < 0.02);
}

#[test]
fn sandwich_matches_classical_ar1_formula() {
    // Gaussian innovations: the solver is forced to run and the sandwich
    // reduces to the least-squares variance (1 - phi^2) / n.
    let phi = 0.5;
    let n = 4000;
    let eps = sample(&InnovationSpec::Gaussian, n + 200, 17).unwrap();
    let z = arima::simulate(&ModelSpec::new(vec![phi], 0, vec![]), &eps, 200).unwrap();
    let base = baseline::ols_ar(&z, 1, false).unwrap();
    let design = pmm2::build_design(&z, &base).unwrap();
    let m = sample_moments(&base.residuals).unwrap();
    let fit = pmm2::newton_solve(&base.theta_hat, &design, &m, &SolverConfig::default()).unwrap();
    let rep = asymptotics::sandwich(&fit, &design).unwrap();
    let classical = ((1.0 - phi * phi) / n as f64).sqrt();
    assert!(
        (rep.se[0] / classical - 1.0).abs() < 0.10,
        "{} vs {classical}",
        rep.se[0]
    );
}

#[test]
fn sandwich_variance_scales_inversely_with_n() {
    let model = ModelSpec::new(vec![0.6], 0, vec![]);
    let var_at = |n: usize| -> f64 {
        let mut total = 0.0;
        for seed in 0..10u64 {
            let z = simulate(&model, InnovationSpec::GAMMA_DEFAULT, n, 1000 + seed);
            let est = pmm2::fit_detailed(&z, 1, 0, 0, &Pmm2Config::default()).unwrap();
            total += asymptotics::sandwich(&est.fit, &est.design).unwrap().se[0].powi(2);
        }
        total / 10.0
    };
    let ratio = var_at(4000) / var_at(2000);
    assert!((ratio - 0.5).abs() < 0.06, "{ratio}");
}

#[test]
fn ljung_box_size_on_white_noise() {
    let reps = 400;
    let rejections = (0..reps)
        .filter(|s| {
            let x = sample(&InnovationSpec::Gaussian, 10_000, 500 + s).unwrap();
            diagnostics::ljung_box(&x, 10, 0).unwrap().p_value < 0.05
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    // Binomial sd at 5% over 400 draws is about 1.1%.
    assert!((0.02..=0.085).contains(&rate), "{rate}");
}

#[test]
fn ljung_box_zero_autocorrelation_gives_unit_p_value() {
    let x = [1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0];
    let r = diagnostics::ljung_box(&x, 1, 0).unwrap();
    assert_eq!(r.stat, 0.0);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn jarque_bera_detects_asymmetry() {
    let x = sample(&InnovationSpec::GAMMA_DEFAULT, 100_000, 18).unwrap();
    assert!(diagnostics::jarque_bera(&x).unwrap().p_value < 1e-3);
    // Two-point law: gamma3 = 0, gamma4 = -2, so JB = 4 * 4 / 24.
    let r = diagnostics::jarque_bera(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
    assert!((r.stat - 4.0 * 4.0 / 24.0).abs() < 1e-12);
}

#[test]
fn information_criteria_depend_only_on_residuals() {
    let y = simulate(
        &ModelSpec::new(vec![0.4], 0, vec![]),
        InnovationSpec::GAMMA_DEFAULT,
        500,
        19,
    );
    let a = baseline::fit_arima(&y, 1, 0, 0, Method::Ols, false).unwrap();
    let b = baseline::fit_arima(&y, 1, 0, 0, Method::Css, false).unwrap();
    let ia = diagnostics::information_criteria(&a).unwrap();
    let mut b2 = b.clone();
    b2.residuals = a.residuals.clone();
    let ib = diagnostics::information_criteria(&b2).unwrap();
    assert_eq!(ia.aic, ib.aic);
    assert_eq!(ia.bic, ib.bic);
    assert!(!ia.post_hoc);
    let p = pmm2::fit(&y, 1, 0, 0, &Pmm2Config::default()).unwrap();
    assert!(diagnostics::information_criteria(&p).unwrap().post_hoc);
    assert_eq!(p.method(), Method::Pmm2);
}

#[test]
fn selection_on_simulated_series() {
    let th = diagnostics::SelectionThresholds::default();
    let model = ModelSpec::new(vec![0.7], 1, vec![]);
    let skewed = simulate(&model, InnovationSpec::GAMMA_DEFAULT, 1000, 20);
    let d = diagnostics::select_method(&skewed, 1, 1, 0, false, &th).unwrap();
    assert_eq!(d.recommendation, diagnostics::Recommendation::UsePmm2);
    let gauss = simulate(&model, InnovationSpec::Gaussian, 1000, 21);
    let d = diagnostics::select_method(&gauss, 1, 1, 0, false, &th).unwrap();
    assert_eq!(d.recommendation, diagnostics::Recommendation::UseBaseline);
    let short = simulate(&model, InnovationSpec::GAMMA_DEFAULT, 150, 22);
    let d = diagnostics::select_method(&short, 1, 1, 0, false, &th).unwrap();
    assert_ne!(d.recommendation, diagnostics::Recommendation::UsePmm2);
}

#[test]
fn true_model_forecast_error_matches_innovation_scale() {
    let model = ModelSpec::new(vec![0.7], 1, vec![-0.3]);
    let y = simulate(&model, InnovationSpec::Gaussian, 12_000, 23);
    let errors = diagnostics::one_step_errors(&model, &y, 2000).unwrap();
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    assert!((rmse - 1.0).abs() < 0.03, "{rmse}");
}

#[test]
fn fixed_split_on_symmetric_data_is_neutral() {
    let model = ModelSpec::new(vec![0.5], 0, vec![]);
    let y = simulate(&model, InnovationSpec::Gaussian, 3000, 15);
    let rep = diagnostics::rolling_validate(
        &y,
        1,
        0,
        0,
        ValidationMode::Fixed { train_fraction: 0.8 },
        &Pmm2Config::default(),
    )
    .unwrap();
    assert_eq!(rep.n_forecasts, 600);
    assert_eq!(rep.baseline.errors.len(), rep.pmm2.errors.len());
    assert!(rep.rmse_improvement_pct.abs() < 1.0, "{}", rep.rmse_improvement_pct);
}

#[test]
fn rolling_validation_favors_pmm2_on_skewed_data() {
    let model = ModelSpec::new(vec![0.6], 0, vec![]);
    let mode = ValidationMode::Rolling {
        window: 300,
        refit_every: 25,
    };
    let (mut base, mut pmm2_sum) = (0.0, 0.0);
    for seed in 0..20u64 {
        let y = simulate(&model, InnovationSpec::CHISQUARE_DEFAULT, 500, 3000 + seed);
        let rep = diagnostics::rolling_validate(&y, 1, 0, 0, mode, &Pmm2Config::default()).unwrap();
        assert_eq!(rep.n_forecasts, 200);
        assert_eq!(rep.refits, 8);
        base += rep.baseline.rmse;
        pmm2_sum += rep.pmm2.rmse;
    }
    assert!(pmm2_sum <= base, "pmm2 {pmm2_sum} vs baseline {base}");
}

#[test]
fn rolling_window_must_fit_in_series() {
    let y = simulate(&ModelSpec::new(vec![0.5], 0, vec![]), InnovationSpec::Gaussian, 100, 1);
    let mode = ValidationMode::Rolling {
        window: 150,
        refit_every: 10,
    };
    assert!(diagnostics::rolling_validate(&y, 1, 0, 0, mode, &Pmm2Config::default()).is_err());
}

#[test]
fn experiment_efficiency_properties() {
    let model = ModelSpec::new(vec![0.7], 1, vec![]);
    let cfg = ExperimentConfig {
        root_seed: 99,
        replications: 300,
        bootstrap_resamples: 500,
        sample_sizes: vec![100, 500, 1000],
        models: vec![model.clone()],
        innovations: vec![
            InnovationSpec::Gaussian,
            InnovationSpec::GAMMA_DEFAULT,
            InnovationSpec::LOGNORMAL_DEFAULT,
            InnovationSpec::CHISQUARE_DEFAULT,
        ],
        estimators: vec![Method::Ols, Method::Css, Method::Pmm2],
        burn_in: 200,
        intercept: false,
    };
    let rep = montecarlo::run(&cfg).unwrap();
    assert_eq!(rep.total_replications, 3 * 4 * 300);
    let cell = |n: usize, law: InnovationSpec| rep.cell(&model, n, &law).unwrap();

    // RE grows with N up to bootstrap noise.
    let small = cell(100, InnovationSpec::GAMMA_DEFAULT);
    let large = cell(1000, InnovationSpec::GAMMA_DEFAULT);
    assert!(
        large.re[0].re >= small.re[0].re_ci[0],
        "{} vs {:?}",
        large.re[0].re,
        small.re[0].re_ci
    );

    let curve = montecarlo::re_curve(&rep);
    assert_eq!(curve.len(), 12);
    for row in &curve {
        if row.innovation == "gaussian" {
            assert_eq!(row.re_theoretical, Some(1.0));
        }
    }
    let gamma = cell(500, InnovationSpec::GAMMA_DEFAULT);
    let theory = gamma.re_theoretical.unwrap();
    assert!(
        (gamma.re_total - theory).abs() / theory < 0.10,
        "{} vs {theory}",
        gamma.re_total
    );
    let ln = cell(500, InnovationSpec::LOGNORMAL_DEFAULT);
    assert!(
        ln.re_total <= ln.re_theoretical.unwrap() * 1.05,
        "{} vs {:?}",
        ln.re_total,
        ln.re_theoretical
    );

    // Chi-square bias interval covers zero; the solver converges quickly.
    let chi = cell(500, InnovationSpec::CHISQUARE_DEFAULT);
    let pm = chi.estimators.iter().find(|e| e.method == Method::Pmm2).unwrap();
    assert!(pm.params[0].bias_ci[0] <= 0.0 && 0.0 <= pm.params[0].bias_ci[1]);
    assert!(gamma.diagnostics.converged_within_10 > 0.99);

    // Least squares and CSS agree for a pure AR model.
    let ols = gamma.estimators.iter().find(|e| e.method == Method::Ols).unwrap();
    let css = gamma.estimators.iter().find(|e| e.method == Method::Css).unwrap();
    assert!((ols.params[0].mse / css.params[0].mse - 1.0).abs() < 0.02);
    assert_eq!(gamma.baseline, Method::Ols);
    assert!(rep.cells.iter().all(|c| c.valid));
}
