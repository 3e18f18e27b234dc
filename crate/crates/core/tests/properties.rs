use proptest::prelude::*;

use nalgebra::{DMatrix, DVector};
use pmm2_arima::arima::{self, ModelSpec};
use pmm2_arima::asymptotics::re_theoretical;
use pmm2_arima::diagnostics::{decide, SelectionThresholds};
use pmm2_arima::moments::{central_moments, sample_moments};
use pmm2_arima::pmm2::{self, Pmm2Design, SolverConfig};
use pmm2_arima::rng::SeedTree;
use pmm2_arima::MomentSet;

fn coefs(max_len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, 0..=max_len)
}

/// AR coefficients whose absolute sum is below one, hence stationary.
fn stationary_phi(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 0..=max_len).prop_map(|v| {
        let s: f64 = v.iter().map(|c| c.abs()).sum();
        let scale = if s > 0.9 { 0.9 / s } else { 1.0 };
        v.into_iter().map(|c| c * scale).collect()
    })
}

fn noise(n: usize, seed: u64) -> Vec<f64> {
    pmm2_arima::distributions::sample(&pmm2_arima::InnovationSpec::GAMMA_DEFAULT, n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn difference_inverts_integrate(z in prop::collection::vec(-100.0..100.0f64, 1..60), d in 0usize..4) {
        let back = arima::difference(&arima::integrate(&z, d), d).unwrap();
        prop_assert_eq!(back.len(), z.len());
        for (a, b) in back.iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * 10f64.powi(d as i32));
        }
    }

    #[test]
    fn ar_residuals_reproduce_innovations(phi in stationary_phi(3), c in -2.0..2.0f64, seed in any::<u64>()) {
        let model = ModelSpec::new(phi, 0, vec![]).with_intercept(c);
        let eps = noise(200, seed);
        let z = arima::simulate(&model, &eps, 0).unwrap();
        let r = arima::residuals(&z, &model).unwrap();
        let m = model.presample();
        for (a, b) in r.iter().zip(&eps[m..]) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn arma_residuals_converge_to_innovations(
        phi in stationary_phi(2),
        theta in prop::collection::vec(-0.7..0.7f64, 1..=2),
        seed in any::<u64>(),
    ) {
        let theta = if theta.len() == 2 { vec![theta[0], theta[1] * (1.0 - theta[0].abs()) * 0.5] } else { theta };
        let model = ModelSpec::new(phi, 0, theta);
        prop_assume!(arima::is_admissible(&model));
        let eps = noise(600, seed);
        let z = arima::simulate(&model, &eps, 0).unwrap();
        let r = arima::residuals(&z, &model).unwrap();
        let m = model.presample();
        // The zero presample transient dies out geometrically.
        for t in (r.len() - 50)..r.len() {
            prop_assert!((r[t] - eps[t + m]).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_lands_in_admissible_region(phi in coefs(4, 3.0), theta in coefs(3, 3.0), margin in 1e-4..0.1f64) {
        let model = ModelSpec::new(phi, 1, theta);
        let projected = arima::project_to_admissible(&model, margin);
        prop_assert!(arima::is_admissible(&projected));
        if arima::is_admissible(&model) {
            prop_assert_eq!(projected, model);
        }
    }

    #[test]
    fn re_is_even_and_at_least_one(g3 in -3.0..3.0f64, g4 in -1.9..20.0f64) {
        if let Ok(re) = re_theoretical(g3, g4) {
            prop_assert!(re >= 1.0);
            prop_assert_eq!(re, re_theoretical(-g3, g4).unwrap());
            if g3 == 0.0 {
                prop_assert_eq!(re, 1.0);
            } else {
                prop_assert!(re > 1.0);
            }
        } else {
            prop_assert!(2.0 + g4 - g3 * g3 <= 0.0);
        }
    }

    #[test]
    fn re_increases_with_asymmetry(a in 0.0..1.2f64, b in 0.0..1.2f64, g4 in 0.0..5.0f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(re_theoretical(lo, g4).unwrap() < re_theoretical(hi, g4).unwrap());
    }

    #[test]
    fn moments_shift_and_scale(xs in prop::collection::vec(-10.0..10.0f64, 3..50), shift in -50.0..50.0f64, scale in 0.1..10.0f64) {
        let (m2, m3, m4) = central_moments(&xs);
        let ys: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let (n2, n3, n4) = central_moments(&ys);
        let tol = 1e-8;
        prop_assert!((n2 - scale.powi(2) * m2).abs() <= tol * (1.0 + n2.abs()));
        prop_assert!((n3 - scale.powi(3) * m3).abs() <= tol * (1.0 + n2.powf(1.5)));
        prop_assert!((n4 - scale.powi(4) * m4).abs() <= tol * (1.0 + n4.abs()));
    }

    #[test]
    fn grouped_quadratic_matches_score_terms(
        theta in -0.9..0.9f64,
        rows in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..20),
        mu2 in 0.5..2.0f64,
        g3 in -1.5..1.5f64,
        k in 4.0..10.0f64,
    ) {
        let m = MomentSet::from_central(mu2, g3 * mu2.powf(1.5), k * mu2 * mu2);
        prop_assume!(m.as_ref().is_ok_and(|m| !m.is_degenerate()));
        let m = m.unwrap();
        let x = DMatrix::from_iterator(rows.len(), 1, rows.iter().map(|r| r.0));
        let z = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let design = Pmm2Design::new(x, z, 1, 0, false).unwrap();
        let s = pmm2::score_terms(&[theta], &design, &m);
        for (i, (xt, zt)) in rows.iter().enumerate() {
            let eta = xt * theta;
            let (a, b, c) = pmm2::quadratic_coefficients(*zt, &m);
            let grouped = -(a * eta * eta + b * eta + c);
            prop_assert!((s[i] * m.delta - grouped).abs() < 1e-10 * (1.0 + grouped.abs()));
        }
    }

    #[test]
    fn solution_is_scale_equivariant(phi in -0.8..0.8f64, seed in any::<u64>(), c in 0.2..5.0f64) {
        let model = ModelSpec::new(vec![phi], 0, vec![]);
        let eps = noise(400, seed);
        let z = arima::simulate(&model, &eps, 100).unwrap();
        let resid = vec![0.0; z.len() - 1];
        let d1 = pmm2::design_from_residuals(&z, &resid, 1, 0, false).unwrap();
        let zc: Vec<f64> = z.iter().map(|v| v * c).collect();
        let d2 = pmm2::design_from_residuals(&zc, &resid, 1, 0, false).unwrap();
        let m1 = sample_moments(&eps[100..]).unwrap();
        let m2 = MomentSet::from_central(m1.mu2 * c * c, m1.mu3 * c.powi(3), m1.mu4 * c.powi(4)).unwrap();
        let cfg = SolverConfig { score_tol: 1e-9, ..SolverConfig::default() };
        let init = d1.least_squares().unwrap();
        let a = pmm2::newton_solve(&init, &d1, &m1, &cfg).unwrap();
        let b = pmm2::newton_solve(&init, &d2, &m2, &cfg).unwrap();
        prop_assert!((a.theta_hat[0] - b.theta_hat[0]).abs() < 1e-8);
    }

    #[test]
    fn decision_ignores_residual_order(xs in prop::collection::vec(-5.0..5.0f64, 20..80), seed in any::<u64>()) {
        let (m2, m3, m4) = central_moments(&xs);
        prop_assume!(m2 > 1e-6);
        let mut shuffled = xs.clone();
        // Deterministic Fisher-Yates with the crate's seed tree.
        use rand::Rng;
        let mut rng = SeedTree::new(seed).rng();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let (s2, s3, s4) = central_moments(&shuffled);
        let th = SelectionThresholds::default();
        let a = decide(m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, xs.len(), &th);
        let b = decide(s3 / s2.powf(1.5), s4 / (s2 * s2) - 3.0, xs.len(), &th);
        prop_assert_eq!(a.recommendation, b.recommendation);
    }

    #[test]
    fn seed_tree_is_a_pure_function(root in any::<u64>(), path in prop::collection::vec(any::<u64>(), 1..5)) {
        let walk = |root: u64| path.iter().fold(SeedTree::new(root), |t, k| t.child(*k)).seed();
        prop_assert_eq!(walk(root), walk(root));
        prop_assert_ne!(walk(root), walk(root.wrapping_add(1)));
    }
}
