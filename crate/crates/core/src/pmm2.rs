//! Second-order polynomial maximization (PMM2) on a fixed pseudo-regressor
//! design.
//!
//! With residual moments `mu2, mu3, mu4` and `delta = mu2 (mu4 - mu2^2) - mu3^2`,
//! the estimating equations are
//!
//! ```text
//! g_j(theta) = sum_t x_{j,t} s_t(theta)
//! s_t = [ (mu4 - mu2^2 + 2 mu3 eta_t)(z_t - eta_t) - mu3 (z_t^2 - eta_t^2 - mu2) ] / delta
//! ```
//!
//! with `eta_t = x_t' theta`. The system is quadratic in `theta`; it is solved
//! by Newton-Raphson with the analytic Jacobian
//! `J = sum_t lambda_t x_t x_t'`, `lambda_t = [2 mu3 (z_t - eta_t) - (mu4 - mu2^2)] / delta`.
//! When `mu3 = 0` the system collapses to the least squares normal equations.

use nalgebra::{DMatrix, DVector};

use crate::arima::{self, ModelSpec, DEFAULT_MARGIN};
use crate::baseline::{self, BaselineFit, CssConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{central_moments, MomentSet};
use crate::{FittedArima, Method};

pub use crate::moments::sample_moments;

/// Parameter-free regression design: rows
/// `(z_{t-1}..z_{t-p}, e_{t-1}..e_{t-q}, 1?)` for `t = m..n`, where `e` are
/// first-stage residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmm2Design {
    x: DMatrix<f64>,
    response: DVector<f64>,
    m: usize,
    p: usize,
    q: usize,
    intercept: bool,
}

impl Pmm2Design {
    /// Wraps an explicit design. Columns must be laid out as `p` AR columns,
    /// `q` MA columns, then an optional ones column.
    pub fn new(x: DMatrix<f64>, response: DVector<f64>, p: usize, q: usize, intercept: bool) -> Result<Self> {
        let k = p + q + usize::from(intercept);
        if x.ncols() != k {
            return Err(Error::Parameter(format!(
                "design has {} columns, expected p + q + intercept = {k}",
                x.ncols()
            )));
        }
        if x.nrows() != response.len() {
            return Err(Error::Parameter(format!(
                "design has {} rows but response has {}",
                x.nrows(),
                response.len()
            )));
        }
        if x.nrows() < k.max(1) {
            return Err(Error::Length {
                needed: k.max(1),
                got: x.nrows(),
            });
        }
        Ok(Pmm2Design {
            x,
            response,
            m: p.max(q),
            p,
            q,
            intercept,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn n_eff(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn presample(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn eta(&self, theta: &[f64]) -> DVector<f64> {
        &self.x * DVector::from_column_slice(theta)
    }

    /// Least squares solution on this design.
    pub fn least_squares(&self) -> Result<Vec<f64>> {
        let xtx = self.x.transpose() * &self.x;
        let xty = self.x.transpose() * &self.response;
        linalg::solve(&xtx, &xty)
            .map(|b| b.iter().copied().collect())
            .ok_or_else(|| Error::Rank("X'X is singular".into()))
    }

    /// `z - X theta`.
    pub fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        (&self.response - self.eta(theta)).iter().copied().collect()
    }
}

/// Builds the design from a differenced series and the first-stage residuals
/// aligned with it (`residuals[i]` belongs to `z[m + i]`).
pub fn design_from_residuals(z: &[f64], residuals: &[f64], p: usize, q: usize, intercept: bool) -> Result<Pmm2Design> {
    let m = p.max(q);
    let k = p + q + usize::from(intercept);
    if z.len() < m + k.max(1) {
        return Err(Error::Length {
            needed: m + k.max(1),
            got: z.len(),
        });
    }
    if residuals.len() != z.len() - m {
        return Err(Error::Parameter(format!(
            "expected {} baseline residuals aligned with the series, got {}",
            z.len() - m,
            residuals.len()
        )));
    }
    // Residual at series index s, zero before the presample cut.
    let resid_at = |s: usize| if s < m { 0.0 } else { residuals[s - m] };
    let rows = z.len() - m;
    let mut x = DMatrix::zeros(rows, k);
    let mut response = DVector::zeros(rows);
    for (r, t) in (m..z.len()).enumerate() {
        for i in 0..p {
            x[(r, i)] = z[t - 1 - i];
        }
        for j in 0..q {
            x[(r, p + j)] = resid_at(t - 1 - j);
        }
        if intercept {
            x[(r, p + q)] = 1.0;
        }
        response[r] = z[t];
    }
    Pmm2Design::new(x, response, p, q, intercept)
}

/// Design from a baseline fit on the differenced series `z`.
pub fn build_design(z: &[f64], baseline: &BaselineFit) -> Result<Pmm2Design> {
    let zc: Vec<f64> = z.iter().map(|v| v - baseline.center).collect();
    design_from_residuals(
        &zc,
        &baseline.residuals,
        baseline.model.p(),
        baseline.model.q(),
        baseline.intercept,
    )
}

/// Per-observation bracket `s_t(theta)` of the estimating equations.
pub fn score_terms(theta: &[f64], design: &Pmm2Design, moments: &MomentSet) -> DVector<f64> {
    let eta = design.eta(theta);
    let w = moments.fourth_cumulant_weight();
    let MomentSet { mu2, mu3, delta, .. } = *moments;
    DVector::from_iterator(
        eta.len(),
        eta.iter()
            .zip(design.response.iter())
            .map(|(&e, &z)| ((w + 2.0 * mu3 * e) * (z - e) - mu3 * (z * z - e * e - mu2)) / delta),
    )
}

/// Estimating equations `g(theta) = X' s(theta)`.
pub fn score(theta: &[f64], design: &Pmm2Design, moments: &MomentSet) -> DVector<f64> {
    design.x.transpose() * score_terms(theta, design, moments)
}

/// Analytic Jacobian `sum_t lambda_t x_t x_t'`.
pub fn jacobian(theta: &[f64], design: &Pmm2Design, moments: &MomentSet) -> DMatrix<f64> {
    let eta = design.eta(theta);
    let w = moments.fourth_cumulant_weight();
    let lambda = DVector::from_iterator(
        eta.len(),
        eta.iter()
            .zip(design.response.iter())
            .map(|(&e, &z)| (2.0 * moments.mu3 * (z - e) - w) / moments.delta),
    );
    let mut weighted = design.x.clone();
    for (mut row, l) in weighted.row_iter_mut().zip(lambda.iter()) {
        row *= *l;
    }
    design.x.transpose() * weighted
}

/// Coefficients of the quadratic form `A eta^2 + B_t eta + C_t` obtained by
/// multiplying the bracket by `delta` and grouping powers of `eta`.
///
/// Note the sign: `delta * s_t = -(A eta^2 + B_t eta + C_t)`; both vanish at
/// the same roots.
pub fn quadratic_coefficients(z_t: f64, moments: &MomentSet) -> (f64, f64, f64) {
    let MomentSet { mu2, mu3, .. } = *moments;
    let w = moments.fourth_cumulant_weight();
    let a = mu3;
    let b = w - 2.0 * mu3 * z_t;
    let c = mu3 * z_t * z_t - z_t * w - mu2 * mu3;
    (a, b, c)
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub score_tol: f64,
    pub step_tol: f64,
    pub max_halvings: usize,
    pub margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 50,
            score_tol: 1e-6,
            step_tol: 1e-8,
            max_halvings: 20,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Outcome of the PMM2 solve.
///
/// `theta_hat` uses the same layout as the design columns. For [`fit`],
/// `residuals` are reconstructed through the ARIMA recursion; for
/// [`newton_solve`] they are `z - X theta_hat` on the design.
#[derive(Clone, Debug)]
pub struct Pmm2Fit {
    pub theta_hat: Vec<f64>,
    pub moments: MomentSet,
    pub score_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub fallback_used: bool,
    pub pinv_used: bool,
    pub residuals: Vec<f64>,
    pub model: ModelSpec,
    pub intercept: bool,
    /// Outer rounds of the adaptive moment update (1 for one-pass calibration).
    pub moment_rounds: usize,
    pub note: Option<String>,
}

impl FittedArima for Pmm2Fit {
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
        Method::Pmm2
    }
}

/// Newton-Raphson on the estimating equations with step halving whenever
/// `||g||` grows, projecting every iterate onto the admissible region.
pub fn newton_solve(init: &[f64], design: &Pmm2Design, moments: &MomentSet, cfg: &SolverConfig) -> Result<Pmm2Fit> {
    let k = design.k();
    if init.len() != k {
        return Err(Error::Parameter(format!(
            "initial vector has length {}, design has {k} columns",
            init.len()
        )));
    }
    let (p, q) = (design.p, design.q);
    let mut theta = init.to_vec();
    arima::project_param_vector(&mut theta, p, q, cfg.margin);
    let mut g = score(&theta, design, moments);
    let mut gnorm = linalg::inf_norm(&g);
    let mut best = (theta.clone(), gnorm);
    let mut converged = false;
    let mut pinv_used = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let jac = jacobian(&theta, design, moments);
        let step = match linalg::solve(&jac, &g) {
            Some(s) => s,
            None => {
                pinv_used = true;
                linalg::pseudo_solve(&jac, &g)
            }
        };

        let mut t = 1.0;
        let mut cand = theta.clone();
        let mut g_c = g.clone();
        let mut gnorm_c = f64::INFINITY;
        for h in 0..=cfg.max_halvings {
            cand = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            arima::project_param_vector(&mut cand, p, q, cfg.margin);
            g_c = score(&cand, design, moments);
            gnorm_c = linalg::inf_norm(&g_c);
            if gnorm_c <= gnorm || h == cfg.max_halvings {
                break;
            }
            t *= 0.5;
        }
        let moved = cand.iter().zip(&theta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        theta = cand;
        g = g_c;
        gnorm = gnorm_c;
        if gnorm.is_finite() && gnorm < best.1 {
            best = (theta.clone(), gnorm);
        }
        if gnorm < cfg.score_tol && moved < cfg.step_tol {
            converged = true;
            break;
        }
        if moved < cfg.step_tol * 1e-3 && gnorm >= cfg.score_tol {
            // Stalled, typically pinned on the admissibility boundary.
            break;
        }
    }

    let (theta_hat, score_norm) = if converged { (theta, gnorm) } else { best };
    let residuals = design.residuals(&theta_hat);
    Ok(Pmm2Fit {
        model: baseline::centered_model(&theta_hat, p, q, design.intercept),
        theta_hat,
        moments: *moments,
        score_norm,
        iterations,
        converged,
        fallback_used: false,
        pinv_used,
        residuals,
        intercept: design.intercept,
        moment_rounds: 1,
        note: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMethod {
    Css,
    Ols,
}

#[derive(Clone, Debug)]
pub struct Pmm2Config {
    pub baseline: BaselineMethod,
    pub intercept: bool,
    pub solver: SolverConfig,
    pub css: CssConfig,
    /// Retain the baseline when `|gamma3_hat|` is below this value.
    pub symmetry_threshold: f64,
    /// Re-estimate moments from the PMM2 residuals and re-solve.
    pub adaptive: bool,
    pub adaptive_max_rounds: usize,
    pub adaptive_tol: f64,
}

impl Default for Pmm2Config {
    fn default() -> Self {
        Pmm2Config {
            baseline: BaselineMethod::Css,
            intercept: false,
            solver: SolverConfig::default(),
            css: CssConfig::default(),
            symmetry_threshold: 0.1,
            adaptive: false,
            adaptive_max_rounds: 5,
            adaptive_tol: 1e-6,
        }
    }
}

/// Full two-stage result: the PMM2 fit together with the baseline and the
/// design it was solved on.
#[derive(Clone, Debug)]
pub struct Pmm2Estimate {
    pub fit: Pmm2Fit,
    pub baseline: BaselineFit,
    pub design: Pmm2Design,
}

/// Two-stage PMM2 estimate of ARIMA(p,d,q) on the undifferenced series `y`.
pub fn fit(y: &[f64], p: usize, d: usize, q: usize, cfg: &Pmm2Config) -> Result<Pmm2Fit> {
    fit_detailed(y, p, d, q, cfg).map(|e| e.fit)
}

pub fn fit_detailed(y: &[f64], p: usize, d: usize, q: usize, cfg: &Pmm2Config) -> Result<Pmm2Estimate> {
    let needed = d + p + q + 11;
    if y.len() < needed {
        return Err(Error::Length { needed, got: y.len() });
    }
    let z = arima::difference(y, d)?;
    let mut base = match cfg.baseline {
        BaselineMethod::Css => baseline::css_estimate_with(&z, p, q, cfg.intercept, None, &cfg.css)?,
        BaselineMethod::Ols => {
            if q > 0 {
                return Err(Error::Parameter("least squares baseline requires q = 0".into()));
            }
            baseline::ols_ar_with(&z, p, cfg.intercept, &cfg.css)?
        }
    };
    base.model.d = d;
    let design = build_design(&z, &base)?;
    let zc: Vec<f64> = z.iter().map(|v| v - base.center).collect();

    let (mu2, mu3, mu4) = central_moments(&base.residuals);
    if !(mu2 > 0.0) {
        return Err(Error::Degenerate("baseline residuals have zero variance".into()));
    }
    let moments = MomentSet::unchecked(mu2, mu3, mu4);

    let fallback = |moments: MomentSet, note: String| -> Pmm2Fit {
        let score_norm = if moments.is_degenerate() {
            f64::NAN
        } else {
            linalg::inf_norm(&score(&base.theta_hat, &design, &moments))
        };
        Pmm2Fit {
            theta_hat: base.theta_hat.clone(),
            moments,
            score_norm,
            iterations: 0,
            converged: base.converged,
            fallback_used: true,
            pinv_used: false,
            residuals: base.residuals.clone(),
            model: base.model.clone(),
            intercept: cfg.intercept,
            moment_rounds: 0,
            note: Some(note),
        }
    };

    if moments.is_degenerate() {
        log::warn!(
            "PMM2 weights undefined (delta = {:e}); keeping baseline estimate",
            moments.delta
        );
        let f = fallback(moments, "degenerate residual moments; baseline retained".into());
        return Ok(Pmm2Estimate {
            fit: f,
            baseline: base,
            design,
        });
    }
    if moments.gamma3.abs() < cfg.symmetry_threshold {
        let f = fallback(
            moments,
            format!(
                "|gamma3| = {:.4} below {}; baseline retained",
                moments.gamma3.abs(),
                cfg.symmetry_threshold
            ),
        );
        return Ok(Pmm2Estimate {
            fit: f,
            baseline: base,
            design,
        });
    }

    let mut sol = newton_solve(&base.theta_hat, &design, &moments, &cfg.solver)?;
    if cfg.adaptive {
        let mut current = moments;
        for round in 2..=cfg.adaptive_max_rounds {
            let (m2, m3, m4) = central_moments(&sol.residuals);
            let next = match MomentSet::from_central(m2, m3, m4) {
                Ok(m) if !m.is_degenerate() => m,
                _ => break,
            };
            let change = (next.mu2 - current.mu2)
                .abs()
                .max((next.mu3 - current.mu3).abs())
                .max((next.mu4 - current.mu4).abs());
            if next.gamma3.abs() < cfg.symmetry_threshold {
                break;
            }
            let init = sol.theta_hat.clone();
            sol = newton_solve(&init, &design, &next, &cfg.solver)?;
            sol.moment_rounds = round;
            current = next;
            if change < cfg.adaptive_tol {
                break;
            }
        }
    }

    if !sol.converged {
        log::warn!(
            "PMM2 solver stopped after {} iterations with |g| = {:e}",
            sol.iterations,
            sol.score_norm
        );
    }
    let centered = baseline::centered_model(&sol.theta_hat, p, q, cfg.intercept);
    if !arima::is_admissible(&centered) {
        log::warn!("final PMM2 estimate is not admissible; projecting");
        arima::project_param_vector(&mut sol.theta_hat, p, q, cfg.solver.margin);
    }
    let centered = baseline::centered_model(&sol.theta_hat, p, q, cfg.intercept);
    sol.residuals = arima::residuals(&zc, &centered)?;
    sol.model = baseline::reported_model(&sol.theta_hat, p, d, q, cfg.intercept, base.center);
    sol.intercept = cfg.intercept;
    Ok(Pmm2Estimate {
        fit: sol,
        baseline: base,
        design,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Pmm2Design, MomentSet) {
        let design = Pmm2Design::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_vec(vec![2.0]),
            1,
            0,
            false,
        )
        .unwrap();
        (design, MomentSet::from_central(1.0, 1.0, 4.0).unwrap())
    }

    #[test]
    fn toy_score_and_jacobian() {
        let (design, m) = toy();
        assert_eq!(m.delta, 2.0);
        let g = score(&[1.0], &design, &m);
        assert!((g[0] - 1.5).abs() < 1e-15);
        let j = jacobian(&[1.0], &design, &m);
        assert!((j[(0, 0)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn design_shapes() {
        let z = [0.1, 0.4, -0.3, 0.8, 0.2, -0.5];
        let resid = [0.05, 0.1, -0.2, 0.3, 0.0];
        let ar = design_from_residuals(&z, &resid, 1, 0, false).unwrap();
        assert_eq!(ar.x().column(0).as_slice(), &z[..5]);
        let ma = design_from_residuals(&z, &resid, 0, 1, false).unwrap();
        // First row uses the zero presample residual.
        assert_eq!(ma.x().column(0).as_slice(), &[0.0, 0.05, 0.1, -0.2, 0.3]);
        let arma = design_from_residuals(&z, &resid, 1, 1, false).unwrap();
        assert_eq!((arma.n_eff(), arma.k()), (5, 2));
        let with_c = design_from_residuals(&z, &resid, 1, 1, true).unwrap();
        assert_eq!(with_c.x().column(2).iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn presample_cut_uses_max_order() {
        let z = [0.1, 0.4, -0.3, 0.8, 0.2, -0.5];
        let d = design_from_residuals(&z, &[0.0; 4], 2, 1, false).unwrap();
        assert_eq!(d.n_eff(), 4);
    }

    #[test]
    fn symmetric_moments_reduce_to_least_squares_gradient() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, -0.5, 2.0, 0.3]);
        let z = DVector::from_vec(vec![0.7, -0.1, 1.1, 0.5]);
        let design = Pmm2Design::new(x.clone(), z.clone(), 1, 0, false).unwrap();
        let m = MomentSet::from_central(1.5, 0.0, 8.0).unwrap();
        let theta = [0.3];
        let g = score(&theta, &design, &m);
        let ls = x.transpose() * (&z - &x * DVector::from_vec(theta.to_vec()));
        let factor = (8.0 - 2.25) / m.delta;
        assert!((g[0] - factor * ls[0]).abs() < 1e-14);
    }

    #[test]
    fn singular_jacobian_uses_pseudo_inverse() {
        // Two identical columns make every Jacobian singular.
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.5, 0.5, -1.0, -1.0]);
        let design = Pmm2Design::new(x, DVector::from_vec(vec![0.2, 0.1, -0.3]), 2, 0, false).unwrap();
        let m = MomentSet::from_central(1.0, 0.5, 4.0).unwrap();
        let fit = newton_solve(&[0.0, 0.0], &design, &m, &SolverConfig::default()).unwrap();
        assert!(fit.pinv_used);
    }

    #[test]
    fn wrong_init_length() {
        let (design, m) = toy();
        assert!(newton_solve(&[0.0, 0.0], &design, &m, &SolverConfig::default()).is_err());
    }
}
