//! ARIMA model representation, simulation, differencing and the admissible
//! (stationary and invertible) parameter region.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// ARIMA(p,d,q) with AR coefficients `phi`, MA coefficients `theta` and an
/// optional constant on the differenced scale.
///
/// `Phi(z) = 1 - phi_1 z - ... - phi_p z^p`, `Theta(z) = 1 + theta_1 z + ... + theta_q z^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub d: usize,
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub intercept: Option<f64>,
}

impl ModelSpec {
    pub fn new(phi: Vec<f64>, d: usize, theta: Vec<f64>) -> Self {
        ModelSpec {
            d,
            phi,
            theta,
            intercept: None,
        }
    }

    pub fn white_noise() -> Self {
        ModelSpec::default()
    }

    pub fn with_intercept(mut self, c: f64) -> Self {
        self.intercept = Some(c);
        self
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn q(&self) -> usize {
        self.theta.len()
    }

    /// Presample cut `max(p, q)`.
    pub fn presample(&self) -> usize {
        self.p().max(self.q())
    }

    pub fn intercept_or_zero(&self) -> f64 {
        self.intercept.unwrap_or(0.0)
    }

    /// `(phi, theta)` concatenated.
    pub fn arma_params(&self) -> Vec<f64> {
        self.phi.iter().chain(&self.theta).copied().collect()
    }

    /// Short label such as `ARIMA(1,1,0)[0.7]`.
    pub fn label(&self) -> String {
        let coefs: Vec<String> = self.arma_params().iter().map(|c| format!("{c}")).collect();
        format!("ARIMA({},{},{})[{}]", self.p(), self.d, self.q(), coefs.join(";"))
    }
}

/// `d`-th difference; output has length `len(y) - d`.
pub fn difference(y: &[f64], d: usize) -> Result<Vec<f64>> {
    if y.len() <= d {
        return Err(Error::Length {
            needed: d + 1,
            got: y.len(),
        });
    }
    let mut z = y.to_vec();
    for _ in 0..d {
        z = z.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(z)
}

/// Inverse of [`difference`] with zero initial levels: returns `len(z) + d`
/// values whose first `d` entries are zero, so `difference(integrate(z, d), d) == z`.
pub fn integrate(z: &[f64], d: usize) -> Vec<f64> {
    let mut y = z.to_vec();
    for _ in 0..d {
        let mut out = Vec::with_capacity(y.len() + 1);
        let mut level = 0.0;
        out.push(level);
        for v in &y {
            level += v;
            out.push(level);
        }
        y = out;
    }
    y
}

/// Simulates the ARMA recursion on the differenced scale, drops `burn_in`
/// values, then integrates `d` times from zero levels. Output length is
/// `len(innovations) - burn_in`.
pub fn simulate(model: &ModelSpec, innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
    check_admissible(model)?;
    if innovations.len() <= burn_in {
        return Err(Error::Length {
            needed: burn_in + 1,
            got: innovations.len(),
        });
    }
    let z = simulate_arma(model, innovations);
    let z = &z[burn_in..];
    let y = integrate(z, model.d);
    Ok(y[model.d..].to_vec())
}

/// The stationary ARMA recursion with presample values at the process mean
/// and presample innovations at zero.
pub fn simulate_arma(model: &ModelSpec, innovations: &[f64]) -> Vec<f64> {
    let c = model.intercept_or_zero();
    let ar_sum: f64 = model.phi.iter().sum();
    let level = if c != 0.0 { c / (1.0 - ar_sum) } else { 0.0 };
    let n = innovations.len();
    let mut z = Vec::with_capacity(n);
    for t in 0..n {
        let mut v = c + innovations[t];
        for (i, phi) in model.phi.iter().enumerate() {
            v += phi * if t > i { z[t - 1 - i] } else { level };
        }
        for (j, theta) in model.theta.iter().enumerate() {
            if t > j {
                v += theta * innovations[t - 1 - j];
            }
        }
        z.push(v);
    }
    z
}

/// Conditional residual recursion on the differenced series `z`.
///
/// Returns `eps_t` for `t = m..n` (0-based, `m = max(p, q)`), with
/// residuals before `m` treated as zero.
pub fn residuals(z: &[f64], model: &ModelSpec) -> Result<Vec<f64>> {
    let m = model.presample();
    if z.len() <= m {
        return Err(Error::Length {
            needed: m + 1,
            got: z.len(),
        });
    }
    let c = model.intercept_or_zero();
    // eps is indexed like z; the first m entries stay zero.
    let mut eps = vec![0.0; z.len()];
    for t in m..z.len() {
        let mut e = z[t] - c;
        for (i, phi) in model.phi.iter().enumerate() {
            e -= phi * z[t - 1 - i];
        }
        for (j, theta) in model.theta.iter().enumerate() {
            e -= theta * eps[t - 1 - j];
        }
        eps[t] = e;
    }
    eps.drain(..m);
    Ok(eps)
}

/// Largest modulus among the roots of `x^k - c_1 x^{k-1} - ... - c_k`,
/// i.e. the reciprocal of the smallest root modulus of `1 - c_1 z - ... - c_k z^k`.
pub fn spectral_radius(coefs: &[f64]) -> f64 {
    let k = match coefs.iter().rposition(|c| *c != 0.0) {
        Some(i) => i + 1,
        None => return 0.0,
    };
    if k == 1 {
        return coefs[0].abs();
    }
    let mut companion = DMatrix::<f64>::zeros(k, k);
    for (j, c) in coefs[..k].iter().enumerate() {
        companion[(0, j)] = *c;
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn ma_as_ar(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| -t).collect()
}

/// Smallest root modulus of `Phi` (infinite for the empty polynomial).
pub fn min_root_modulus_ar(phi: &[f64]) -> f64 {
    1.0 / spectral_radius(phi)
}

/// Smallest root modulus of `Theta`.
pub fn min_root_modulus_ma(theta: &[f64]) -> f64 {
    1.0 / spectral_radius(&ma_as_ar(theta))
}

/// Roots closer to the unit circle than this count as unit roots.
const UNIT_ROOT_TOL: f64 = 1e-10;

pub fn is_stationary(phi: &[f64]) -> bool {
    phi.iter().all(|c| c.is_finite()) && spectral_radius(phi) < 1.0 - UNIT_ROOT_TOL
}

pub fn is_invertible(theta: &[f64]) -> bool {
    theta.iter().all(|c| c.is_finite()) && spectral_radius(&ma_as_ar(theta)) < 1.0 - UNIT_ROOT_TOL
}

pub fn is_admissible(model: &ModelSpec) -> bool {
    is_stationary(&model.phi) && is_invertible(&model.theta)
}

pub(crate) fn check_admissible(model: &ModelSpec) -> Result<()> {
    if !is_stationary(&model.phi) {
        return Err(Error::NotStationary);
    }
    if !is_invertible(&model.theta) {
        return Err(Error::NotInvertible);
    }
    Ok(())
}

/// Rescales `coefs` (AR sign convention) so that every root of
/// `1 - sum c_j z^j` has modulus at least `1 + margin`. Substituting
/// `c_j -> c_j s^j` divides every root by `s`.
fn rescale_roots(coefs: &mut [f64], margin: f64) {
    let rho = spectral_radius(coefs);
    if rho < 1.0 - UNIT_ROOT_TOL {
        return;
    }
    let s = 1.0 / (rho * (1.0 + margin));
    let mut f = 1.0;
    for c in coefs.iter_mut() {
        f *= s;
        *c *= f;
    }
}

/// Projects AR coefficients onto the stationary region; admissible input is
/// returned unchanged.
pub fn project_ar(phi: &mut [f64], margin: f64) {
    rescale_roots(phi, margin);
}

/// Projects MA coefficients onto the invertible region.
pub fn project_ma(theta: &mut [f64], margin: f64) {
    let mut as_ar = ma_as_ar(theta);
    rescale_roots(&mut as_ar, margin);
    for (t, a) in theta.iter_mut().zip(as_ar) {
        *t = -a;
    }
}

/// Moves an inadmissible model so that its smallest violating root modulus
/// becomes `1 + margin`; admissible models are fixed points.
pub fn project_to_admissible(model: &ModelSpec, margin: f64) -> ModelSpec {
    let mut out = model.clone();
    project_ar(&mut out.phi, margin);
    project_ma(&mut out.theta, margin);
    out
}

/// Projects the `(phi, theta)` blocks of a parameter vector laid out as
/// `[phi_1..phi_p, theta_1..theta_q, extra...]`. Returns true if anything moved.
pub fn project_param_vector(params: &mut [f64], p: usize, q: usize, margin: f64) -> bool {
    let before: Vec<f64> = params[..p + q].to_vec();
    project_ar(&mut params[..p], margin);
    project_ma(&mut params[p..p + q], margin);
    before != params[..p + q]
}
