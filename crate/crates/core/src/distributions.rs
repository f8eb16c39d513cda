//! Gumbel and positive stable laws.
//!
//! A positive stable variable `Z ~ P(λ)` has Laplace transform
//! `E[exp(-tZ)] = exp(-t^λ)`. Added to the log of such a factor, a standard
//! Gumbel draw becomes Gumbel with scale `1/λ`; that identity is what the
//! nested logit representation is built from.

use crate::error::{Error, Result};
use crate::parallel::map_chunks;
use crate::rng::SeededStream;
use crate::special::{gamma, ln_gamma, EULER_GAMMA, GUMBEL_VARIANCE};
use crate::stats::{EstimateWithError, Moments};
use rand::distr::Open01;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelParams {
    mu: f64,
    beta: f64,
}

impl GumbelParams {
    pub const STANDARD: GumbelParams = GumbelParams { mu: 0.0, beta: 1.0 };

    pub fn new(mu: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) || !mu.is_finite() {
            return Err(Error::Domain(format!("Gumbel needs finite mu and beta > 0, got ({mu}, {beta})")));
        }
        Ok(Self { mu, beta })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-(-(x - self.mu) / self.beta).exp()).exp()
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.mu - self.beta * (-u.ln()).ln()
    }
}

pub fn gumbel_sample<R: Rng + ?Sized>(rng: &mut R, p: GumbelParams) -> f64 {
    p.quantile(rng.sample(Open01))
}

/// Standard Gumbel draw.
pub fn std_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -(-u.ln()).ln()
}

/// Moment generating function of a standard Gumbel variable, Γ(1 − t).
pub fn gumbel_mgf(t: f64) -> Result<f64> {
    if !(t < 1.0) {
        return Err(Error::Domain(format!("Gumbel mgf needs t < 1, got {t}")));
    }
    Ok(gamma(1.0 - t))
}

/// Index λ ∈ (0, 1] of a positive stable law. λ = 1 is the unit point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParam(f64);

impl StableParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Domain(format!("stable index must lie in (0, 1], got {lambda}")));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(&self) -> f64 {
        self.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.0 == 1.0
    }

    pub fn laplace(&self, t: f64) -> f64 {
        (-t.powf(self.0)).exp()
    }
}

/// log Z for `Z ~ P(λ)`, by Kanter's representation
/// `Z = (a(U)/E)^((1-λ)/λ)` with `U ~ U(0, π)`, `E ~ Exp(1)` and
/// `a(u) = sin((1-λ)u) sin(λu)^(λ/(1-λ)) / sin(u)^(1/(1-λ))`.
///
/// Working on the log scale keeps tiny λ from overflowing. λ = 1 returns 0
/// without consuming randomness.
pub fn stable_log_sample<R: Rng + ?Sized>(rng: &mut R, p: StableParam) -> f64 {
    let lambda = p.0;
    if lambda == 1.0 {
        return 0.0;
    }
    let u = PI * rng.sample::<f64, _>(Open01);
    let e = -rng.sample::<f64, _>(Open01).ln();
    let one_minus = 1.0 - lambda;
    let log_a = ((one_minus * u).sin()).ln() + (lambda / one_minus) * (lambda * u).sin().ln()
        - u.sin().ln() / one_minus;
    (one_minus / lambda) * (log_a - e.ln())
}

pub fn stable_sample<R: Rng + ?Sized>(rng: &mut R, p: StableParam) -> f64 {
    stable_log_sample(rng, p).exp()
}

/// E[Z^κ] = Γ(1 − κ/λ)/Γ(1 − κ) for 0 < κ < λ.
pub fn stable_moment(p: StableParam, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < p.0) {
        return Err(Error::Domain(format!("moment order must lie in (0, {}), got {kappa}", p.0)));
    }
    Ok(gamma(1.0 - kappa / p.0) / gamma(1.0 - kappa))
}

/// Mean and variance of η = λ log Z.
pub fn eta_moments(lambda: f64) -> (f64, f64) {
    ((1.0 - lambda) * EULER_GAMMA, (1.0 - lambda * lambda) * GUMBEL_VARIANCE)
}

/// E[exp(tη)] = Γ(1 − t)/Γ(1 − λt), t < 1.
pub fn eta_mgf(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if !(t < 1.0) {
        return Err(Error::Domain(format!("eta mgf needs t < 1, got {t}")));
    }
    Ok(gamma(1.0 - t) / gamma(1.0 - lambda * t))
}

/// Closed-form density of P(1/2): x^(-3/2) exp(-1/(4x)) / (2√π).
pub fn stable_density_half(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-0.25 / x).exp() / (2.0 * PI.sqrt() * x * x.sqrt())
}

pub const SERIES_TERM_BUDGET: usize = 400;
pub const CANCELLATION_LIMIT: f64 = 1e12;

/// Value of the alternating density series together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    pub max_term: f64,
    /// Set when the largest term exceeds the final sum by more than
    /// [`CANCELLATION_LIMIT`]; the value is then unreliable.
    pub loss_of_precision: bool,
}

/// sin(kπλ) with the argument reduced mod 2 first, so integer kλ gives an exact zero.
fn sin_pi_multiple(k: usize, lambda: f64) -> f64 {
    let r = (k as f64 * lambda) % 2.0;
    if r == 0.0 || r == 1.0 {
        0.0
    } else {
        (PI * r).sin()
    }
}

/// Density of P(λ) from the convergent series
/// `f(x) = -(1/π) Σ_k (-1)^k/k! sin(kπλ) Γ(λk+1) x^(-λk-1)`.
///
/// Summation stops once two consecutive term envelopes
/// `Γ(λk+1)/k! x^(-λk-1)` (an upper bound on |term|) fall below
/// `tol · (|sum| + f64::MIN_POSITIVE)` while decreasing.
pub fn stable_density_series(p: StableParam, x: f64, tol: f64) -> Result<SeriesValue> {
    let lambda = p.0;
    if p.is_degenerate() {
        return Err(Error::Domain("P(1) is a point mass and has no density".into()));
    }
    if !(x > 0.0) || !(tol > 0.0) {
        return Err(Error::Domain(format!("density series needs x > 0 and tol > 0, got x={x}, tol={tol}")));
    }
    let ln_x = x.ln();
    let mut sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut small_run = 0;
    let mut prev_log_env = f64::INFINITY;
    for k in 1..=SERIES_TERM_BUDGET {
        let kf = k as f64;
        let log_env = ln_gamma(lambda * kf + 1.0) - ln_gamma(kf + 1.0) - (lambda * kf + 1.0) * ln_x;
        let env = log_env.exp();
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let term = sign * sin_pi_multiple(k, lambda) * env / PI;
        sum += term;
        max_term = max_term.max(term.abs());
        if env < tol * (sum.abs() + f64::MIN_POSITIVE) && log_env < prev_log_env {
            small_run += 1;
            if small_run == 2 {
                return Ok(SeriesValue {
                    value: sum,
                    terms: k,
                    max_term,
                    loss_of_precision: max_term > CANCELLATION_LIMIT * sum.abs(),
                });
            }
        } else {
            small_run = 0;
        }
        prev_log_env = log_env;
    }
    Err(Error::NoConvergence { terms: SERIES_TERM_BUDGET })
}

/// Monte Carlo check of the product rule: for independent `Z1 ~ P(λ1)`,
/// `Z2 ~ P(λ2)`, `W = Z1 Z2^(1/λ1)` should be `P(λ1 λ2)`. Returns the
/// empirical mean of `exp(-W)`, whose target is `exp(-1)`.
pub fn stable_product_check(stream: SeededStream, l1: StableParam, l2: StableParam, n_draws: u64) -> EstimateWithError {
    let parts = map_chunks(n_draws, |range| {
        let mut m = Moments::default();
        for i in range {
            let mut rng = stream.draw_rng(i);
            let log_w = stable_log_sample(&mut rng, l1) + stable_log_sample(&mut rng, l2) / l1.0;
            m.push((-log_w.exp()).exp());
        }
        m
    });
    parts.iter().fold(Moments::default(), |a, b| a.merge(b)).estimate()
}

/// Empirical mean of `exp(-tZ)` over `n_draws` stable draws.
pub fn stable_laplace_estimate(stream: SeededStream, p: StableParam, t: f64, n_draws: u64) -> EstimateWithError {
    let parts = map_chunks(n_draws, |range| {
        let mut m = Moments::default();
        for i in range {
            let z = stable_sample(&mut stream.draw_rng(i), p);
            m.push((-t * z).exp());
        }
        m
    });
    parts.iter().fold(Moments::default(), |a, b| a.merge(b)).estimate()
}
