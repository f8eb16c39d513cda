//! Fréchet pairs coupled by a Gumbel copula.
//!
//! With a shared `Z ~ P(λ)` and independent standard Gumbels ϵ₁, ϵ₂,
//! `δ_i = exp(λ/α (ϵ_i + log Z))` has Fréchet(α) marginals and the Gumbel
//! copula `C(u, v) = exp(-((-log u)^(1/λ) + (-log v)^(1/λ))^λ)`.

use crate::distributions::{stable_log_sample, std_gumbel, StableParam};
use crate::error::{Error, Result};
use crate::parallel::map_chunks;
use crate::rng::SeededStream;
use crate::special::gamma;
use crate::stats::{correlation_estimate, EstimateWithError, PairMoments};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetGumbelParams {
    pub alpha: f64,
    pub lambda: f64,
}

impl FrechetGumbelParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("Fréchet shape must be positive, got {alpha}")));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Domain(format!("copula lambda must lie in (0, 1], got {lambda}")));
        }
        Ok(Self { alpha, lambda })
    }

    fn require_finite_variance(&self) -> Result<()> {
        if self.alpha <= 2.0 {
            return Err(Error::Domain(format!("correlation needs alpha > 2 (finite variance), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Closed-form Pearson correlation of the pair:
///
/// ```text
/// ρ = [Γ(1-2/α) Γ(1-λ/α)² / Γ(1-2λ/α) − Γ(1-1/α)²] / [Γ(1-2/α) − Γ(1-1/α)²]
/// ```
///
/// λ = 1 returns exactly 0.
pub fn frechet_corr(p: FrechetGumbelParams) -> Result<f64> {
    p.require_finite_variance()?;
    if p.lambda == 1.0 {
        return Ok(0.0);
    }
    let a = p.alpha;
    let g2 = gamma(1.0 - 2.0 / a);
    let g1 = gamma(1.0 - 1.0 / a);
    let cross = g2 * gamma(1.0 - p.lambda / a).powi(2) / gamma(1.0 - 2.0 * p.lambda / a);
    Ok((cross - g1 * g1) / (g2 - g1 * g1))
}

pub fn frechet_cdf(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-x.powf(-alpha)).exp()
    }
}

pub fn gumbel_copula(u: f64, v: f64, lambda: f64) -> f64 {
    let s = (-u.ln()).powf(1.0 / lambda) + (-v.ln()).powf(1.0 / lambda);
    (-s.powf(lambda)).exp()
}

/// Draw `i` of the pair sequence for `stream`.
fn pair_draw(stream: SeededStream, p: FrechetGumbelParams, stable: StableParam, i: u64) -> (f64, f64) {
    let mut rng = stream.draw_rng(i);
    let log_z = stable_log_sample(&mut rng, stable);
    let scale = p.lambda / p.alpha;
    let d1 = (scale * (std_gumbel(&mut rng) + log_z)).exp();
    let d2 = (scale * (std_gumbel(&mut rng) + log_z)).exp();
    (d1, d2)
}

pub fn frechet_pair_sample(stream: SeededStream, p: FrechetGumbelParams, n_draws: u64) -> Vec<(f64, f64)> {
    let stable = StableParam::new(p.lambda).expect("validated lambda");
    map_chunks(n_draws, |range| range.map(|i| pair_draw(stream, p, stable, i)).collect::<Vec<_>>()).concat()
}

/// Sample correlation of the pair with block-jackknife standard error.
pub fn mc_frechet_corr(stream: SeededStream, p: FrechetGumbelParams, n_draws: u64) -> Result<EstimateWithError> {
    p.require_finite_variance()?;
    let stable = StableParam::new(p.lambda).expect("validated lambda");
    let blocks = map_chunks(n_draws, |range| {
        let mut m = PairMoments::default();
        for i in range {
            let (a, b) = pair_draw(stream, p, stable, i);
            m.push(a, b);
        }
        m
    });
    Ok(correlation_estimate(&blocks))
}
