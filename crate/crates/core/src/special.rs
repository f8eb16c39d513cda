//! Gamma function and related constants.

/// Euler–Mascheroni constant, the mean of a standard Gumbel variable.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Variance of a standard Gumbel variable, π²/6.
pub const GUMBEL_VARIANCE: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Γ(x) for real `x`. Poles return NaN or ±∞ as `tgamma` does.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// log|Γ(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}
