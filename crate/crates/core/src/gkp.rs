//! Quadrature-level primitives for single-mode GKP error correction.
//!
//! Shifts are measured in the dimensionless quadrature units where the vacuum
//! variance is 1/2 and the square-lattice spacing is `sqrt(pi)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the square-lattice GKP logical spacing.
#[inline]
pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}

/// Squeezing in dB to shift variance: `(1/2) 10^(-dB/10)`.
pub fn db_to_variance(sigma_db: f64) -> f64 {
    0.5 * 10f64.powf(-sigma_db / 10.0)
}

/// Inverse of [`db_to_variance`].
pub fn variance_to_db(variance: f64) -> f64 {
    10.0 * (0.5 / variance).log10()
}

/// GKP squeezing together with the rectangular-lattice aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpParams {
    pub sigma_db: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl GkpParams {
    pub fn from_db(sigma_db: f64, lambda: f64) -> Result<Self> {
        if !sigma_db.is_finite() {
            return Err(Error::InvalidParams(format!("squeezing must be finite, got {sigma_db}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        let sigma = db_to_variance(sigma_db).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::InvalidParams(format!("squeezing {sigma_db} dB underflows")));
        }
        Ok(Self { sigma_db, sigma, lambda })
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Same squeezing on a square lattice (data qubits).
    pub fn square(&self) -> Self {
        Self { lambda: 1.0, ..*self }
    }

    /// Position-quadrature logical spacing `sqrt(pi) * lambda`.
    pub fn q_spacing(&self) -> f64 {
        sqrt_pi() * self.lambda
    }

    /// Momentum-quadrature logical spacing `sqrt(pi) / lambda`.
    pub fn p_spacing(&self) -> f64 {
        sqrt_pi() / self.lambda
    }
}

/// A (position, momentum) shift on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShiftPair {
    pub xi_q: f64,
    pub xi_p: f64,
}

fn check_spacing(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpacing(s))
    }
}

/// `floor(z/s + 1/2)`, the index of the nearest lattice point.
pub fn closest_integer(z: f64, s: f64) -> Result<i64> {
    check_spacing(s)?;
    Ok(nearest_index(z, s))
}

/// `z - s * floor(z/s + 1/2)`, in `[-s/2, s/2)`.
pub fn remainder(z: f64, s: f64) -> Result<f64> {
    check_spacing(s)?;
    Ok(z - s * nearest_index(z, s) as f64)
}

#[inline]
pub(crate) fn nearest_index(z: f64, s: f64) -> i64 {
    (z / s + 0.5).floor() as i64
}

/// Probability that a centered Gaussian shift lands in an odd cell,
/// with the odd set truncated to `n in {-1, 1}`.
pub fn flip_prob_marginal(sigma_eff: f64, spacing: f64) -> f64 {
    if sigma_eff <= 0.0 {
        return 0.0;
    }
    let scale = 1.0 / (sigma_eff * SQRT_2);
    // 2 * P(0.5 s < xi < 1.5 s)
    libm::erfc(0.5 * spacing * scale) - libm::erfc(1.5 * spacing * scale)
}

/// Same integral summed over all odd `n` with `|n| <= window`.
pub fn flip_prob_marginal_window(sigma_eff: f64, spacing: f64, window: i64) -> f64 {
    let scale = 1.0 / (sigma_eff * SQRT_2);
    let mut total = 0.0;
    for n in (1..=window).step_by(2) {
        let lo = (n as f64 - 0.5) * spacing * scale;
        let hi = (n as f64 + 0.5) * spacing * scale;
        total += libm::erfc(lo) - libm::erfc(hi);
    }
    total
}

/// Posterior probability of an odd shift class given the reduced residual
/// `xi_bar`, with even set `{0}` and odd set `{-1, 1}`.
pub fn flip_prob_conditional(xi_bar: f64, sigma_eff: f64, spacing: f64) -> f64 {
    debug_assert!(xi_bar.abs() <= 0.5 * spacing * (1.0 + 1e-12));
    let inv = -0.5 / (sigma_eff * sigma_eff);
    let la = inv * xi_bar * xi_bar;
    let lb1 = inv * (xi_bar - spacing) * (xi_bar - spacing);
    let lb2 = inv * (xi_bar + spacing) * (xi_bar + spacing);
    odd_posterior(&[la], &[lb1, lb2])
}

/// [`flip_prob_conditional`] with both classes summed over `|n| <= window`.
pub fn flip_prob_conditional_window(xi_bar: f64, sigma_eff: f64, spacing: f64, window: i64) -> f64 {
    let inv = -0.5 / (sigma_eff * sigma_eff);
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for n in -window..=window {
        let x = xi_bar + n as f64 * spacing;
        if n.rem_euclid(2) == 0 {
            even.push(inv * x * x);
        } else {
            odd.push(inv * x * x);
        }
    }
    odd_posterior(&even, &odd)
}

/// `b / (a + b)` from log-weights, stable when every weight underflows.
pub(crate) fn odd_posterior(log_even: &[f64], log_odd: &[f64]) -> f64 {
    let m = log_even.iter().chain(log_odd).copied().fold(f64::NEG_INFINITY, f64::max);
    let a: f64 = log_even.iter().map(|l| (l - m).exp()).sum();
    let b: f64 = log_odd.iter().map(|l| (l - m).exp()).sum();
    b / (a + b)
}

/// Draws an i.i.d. `N(0, sigma^2)` shift pair.
pub fn sample_shift<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> ShiftPair {
    let q: f64 = rng.sample(StandardNormal);
    let p: f64 = rng.sample(StandardNormal);
    ShiftPair { xi_q: sigma * q, xi_p: sigma * p }
}

/// Which GKP error-correction gadget is applied every cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcScheme {
    Teleport,
    Steane,
}

impl FromStr for EcScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "teleport" | "teleportation" => Ok(EcScheme::Teleport),
            "steane" => Ok(EcScheme::Steane),
            other => Err(Error::Config(format!("unknown error-correction scheme `{other}`"))),
        }
    }
}

impl fmt::Display for EcScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcScheme::Teleport => "teleport",
            EcScheme::Steane => "steane",
        })
    }
}

/// Net shift on the data mode across one idle + EC cycle, composed from
/// the previous-round and current-round ancilla shifts.
pub fn ec_net_shift<R: Rng + ?Sized>(scheme: EcScheme, sigma: f64, rng: &mut R) -> ShiftPair {
    // ancilla modes 2 and 3, previous round then current round
    let prev2 = sample_shift(sigma, rng);
    let prev3 = sample_shift(sigma, rng);
    let cur2 = sample_shift(sigma, rng);
    let cur3 = sample_shift(sigma, rng);
    match scheme {
        EcScheme::Teleport => {
            let plus_q = (prev2.xi_q + prev3.xi_q) / SQRT_2;
            let plus_p = (prev2.xi_p + prev3.xi_p) / SQRT_2;
            let minus_q = (cur2.xi_q - cur3.xi_q) / SQRT_2;
            let minus_p = (cur2.xi_p - cur3.xi_p) / SQRT_2;
            ShiftPair { xi_q: plus_q - minus_q, xi_p: plus_p + minus_p }
        }
        EcScheme::Steane => ShiftPair {
            xi_q: -prev2.xi_q - prev3.xi_q + cur2.xi_q,
            xi_p: -prev3.xi_p - cur2.xi_p + cur3.xi_p,
        },
    }
}
