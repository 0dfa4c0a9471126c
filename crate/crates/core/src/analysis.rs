//! Fidelity, step-count scaling and dB bookkeeping.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::VACUUM_VARIANCE;

/// Fidelity of a coherent-state output with quadrature variances `σx`, `σp`
/// (total, not excess): `F = 2 / √((1 + 4σx)(1 + 4σp))`.
pub fn fidelity_from_output_variances(sigma_x: f64, sigma_p: f64) -> Result<f64> {
    if !(sigma_x >= 0.0) || !(sigma_p >= 0.0) {
        return invalid(format!("variances must be non-negative, got ({sigma_x}, {sigma_p})"));
    }
    Ok(2.0 / ((1.0 + 4.0 * sigma_x) * (1.0 + 4.0 * sigma_p)).sqrt())
}

/// Fidelity for excess variances above an ideal coherent output, so that
/// zero excess gives `F = 1`.
pub fn fidelity_from_variances(excess_x: f64, excess_p: f64) -> Result<f64> {
    if !(excess_x >= 0.0) || !(excess_p >= 0.0) {
        return invalid(format!(
            "excess variances must be non-negative, got ({excess_x}, {excess_p})"
        ));
    }
    fidelity_from_output_variances(VACUUM_VARIANCE + excess_x, VACUUM_VARIANCE + excess_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    /// Total output variances.
    pub sigma_x_out: f64,
    pub sigma_p_out: f64,
}

impl FidelityReport {
    pub fn from_excess(excess_x: f64, excess_p: f64) -> Result<Self> {
        Ok(Self {
            fidelity: fidelity_from_variances(excess_x, excess_p)?,
            sigma_x_out: VACUUM_VARIANCE + excess_x,
            sigma_p_out: VACUUM_VARIANCE + excess_p,
        })
    }

    pub fn recompute(&self) -> f64 {
        2.0 / ((1.0 + 4.0 * self.sigma_x_out) * (1.0 + 4.0 * self.sigma_p_out)).sqrt()
    }
}

/// Fidelity after an `n`-step chain (two-step coupling plus `n - 2` steps).
pub fn nstep_fidelity(n: u32, r: f64) -> Result<f64> {
    if n < 1 {
        return invalid("step count must be at least 1");
    }
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("r must be finite and non-negative, got {r}"));
    }
    let e = (-2.0 * r).exp();
    let k = f64::from(n / 2);
    Ok(if n.is_multiple_of(2) {
        1.0 / (1.0 + (k + 1.0) / 2.0 * e)
    } else {
        1.0 / ((1.0 + (k + 1.0) / 2.0 * e).sqrt() * (1.0 + (k + 2.0) / 2.0 * e).sqrt())
    })
}

/// `⌊4 e^{2r} (1/F0 - 1) - 1⌋`, parity ignored.
pub fn max_steps_at_fidelity(r: f64, f0: f64) -> Result<i64> {
    if !(f0 > 0.0 && f0 < 1.0) {
        return invalid(format!("fidelity bound must lie in (0, 1), got {f0}"));
    }
    if !r.is_finite() {
        return invalid("r must be finite");
    }
    let n = 4.0 * (2.0 * r).exp() * (1.0 / f0 - 1.0) - 1.0;
    // Absorb rounding just below an integer, e.g. exactly 3 at r = 0.
    Ok((n + 1e-9).floor() as i64)
}

/// `n_max ≈ -½ e^{2r} ln tanh c`.
pub fn max_steps_at_output_squeezing(r: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return invalid(format!("output squeezing bound must be > 0, got {c}"));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("r must be finite and non-negative, got {r}"));
    }
    Ok(-0.5 * (2.0 * r).exp() * c.tanh().ln())
}

/// Squeezing level in dB (sign ignored) to `r`.
pub fn squeezing_db_to_r(db: f64) -> f64 {
    LN_10 / 20.0 * db.abs()
}

/// `r` to a squeezing level in (negative) dB.
pub fn r_to_squeezing_db(r: f64) -> f64 {
    -20.0 / LN_10 * r
}

/// Variance relative to shot noise, in dB.
pub fn variance_to_db(variance: f64) -> f64 {
    10.0 * (variance / VACUUM_VARIANCE).log10()
}

pub fn db_to_variance(db: f64) -> f64 {
    VACUUM_VARIANCE * 10f64.powf(db / 10.0)
}

/// How a coherent amplitude in dB relates to the quadrature mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeConvention {
    /// `(m² + 1/4) / (1/4) = 10^{A/10}`: peak power including shot noise.
    #[default]
    PeakPower,
    /// `m² / (1/4) = 10^{A/10}`.
    MeanOnly,
}

pub fn amplitude_db_to_mean(db: f64, convention: AmplitudeConvention) -> Result<f64> {
    let ratio = 10f64.powf(db / 10.0);
    match convention {
        AmplitudeConvention::PeakPower => {
            if ratio < 1.0 {
                return invalid(format!("peak power {db} dB is below shot noise"));
            }
            Ok((VACUUM_VARIANCE * (ratio - 1.0)).sqrt())
        }
        AmplitudeConvention::MeanOnly => Ok((VACUUM_VARIANCE * ratio).sqrt()),
    }
}

pub fn mean_to_amplitude_db(mean: f64, convention: AmplitudeConvention) -> f64 {
    let power = match convention {
        AmplitudeConvention::PeakPower => mean * mean + VACUUM_VARIANCE,
        AmplitudeConvention::MeanOnly => mean * mean,
    };
    10.0 * (power / VACUUM_VARIANCE).log10()
}
