//! Fractional-time units: the alpha-second defined by
//! `1 sec = sigma^(1-alpha) sec^alpha`, with `sigma` defaulting to the
//! cesium-133 cycle count behind the SI second. Velocities convert as
//! `m/sec -> m/sec^alpha` (factor `sigma^(alpha-1)`), accelerations as
//! `m/sec^2 -> m/sec^(2 alpha)` (factor `sigma^(2 alpha - 2)`).

use serde::Serialize;
use thiserror::Error;

/// The cesium-133 hyperfine cycle count defining the SI second.
pub const SIGMA_CESIUM: f64 = 9_192_631_770.0;

#[derive(Debug, Error, PartialEq)]
pub enum UnitsError {
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("cannot combine quantities with different alpha ({0} vs {1})")]
    AlphaMismatch(f64, f64),
}

/// A physical magnitude carrying powers of meters and of the alpha-second.
///
/// `time_power` counts powers of `sec^alpha`: a fractional velocity is
/// `m / sec^alpha` (`time_power = -1`), a fractional acceleration
/// `m / sec^(2 alpha)` (`time_power = -2`). Quantities without a time
/// dimension are canonicalized to `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaQuantity {
    pub magnitude: f64,
    pub length_power: i32,
    pub time_power: i32,
    pub alpha: f64,
}

impl AlphaQuantity {
    pub fn new(
        magnitude: f64,
        length_power: i32,
        time_power: i32,
        alpha: f64,
    ) -> Result<Self, UnitsError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(UnitsError::InvalidAlpha(alpha));
        }
        let alpha = if time_power == 0 { 1.0 } else { alpha };
        Ok(Self { magnitude, length_power, time_power, alpha })
    }

    /// Dimensionless scalar.
    pub fn scalar(v: f64) -> Self {
        Self { magnitude: v, length_power: 0, time_power: 0, alpha: 1.0 }
    }

    /// `t^alpha` as a quantity of one alpha-second power, for dimensional
    /// bookkeeping of closed-form trajectory terms.
    pub fn time_alpha(t_seconds: f64, alpha: f64) -> Result<Self, UnitsError> {
        Self::new(t_seconds.powf(alpha), 0, 1, alpha)
    }

    /// Product with matching alpha; exponents add.
    pub fn mul(&self, other: &Self) -> Result<Self, UnitsError> {
        if self.time_power != 0 && other.time_power != 0 && self.alpha != other.alpha {
            return Err(UnitsError::AlphaMismatch(self.alpha, other.alpha));
        }
        let alpha = if self.time_power != 0 { self.alpha } else { other.alpha };
        Self::new(
            self.magnitude * other.magnitude,
            self.length_power + other.length_power,
            self.time_power + other.time_power,
            alpha,
        )
    }

    /// Printable unit, e.g. `m/sec^0.99`, `m/sec^1.98`, `m`.
    pub fn unit_string(&self) -> String {
        let time_exp = self.time_power as f64 * self.alpha;
        let length = match self.length_power {
            0 => String::new(),
            1 => "m".to_string(),
            p => format!("m^{p}"),
        };
        if self.time_power == 0 {
            return if length.is_empty() { "1".to_string() } else { length };
        }
        let num = if length.is_empty() { "1".to_string() } else { length };
        if (time_exp + 1.0).abs() < 1e-15 {
            format!("{num}/sec")
        } else {
            format!("{num}/sec^{}", -time_exp)
        }
    }
}

/// Convert a classical velocity `v` in m/sec to fractional units
/// m/sec^alpha: magnitude scales by `sigma^(alpha - 1)`.
pub fn convert_velocity(v: f64, alpha: f64, sigma: f64) -> Result<AlphaQuantity, UnitsError> {
    if !(sigma > 0.0) {
        return Err(UnitsError::InvalidSigma(sigma));
    }
    AlphaQuantity::new(v * sigma.powf(alpha - 1.0), 1, -1, alpha)
}

/// Convert a classical acceleration `a` in m/sec^2 to fractional units
/// m/sec^(2 alpha): magnitude scales by `sigma^(2 (alpha - 1))`.
pub fn convert_acceleration(a: f64, alpha: f64, sigma: f64) -> Result<AlphaQuantity, UnitsError> {
    if !(sigma > 0.0) {
        return Err(UnitsError::InvalidSigma(sigma));
    }
    AlphaQuantity::new(a * sigma.powf(2.0 * (alpha - 1.0)), 1, -2, alpha)
}

/// Map a fractional quantity back to classical SI units (inverse scaling
/// `sigma^((1 - alpha) * |time_power|)` for negative time powers).
pub fn to_si(q: &AlphaQuantity, sigma: f64) -> Result<f64, UnitsError> {
    if !(sigma > 0.0) {
        return Err(UnitsError::InvalidSigma(sigma));
    }
    Ok(q.magnitude * sigma.powf((1.0 - q.alpha) * (-q.time_power) as f64))
}
