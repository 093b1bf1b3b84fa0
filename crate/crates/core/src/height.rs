//! Wind profile power law and the effective hub height fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Height of the wind speed forecast the corrections are relative to (m).
pub const REFERENCE_HEIGHT_M: f64 = 100.0;
/// Terrain exponent for onshore turbines.
pub const ALPHA_ONSHORE: f64 = 1.0 / 7.0;
/// Terrain exponent for offshore turbines.
pub const ALPHA_OFFSHORE: f64 = 1.0 / 9.0;

/// Scales a wind speed measured at `h_b` to height `h_a`.
pub fn power_law_scale<T: Scalar>(v_b: T, h_b: T, h_a: T, alpha: T) -> Result<T> {
    if !(h_a > T::zero()) || !(h_b > T::zero()) {
        return Err(Error::Domain(format!("heights must be > 0 (got {h_a}, {h_b})")));
    }
    if !(alpha > T::zero()) {
        return Err(Error::Domain(format!("exponent must be > 0 (got {alpha})")));
    }
    Ok(v_b * (h_a / h_b).powf(alpha))
}

/// Height at which the power-law-scaled 100 m forecast matches the measured hub
/// wind on average: `100 * (mean_v_eff / mean_v100) ^ (1 / alpha)`.
pub fn estimate_effective_hub_height<T: Scalar>(
    mean_v_eff: T,
    mean_v100_forecast: T,
    alpha: T,
) -> Result<T> {
    if !(mean_v_eff > T::zero()) || !(mean_v100_forecast > T::zero()) {
        return Err(Error::Estimation(format!(
            "mean wind speeds must be > 0 (hub {mean_v_eff}, forecast {mean_v100_forecast})"
        )));
    }
    if !(alpha > T::zero()) {
        return Err(Error::Estimation(format!("exponent must be > 0 (got {alpha})")));
    }
    Ok(T::lit(REFERENCE_HEIGHT_M) * (mean_v_eff / mean_v100_forecast).powf(T::one() / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightCorrectionModel<T> {
    pub alpha_h: T,
    pub h_eff_m: T,
}

impl<T: Scalar> HeightCorrectionModel<T> {
    pub fn new(alpha_h: T, h_eff_m: T) -> Result<Self> {
        if !(alpha_h > T::zero()) || !(h_eff_m > T::zero()) {
            return Err(Error::Domain(format!(
                "height model needs alpha > 0 and h_eff > 0 (got {alpha_h}, {h_eff_m})"
            )));
        }
        Ok(Self { alpha_h, h_eff_m })
    }

    /// No correction: the turbine is treated as sitting at 100 m.
    pub fn identity(alpha_h: T) -> Self {
        Self {
            alpha_h,
            h_eff_m: T::lit(REFERENCE_HEIGHT_M),
        }
    }

    /// Fits `h_eff` from paired hub measurements and 100 m forecasts; pairs
    /// with a missing side are skipped.
    pub fn fit(
        hub_wind: impl IntoIterator<Item = Option<T>>,
        v100: impl IntoIterator<Item = Option<T>>,
        alpha_h: T,
    ) -> Result<Self> {
        let (mut sum_hub, mut sum_fc, mut n) = (T::zero(), T::zero(), 0usize);
        for (h, f) in hub_wind.into_iter().zip(v100) {
            if let (Some(h), Some(f)) = (h, f) {
                sum_hub = sum_hub + h;
                sum_fc = sum_fc + f;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Estimation("no paired hub / forecast samples".into()));
        }
        let n = T::from_usize_lossy(n);
        let h_eff = estimate_effective_hub_height(sum_hub / n, sum_fc / n, alpha_h)?;
        Self::new(alpha_h, h_eff)
    }

    /// Multiplier applied to 100 m forecasts.
    pub fn factor(&self) -> T {
        (self.h_eff_m / T::lit(REFERENCE_HEIGHT_M)).powf(self.alpha_h)
    }

    pub fn correct(&self, v100: T) -> T {
        v100 * self.factor()
    }

    pub fn correct_forecast(&self, v100: &[T]) -> Vec<T> {
        let f = self.factor();
        v100.iter().map(|&v| v * f).collect()
    }
}
