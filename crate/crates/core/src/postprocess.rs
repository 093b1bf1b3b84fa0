//! Prior-knowledge clipping of raw forecasts: the rating caps output,
//! generation is never negative, and the turbine is off beyond cut-out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cut-out wind speed of the evaluation turbines (m/s).
pub const DEFAULT_CUT_OUT: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig<T> {
    pub p_max_kw: T,
    pub v_cut_out: T,
}

impl<T: Scalar> ClipConfig<T> {
    pub fn new(p_max_kw: T, v_cut_out: T) -> Result<Self> {
        if !(p_max_kw > T::zero()) || !(v_cut_out > T::zero()) {
            return Err(Error::Parameter(format!(
                "clip config needs p_max > 0 and v_cut_out > 0 (got {p_max_kw}, {v_cut_out})"
            )));
        }
        Ok(Self {
            p_max_kw,
            v_cut_out,
        })
    }

    /// Clips one value. `y == p_max` passes through unchanged.
    #[inline]
    pub fn clip(&self, y_hat: T, v_eff_hat: T) -> T {
        if !(v_eff_hat < self.v_cut_out) {
            return T::zero();
        }
        if y_hat > T::zero() && y_hat <= self.p_max_kw {
            y_hat
        } else if y_hat > self.p_max_kw {
            self.p_max_kw
        } else {
            T::zero()
        }
    }
}

pub fn clip_forecast<T: Scalar>(y_hat: &[T], v_eff_hat: &[T], cfg: &ClipConfig<T>) -> Result<Vec<T>> {
    if y_hat.len() != v_eff_hat.len() {
        return Err(Error::Misaligned(format!(
            "{} forecasts vs {} wind speeds",
            y_hat.len(),
            v_eff_hat.len()
        )));
    }
    Ok(y_hat
        .iter()
        .zip(v_eff_hat)
        .map(|(&y, &v)| cfg.clip(y, v))
        .collect())
}
