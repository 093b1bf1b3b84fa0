//! Error metrics normalized by mean realized generation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_aligned<T>(y_hat: &[T], y: &[T]) -> Result<()> {
    if y_hat.len() != y.len() {
        return Err(Error::Misaligned(format!(
            "{} forecasts vs {} measurements",
            y_hat.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::UndefinedMetric("no samples".into()));
    }
    Ok(())
}

/// `Σ|ŷ − y| / Σy`.
pub fn nmae<T: Scalar>(y_hat: &[T], y: &[T]) -> Result<T> {
    check_aligned(y_hat, y)?;
    let total: T = y.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::UndefinedMetric(format!("Σy = {total} is not positive")));
    }
    let abs: T = y_hat.iter().zip(y).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(abs / total)
}

/// `sqrt(mean((ŷ − y)²)) / mean(y)`.
pub fn nrmse<T: Scalar>(y_hat: &[T], y: &[T]) -> Result<T> {
    check_aligned(y_hat, y)?;
    let n = T::from_usize_lossy(y.len());
    let mean: T = y.iter().copied().sum::<T>() / n;
    if !(mean > T::zero()) {
        return Err(Error::UndefinedMetric(format!("mean(y) = {mean} is not positive")));
    }
    let mse: T = y_hat.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / n;
    Ok(mse.sqrt() / mean)
}

/// Whether identified shutdowns count toward the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Every test row, forecasting generation and shutdowns alike.
    ConsiderShutdowns,
    /// Flagged rows excluded, as for availability reporting.
    DisregardShutdowns,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::ConsiderShutdowns, Scenario::DisregardShutdowns];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ConsiderShutdowns => "consider",
            Scenario::DisregardShutdowns => "disregard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "consider" | "consider_shutdowns" => Some(Scenario::ConsiderShutdowns),
            "disregard" | "disregard_shutdowns" => Some(Scenario::DisregardShutdowns),
            _ => None,
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics<T> {
    pub nmae: T,
    pub nrmse: T,
    pub n_samples: usize,
}

/// Metrics for one scenario against raw (never imputed) measurements. `flagged`
/// marks identified shutdowns and is required for the disregard scenario.
pub fn evaluate_scenario<T: Scalar>(
    y_hat: &[T],
    y: &[T],
    flagged: Option<&[bool]>,
    scenario: Scenario,
) -> Result<ScenarioMetrics<T>> {
    check_aligned(y_hat, y)?;
    match scenario {
        Scenario::ConsiderShutdowns => Ok(ScenarioMetrics {
            nmae: nmae(y_hat, y)?,
            nrmse: nrmse(y_hat, y)?,
            n_samples: y.len(),
        }),
        Scenario::DisregardShutdowns => {
            let flags = flagged.ok_or_else(|| {
                Error::Parameter("disregard scenario requires a shutdown mask".into())
            })?;
            if flags.len() != y.len() {
                return Err(Error::Misaligned("mask length differs from measurements".into()));
            }
            let (kept_hat, kept): (Vec<T>, Vec<T>) = y_hat
                .iter()
                .zip(y)
                .zip(flags)
                .filter(|(_, &f)| !f)
                .map(|((&a, &b), _)| (a, b))
                .unzip();
            if kept.is_empty() {
                return Err(Error::UndefinedMetric("every row is flagged".into()));
            }
            Ok(ScenarioMetrics {
                nmae: nmae(&kept_hat, &kept)?,
                nrmse: nrmse(&kept_hat, &kept)?,
                n_samples: kept.len(),
            })
        }
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_and_std<T: Scalar>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    (mean, var.sqrt())
}
