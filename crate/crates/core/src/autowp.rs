//! AutoWP: a new turbine's power curve as a convex combination of a pool of
//! normalized OEM curves, driven by the height-corrected wind speed forecast.
//!
//! Fitting solves a non-negative least squares problem on the design matrix
//! `A[k][n] = curve_n(v[k])` against the target normalized by the new turbine's
//! rating, then divides the weights by their sum so they lie on the simplex.
//! In relaxed mode the target stays in kW and the weights are left unnormalized;
//! they absorb the rating, so no re-scaling happens at prediction time.

use serde::{Deserialize, Serialize};

use crate::curve::{CurvePool, NormalizedPowerCurve, UniformGrid};
use crate::error::{Error, Result};
use crate::height::HeightCorrectionModel;
use crate::nnls::nnls;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Weights in `[0, 1]` summing to one; output re-scaled by the rating.
    #[default]
    Simplex,
    /// Non-negative weights fitted against power in kW.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<T> {
    pub pool: CurvePool<T>,
    pub weights: Vec<T>,
    pub peak_rating_kw: T,
    pub height: HeightCorrectionModel<T>,
    pub mode: ConstraintMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport<T> {
    /// Mean squared residual on power normalized by the rating.
    pub mse: T,
    pub weights: Vec<T>,
    pub rows: usize,
    pub nnls_iterations: usize,
    /// Set when NNLS returned the zero vector and uniform weights were used.
    pub zero_solution_fallback: bool,
}

fn design_matrix<T: Scalar>(pool: &CurvePool<T>, v: &[T]) -> Vec<T> {
    let n = pool.len();
    let mut a = Vec::with_capacity(v.len() * n);
    for &vk in v {
        a.extend(pool.curves().iter().map(|c| c.evaluate(vk)));
    }
    a
}

/// Fits ensemble weights to `(v_input, y)` pairs. `y` is in kW.
pub fn fit<T: Scalar>(
    pool: CurvePool<T>,
    height: HeightCorrectionModel<T>,
    v_input: &[T],
    y: &[T],
    peak_rating_kw: T,
    mode: ConstraintMode,
) -> Result<(EnsembleModel<T>, FitReport<T>)> {
    if v_input.len() != y.len() {
        return Err(Error::Misaligned(format!(
            "{} wind samples vs {} power samples",
            v_input.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    if !(peak_rating_kw > T::zero()) {
        return Err(Error::Fit(format!("peak rating must be > 0 (got {peak_rating_kw})")));
    }
    if v_input.iter().chain(y).any(|x| !x.is_finite()) {
        return Err(Error::Fit("training data contains non-finite values".into()));
    }
    let n = pool.len();
    let a = design_matrix(&pool, v_input);
    let target: Vec<T> = match mode {
        ConstraintMode::Simplex => y.iter().map(|&p| p / peak_rating_kw).collect(),
        ConstraintMode::Relaxed => y.to_vec(),
    };
    let sol = nnls(&a, n, &target);
    let mut fallback = false;
    let weights = match mode {
        ConstraintMode::Simplex => {
            let total: T = sol.x.iter().copied().sum();
            if total > T::zero() {
                sol.x.iter().map(|&w| w / total).collect()
            } else {
                fallback = true;
                log::warn!("autowp: NNLS returned the zero vector; using uniform weights");
                vec![T::one() / T::from_usize_lossy(n); n]
            }
        }
        ConstraintMode::Relaxed => sol.x.clone(),
    };

    let rows = y.len();
    let scale = match mode {
        ConstraintMode::Simplex => T::one(),
        ConstraintMode::Relaxed => peak_rating_kw,
    };
    let sse = a
        .chunks_exact(n)
        .zip(&target)
        .fold(T::zero(), |acc, (row, &t)| {
            let pred: T = row.iter().zip(&weights).map(|(&c, &w)| c * w).sum();
            let r = (pred - t) / scale;
            acc + r * r
        });
    let report = FitReport {
        mse: sse / T::from_usize_lossy(rows),
        weights: weights.clone(),
        rows,
        nnls_iterations: sol.iterations,
        zero_solution_fallback: fallback,
    };
    let model = EnsembleModel {
        pool,
        weights,
        peak_rating_kw,
        height,
        mode,
    };
    Ok((model, report))
}

impl<T: Scalar> EnsembleModel<T> {
    /// Weighted sum of pool curves at hub-height wind speed `v_eff`. A ratio in
    /// simplex mode, kW in relaxed mode.
    pub fn predict_normalized(&self, v_eff: T) -> T {
        self.pool
            .curves()
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| w * c.evaluate(v_eff))
            .sum()
    }

    /// Power in kW at hub-height wind speed `v_eff`.
    pub fn predict_power(&self, v_eff: T) -> T {
        match self.mode {
            ConstraintMode::Simplex => self.predict_normalized(v_eff) * self.peak_rating_kw,
            ConstraintMode::Relaxed => self.predict_normalized(v_eff),
        }
    }

    /// Power forecast in kW from 100 m wind speed forecasts.
    pub fn predict(&self, v100_forecast: &[T]) -> Vec<T> {
        v100_forecast
            .iter()
            .map(|&v| self.predict_power(self.height.correct(v)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&EnsembleModelJson::from_model(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: EnsembleModelJson =
            serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        doc.into_model()
    }
}

pub const AUTOWP_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolCurveJson {
    id: String,
    grid_start: f64,
    values: Vec<f64>,
}

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleModelJson {
    schema_version: u32,
    model: String,
    pool_ids: Vec<String>,
    grid_step: f64,
    weights: Vec<f64>,
    peak_rating_kw: f64,
    alpha_h: f64,
    h_eff_m: f64,
    mode: ConstraintMode,
    pool: Vec<PoolCurveJson>,
}

impl EnsembleModelJson {
    fn from_model<T: Scalar>(m: &EnsembleModel<T>) -> Self {
        let curves = m.pool.curves();
        Self {
            schema_version: AUTOWP_SCHEMA_VERSION,
            model: "autowp".into(),
            pool_ids: m.pool.ids(),
            grid_step: curves[0].grid.step.to_f64_lossy(),
            weights: m.weights.iter().map(|w| w.to_f64_lossy()).collect(),
            peak_rating_kw: m.peak_rating_kw.to_f64_lossy(),
            alpha_h: m.height.alpha_h.to_f64_lossy(),
            h_eff_m: m.height.h_eff_m.to_f64_lossy(),
            mode: m.mode,
            pool: curves
                .iter()
                .map(|c| PoolCurveJson {
                    id: c.id.clone(),
                    grid_start: c.grid.start.to_f64_lossy(),
                    values: c.values.iter().map(|v| v.to_f64_lossy()).collect(),
                })
                .collect(),
        }
    }

    fn into_model<T: Scalar>(self) -> Result<EnsembleModel<T>> {
        if self.schema_version != AUTOWP_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.model != "autowp" {
            return Err(Error::Schema(format!("expected model 'autowp', got '{}'", self.model)));
        }
        if self.weights.len() != self.pool.len() || self.pool_ids.len() != self.pool.len() {
            return Err(Error::Schema("weights, pool_ids and pool differ in length".into()));
        }
        if self.pool_ids.iter().zip(&self.pool).any(|(a, c)| *a != c.id) {
            return Err(Error::Schema("pool_ids do not match pool curves".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Schema("weights must be finite and >= 0".into()));
        }
        let curves = self
            .pool
            .into_iter()
            .map(|c| {
                let grid = UniformGrid::new(T::lit(c.grid_start), T::lit(self.grid_step), c.values.len())?;
                NormalizedPowerCurve::new(c.id, grid, c.values.into_iter().map(T::lit).collect())
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Schema(e.to_string()))?;
        let height = HeightCorrectionModel::new(T::lit(self.alpha_h), T::lit(self.h_eff_m))
            .map_err(|e| Error::Schema(e.to_string()))?;
        if !(self.peak_rating_kw > 0.0) {
            return Err(Error::Schema("peak_rating_kw must be > 0".into()));
        }
        Ok(EnsembleModel {
            pool: CurvePool::new(curves).map_err(|e| Error::Schema(e.to_string()))?,
            weights: self.weights.into_iter().map(T::lit).collect(),
            peak_rating_kw: T::lit(self.peak_rating_kw),
            height,
            mode: self.mode,
        })
    }
}
