//! Model selection, fitting per shutdown strategy, and day-ahead forecasts at a
//! single origin. The orchestration layer works in `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autowp::{self, ConstraintMode, EnsembleModel, FitReport};
use crate::baseline::mlp::{mlp_features, MLP_FEATURES};
use crate::baseline::{ArxConfig, ArxModel, MlpConfig, MlpRegressor, OemCurveForecaster};
use crate::curve::{build_pool, PowerCurve, DEFAULT_GRID_MAX, DEFAULT_GRID_STEP, DEFAULT_POOL_SIZE};
use crate::dataset::{AlignedDataset, Role};
use crate::error::{Error, Result};
use crate::height::{HeightCorrectionModel, ALPHA_ONSHORE};
use crate::postprocess::{clip_forecast, ClipConfig, DEFAULT_CUT_OUT};
use crate::shutdown::{apply_operation_strategy, apply_training_strategy, HandlingStrategy, ShutdownMask};
use crate::timeseries::{NightWindow, Timestamp, WeatherRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Oem,
    Autowp,
    Mlp,
    Arx,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Oem, ModelKind::Autowp, ModelKind::Mlp, ModelKind::Arx];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Oem => "oem",
            ModelKind::Autowp => "autowp",
            ModelKind::Mlp => "mlp",
            ModelKind::Arx => "arx",
        }
    }

    /// Training depends on a random seed.
    pub fn is_stochastic(self) -> bool {
        self == ModelKind::Mlp
    }

    /// Uses past power values at forecast time.
    pub fn is_autoregressive(self) -> bool {
        self == ModelKind::Arx
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}' (valid: oem, autowp, mlp, arx)")))
    }
}

/// AutoWP fit input: the height-corrected 100 m forecast, matching what the
/// model sees in operation, or the measured hub wind speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWind {
    Forecast,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub pool_size: usize,
    pub grid_step: f64,
    pub grid_max: f64,
    pub alpha_h: f64,
    pub constraint: ConstraintMode,
    /// Wind speed the ensemble weights are fitted against.
    pub autowp_fit_wind: FitWind,
    pub cut_out: f64,
    pub mlp: MlpConfig,
    pub arx: ArxConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            grid_step: DEFAULT_GRID_STEP,
            grid_max: DEFAULT_GRID_MAX,
            alpha_h: ALPHA_ONSHORE,
            constraint: ConstraintMode::Simplex,
            autowp_fit_wind: FitWind::Forecast,
            cut_out: DEFAULT_CUT_OUT,
            mlp: MlpConfig::default(),
            arx: ArxConfig::default(),
        }
    }
}

/// Everything needed to fit and operate models for one turbine.
#[derive(Debug, Clone)]
pub struct TurbineContext<'a> {
    pub dataset: &'a AlignedDataset<f64>,
    pub mask: &'a ShutdownMask,
    pub oem_curve: &'a PowerCurve<f64>,
    pub library: &'a [PowerCurve<f64>],
    pub peak_rating_kw: f64,
    pub night: NightWindow,
    pub settings: &'a ModelSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Oem(OemCurveForecaster<f64>),
    Autowp(EnsembleModel<f64>),
    Mlp(MlpRegressor<f64>),
    Arx(ArxModel<f64>),
}

/// Future rows of one forecast: timestamps and the day-ahead weather forecast.
#[derive(Debug, Clone, Copy)]
pub struct FutureInputs<'a> {
    pub timestamps: &'a [Timestamp],
    pub weather: &'a [WeatherRow<f64>],
}

impl<'a> FutureInputs<'a> {
    fn v100(&self) -> Result<Vec<f64>> {
        self.weather
            .iter()
            .zip(self.timestamps)
            .map(|(w, t)| w.v100.ok_or_else(|| Error::Forecast(format!("missing v100 forecast at {t}"))))
            .collect()
    }
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Oem(_) => ModelKind::Oem,
            FittedModel::Autowp(_) => ModelKind::Autowp,
            FittedModel::Mlp(_) => ModelKind::Mlp,
            FittedModel::Arx(_) => ModelKind::Arx,
        }
    }

    /// Raw (unclipped) forecast. Autoregressive models need the processed past
    /// window; the static models ignore it.
    pub fn forecast(&self, window: Option<&AlignedDataset<f64>>, future: FutureInputs<'_>) -> Result<Vec<f64>> {
        if future.timestamps.len() != future.weather.len() {
            return Err(Error::Misaligned("future timestamps and weather rows differ in length".into()));
        }
        match self {
            FittedModel::Oem(m) => Ok(m.predict(&future.v100()?)),
            FittedModel::Autowp(m) => Ok(m.predict(&future.v100()?)),
            FittedModel::Mlp(m) => {
                let x: Vec<f64> = future.weather.iter().flat_map(mlp_features).collect();
                m.predict(&x)
            }
            FittedModel::Arx(m) => {
                let window = window.ok_or_else(|| {
                    Error::Forecast(format!(
                        "arx needs a past window of {} rows of power history",
                        m.config.max_lag().max(crate::timeseries::STEPS_PER_DAY)
                    ))
                })?;
                m.predict(window, future.timestamps, &future.v100()?)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            FittedModel::Oem(m) => m.to_json(),
            FittedModel::Autowp(m) => m.to_json(),
            FittedModel::Mlp(m) => m.to_json(),
            FittedModel::Arx(m) => m.to_json(),
        }
    }

    /// Reads any model document, dispatching on its `model` field.
    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            model: String,
        }
        let probe: Probe = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        match probe.model.parse::<ModelKind>().map_err(|e| Error::Schema(e.to_string()))? {
            ModelKind::Oem => OemCurveForecaster::from_json(s).map(FittedModel::Oem),
            ModelKind::Autowp => EnsembleModel::from_json(s).map(FittedModel::Autowp),
            ModelKind::Mlp => MlpRegressor::from_json(s).map(FittedModel::Mlp),
            ModelKind::Arx => ArxModel::from_json(s).map(FittedModel::Arx),
        }
    }

    /// Height model used for clipping the forecast.
    pub fn height(&self) -> Option<HeightCorrectionModel<f64>> {
        match self {
            FittedModel::Oem(m) => Some(m.height),
            FittedModel::Autowp(m) => Some(m.height),
            _ => None,
        }
    }
}

/// Training data for one strategy: the processed dataset and the height model
/// fitted on its training rows.
#[derive(Debug, Clone)]
pub struct PreparedTraining {
    pub strategy: HandlingStrategy,
    pub dataset: AlignedDataset<f64>,
    pub height: HeightCorrectionModel<f64>,
}

pub fn prepare_training(ctx: &TurbineContext<'_>, strategy: HandlingStrategy) -> Result<PreparedTraining> {
    let dataset = apply_training_strategy(ctx.dataset, ctx.mask, strategy, ctx.oem_curve, ctx.night)?;
    let rows = dataset.training_indices();
    if rows.is_empty() {
        return Err(Error::Fit("no training rows left after applying the strategy".into()));
    }
    let height = HeightCorrectionModel::fit(
        rows.iter().map(|&i| dataset.hub_wind[i]),
        rows.iter().map(|&i| Some(dataset.v100[i])),
        ctx.settings.alpha_h,
    )?;
    Ok(PreparedTraining {
        strategy,
        dataset,
        height,
    })
}

/// Outcome of one fit; the ensemble report is kept for the fit command.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: FittedModel,
    pub autowp_report: Option<FitReport<f64>>,
}

pub fn fit_model(ctx: &TurbineContext<'_>, prep: &PreparedTraining, kind: ModelKind, seed: u64) -> Result<FitOutcome> {
    let ds = &prep.dataset;
    let s = ctx.settings;
    let mut autowp_report = None;
    let model = match kind {
        ModelKind::Oem => FittedModel::Oem(OemCurveForecaster::new(ctx.oem_curve.clone(), prep.height)),
        ModelKind::Autowp => {
            let pool = build_pool(ctx.library, s.grid_step, s.grid_max, s.pool_size)?;
            let (v, y): (Vec<f64>, Vec<f64>) = ds
                .training_indices()
                .into_iter()
                .filter_map(|i| {
                    let v = match s.autowp_fit_wind {
                        FitWind::Forecast => ds.weather[i].v100.map(|v| prep.height.correct(v)),
                        FitWind::Measured => ds.hub_wind[i],
                    };
                    v.map(|v| (v, ds.power[i]))
                })
                .unzip();
            let (m, report) = autowp::fit(pool, prep.height, &v, &y, ctx.peak_rating_kw, s.constraint)?;
            autowp_report = Some(report);
            FittedModel::Autowp(m)
        }
        ModelKind::Mlp => {
            let rows = |role: Role| -> (Vec<f64>, Vec<f64>) {
                let idx = ds.indices_with(|r| r == role);
                let x = idx.iter().flat_map(|&i| mlp_features(&ds.weather[i])).collect();
                let y = idx.iter().map(|&i| ds.power[i]).collect();
                (x, y)
            };
            let (x, y) = rows(Role::Train);
            let (hx, hy) = rows(Role::Holdout);
            FittedModel::Mlp(MlpRegressor::fit(&x, &y, &hx, &hy, MLP_FEATURES, &s.mlp, seed)?)
        }
        ModelKind::Arx => FittedModel::Arx(ArxModel::fit(ds, &s.arx)?),
    };
    Ok(FitOutcome { model, autowp_report })
}

/// Day-ahead forecast at row `origin` of the unprocessed dataset: the past
/// window is rows `origin - H₁ .. origin`, processed with the operation
/// strategy; the future rows contribute only timestamps and weather forecasts.
/// The result is clipped to `[0, P_max]` and zero at or above cut-out.
pub fn forecast_at_origin(
    ctx: &TurbineContext<'_>,
    model: &FittedModel,
    height: HeightCorrectionModel<f64>,
    operation: HandlingStrategy,
    origin: usize,
    horizon: usize,
    past_horizon: usize,
) -> Result<Vec<f64>> {
    let ds = ctx.dataset;
    if origin + horizon > ds.len() {
        return Err(Error::Forecast("forecast horizon runs past the end of the data".into()));
    }
    let future = FutureInputs {
        timestamps: &ds.timestamps[origin..origin + horizon],
        weather: &ds.weather[origin..origin + horizon],
    };
    let window = if model.kind().is_autoregressive() {
        Some(past_window(ctx, origin, past_horizon, operation)?)
    } else {
        None
    };
    forecast_clipped(model, window.as_ref(), future, height, ctx.peak_rating_kw, ctx.settings.cut_out)
}

/// Rows `origin - past_horizon .. origin` processed with the operation strategy.
pub fn past_window(
    ctx: &TurbineContext<'_>,
    origin: usize,
    past_horizon: usize,
    operation: HandlingStrategy,
) -> Result<AlignedDataset<f64>> {
    if origin < past_horizon {
        return Err(Error::Forecast(format!("origin {origin} has fewer than {past_horizon} past rows")));
    }
    let rows: Vec<usize> = (origin - past_horizon..origin).collect();
    let raw = ctx.dataset.select(&rows);
    let mask = ctx.mask.select(&rows);
    apply_operation_strategy(&raw, &mask, operation, ctx.oem_curve, ctx.night, past_horizon)
}

/// Forecast followed by the clipping rules at the corrected forecast wind.
pub fn forecast_clipped(
    model: &FittedModel,
    window: Option<&AlignedDataset<f64>>,
    future: FutureInputs<'_>,
    height: HeightCorrectionModel<f64>,
    peak_rating_kw: f64,
    cut_out: f64,
) -> Result<Vec<f64>> {
    let y_hat = model.forecast(window, future)?;
    let v_eff: Vec<f64> = height.correct_forecast(&future.v100()?);
    clip_forecast(&y_hat, &v_eff, &ClipConfig::new(peak_rating_kw, cut_out)?)
}
