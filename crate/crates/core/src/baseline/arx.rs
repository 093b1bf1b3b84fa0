//! Autoregressive model with exogenous inputs, fitted by ridge regression.
//!
//! The next-step power is linear in lagged power, powers of the 100 m wind speed
//! forecast and the cyclic calendar encodings. When the training data carries
//! the explanatory shutdown columns, the shutdown label at each lag and the
//! night indicator at the target step are added. Multi-step forecasts are
//! recursive: predicted values fill the lags that fall after the origin, and
//! future shutdown labels are taken as normal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::AlignedDataset;
use crate::error::{Error, Result};
use crate::linalg::{normal_equations, solve_spd};
use crate::scalar::Scalar;
use crate::timeseries::{cyclic_features, NightWindow, Timestamp, DEFAULT_PERIOD_SECS, STEPS_PER_DAY};

pub const ARX_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArxConfig {
    /// Lags in steps, each in `1..=96`.
    pub lags: Vec<usize>,
    pub ridge: f64,
    /// Exponents applied to the 100 m wind speed forecast.
    pub exog_powers: Vec<i32>,
    pub calendar: bool,
    pub period_secs: i64,
    pub night: NightWindow,
}

impl Default for ArxConfig {
    fn default() -> Self {
        Self {
            lags: vec![1, 2, 3, 4, 96],
            ridge: 1.0,
            exog_powers: vec![1, 2, 3],
            calendar: true,
            period_secs: DEFAULT_PERIOD_SECS,
            night: NightWindow::default(),
        }
    }
}

impl ArxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lags.is_empty() || self.lags.iter().any(|&l| l == 0 || l > STEPS_PER_DAY) {
            return Err(Error::Parameter(format!(
                "arx lags must be a non-empty subset of 1..={STEPS_PER_DAY}"
            )));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Parameter("ridge penalty must be finite and >= 0".into()));
        }
        if self.period_secs <= 0 {
            return Err(Error::Parameter("period must be positive".into()));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }

    fn n_features(&self, explanatory: bool) -> usize {
        let base = self.lags.len() + self.exog_powers.len() + if self.calendar { 4 } else { 0 };
        if explanatory {
            base + self.lags.len() + 1
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArxModel<T> {
    pub config: ArxConfig,
    pub explanatory: bool,
    /// Coefficients on the raw (unstandardized) features.
    pub coefficients: Vec<T>,
    pub intercept: T,
    pub utc_offset_minutes: i32,
    pub training_rows: usize,
}

/// Values the design row needs at one lag position.
#[derive(Clone, Copy)]
struct LagValue<T> {
    power: T,
    shutdown: T,
}

fn design_row<T: Scalar>(
    cfg: &ArxConfig,
    explanatory: bool,
    ts: Timestamp,
    v100: T,
    utc_offset_minutes: i32,
    lag: impl Fn(Timestamp) -> Option<LagValue<T>>,
    out: &mut Vec<T>,
) -> bool {
    out.clear();
    let mut lagged = Vec::with_capacity(cfg.lags.len());
    for &l in &cfg.lags {
        match lag(ts.offset(-(l as i64) * cfg.period_secs)) {
            Some(v) => lagged.push(v),
            None => return false,
        }
    }
    out.extend(lagged.iter().map(|v| v.power));
    out.extend(cfg.exog_powers.iter().map(|&p| v100.powi(p)));
    if cfg.calendar {
        out.extend(cyclic_features::<T>(ts, utc_offset_minutes).as_array());
    }
    if explanatory {
        out.extend(lagged.iter().map(|v| v.shutdown));
        let night = cfg.night.contains(ts.minute_of_day(utc_offset_minutes));
        out.push(if night { T::one() } else { T::zero() });
    }
    true
}

/// Ridge regression with standardized columns and an unpenalized intercept.
/// Returns coefficients on the raw columns and the intercept.
pub fn ridge_fit<T: Scalar>(x: &[T], p: usize, y: &[T], ridge: T) -> Result<(Vec<T>, T)> {
    let n = y.len();
    if n == 0 || x.len() != n * p {
        return Err(Error::Fit("ridge fit needs a non-empty, aligned design".into()));
    }
    let nf = T::from_usize_lossy(n);
    let mut mean = vec![T::zero(); p];
    for row in x.chunks_exact(p) {
        for j in 0..p {
            mean[j] = mean[j] + row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / nf);
    let mut std = vec![T::zero(); p];
    for row in x.chunks_exact(p) {
        for j in 0..p {
            let d = row[j] - mean[j];
            std[j] = std[j] + d * d;
        }
    }
    let std: Vec<T> = std
        .iter()
        .map(|&s| {
            let s = (s / nf).sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect();
    let y_mean = y.iter().copied().sum::<T>() / nf;
    let xs: Vec<T> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - mean[i % p]) / std[i % p])
        .collect();
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let (mut g, c) = normal_equations(&xs, p, &yc);
    for j in 0..p {
        g[j * p + j] = g[j * p + j] + ridge;
    }
    let w = solve_spd(&g, p, &c).ok_or_else(|| {
        Error::Fit(if ridge > T::zero() {
            "ridge normal equations are singular".to_string()
        } else {
            "normal equations are singular with ridge = 0; use a ridge penalty > 0".to_string()
        })
    })?;
    let coef: Vec<T> = w.iter().zip(&std).map(|(&wj, &sj)| wj / sj).collect();
    let intercept = y_mean - coef.iter().zip(&mean).map(|(&b, &m)| b * m).sum::<T>();
    if coef.iter().any(|b| !b.is_finite()) || !intercept.is_finite() {
        return Err(Error::Fit("non-finite ridge coefficients".into()));
    }
    Ok((coef, intercept))
}

impl<T: Scalar> ArxModel<T> {
    /// Fits on the training rows of `ds` (train and holdout roles) whose lags are
    /// all present in `ds`. Explanatory features are used iff `ds` carries them.
    pub fn fit(ds: &AlignedDataset<T>, config: &ArxConfig) -> Result<Self> {
        config.validate()?;
        let explanatory = ds.explanatory.is_some();
        let p = config.n_features(explanatory);
        let index: HashMap<i64, usize> = ds.timestamps.iter().enumerate().map(|(i, t)| (t.0, i)).collect();
        let shutdown = ds.explanatory.as_ref().map(|e| &e.shutdown);
        let lag = |t: Timestamp| {
            index.get(&t.0).filter(|&&j| ds.roles[j].is_training()).map(|&j| LagValue {
                power: ds.power[j],
                shutdown: shutdown.map_or(T::zero(), |s| s[j]),
            })
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut row = Vec::with_capacity(p);
        for i in ds.training_indices() {
            if design_row(config, explanatory, ds.timestamps[i], ds.v100[i], ds.utc_offset_minutes, lag, &mut row) {
                x.extend_from_slice(&row);
                y.push(ds.power[i]);
            }
        }
        if y.len() <= p {
            return Err(Error::Fit(format!(
                "only {} rows with a complete lag history for {p} features",
                y.len()
            )));
        }
        let (coefficients, intercept) = ridge_fit(&x, p, &y, T::lit(config.ridge))?;
        Ok(Self {
            config: config.clone(),
            explanatory,
            coefficients,
            intercept,
            utc_offset_minutes: ds.utc_offset_minutes,
            training_rows: y.len(),
        })
    }

    /// Recursive forecast for `future_ts` given the processed past window.
    pub fn predict(&self, window: &AlignedDataset<T>, future_ts: &[Timestamp], future_v100: &[T]) -> Result<Vec<T>> {
        if future_ts.len() != future_v100.len() {
            return Err(Error::Misaligned("future timestamps and forecasts differ in length".into()));
        }
        let max_lag = self.config.max_lag();
        if window.len() < max_lag {
            return Err(Error::Forecast(format!(
                "past window has {} rows; the model needs {max_lag} rows of history",
                window.len()
            )));
        }
        if self.explanatory && window.explanatory.is_none() {
            return Err(Error::Forecast("model expects explanatory shutdown columns in the past window".into()));
        }
        let mut history: HashMap<i64, LagValue<T>> = window
            .timestamps
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let shutdown = window.explanatory.as_ref().map_or(T::zero(), |e| e.shutdown[i]);
                (t.0, LagValue { power: window.power[i], shutdown })
            })
            .collect();
        let p = self.coefficients.len();
        let mut row = Vec::with_capacity(p);
        let mut out = Vec::with_capacity(future_ts.len());
        for (&ts, &v) in future_ts.iter().zip(future_v100) {
            let ok = design_row(
                &self.config,
                self.explanatory,
                ts,
                v,
                self.utc_offset_minutes,
                |t| history.get(&t.0).copied(),
                &mut row,
            );
            if !ok {
                return Err(Error::Forecast(format!("incomplete lag history for {ts}")));
            }
            let y = row
                .iter()
                .zip(&self.coefficients)
                .fold(self.intercept, |s, (&xi, &b)| s + xi * b);
            history.insert(ts.0, LagValue { power: y, shutdown: T::zero() });
            out.push(y);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ArxJson {
            schema_version: ARX_SCHEMA_VERSION,
            model: "arx".into(),
            config: self.config.clone(),
            explanatory: self.explanatory,
            coefficients: self.coefficients.iter().map(|c| c.to_f64_lossy()).collect(),
            intercept: self.intercept.to_f64_lossy(),
            utc_offset_minutes: self.utc_offset_minutes,
            training_rows: self.training_rows,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ArxJson = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema_version != ARX_SCHEMA_VERSION || doc.model != "arx" {
            return Err(Error::Schema(format!(
                "expected arx model with schema_version {ARX_SCHEMA_VERSION}"
            )));
        }
        doc.config.validate().map_err(|e| Error::Schema(e.to_string()))?;
        if doc.coefficients.len() != doc.config.n_features(doc.explanatory) {
            return Err(Error::Schema("coefficient count does not match the feature layout".into()));
        }
        if doc.coefficients.iter().any(|c| !c.is_finite()) || !doc.intercept.is_finite() {
            return Err(Error::Schema("arx coefficients must be finite".into()));
        }
        Ok(Self {
            config: doc.config,
            explanatory: doc.explanatory,
            coefficients: doc.coefficients.into_iter().map(T::lit).collect(),
            intercept: T::lit(doc.intercept),
            utc_offset_minutes: doc.utc_offset_minutes,
            training_rows: doc.training_rows,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArxJson {
    schema_version: u32,
    model: String,
    config: ArxConfig,
    explanatory: bool,
    coefficients: Vec<f64>,
    intercept: f64,
    utc_offset_minutes: i32,
    training_rows: usize,
}
