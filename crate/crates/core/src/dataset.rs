//! Time-aligned turbine dataset and the train / hold-out / test split.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timeseries::{
    cyclic_features, CyclicFeatures, HubWindSeries, PowerSeries, Timestamp, WeatherForecastFrame,
    WeatherRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Holdout,
    Test,
}

impl Role {
    pub fn is_training(self) -> bool {
        matches!(self, Role::Train | Role::Holdout)
    }
}

/// Extra columns appended by the explanatory-variables shutdown strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanatoryColumns<T> {
    /// Shutdown label `x_sd` (1 = abnormal).
    pub shutdown: Vec<T>,
    /// Theoretical power from the OEM curve at the measured hub wind (kW).
    pub theoretical_power: Vec<T>,
    pub night: Vec<T>,
}

/// Row-aligned power, hub wind, forecast covariates and calendar features.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset<T> {
    pub timestamps: Vec<Timestamp>,
    pub power: Vec<T>,
    pub hub_wind: Vec<Option<T>>,
    pub v100: Vec<T>,
    pub weather: Vec<WeatherRow<T>>,
    pub calendar: Vec<CyclicFeatures<T>>,
    pub roles: Vec<Role>,
    pub explanatory: Option<ExplanatoryColumns<T>>,
    pub utc_offset_minutes: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignReport {
    /// Rows in the timestamp intersection.
    pub joined: usize,
    /// Rows dropped for a missing power or v100 value.
    pub dropped: usize,
}

/// Inner join of the three inputs on timestamps.
pub fn align<T: Scalar>(
    power: &PowerSeries<T>,
    hub: &HubWindSeries<T>,
    weather: &WeatherForecastFrame<T>,
    utc_offset_minutes: i32,
) -> Result<(AlignedDataset<T>, AlignReport)> {
    let p_ts = power.series.timestamps();
    let h_ts = hub.series.timestamps();
    let w_ts = weather.timestamps();

    let mut ds = AlignedDataset::empty(utc_offset_minutes);
    let (mut i, mut j, mut k) = (0, 0, 0);
    let mut joined = 0;
    while i < p_ts.len() && j < h_ts.len() && k < w_ts.len() {
        let t = p_ts[i].max(h_ts[j]).max(w_ts[k]);
        if p_ts[i] < t {
            i += 1;
            continue;
        }
        if h_ts[j] < t {
            j += 1;
            continue;
        }
        if w_ts[k] < t {
            k += 1;
            continue;
        }
        joined += 1;
        let row = weather.rows()[k];
        if let (Some(p), Some(v100)) = (power.series.values()[i], row.v100) {
            ds.push_row(t, p, hub.series.values()[j], v100, row);
        }
        i += 1;
        j += 1;
        k += 1;
    }
    if joined == 0 {
        return Err(Error::Alignment("inputs share no timestamps".into()));
    }
    if ds.is_empty() {
        return Err(Error::Alignment(
            "every joined row is missing power or v100".into(),
        ));
    }
    let report = AlignReport {
        joined,
        dropped: joined - ds.len(),
    };
    if report.dropped > 0 {
        log::warn!("align: dropped {} rows with missing power or v100", report.dropped);
    }
    Ok((ds, report))
}

/// Tags rows before `boundary` as training (the chronological tail
/// `holdout_fraction` of them as hold-out) and the rest as test.
pub fn split<T: Scalar>(
    mut ds: AlignedDataset<T>,
    boundary: Timestamp,
    holdout_fraction: f64,
) -> Result<AlignedDataset<T>> {
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::Split(format!(
            "hold-out fraction {holdout_fraction} outside [0, 1)"
        )));
    }
    let (first, last) = match (ds.timestamps.first(), ds.timestamps.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Split("dataset is empty".into())),
    };
    if boundary <= first || boundary > last {
        return Err(Error::Split(format!(
            "boundary {boundary} outside dataset range ({first} .. {last}]"
        )));
    }
    let n_train = ds.timestamps.partition_point(|t| *t < boundary);
    let n_holdout = (n_train as f64 * holdout_fraction).round() as usize;
    for (i, role) in ds.roles.iter_mut().enumerate() {
        *role = if i >= n_train {
            Role::Test
        } else if i >= n_train - n_holdout {
            Role::Holdout
        } else {
            Role::Train
        };
    }
    Ok(ds)
}

impl<T: Scalar> AlignedDataset<T> {
    pub fn empty(utc_offset_minutes: i32) -> Self {
        Self {
            timestamps: Vec::new(),
            power: Vec::new(),
            hub_wind: Vec::new(),
            v100: Vec::new(),
            weather: Vec::new(),
            calendar: Vec::new(),
            roles: Vec::new(),
            explanatory: None,
            utc_offset_minutes,
        }
    }

    pub fn push_row(
        &mut self,
        ts: Timestamp,
        power: T,
        hub_wind: Option<T>,
        v100: T,
        weather: WeatherRow<T>,
    ) {
        self.timestamps.push(ts);
        self.power.push(power);
        self.hub_wind.push(hub_wind);
        self.v100.push(v100);
        self.weather.push(weather);
        self.calendar
            .push(cyclic_features(ts, self.utc_offset_minutes));
        self.roles.push(Role::Train);
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn position(&self, ts: Timestamp) -> Option<usize> {
        self.timestamps.binary_search(&ts).ok()
    }

    pub fn indices_with(&self, pred: impl Fn(Role) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| pred(self.roles[i])).collect()
    }

    pub fn training_indices(&self) -> Vec<usize> {
        self.indices_with(Role::is_training)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices_with(|r| r == Role::Test)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let pick = |v: &[T]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            power: pick(&self.power),
            hub_wind: rows.iter().map(|&i| self.hub_wind[i]).collect(),
            v100: pick(&self.v100),
            weather: rows.iter().map(|&i| self.weather[i]).collect(),
            calendar: rows.iter().map(|&i| self.calendar[i]).collect(),
            roles: rows.iter().map(|&i| self.roles[i]).collect(),
            explanatory: self.explanatory.as_ref().map(|e| ExplanatoryColumns {
                shutdown: pick(&e.shutdown),
                theoretical_power: pick(&e.theoretical_power),
                night: pick(&e.night),
            }),
            utc_offset_minutes: self.utc_offset_minutes,
        }
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        let rows: Vec<usize> = range.collect();
        self.select(&rows)
    }

    /// True when rows `range` are consecutive at `period_secs` spacing.
    pub fn is_contiguous(&self, range: Range<usize>, period_secs: i64) -> bool {
        self.timestamps[range]
            .windows(2)
            .all(|w| w[1].0 - w[0].0 == period_secs)
    }
}
