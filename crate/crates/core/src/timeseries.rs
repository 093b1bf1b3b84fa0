//! Time-indexed series, unit transforms and calendar features.

use std::fmt;

use chrono::{DateTime, Datelike, NaiveDateTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default sampling period: one quarter hour.
pub const DEFAULT_PERIOD_SECS: i64 = 900;

/// Steps per day at the default period.
pub const STEPS_PER_DAY: usize = 96;

/// Instant in whole seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_ymd_hms(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> Self {
        let dt = Utc
            .with_ymd_and_hms(y, mo, d, h, mi, s)
            .single()
            .expect("valid calendar date");
        Timestamp(dt.timestamp())
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    pub fn offset(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }

    fn to_local(self, utc_offset_minutes: i32) -> NaiveDateTime {
        let dt = DateTime::<Utc>::from_timestamp(self.0 + utc_offset_minutes as i64 * 60, 0)
            .expect("timestamp in chrono range");
        dt.naive_utc()
    }

    /// 1-based day of year in the given fixed offset.
    pub fn day_of_year(self, utc_offset_minutes: i32) -> u32 {
        self.to_local(utc_offset_minutes).ordinal()
    }

    /// Minute of day (0..1440) in the given fixed offset.
    pub fn minute_of_day(self, utc_offset_minutes: i32) -> u32 {
        let t = self.to_local(utc_offset_minutes);
        t.hour() * 60 + t.minute()
    }

    /// Day of week in the given fixed offset, 0 = Monday.
    pub fn weekday(self, utc_offset_minutes: i32) -> u32 {
        self.to_local(utc_offset_minutes).weekday().num_days_from_monday()
    }

    /// Parses ISO-8601 / RFC 3339. Timestamps without an offset are read as UTC.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(Timestamp(dt.timestamp()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(Timestamp(naive.and_utc().timestamp()));
            }
        }
        None
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ")),
            None => write!(f, "@{}", self.0),
        }
    }
}

/// Values over strictly increasing timestamps; `None` marks a missing sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    timestamps: Vec<Timestamp>,
    values: Vec<Option<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(timestamps: Vec<Timestamp>, values: Vec<Option<T>>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Misaligned(format!(
                "{} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.is_empty() {
            return Err(Error::Parameter("series must hold at least one sample".into()));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(format!(
                "timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite value; use an empty cell for missing".into()));
        }
        Ok(Self { timestamps, values })
    }

    /// Builds a fully observed series.
    pub fn from_values(timestamps: Vec<Timestamp>, values: Vec<T>) -> Result<Self> {
        Self::new(timestamps, values.into_iter().map(Some).collect())
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, ts: Timestamp) -> Option<T> {
        self.timestamps
            .binary_search(&ts)
            .ok()
            .and_then(|i| self.values[i])
    }

    /// True when consecutive timestamps are exactly `period_secs` apart.
    pub fn is_uniform(&self, period_secs: i64) -> bool {
        self.timestamps
            .windows(2)
            .all(|w| w[1].0 - w[0].0 == period_secs)
    }
}

/// Mean power per sample period in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    pub series: TimeSeries<T>,
    pub peak_rating_kw: Option<T>,
}

/// Metered energy per sample period in kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries<T> {
    pub series: TimeSeries<T>,
    /// Sample period `t_k` in hours.
    pub period_hours: T,
}

/// Measured wind speed at hub height in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HubWindSeries<T> {
    pub series: TimeSeries<T>,
}

impl<T: Scalar> HubWindSeries<T> {
    pub fn new(series: TimeSeries<T>) -> Result<Self> {
        if series.values().iter().flatten().any(|v| *v < T::zero()) {
            return Err(Error::Parameter("hub wind speed must be >= 0".into()));
        }
        Ok(Self { series })
    }
}

/// One row of a numerical weather forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRow<T> {
    pub v100: Option<T>,
    pub v10: Option<T>,
    pub direction_deg: Option<T>,
    pub temperature_c: Option<T>,
    pub pressure_hpa: Option<T>,
}

/// Day-ahead weather forecast covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherForecastFrame<T> {
    timestamps: Vec<Timestamp>,
    rows: Vec<WeatherRow<T>>,
}

impl<T: Scalar> WeatherForecastFrame<T> {
    pub fn new(timestamps: Vec<Timestamp>, rows: Vec<WeatherRow<T>>) -> Result<Self> {
        if timestamps.len() != rows.len() {
            return Err(Error::Misaligned("weather timestamps vs rows".into()));
        }
        if timestamps.is_empty() {
            return Err(Error::Parameter("weather frame is empty".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("weather timestamps not strictly increasing".into()));
        }
        let full = T::lit(360.0);
        for r in &rows {
            if r.v100.is_some_and(|v| v < T::zero()) || r.v10.is_some_and(|v| v < T::zero()) {
                return Err(Error::Parameter("forecast wind speed must be >= 0".into()));
            }
            if r.direction_deg.is_some_and(|d| d < T::zero() || d >= full) {
                return Err(Error::Parameter("wind direction must lie in [0, 360)".into()));
            }
        }
        Ok(Self { timestamps, rows })
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn rows(&self) -> &[WeatherRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_at(&self, ts: Timestamp) -> Option<&WeatherRow<T>> {
        self.timestamps.binary_search(&ts).ok().map(|i| &self.rows[i])
    }
}

/// Mean power `ΔE[k] / t_k` from metered energy.
pub fn energy_to_power<T: Scalar>(e: &EnergySeries<T>) -> Result<PowerSeries<T>> {
    if !(e.period_hours > T::zero()) {
        return Err(Error::InvalidPeriod(e.period_hours.to_f64_lossy()));
    }
    let values = e
        .series
        .values()
        .iter()
        .map(|v| v.map(|x| x / e.period_hours))
        .collect();
    Ok(PowerSeries {
        series: TimeSeries::new(e.series.timestamps().to_vec(), values)?,
        peak_rating_kw: None,
    })
}

/// Sine/cosine encoding of day-of-year and minute-of-day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicFeatures<T> {
    pub sin_day: T,
    pub cos_day: T,
    pub sin_minute: T,
    pub cos_minute: T,
}

impl<T: Scalar> CyclicFeatures<T> {
    /// `day` is 1-based; leap day 366 keeps the 365 denominator.
    pub fn from_parts(day: u32, minute: u32) -> Self {
        let tau = T::lit(std::f64::consts::TAU);
        let d = tau * T::lit(day as f64) / T::lit(365.0);
        let m = tau * T::lit(minute as f64) / T::lit(1440.0);
        Self {
            sin_day: d.sin(),
            cos_day: d.cos(),
            sin_minute: m.sin(),
            cos_minute: m.cos(),
        }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.sin_day, self.cos_day, self.sin_minute, self.cos_minute]
    }
}

pub fn cyclic_features<T: Scalar>(ts: Timestamp, utc_offset_minutes: i32) -> CyclicFeatures<T> {
    CyclicFeatures::from_parts(
        ts.day_of_year(utc_offset_minutes),
        ts.minute_of_day(utc_offset_minutes),
    )
}

/// Half-open minute-of-day window `[start, end)` that may wrap midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NightWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl Default for NightWindow {
    fn default() -> Self {
        Self {
            start_minute: 22 * 60,
            end_minute: 6 * 60,
        }
    }
}

impl NightWindow {
    pub fn new(start_minute: u32, end_minute: u32) -> Result<Self> {
        if start_minute >= 1440 || end_minute >= 1440 {
            return Err(Error::Parameter("night window minutes must lie in [0, 1440)".into()));
        }
        Ok(Self {
            start_minute,
            end_minute,
        })
    }

    pub fn contains(&self, minute: u32) -> bool {
        let (s, e) = (self.start_minute, self.end_minute);
        if s <= e {
            s <= minute && minute < e
        } else {
            minute >= s || minute < e
        }
    }
}

/// 1 during the night window, 0 otherwise.
pub fn night_indicator(ts: Timestamp, window: NightWindow, utc_offset_minutes: i32) -> u8 {
    window.contains(ts.minute_of_day(utc_offset_minutes)) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn energy_to_power_examples() {
        let ts = vec![Timestamp(0), Timestamp(900)];
        let e = EnergySeries {
            series: TimeSeries::from_values(ts.clone(), vec![250.0, 0.0]).unwrap(),
            period_hours: 0.25,
        };
        let p = energy_to_power(&e).unwrap();
        assert_eq!(p.series.values(), &[Some(1000.0), Some(0.0)]);
        assert_eq!(p.series.timestamps(), ts.as_slice());

        let bad = EnergySeries {
            series: TimeSeries::from_values(ts, vec![1.0, 1.0]).unwrap(),
            period_hours: 0.0,
        };
        assert!(matches!(energy_to_power(&bad), Err(Error::InvalidPeriod(_))));
    }

    #[test]
    fn missing_energy_stays_missing() {
        let e = EnergySeries {
            series: TimeSeries::new(vec![Timestamp(0), Timestamp(900)], vec![None, Some(10.0)])
                .unwrap(),
            period_hours: 0.25,
        };
        let p = energy_to_power(&e).unwrap();
        assert_eq!(p.series.values(), &[None, Some(40.0)]);
    }

    #[test]
    fn cyclic_examples() {
        let half = CyclicFeatures::<f64>::from_parts(1, 720);
        assert_abs_diff_eq!(half.sin_minute, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(half.cos_minute, -1.0, epsilon = 1e-12);

        let full = CyclicFeatures::<f64>::from_parts(365, 0);
        assert_abs_diff_eq!(full.sin_day, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(full.cos_day, 1.0, epsilon = 1e-12);

        let first = CyclicFeatures::<f64>::from_parts(1, 0);
        assert_abs_diff_eq!(first.sin_day, 0.017213, epsilon = 1e-6);
    }

    #[test]
    fn calendar_parts_from_timestamp() {
        let ts = Timestamp::from_ymd_hms(2020, 12, 31, 23, 45, 0);
        assert_eq!(ts.day_of_year(0), 366);
        assert_eq!(ts.minute_of_day(0), 23 * 60 + 45);
        // +60 min pushes into the next year
        assert_eq!(ts.day_of_year(60), 1);
        assert_eq!(ts.minute_of_day(60), 45);
    }

    #[test]
    fn night_window_examples() {
        let w = NightWindow::new(1320, 360).unwrap();
        assert!(w.contains(60));
        assert!(!w.contains(720));
        assert!(w.contains(1320));
        assert!(!w.contains(360));
        let empty = NightWindow::new(0, 0).unwrap();
        assert!((0..1440).all(|m| !empty.contains(m)));
        assert!(NightWindow::new(1440, 0).is_err());

        let ts = Timestamp::from_ymd_hms(2019, 3, 1, 1, 0, 0);
        assert_eq!(night_indicator(ts, w, 0), 1);
    }

    #[test]
    fn timestamp_parse_and_format() {
        let ts = Timestamp::parse("2020-01-01T00:15:00Z").unwrap();
        assert_eq!(ts, Timestamp::from_ymd_hms(2020, 1, 1, 0, 15, 0));
        assert_eq!(Timestamp::parse("2020-01-01 00:15:00"), Some(ts));
        assert_eq!(Timestamp::parse("2020-01-01T01:15:00+01:00"), Some(ts));
        assert_eq!(ts.to_string(), "2020-01-01T00:15:00Z");
        assert!(Timestamp::parse("yesterday").is_none());
    }

    #[test]
    fn series_rejects_non_monotonic() {
        let r = TimeSeries::from_values(vec![Timestamp(10), Timestamp(10)], vec![1.0, 2.0]);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn energy_round_trip(vals in prop::collection::vec(0.0f64..5000.0, 1..200), period in 0.01f64..2.0) {
            let ts: Vec<_> = (0..vals.len() as i64).map(|i| Timestamp(i * 900)).collect();
            let e = EnergySeries { series: TimeSeries::from_values(ts, vals.clone()).unwrap(), period_hours: period };
            let p = energy_to_power(&e).unwrap();
            let back: f64 = p.series.values().iter().flatten().map(|v| v * period).sum();
            let total: f64 = vals.iter().sum();
            prop_assert!((back - total).abs() <= 1e-9 * total.abs().max(1.0));
        }

        #[test]
        fn cyclic_pairs_on_unit_circle(day in 1u32..=366, minute in 0u32..1440) {
            let c = CyclicFeatures::<f64>::from_parts(day, minute);
            prop_assert!((c.sin_day.powi(2) + c.cos_day.powi(2) - 1.0).abs() <= 1e-12);
            prop_assert!((c.sin_minute.powi(2) + c.cos_minute.powi(2) - 1.0).abs() <= 1e-12);
        }
    }
}
