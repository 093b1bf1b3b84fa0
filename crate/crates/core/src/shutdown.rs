//! Abnormal-operation detection and the shutdown handling strategies applied to
//! training data and to the autoregressive past horizon at forecast time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::PowerCurve;
use crate::dataset::{AlignedDataset, ExplanatoryColumns};
use crate::error::{Error, Result};
use crate::lof::LofModel;
use crate::scalar::Scalar;
use crate::timeseries::{HubWindSeries, NightWindow, PowerSeries, Timestamp};

/// Cut-in wind speed of the evaluation turbines (m/s).
pub const DEFAULT_V_CUT_IN: f64 = 2.5;
/// Cut-in power threshold as a share of the peak rating.
pub const DEFAULT_P_CUT_IN_SHARE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Normal,
    RuleShutdown,
    LofOutlier,
    /// Flagged by both detectors.
    Combined,
}

impl Flag {
    pub fn is_flagged(self) -> bool {
        self != Flag::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            Flag::Normal => "normal",
            Flag::RuleShutdown => "rule_shutdown",
            Flag::LofOutlier => "lof_outlier",
            Flag::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(Flag::Normal),
            "rule_shutdown" => Some(Flag::RuleShutdown),
            "lof_outlier" => Some(Flag::LofOutlier),
            "combined" => Some(Flag::Combined),
            _ => None,
        }
    }

    fn union(self, other: Flag) -> Flag {
        use Flag::*;
        match (self, other) {
            (Normal, f) | (f, Normal) => f,
            (a, b) if a == b => a,
            _ => Combined,
        }
    }
}

/// Per-timestamp abnormal-operation labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ShutdownMask {
    pub timestamps: Vec<Timestamp>,
    pub flags: Vec<Flag>,
    pub source: String,
}

impl ShutdownMask {
    pub fn empty(timestamps: &[Timestamp], source: &str) -> Self {
        Self {
            timestamps: timestamps.to_vec(),
            flags: vec![Flag::Normal; timestamps.len()],
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_flagged(&self, i: usize) -> bool {
        self.flags[i].is_flagged()
    }

    pub fn flagged(&self) -> Vec<bool> {
        self.flags.iter().map(|f| f.is_flagged()).collect()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_flagged()).count()
    }

    pub fn share(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.flags.len() as f64
        }
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            flags: rows.iter().map(|&i| self.flags[i]).collect(),
            source: self.source.clone(),
        }
    }

    pub fn check_aligned<T: Scalar>(&self, ds: &AlignedDataset<T>) -> Result<()> {
        if self.timestamps != ds.timestamps {
            return Err(Error::Misaligned(format!(
                "mask ({} rows) does not match dataset ({} rows)",
                self.len(),
                ds.len()
            )));
        }
        Ok(())
    }
}

/// Union of two masks over identical timestamps; rows flagged by both become
/// [`Flag::Combined`].
pub fn combine(a: &ShutdownMask, b: &ShutdownMask) -> Result<ShutdownMask> {
    if a.timestamps != b.timestamps {
        return Err(Error::Misaligned("masks cover different timestamps".into()));
    }
    let source = match (a.source.as_str(), b.source.as_str()) {
        (x, y) if x == y => x.to_string(),
        ("", y) => y.to_string(),
        (x, "") => x.to_string(),
        (x, y) => format!("{x}+{y}"),
    };
    Ok(ShutdownMask {
        timestamps: a.timestamps.clone(),
        flags: a.flags.iter().zip(&b.flags).map(|(&x, &y)| x.union(y)).collect(),
        source,
    })
}

fn rule_flag<T: Scalar>(v: Option<T>, y: T, v_cut_in: T, p_cut_in: T) -> Flag {
    match v {
        Some(v) if v > v_cut_in && y < p_cut_in => Flag::RuleShutdown,
        _ => Flag::Normal,
    }
}

/// Flags samples with wind above cut-in speed but power below cut-in power.
pub fn rule_based_flags<T: Scalar>(
    hub_wind: &HubWindSeries<T>,
    power: &PowerSeries<T>,
    v_cut_in: T,
    p_cut_in: T,
) -> Result<ShutdownMask> {
    if hub_wind.series.timestamps() != power.series.timestamps() {
        return Err(Error::Misaligned("hub wind and power timestamps differ".into()));
    }
    let flags = hub_wind
        .series
        .values()
        .iter()
        .zip(power.series.values())
        .map(|(&v, &y)| match y {
            Some(y) => rule_flag(v, y, v_cut_in, p_cut_in),
            None => Flag::Normal,
        })
        .collect();
    Ok(ShutdownMask {
        timestamps: power.series.timestamps().to_vec(),
        flags,
        source: "rule".into(),
    })
}

/// Rule-based flags over an aligned dataset.
pub fn rule_based_flags_dataset<T: Scalar>(
    ds: &AlignedDataset<T>,
    v_cut_in: T,
    p_cut_in: T,
) -> ShutdownMask {
    ShutdownMask {
        timestamps: ds.timestamps.clone(),
        flags: ds
            .hub_wind
            .iter()
            .zip(&ds.power)
            .map(|(&v, &y)| rule_flag(v, y, v_cut_in, p_cut_in))
            .collect(),
        source: "rule".into(),
    }
}

/// LOF features of row `i`: measured hub wind and power over the rating.
fn lof_point<T: Scalar>(ds: &AlignedDataset<T>, i: usize, peak: T) -> Option<[T; 2]> {
    ds.hub_wind[i].map(|v| [v, ds.power[i] / peak])
}

/// Fits the LOF neighborhoods on the training rows and scores every row:
/// training rows relative to each other, all other rows against that set.
/// Rows without a hub wind measurement score NaN.
pub fn lof_dataset_scores<T: Scalar>(
    ds: &AlignedDataset<T>,
    k: usize,
    peak_rating_kw: T,
) -> Result<Vec<T>> {
    let train_rows: Vec<usize> = ds
        .training_indices()
        .into_iter()
        .filter(|&i| ds.hub_wind[i].is_some())
        .collect();
    let points: Vec<[T; 2]> = train_rows
        .iter()
        .filter_map(|&i| lof_point(ds, i, peak_rating_kw))
        .collect();
    let model = LofModel::fit(&points, k)?;
    let mut scores = vec![T::nan(); ds.len()];
    for (pos, &i) in train_rows.iter().enumerate() {
        scores[i] = model.training_scores()[pos];
    }
    for (i, s) in scores.iter_mut().enumerate() {
        if ds.roles[i].is_training() {
            continue;
        }
        if let Some(p) = lof_point(ds, i, peak_rating_kw) {
            *s = model.score(p);
        }
    }
    Ok(scores)
}

/// Flags rows whose LOF score exceeds `threshold`.
pub fn lof_flags<T: Scalar>(
    ds: &AlignedDataset<T>,
    k: usize,
    threshold: T,
    peak_rating_kw: T,
) -> Result<ShutdownMask> {
    let scores = lof_dataset_scores(ds, k, peak_rating_kw)?;
    Ok(ShutdownMask {
        timestamps: ds.timestamps.clone(),
        flags: scores
            .iter()
            .map(|&s| if s > threshold { Flag::LofOutlier } else { Flag::Normal })
            .collect(),
        source: "lof".into(),
    })
}

/// Detector settings as supplied by the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub v_cut_in: f64,
    /// Cut-in power in kW; defaults to a share of the peak rating.
    pub p_cut_in_kw: Option<f64>,
    pub p_cut_in_share: f64,
    pub lof: bool,
    pub lof_k: usize,
    pub lof_threshold: f64,
    pub night: NightWindow,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            v_cut_in: DEFAULT_V_CUT_IN,
            p_cut_in_kw: None,
            p_cut_in_share: DEFAULT_P_CUT_IN_SHARE,
            lof: true,
            lof_k: crate::lof::DEFAULT_K,
            lof_threshold: crate::lof::DEFAULT_THRESHOLD,
            night: NightWindow::default(),
        }
    }
}

impl DetectionConfig {
    pub fn p_cut_in(&self, peak_rating_kw: f64) -> f64 {
        self.p_cut_in_kw.unwrap_or(self.p_cut_in_share * peak_rating_kw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_cut_in > 0.0) || !(self.p_cut_in_share >= 0.0) || self.p_cut_in_kw.is_some_and(|p| !(p >= 0.0)) {
            return Err(Error::Config("cut-in speed must be > 0 and cut-in power >= 0".into()));
        }
        if self.lof && (self.lof_k == 0 || !(self.lof_threshold > 0.0)) {
            return Err(Error::Config("LOF needs k >= 1 and a positive threshold".into()));
        }
        Ok(())
    }
}

/// Rule-based flags, united with LOF flags when enabled.
pub fn detect(ds: &AlignedDataset<f64>, cfg: &DetectionConfig, peak_rating_kw: f64) -> Result<ShutdownMask> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Alignment("cannot detect shutdowns on an empty dataset".into()));
    }
    let rule = rule_based_flags_dataset(ds, cfg.v_cut_in, cfg.p_cut_in(peak_rating_kw));
    if !cfg.lof {
        return Ok(rule);
    }
    let lof = lof_flags(ds, cfg.lof_k, cfg.lof_threshold, peak_rating_kw)?;
    combine(&rule, &lof)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandlingStrategy {
    None,
    ExplanatoryVariables,
    Drop,
    Imputation,
    DropImputation,
}

impl HandlingStrategy {
    pub const ALL: [HandlingStrategy; 5] = [
        HandlingStrategy::None,
        HandlingStrategy::ExplanatoryVariables,
        HandlingStrategy::Drop,
        HandlingStrategy::Imputation,
        HandlingStrategy::DropImputation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HandlingStrategy::None => "none",
            HandlingStrategy::ExplanatoryVariables => "explanatory_variables",
            HandlingStrategy::Drop => "drop",
            HandlingStrategy::Imputation => "imputation",
            HandlingStrategy::DropImputation => "drop_imputation",
        }
    }
}

impl fmt::Display for HandlingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HandlingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HandlingStrategy::ALL
            .into_iter()
            .find(|h| h.name() == s || h.name().replace('_', "-") == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy '{s}' (valid: none, explanatory_variables, drop, imputation, drop_imputation)"
                ))
            })
    }
}

/// Features only known up to the forecast origin, plus the calendar encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct PastHorizonFeatures<T> {
    /// Theoretical power from the OEM curve at the measured hub wind (kW).
    pub theoretical_power: Vec<T>,
    pub shutdown: Vec<T>,
    pub cyclic: Vec<[T; 4]>,
    pub night: Vec<T>,
}

pub fn past_horizon_features<T: Scalar>(
    window: &AlignedDataset<T>,
    mask: &ShutdownMask,
    oem_curve: &PowerCurve<T>,
    night: NightWindow,
) -> Result<PastHorizonFeatures<T>> {
    mask.check_aligned(window)?;
    let cols = explanatory_columns(window, mask, oem_curve, night);
    Ok(PastHorizonFeatures {
        theoretical_power: cols.theoretical_power,
        shutdown: cols.shutdown,
        cyclic: window.calendar.iter().map(|c| c.as_array()).collect(),
        night: cols.night,
    })
}

fn explanatory_columns<T: Scalar>(
    ds: &AlignedDataset<T>,
    mask: &ShutdownMask,
    oem_curve: &PowerCurve<T>,
    night: NightWindow,
) -> ExplanatoryColumns<T> {
    let flag = |b: bool| if b { T::one() } else { T::zero() };
    ExplanatoryColumns {
        shutdown: mask.flags.iter().map(|f| flag(f.is_flagged())).collect(),
        theoretical_power: ds
            .hub_wind
            .iter()
            .map(|v| v.map_or(T::zero(), |v| oem_curve.evaluate(v)))
            .collect(),
        night: ds
            .timestamps
            .iter()
            .map(|t| flag(night.contains(t.minute_of_day(ds.utc_offset_minutes))))
            .collect(),
    }
}

fn impute_rows<T: Scalar>(
    ds: &mut AlignedDataset<T>,
    rows: impl Iterator<Item = usize>,
    oem_curve: &PowerCurve<T>,
) -> Result<usize> {
    let mut n = 0;
    for i in rows {
        let v = ds.hub_wind[i].ok_or_else(|| {
            Error::Imputation(format!("no hub wind measurement at {}", ds.timestamps[i]))
        })?;
        ds.power[i] = oem_curve.evaluate(v);
        n += 1;
    }
    Ok(n)
}

/// Prepares a dataset for model design. Test rows are never touched.
pub fn apply_training_strategy<T: Scalar>(
    ds: &AlignedDataset<T>,
    mask: &ShutdownMask,
    strategy: HandlingStrategy,
    oem_curve: &PowerCurve<T>,
    night: NightWindow,
) -> Result<AlignedDataset<T>> {
    mask.check_aligned(ds)?;
    let flagged_training = |i: usize| ds.roles[i].is_training() && mask.is_flagged(i);
    match strategy {
        HandlingStrategy::None => Ok(ds.clone()),
        HandlingStrategy::ExplanatoryVariables => {
            let mut out = ds.clone();
            out.explanatory = Some(explanatory_columns(ds, mask, oem_curve, night));
            Ok(out)
        }
        HandlingStrategy::Drop | HandlingStrategy::DropImputation => {
            let keep: Vec<usize> = (0..ds.len()).filter(|&i| !flagged_training(i)).collect();
            Ok(ds.select(&keep))
        }
        HandlingStrategy::Imputation => {
            let mut out = ds.clone();
            let rows: Vec<usize> = (0..ds.len()).filter(|&i| flagged_training(i)).collect();
            impute_rows(&mut out, rows.into_iter(), oem_curve)?;
            Ok(out)
        }
    }
}

/// Prepares the past-horizon window at a forecast origin. Rows are never removed,
/// so drop behaves like none here and drop-imputation like imputation.
pub fn apply_operation_strategy<T: Scalar>(
    window: &AlignedDataset<T>,
    mask: &ShutdownMask,
    strategy: HandlingStrategy,
    oem_curve: &PowerCurve<T>,
    night: NightWindow,
    past_horizon: usize,
) -> Result<AlignedDataset<T>> {
    if window.len() != past_horizon {
        return Err(Error::Forecast(format!(
            "past window has {} rows, expected {past_horizon}",
            window.len()
        )));
    }
    mask.check_aligned(window)?;
    match strategy {
        HandlingStrategy::None | HandlingStrategy::Drop => Ok(window.clone()),
        HandlingStrategy::ExplanatoryVariables => {
            let mut out = window.clone();
            out.explanatory = Some(explanatory_columns(window, mask, oem_curve, night));
            Ok(out)
        }
        HandlingStrategy::Imputation | HandlingStrategy::DropImputation => {
            let mut out = window.clone();
            let rows: Vec<usize> = (0..window.len()).filter(|&i| mask.is_flagged(i)).collect();
            impute_rows(&mut out, rows.into_iter(), oem_curve)?;
            Ok(out)
        }
    }
}
