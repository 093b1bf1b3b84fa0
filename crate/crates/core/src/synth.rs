//! Synthetic turbine generator: hub wind, 100 m forecasts, weather covariates,
//! power from a known curve, and injected shutdowns with a ground-truth mask.
//!
//! Hub wind is an AR(1) Gaussian process mapped through the normal CDF onto
//! Weibull quantiles, then modulated by a diurnal cycle. The 100 m forecast is
//! the power-law projection of the hub wind plus an AR(1) Gaussian error.
//! Irregular shutdowns arrive as a Bernoulli process per step (the discrete
//! Poisson analogue) with geometric durations; regular shutdowns cover a daily
//! window on selected weekdays. Every component draws from its own stream, so
//! changing one setting leaves the other signals unchanged.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::curve::{bundled_library, normalize_curve, resample_curve, PowerCurve, DEFAULT_GRID_MAX, DEFAULT_GRID_STEP};
use crate::dataset::{split, AlignedDataset};
use crate::error::{Error, Result};
use crate::height::{ALPHA_ONSHORE, REFERENCE_HEIGHT_M};
use crate::timeseries::{NightWindow, Timestamp, WeatherRow, DEFAULT_PERIOD_SECS, STEPS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthCurveSpec {
    /// Convex weights over curves of the bundled library, by id.
    Weights(BTreeMap<String, f64>),
    /// Explicit `(v_ms, p_kw)` support points.
    Points(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindProcess {
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    /// Lag-one autocorrelation of the latent Gaussian per 15-minute step.
    pub persistence: f64,
    /// Relative amplitude of the diurnal modulation.
    pub diurnal_amplitude: f64,
    pub diurnal_peak_hour: f64,
}

impl Default for WindProcess {
    fn default() -> Self {
        Self {
            weibull_shape: 2.0,
            weibull_scale: 7.5,
            persistence: 0.985,
            diurnal_amplitude: 0.15,
            diurnal_peak_hour: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastError {
    pub sigma: f64,
    pub bias: f64,
    pub persistence: f64,
}

impl Default for ForecastError {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            bias: 0.0,
            persistence: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularShutdowns {
    pub window: NightWindow,
    /// Active weekdays, 0 = Monday.
    pub weekdays: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IrregularShutdowns {
    pub rate_per_day: f64,
    pub mean_duration_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub turbine_id: String,
    pub seed: u64,
    pub start: String,
    pub days: u32,
    /// Start of the test period; `None` leaves every row in training.
    pub split: Option<String>,
    pub holdout_fraction: f64,
    pub period_secs: i64,
    pub utc_offset_minutes: i32,
    pub truth_curve: TruthCurveSpec,
    pub peak_rating_kw: f64,
    pub hub_height_m: f64,
    pub alpha: f64,
    pub wind: WindProcess,
    pub forecast_error: ForecastError,
    pub regular: Option<RegularShutdowns>,
    pub irregular: IrregularShutdowns,
    /// Chance that a step bordering a shutdown block carries partial power.
    pub transition_probability: f64,
    pub noise_sigma_kw: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            turbine_id: "synthetic".into(),
            seed: 1,
            start: "2019-01-01T00:00:00Z".into(),
            days: 731,
            split: Some("2020-01-01T00:00:00Z".into()),
            holdout_fraction: 0.2,
            period_secs: DEFAULT_PERIOD_SECS,
            utc_offset_minutes: 0,
            truth_curve: TruthCurveSpec::Weights(BTreeMap::from([
                ("SYN-1500-06".to_string(), 0.3),
                ("SYN-1500-07".to_string(), 0.7),
            ])),
            peak_rating_kw: 1500.0,
            hub_height_m: 120.0,
            alpha: ALPHA_ONSHORE,
            wind: WindProcess::default(),
            forecast_error: ForecastError::default(),
            regular: None,
            irregular: IrregularShutdowns::default(),
            transition_probability: 0.0,
            noise_sigma_kw: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    Normal,
    Shutdown,
    /// Partial power at a stop or restart.
    Transition,
}

impl TruthKind {
    pub fn name(self) -> &'static str {
        match self {
            TruthKind::Normal => "normal",
            TruthKind::Shutdown => "shutdown",
            TruthKind::Transition => "transition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(TruthKind::Normal),
            "shutdown" => Some(TruthKind::Shutdown),
            "transition" => Some(TruthKind::Transition),
            _ => None,
        }
    }

    pub fn is_abnormal(self) -> bool {
        self != TruthKind::Normal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub turbine_id: String,
    pub dataset: AlignedDataset<f64>,
    pub truth: Vec<TruthKind>,
    pub truth_curve: PowerCurve<f64>,
    /// Curve power before noise and shutdowns (kW).
    pub clean_power: Vec<f64>,
    pub peak_rating_kw: f64,
    pub hub_height_m: f64,
}

impl SynthDataset {
    pub fn shutdown_share(&self) -> f64 {
        let n = self.truth.iter().filter(|k| **k == TruthKind::Shutdown).count();
        n as f64 / self.truth.len().max(1) as f64
    }
}

fn parse_ts(s: &str, what: &str) -> Result<Timestamp> {
    Timestamp::parse(s).ok_or_else(|| Error::Config(format!("{what}: cannot parse timestamp '{s}'")))
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic config: {m}")));
        if self.days == 0 {
            return bad("days must be >= 1");
        }
        if self.period_secs <= 0 || 86_400 % self.period_secs != 0 {
            return bad("period_secs must divide one day");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
        }
        if !(self.peak_rating_kw > 0.0) || !(self.hub_height_m > 0.0) || !(self.alpha > 0.0) {
            return bad("peak rating, hub height and alpha must be > 0");
        }
        let w = &self.wind;
        if !(w.weibull_shape > 0.0) || !(w.weibull_scale > 0.0) {
            return bad("Weibull shape and scale must be > 0");
        }
        if !(0.0..1.0).contains(&w.persistence) || !(0.0..1.0).contains(&self.forecast_error.persistence) {
            return bad("persistence must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&w.diurnal_amplitude) {
            return bad("diurnal amplitude must lie in [0, 1)");
        }
        if !(self.forecast_error.sigma >= 0.0) || !(self.noise_sigma_kw >= 0.0) {
            return bad("sigmas must be >= 0");
        }
        if !(self.irregular.rate_per_day >= 0.0) || self.irregular.rate_per_day > STEPS_PER_DAY as f64 {
            return bad("irregular rate must lie in [0, 96] per day");
        }
        if self.irregular.rate_per_day > 0.0 && !(self.irregular.mean_duration_steps >= 1.0) {
            return bad("mean shutdown duration must be >= 1 step");
        }
        if !(0.0..=1.0).contains(&self.transition_probability) {
            return bad("transition probability must lie in [0, 1]");
        }
        if let Some(r) = &self.regular {
            if r.weekdays.iter().any(|&d| d > 6) {
                return bad("weekdays must lie in 0..=6");
            }
        }
        if let TruthCurveSpec::Weights(ws) = &self.truth_curve {
            let sum: f64 = ws.values().sum();
            if ws.is_empty() || ws.values().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > 1e-9 {
                return bad("truth weights must lie on the simplex");
            }
        }
        parse_ts(&self.start, "start")?;
        if let Some(s) = &self.split {
            parse_ts(s, "split")?;
        }
        Ok(())
    }

    /// Ground-truth curve in kW, tabulated on the library grid.
    pub fn truth_curve(&self) -> Result<PowerCurve<f64>> {
        match &self.truth_curve {
            TruthCurveSpec::Points(pts) => PowerCurve::new(
                format!("{}-truth", self.turbine_id),
                pts.iter().map(|p| (p[0], p[1])).collect(),
            ),
            TruthCurveSpec::Weights(ws) => {
                let lib = bundled_library::<f64>();
                let mut parts = Vec::new();
                for (id, &w) in ws {
                    let c = lib
                        .get(id)
                        .ok_or_else(|| Error::Config(format!("truth curve: unknown library curve '{id}'")))?;
                    let n = normalize_curve(&resample_curve(c, DEFAULT_GRID_STEP, DEFAULT_GRID_MAX)?)?;
                    parts.push((w, n));
                }
                let grid = parts[0].1.grid;
                let points = grid
                    .nodes()
                    .map(|v| {
                        let p: f64 = parts.iter().map(|(w, c)| w * c.evaluate(v)).sum();
                        (v, p * self.peak_rating_kw)
                    })
                    .collect();
                PowerCurve::new(format!("{}-truth", self.turbine_id), points)
            }
        }
    }
}

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian_ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut z: f64 = StandardNormal.sample(rng);
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            z = phi * z + innov * e;
            z
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let start = parse_ts(&cfg.start, "start")?;
    let steps_per_day = (86_400 / cfg.period_secs) as usize;
    let n = cfg.days as usize * steps_per_day;
    let off = cfg.utc_offset_minutes;
    let ts: Vec<Timestamp> = (0..n).map(|i| start.offset(i as i64 * cfg.period_secs)).collect();
    let curve = cfg.truth_curve()?;

    // hub wind
    let w = &cfg.wind;
    let latent = gaussian_ar1(&mut stream(cfg.seed, 1), n, w.persistence);
    let hub: Vec<f64> = latent
        .iter()
        .zip(&ts)
        .map(|(&z, t)| {
            let u = phi(z).clamp(1e-12, 1.0 - 1e-12);
            let v = w.weibull_scale * (-(1.0 - u).ln()).powf(1.0 / w.weibull_shape);
            let hour = t.minute_of_day(off) as f64 / 60.0;
            let phase = 2.0 * std::f64::consts::PI * (hour - w.diurnal_peak_hour + 6.0) / 24.0;
            (v * (1.0 + w.diurnal_amplitude * phase.sin())).max(0.0)
        })
        .collect();

    // 100 m forecast
    let fe = &cfg.forecast_error;
    let err = gaussian_ar1(&mut stream(cfg.seed, 2), n, fe.persistence);
    let to100 = (REFERENCE_HEIGHT_M / cfg.hub_height_m).powf(cfg.alpha);
    let v100: Vec<f64> = hub
        .iter()
        .zip(&err)
        .map(|(&v, &e)| (v * to100 + fe.bias + fe.sigma * e).max(0.0))
        .collect();

    // covariates
    let mut cov = stream(cfg.seed, 3);
    let mut direction = cov.random_range(0.0..360.0);
    let pressure = gaussian_ar1(&mut cov, n, 0.995);
    let temp_noise = Normal::new(0.0, 0.8).expect("valid sigma");
    let weather: Vec<WeatherRow<f64>> = (0..n)
        .map(|i| {
            let step: f64 = StandardNormal.sample(&mut cov);
            direction = (direction + 4.0 * step).rem_euclid(360.0);
            let doy = ts[i].day_of_year(off) as f64;
            let hour = ts[i].minute_of_day(off) as f64 / 60.0;
            let temp = 10.0 - 9.0 * (2.0 * std::f64::consts::PI * (doy - 15.0) / 365.0).cos()
                + 4.0 * (2.0 * std::f64::consts::PI * (hour - 9.0) / 24.0).sin()
                + temp_noise.sample(&mut cov);
            WeatherRow {
                v100: Some(v100[i]),
                v10: Some(v100[i] * 0.1f64.powf(cfg.alpha)),
                direction_deg: Some(direction),
                temperature_c: Some(temp),
                pressure_hpa: Some(1013.0 + 9.0 * pressure[i]),
            }
        })
        .collect();

    // shutdowns
    let mut truth = vec![TruthKind::Normal; n];
    if let Some(r) = &cfg.regular {
        for (i, t) in ts.iter().enumerate() {
            if r.window.contains(t.minute_of_day(off)) && r.weekdays.contains(&t.weekday(off)) {
                truth[i] = TruthKind::Shutdown;
            }
        }
    }
    let irr = &cfg.irregular;
    if irr.rate_per_day > 0.0 {
        let mut rng = stream(cfg.seed, 4);
        let p_start = irr.rate_per_day / steps_per_day as f64;
        let p_continue = 1.0 - 1.0 / irr.mean_duration_steps;
        let mut i = 0;
        while i < n {
            if rng.random::<f64>() < p_start {
                loop {
                    truth[i] = TruthKind::Shutdown;
                    i += 1;
                    if i >= n || rng.random::<f64>() >= p_continue {
                        break;
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    let mut transition_frac = vec![0.0; n];
    if cfg.transition_probability > 0.0 {
        let mut rng = stream(cfg.seed, 5);
        let mut marks = Vec::new();
        for i in 0..n {
            if truth[i] != TruthKind::Normal {
                continue;
            }
            let borders = (i > 0 && truth[i - 1] == TruthKind::Shutdown)
                || (i + 1 < n && truth[i + 1] == TruthKind::Shutdown);
            if borders && rng.random::<f64>() < cfg.transition_probability {
                marks.push((i, rng.random_range(0.05..0.5)));
            }
        }
        for (i, f) in marks {
            truth[i] = TruthKind::Transition;
            transition_frac[i] = f;
        }
    }

    // power
    let mut noise_rng = stream(cfg.seed, 6);
    let clean: Vec<f64> = hub.iter().map(|&v| curve.evaluate(v)).collect();
    let power: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            match truth[i] {
                TruthKind::Shutdown => 0.0,
                TruthKind::Transition => clean[i] * transition_frac[i],
                TruthKind::Normal => (clean[i] + cfg.noise_sigma_kw * e).max(0.0),
            }
        })
        .collect();

    let mut ds = AlignedDataset::empty(off);
    for i in 0..n {
        ds.push_row(ts[i], power[i], Some(hub[i]), v100[i], weather[i]);
    }
    if let Some(s) = &cfg.split {
        ds = split(ds, parse_ts(s, "split")?, cfg.holdout_fraction)?;
    }
    Ok(SynthDataset {
        turbine_id: cfg.turbine_id.clone(),
        dataset: ds,
        truth,
        truth_curve: curve,
        clean_power: clean,
        peak_rating_kw: cfg.peak_rating_kw,
        hub_height_m: cfg.hub_height_m,
    })
}

/// Generator preset plus optional run settings, as stored in the preset files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub synth: SynthConfig,
    #[serde(default)]
    pub run: Option<serde_json::Value>,
}

pub const TURBINE1_PRESET: &str = include_str!("../assets/presets/turbine1.json");
pub const TURBINE2_PRESET: &str = include_str!("../assets/presets/turbine2.json");

/// Bundled preset by name (`turbine1` or `turbine2`).
pub fn preset(name: &str) -> Result<Preset> {
    let text = match name.trim_end_matches(".json") {
        "turbine1" => TURBINE1_PRESET,
        "turbine2" => TURBINE2_PRESET,
        other => return Err(Error::Config(format!("unknown preset '{other}' (valid: turbine1, turbine2)"))),
    };
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shutdown::rule_based_flags_dataset;
    use crate::timeseries::night_indicator;

    fn quiet(days: u32) -> SynthConfig {
        SynthConfig {
            days,
            split: None,
            truth_curve: TruthCurveSpec::Points(vec![
                [2.0, 0.0],
                [2.5, 20.0],
                [3.0, 45.0],
                [8.0, 700.0],
                [12.0, 1500.0],
                [35.0, 1500.0],
            ]),
            noise_sigma_kw: 0.0,
            forecast_error: ForecastError {
                sigma: 0.0,
                ..ForecastError::default()
            },
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SynthConfig {
            days: 20,
            split: None,
            irregular: IrregularShutdowns {
                rate_per_day: 1.0,
                mean_duration_steps: 10.0,
            },
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.dataset.power, c.dataset.power);
    }

    #[test]
    fn noise_free_power_tracks_curve() {
        let s = generate(&quiet(30)).unwrap();
        for (i, &p) in s.dataset.power.iter().enumerate() {
            let v = s.dataset.hub_wind[i].unwrap();
            assert_eq!(p, s.truth_curve.evaluate(v));
        }
        let m = rule_based_flags_dataset(&s.dataset, 2.5, 7.5);
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn forecast_is_power_law_projection() {
        let s = generate(&quiet(5)).unwrap();
        let f = (100.0f64 / 120.0).powf(1.0 / 7.0);
        for (h, v) in s.dataset.hub_wind.iter().zip(&s.dataset.v100) {
            assert!((h.unwrap() * f - v).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_window_matches_night_indicator() {
        let win = NightWindow::new(22 * 60, 6 * 60).unwrap();
        let cfg = SynthConfig {
            regular: Some(RegularShutdowns {
                window: win,
                weekdays: (0..7).collect(),
            }),
            ..quiet(14)
        };
        let s = generate(&cfg).unwrap();
        for (i, t) in s.dataset.timestamps.iter().enumerate() {
            if s.dataset.hub_wind[i].unwrap() > 2.5 {
                let night = night_indicator(*t, win, 0) == 1;
                assert_eq!(s.truth[i] == TruthKind::Shutdown, night);
            }
        }
    }

    #[test]
    fn shutdown_share_grows_with_rate() {
        let share = |rate: f64| {
            let cfg = SynthConfig {
                irregular: IrregularShutdowns {
                    rate_per_day: rate,
                    mean_duration_steps: 12.0,
                },
                ..quiet(120)
            };
            generate(&cfg).unwrap().shutdown_share()
        };
        let (a, b, c) = (share(0.2), share(1.0), share(3.0));
        assert!(a < b && b < c, "{a} {b} {c}");
    }

    #[test]
    fn weights_off_simplex_rejected() {
        let cfg = SynthConfig {
            truth_curve: TruthCurveSpec::Weights(BTreeMap::from([("SYN-1500-06".to_string(), 0.5)])),
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        let unknown = SynthConfig {
            truth_curve: TruthCurveSpec::Weights(BTreeMap::from([("nope".to_string(), 1.0)])),
            ..quiet(1)
        };
        assert!(generate(&unknown).is_err());
    }

    #[test]
    fn transitions_border_shutdowns() {
        let cfg = SynthConfig {
            irregular: IrregularShutdowns {
                rate_per_day: 2.0,
                mean_duration_steps: 8.0,
            },
            transition_probability: 1.0,
            ..quiet(30)
        };
        let s = generate(&cfg).unwrap();
        let n = s.truth.len();
        let mut seen = 0;
        for i in 0..n {
            if s.truth[i] == TruthKind::Transition {
                seen += 1;
                let left = i > 0 && s.truth[i - 1] == TruthKind::Shutdown;
                let right = i + 1 < n && s.truth[i + 1] == TruthKind::Shutdown;
                assert!(left || right);
                assert!(s.dataset.power[i] < s.clean_power[i] || s.clean_power[i] == 0.0);
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn presets_parse() {
        for name in ["turbine1", "turbine2"] {
            let p = preset(name).unwrap();
            p.synth.validate().unwrap();
        }
        assert!(preset("turbine3").is_err());
    }
}
