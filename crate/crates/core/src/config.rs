//! Run configuration: input files, model and strategy selection, detector,
//! model and backtest settings. Relative paths resolve against the directory
//! of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::BacktestConfig;
use crate::curve::{bundled_library, parse_curve_library, CurveLibrary, PowerCurve};
use crate::dataset::{align, split, AlignedDataset};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::Scenario;
use crate::pipeline::{ModelKind, ModelSettings};
use crate::shutdown::{detect, DetectionConfig, HandlingStrategy, ShutdownMask};
use crate::timeseries::{energy_to_power, Timestamp, DEFAULT_PERIOD_SECS};

/// Input series. Power may be given directly or as metered energy per period.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub power: Option<PathBuf>,
    pub energy: Option<PathBuf>,
    pub wind: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    /// Shutdown mask from `detect`; detection runs in-process when absent.
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub turbine_id: String,
    pub seed: u64,
    pub data: DataPaths,
    /// Start of the test period.
    pub split: String,
    pub holdout_fraction: f64,
    pub utc_offset_minutes: i32,
    pub period_secs: i64,
    /// Curve library CSV; the bundled fixture library when absent.
    pub curve_library: Option<PathBuf>,
    pub oem_curve_id: String,
    /// Defaults to the OEM curve's peak rating.
    pub peak_rating_kw: Option<f64>,
    pub models: Vec<ModelKind>,
    pub strategies: Vec<HandlingStrategy>,
    pub scenarios: Vec<Scenario>,
    /// Training strategy used by `fit`.
    pub fit_strategy: HandlingStrategy,
    pub detection: DetectionConfig,
    pub settings: ModelSettings,
    pub backtest: BacktestConfig,
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            turbine_id: "turbine".into(),
            seed: 0,
            data: DataPaths::default(),
            split: "2020-01-01T00:00:00Z".into(),
            holdout_fraction: 0.2,
            utc_offset_minutes: 0,
            period_secs: DEFAULT_PERIOD_SECS,
            curve_library: None,
            oem_curve_id: String::new(),
            peak_rating_kw: None,
            models: ModelKind::ALL.to_vec(),
            strategies: HandlingStrategy::ALL.to_vec(),
            scenarios: Scenario::ALL.to_vec(),
            fit_strategy: HandlingStrategy::None,
            detection: DetectionConfig::default(),
            settings: ModelSettings::default(),
            backtest: BacktestConfig::default(),
            out_dir: PathBuf::from("out"),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Inputs loaded from a run config.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dataset: AlignedDataset<f64>,
    pub library: CurveLibrary<f64>,
    pub oem_curve: PowerCurve<f64>,
    pub peak_rating_kw: f64,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.turbine_id.is_empty() {
            return Err(Error::Config("turbine_id must be non-empty".into()));
        }
        if self.models.is_empty() || self.strategies.is_empty() || self.scenarios.is_empty() {
            return Err(Error::Config("models, strategies and scenarios must be non-empty".into()));
        }
        if self.oem_curve_id.is_empty() {
            return Err(Error::Config("oem_curve_id is required".into()));
        }
        if self.peak_rating_kw.is_some_and(|p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Config("peak_rating_kw must be > 0".into()));
        }
        self.split_boundary()?;
        self.detection.validate()?;
        self.settings.arx.validate()?;
        self.backtest.validate()
    }

    pub fn split_boundary(&self) -> Result<Timestamp> {
        Timestamp::parse(&self.split).ok_or_else(|| Error::Config(format!("split: cannot parse timestamp '{}'", self.split)))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        let full = if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) };
        full.components().collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    fn required(&self, p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let p = p.as_ref().ok_or_else(|| Error::Config(format!("data.{what} is required")))?;
        let full = self.resolve(p);
        if !full.exists() {
            return Err(Error::io(
                &full,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} input not found")),
            ));
        }
        Ok(full)
    }

    pub fn library(&self) -> Result<CurveLibrary<f64>> {
        match &self.curve_library {
            Some(p) => parse_curve_library(&self.resolve(p)),
            None => Ok(bundled_library()),
        }
    }

    /// Reads, aligns and splits the inputs.
    pub fn load_inputs(&self) -> Result<LoadedRun> {
        let library = self.library()?;
        let oem_curve = library
            .get(&self.oem_curve_id)
            .cloned()
            .ok_or_else(|| Error::Config(format!("oem curve '{}' not in the curve library", self.oem_curve_id)))?;
        let peak_rating_kw = self.peak_rating_kw.unwrap_or_else(|| oem_curve.peak_rating());
        let power = match (&self.data.power, &self.data.energy) {
            (Some(_), _) => io::read_power_csv(&self.required(&self.data.power, "power")?)?,
            (None, Some(_)) => {
                let hours = self.period_secs as f64 / 3600.0;
                energy_to_power(&io::read_energy_csv(&self.required(&self.data.energy, "energy")?, hours)?)?
            }
            (None, None) => return Err(Error::Config("data.power or data.energy is required".into())),
        };
        let wind = io::read_wind_csv(&self.required(&self.data.wind, "wind")?)?;
        let weather = io::read_weather_csv(&self.required(&self.data.weather, "weather")?)?;
        let (aligned, _) = align(&power, &wind, &weather, self.utc_offset_minutes)?;
        let dataset = split(aligned, self.split_boundary()?, self.holdout_fraction)?;
        Ok(LoadedRun {
            dataset,
            library,
            oem_curve,
            peak_rating_kw,
        })
    }

    /// The configured mask file, or in-process detection when none is set.
    pub fn mask(&self, run: &LoadedRun) -> Result<ShutdownMask> {
        match &self.data.mask {
            Some(_) => {
                let mask = io::read_mask_csv(&self.required(&self.data.mask, "mask")?)?;
                mask.check_aligned(&run.dataset)?;
                Ok(mask)
            }
            None => detect(&run.dataset, &self.detection, run.peak_rating_kw),
        }
    }
}
