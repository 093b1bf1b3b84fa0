//! The command layer behind the CLI: each command reads a run config (or a
//! preset), does its work and writes its artifacts atomically.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::{backtest, EvaluationReport};
use crate::config::RunConfig;
use crate::curve::bundled_library;
use crate::dataset::Role;
use crate::error::{Error, Result};
use crate::height::{HeightCorrectionModel, ALPHA_ONSHORE};
use crate::io;
use crate::pipeline::{fit_model, forecast_clipped, past_window, prepare_training, FittedModel, FutureInputs, ModelKind, TurbineContext};
use crate::shutdown::{detect, rule_based_flags_dataset, HandlingStrategy, ShutdownMask};
use crate::synth::{generate, preset, Preset, SynthConfig};
use crate::timeseries::{Timestamp, STEPS_PER_DAY};

pub const MODELS_DIR: &str = "models";
pub const CONTEXT_FILE: &str = "context.json";
pub const MASK_FILE: &str = "mask.csv";
pub const REPORT_FILE: &str = "report.json";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.json";

/// Reads a preset: a bundled name (`turbine1`, `turbine2`), a preset file with
/// `synth` and optional `run` sections, or a bare generator config.
pub fn load_preset(source: &str) -> Result<Preset> {
    let path = Path::new(source);
    if !path.exists() {
        return preset(source).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{m}; no file named '{source}' either")),
            other => other,
        });
    }
    let text = io::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{source}: {e}")))?;
    let p = if value.get("synth").is_some() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value::<SynthConfig>(value).map(|synth| Preset { synth, run: None })
    };
    p.map_err(|e| Error::Config(format!("{source}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub turbine_id: String,
    pub seed: u64,
    pub rows: usize,
    pub train_rows: usize,
    pub holdout_rows: usize,
    pub test_rows: usize,
    pub first_timestamp: String,
    pub last_timestamp: String,
    pub peak_rating_kw: f64,
    pub hub_height_m: f64,
    pub truth_shutdown_share: f64,
    pub truth_abnormal_share: f64,
    pub files: Vec<String>,
}

/// Generates a synthetic turbine and writes the CSV bundle, a manifest and a
/// run config (`run.json`) that the other commands accept.
pub fn cmd_generate(preset_source: &str, out_dir: &Path, seed: Option<u64>) -> Result<Manifest> {
    let mut p = load_preset(preset_source)?;
    if let Some(s) = seed {
        p.synth.seed = s;
    }
    let cfg = &p.synth;
    let synth = generate(cfg)?;
    let ds = &synth.dataset;
    let out = |name: &str| out_dir.join(name);

    let power: Vec<Option<f64>> = ds.power.iter().map(|&p| Some(p)).collect();
    io::write_series_csv(&out("power.csv"), "power_kw", &ds.timestamps, &power)?;
    io::write_series_csv(&out("wind.csv"), "wind_ms", &ds.timestamps, &ds.hub_wind)?;
    io::write_weather_csv(&out("weather.csv"), &ds.timestamps, &ds.weather)?;
    io::write_truth_mask_csv(&out("truth_mask.csv"), &ds.timestamps, &synth.truth)?;
    io::write_curve_csv(&out("truth_curve.csv"), &[&synth.truth_curve])?;

    let run = run_config_for(&p)?;
    RunConfig::from_json(&run, out_dir)?;
    io::write_atomic(&out("run.json"), run.as_bytes())?;

    let count = |r: Role| ds.roles.iter().filter(|&&x| x == r).count();
    let manifest = Manifest {
        schema_version: 1,
        turbine_id: synth.turbine_id.clone(),
        seed: cfg.seed,
        rows: ds.len(),
        train_rows: count(Role::Train),
        holdout_rows: count(Role::Holdout),
        test_rows: count(Role::Test),
        first_timestamp: ds.timestamps.first().map(|t| t.to_string()).unwrap_or_default(),
        last_timestamp: ds.timestamps.last().map(|t| t.to_string()).unwrap_or_default(),
        peak_rating_kw: synth.peak_rating_kw,
        hub_height_m: synth.hub_height_m,
        truth_shutdown_share: synth.shutdown_share(),
        truth_abnormal_share: synth.truth.iter().filter(|k| k.is_abnormal()).count() as f64 / ds.len().max(1) as f64,
        files: ["power.csv", "wind.csv", "weather.csv", "truth_mask.csv", "truth_curve.csv", "run.json"]
            .map(String::from)
            .to_vec(),
    };
    io::write_atomic(&out("manifest.json"), io::to_json_pretty(&manifest)?.as_bytes())?;
    log::info!(
        "generated {} rows for {} ({:.1}% true shutdowns)",
        manifest.rows,
        manifest.turbine_id,
        100.0 * manifest.truth_shutdown_share
    );
    Ok(manifest)
}

/// Run config pointing at the generated bundle, overlaid with the preset's
/// `run` section.
fn run_config_for(p: &Preset) -> Result<String> {
    let cfg = &p.synth;
    let oem_default = bundled_library::<f64>()
        .curves
        .iter()
        .find(|c| (c.peak_rating() - cfg.peak_rating_kw).abs() < 1e-9)
        .map(|c| c.id.clone())
        .unwrap_or_default();
    let mut run = serde_json::json!({
        "turbine_id": cfg.turbine_id,
        "seed": cfg.seed,
        "data": {"power": "power.csv", "wind": "wind.csv", "weather": "weather.csv", "mask": MASK_FILE},
        "split": cfg.split.clone().unwrap_or_else(|| "9999-01-01T00:00:00Z".into()),
        "holdout_fraction": cfg.holdout_fraction,
        "utc_offset_minutes": cfg.utc_offset_minutes,
        "period_secs": cfg.period_secs,
        "oem_curve_id": oem_default,
        "peak_rating_kw": cfg.peak_rating_kw,
        "out_dir": ".",
    });
    if let Some(extra) = &p.run {
        let obj = extra
            .as_object()
            .ok_or_else(|| Error::Config("preset 'run' section must be an object".into()))?;
        let target = run.as_object_mut().expect("object literal");
        for (k, v) in obj {
            target.insert(k.clone(), v.clone());
        }
    }
    let mut text = serde_json::to_string_pretty(&run)?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectSummary {
    pub rows: usize,
    pub flagged: usize,
    pub share: f64,
    pub rule_flagged: usize,
    pub mask_path: PathBuf,
}

/// Rule-based plus LOF detection over all rows; writes `mask.csv`.
pub fn cmd_detect(cfg: &RunConfig) -> Result<DetectSummary> {
    let run = cfg.load_inputs()?;
    let mask = detect(&run.dataset, &cfg.detection, run.peak_rating_kw)?;
    let rule = rule_based_flags_dataset(&run.dataset, cfg.detection.v_cut_in, cfg.detection.p_cut_in(run.peak_rating_kw));
    let path = cfg.out_dir().join(MASK_FILE);
    io::write_mask_csv(&path, &mask)?;
    log::info!("flagged {} of {} rows ({:.1}%)", mask.count(), mask.len(), 100.0 * mask.share());
    Ok(DetectSummary {
        rows: mask.len(),
        flagged: mask.count(),
        share: mask.share(),
        rule_flagged: rule.count(),
        mask_path: path,
    })
}

/// Settings a saved model needs at forecast time besides its own document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelContext {
    pub peak_rating_kw: f64,
    pub cut_out: f64,
    pub alpha_h: f64,
    pub h_eff_m: f64,
    pub strategy: HandlingStrategy,
    pub past_horizon: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutowpSummary {
    pub pool_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    pub mse: f64,
    pub rows: usize,
    pub nnls_iterations: usize,
    pub zero_solution_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub turbine_id: String,
    pub seed: u64,
    pub strategy: HandlingStrategy,
    pub models: Vec<ModelKind>,
    pub context: ModelContext,
    pub autowp: Option<AutowpSummary>,
    /// Model documents relative to the output directory.
    pub model_files: Vec<String>,
    #[serde(skip)]
    pub model_paths: Vec<PathBuf>,
}

/// Fits the selected models with the configured training strategy and writes
/// one JSON document per model plus `context.json` and `fit_report.json`.
pub fn cmd_fit(cfg: &RunConfig) -> Result<FitSummary> {
    let run = cfg.load_inputs()?;
    let mask = cfg.mask(&run)?;
    let ctx = context(cfg, &run, &mask);
    let prep = prepare_training(&ctx, cfg.fit_strategy)?;
    let dir = cfg.out_dir().join(MODELS_DIR);
    let mut paths = Vec::new();
    let mut autowp = None;
    for &kind in &cfg.models {
        let outcome = fit_model(&ctx, &prep, kind, cfg.seed)?;
        if let (Some(r), FittedModel::Autowp(m)) = (&outcome.autowp_report, &outcome.model) {
            autowp = Some(AutowpSummary {
                pool_ids: m.pool.ids(),
                weights: r.weights.clone(),
                weight_sum: r.weights.iter().sum(),
                mse: r.mse,
                rows: r.rows,
                nnls_iterations: r.nnls_iterations,
                zero_solution_fallback: r.zero_solution_fallback,
            });
        }
        let path = dir.join(format!("{kind}.json"));
        let mut doc = outcome.model.to_json()?;
        doc.push('\n');
        io::write_atomic(&path, doc.as_bytes())?;
        paths.push(path);
    }
    let context = ModelContext {
        peak_rating_kw: run.peak_rating_kw,
        cut_out: cfg.settings.cut_out,
        alpha_h: prep.height.alpha_h,
        h_eff_m: prep.height.h_eff_m,
        strategy: cfg.fit_strategy,
        past_horizon: cfg.backtest.past_horizon,
        horizon: cfg.backtest.horizon,
    };
    io::write_atomic(&dir.join(CONTEXT_FILE), io::to_json_pretty(&context)?.as_bytes())?;
    let summary = FitSummary {
        schema_version: 1,
        turbine_id: cfg.turbine_id.clone(),
        seed: cfg.seed,
        strategy: cfg.fit_strategy,
        models: cfg.models.clone(),
        context,
        autowp,
        model_files: cfg.models.iter().map(|k| format!("{MODELS_DIR}/{k}.json")).collect(),
        model_paths: paths,
    };
    io::write_atomic(&cfg.out_dir().join(FIT_REPORT_FILE), io::to_json_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

fn context<'a>(cfg: &'a RunConfig, run: &'a crate::config::LoadedRun, mask: &'a ShutdownMask) -> TurbineContext<'a> {
    TurbineContext {
        dataset: &run.dataset,
        mask,
        oem_curve: &run.oem_curve,
        library: &run.library.curves,
        peak_rating_kw: run.peak_rating_kw,
        night: cfg.detection.night,
        settings: &cfg.settings,
    }
}

/// Rolling backtest over the test period; writes `report.json` and
/// `forecasts.csv`.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<EvaluationReport> {
    let run = cfg.load_inputs()?;
    let mask = cfg.mask(&run)?;
    let ctx = context(cfg, &run, &mask);
    let mut bt = cfg.backtest.clone();
    bt.seed = cfg.seed;
    let out = backtest(&ctx, &cfg.turbine_id, &cfg.models, &cfg.strategies, &cfg.scenarios, &bt)?;
    out.report.validate()?;
    let dir = cfg.out_dir();
    io::write_atomic(&dir.join(REPORT_FILE), io::to_json_pretty(&out.report)?.as_bytes())?;
    io::write_forecast_records_csv(&dir.join(FORECASTS_FILE), &out.forecasts)?;
    Ok(out.report)
}

#[derive(Debug, Clone, Default)]
pub struct ForecastOptions {
    /// Run config supplying the power history for autoregressive models.
    pub history: Option<RunConfig>,
    pub peak_rating_kw: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutput {
    pub model: ModelKind,
    pub timestamps: Vec<Timestamp>,
    pub y_hat_kw: Vec<f64>,
}

/// Day-ahead forecast from a saved model and a weather-forecast CSV, starting at
/// `origin`. Static models need only the weather; autoregressive models also
/// need the power history from a run config.
pub fn cmd_forecast(model_path: &Path, weather_path: &Path, origin: Timestamp, opts: &ForecastOptions) -> Result<ForecastOutput> {
    let model = FittedModel::from_json(&io::read_to_string(model_path)?)?;
    let ctx_path = model_path.parent().unwrap_or(Path::new(".")).join(CONTEXT_FILE);
    let saved: Option<ModelContext> = if ctx_path.exists() {
        let text = io::read_to_string(&ctx_path)?;
        Some(serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", ctx_path.display())))?)
    } else {
        None
    };
    let horizon = saved.map_or(STEPS_PER_DAY, |c| c.horizon);
    let height = match (model.height(), saved) {
        (Some(h), _) => h,
        (None, Some(c)) => HeightCorrectionModel::new(c.alpha_h, c.h_eff_m)?,
        (None, None) => HeightCorrectionModel::identity(ALPHA_ONSHORE),
    };
    let peak = opts
        .peak_rating_kw
        .or(saved.map(|c| c.peak_rating_kw))
        .or(match &model {
            FittedModel::Autowp(m) => Some(m.peak_rating_kw),
            FittedModel::Oem(m) => Some(m.curve.peak_rating()),
            _ => None,
        })
        .ok_or_else(|| Error::Config(format!("peak rating unknown: pass it explicitly or keep {CONTEXT_FILE} next to the model")))?;
    let cut_out = saved.map_or(crate::postprocess::DEFAULT_CUT_OUT, |c| c.cut_out);

    let weather = io::read_weather_csv::<f64>(weather_path)?;
    let start = weather
        .timestamps()
        .binary_search(&origin)
        .map_err(|_| Error::Forecast(format!("origin {origin} not in {}", weather_path.display())))?;
    let ts = &weather.timestamps()[start..(start + horizon).min(weather.len())];
    let period = opts.history.as_ref().map_or(crate::timeseries::DEFAULT_PERIOD_SECS, |c| c.period_secs);
    if ts.len() != horizon || ts.windows(2).any(|w| w[1].secs() - w[0].secs() != period) {
        return Err(Error::Forecast(format!(
            "weather forecast must cover {horizon} contiguous steps from {origin}"
        )));
    }
    let future = FutureInputs {
        timestamps: ts,
        weather: &weather.rows()[start..start + horizon],
    };

    let history = opts.history.as_ref().filter(|_| model.kind().is_autoregressive());
    let y_hat = if let Some(cfg) = history {
        let run = cfg.load_inputs()?;
        let mask = cfg.mask(&run)?;
        let tctx = context(cfg, &run, &mask);
        let idx = run
            .dataset
            .timestamps
            .partition_point(|&t| t < origin);
        let past = saved.map_or(cfg.backtest.past_horizon, |c| c.past_horizon);
        let strategy = saved.map_or(cfg.fit_strategy, |c| c.strategy);
        if idx < past || !run.dataset.is_contiguous(idx - past..idx, cfg.period_secs) {
            return Err(Error::Forecast(format!("history needs {past} contiguous rows before {origin}")));
        }
        if run.dataset.timestamps[idx - 1].secs() + cfg.period_secs != origin.secs() {
            return Err(Error::Forecast(format!("history must end one step before {origin}")));
        }
        let window = past_window(&tctx, idx, past, strategy)?;
        forecast_clipped(&model, Some(&window), future, height, peak, cut_out)?
    } else {
        forecast_clipped(&model, None, future, height, peak, cut_out)?
    };
    if let Some(out) = &opts.out {
        io::write_forecast_csv(out, ts, &y_hat)?;
    }
    Ok(ForecastOutput {
        model: model.kind(),
        timestamps: ts.to_vec(),
        y_hat_kw: y_hat,
    })
}
