//! Rolling day-ahead backtest: one origin per test day, forecasts pooled over
//! the test period and scored under both shutdown scenarios.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Role;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_scenario, mean_and_std, Scenario};
use crate::pipeline::{fit_model, forecast_at_origin, prepare_training, ModelKind, PreparedTraining, TurbineContext};
use crate::shutdown::HandlingStrategy;
use crate::timeseries::{Timestamp, DEFAULT_PERIOD_SECS, STEPS_PER_DAY};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    /// Forecast horizon H in steps.
    pub horizon: usize,
    /// Past horizon H₁ in steps.
    pub past_horizon: usize,
    /// Runs of each stochastic model.
    pub restarts: usize,
    pub seed: u64,
    /// Local minute of day at which origins are placed.
    pub origin_minute: u32,
    pub period_secs: i64,
    /// Write measured runtimes into the report. Off by default so reports are
    /// byte-reproducible; timings always go to the log.
    pub record_runtime: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            horizon: STEPS_PER_DAY,
            past_horizon: STEPS_PER_DAY,
            restarts: 5,
            seed: 0,
            origin_minute: 0,
            period_secs: DEFAULT_PERIOD_SECS,
            record_runtime: false,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.past_horizon == 0 || self.restarts == 0 {
            return Err(Error::Config("horizon, past horizon and restarts must be >= 1".into()));
        }
        if self.origin_minute >= 1440 || self.period_secs <= 0 {
            return Err(Error::Config("origin minute must lie in [0, 1440) and the period be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub turbine_id: String,
    pub model: ModelKind,
    pub strategy: HandlingStrategy,
    pub scenario: Scenario,
    pub nmae_mean: f64,
    pub nmae_std: f64,
    pub nrmse_mean: f64,
    pub nrmse_std: f64,
    pub n_samples: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub turbine_id: String,
    pub seed: u64,
    pub origins: usize,
    pub results: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn row(&self, model: ModelKind, strategy: HandlingStrategy, scenario: Scenario) -> Option<&ReportRow> {
        self.results
            .iter()
            .find(|r| r.model == model && r.strategy == strategy && r.scenario == scenario)
    }

    /// Structural checks on a report read back from disk.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported report schema_version {}", self.schema_version)));
        }
        for r in &self.results {
            let finite = [r.nmae_mean, r.nmae_std, r.nrmse_mean, r.nrmse_std, r.runtime_s]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0);
            if !finite || r.n_samples == 0 {
                return Err(Error::Schema(format!(
                    "{}/{}/{}: metrics must be finite, non-negative and counted",
                    r.model, r.strategy, r.scenario
                )));
            }
        }
        Ok(())
    }
}

/// One forecast row for plotting, from the first run of each model.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub timestamp: Timestamp,
    pub origin: Timestamp,
    pub model: ModelKind,
    pub strategy: HandlingStrategy,
    pub y_kw: f64,
    pub y_hat_kw: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub report: EvaluationReport,
    pub forecasts: Vec<ForecastRecord>,
}

/// Origin rows: test rows at the origin minute with a full horizon ahead and,
/// when `past_horizon > 0`, a contiguous past window behind.
pub fn origins(ctx: &TurbineContext<'_>, cfg: &BacktestConfig) -> Vec<usize> {
    let ds = ctx.dataset;
    let off = ds.utc_offset_minutes;
    let mut out = Vec::new();
    for i in 0..ds.len() {
        if ds.roles[i] != Role::Test || ds.timestamps[i].minute_of_day(off) != cfg.origin_minute {
            continue;
        }
        if i + cfg.horizon > ds.len() || !ds.is_contiguous(i..i + cfg.horizon, cfg.period_secs) {
            log::warn!("skipping origin {}: incomplete forecast horizon", ds.timestamps[i]);
            continue;
        }
        if ds.roles[i..i + cfg.horizon].iter().any(|r| *r != Role::Test) {
            continue;
        }
        if i < cfg.past_horizon || !ds.is_contiguous(i - cfg.past_horizon..i + 1, cfg.period_secs) {
            log::warn!("skipping origin {}: insufficient past data", ds.timestamps[i]);
            continue;
        }
        out.push(i);
    }
    out
}

/// Strategy whose fit and forecasts a (model, strategy) pair shares. Static
/// models ignore the explanatory columns and have no past window, so
/// explanatory variables train like none and drop-imputation like drop.
pub fn training_key(model: ModelKind, strategy: HandlingStrategy) -> HandlingStrategy {
    if model.is_autoregressive() {
        return strategy;
    }
    match strategy {
        HandlingStrategy::ExplanatoryVariables => HandlingStrategy::None,
        HandlingStrategy::DropImputation => HandlingStrategy::Drop,
        s => s,
    }
}

struct RunResult {
    model: ModelKind,
    strategy: HandlingStrategy,
    run: usize,
    /// Per scenario: (nmae, nrmse, n)
    metrics: Vec<(Scenario, f64, f64, usize)>,
    forecasts: Vec<(usize, usize, f64)>,
    seconds: f64,
}

fn run_once(
    ctx: &TurbineContext<'_>,
    prep: &PreparedTraining,
    model: ModelKind,
    run: usize,
    origins: &[usize],
    scenarios: &[Scenario],
    cfg: &BacktestConfig,
) -> Result<RunResult> {
    let t0 = Instant::now();
    let seed = cfg.seed.wrapping_add(run as u64);
    let fitted = fit_model(ctx, prep, model, seed)?.model;
    let mut forecasts = Vec::with_capacity(origins.len() * cfg.horizon);
    for &o in origins {
        let y_hat = forecast_at_origin(ctx, &fitted, prep.height, prep.strategy, o, cfg.horizon, cfg.past_horizon)?;
        forecasts.extend(y_hat.into_iter().enumerate().map(|(h, y)| (o, o + h, y)));
    }
    let y_hat: Vec<f64> = forecasts.iter().map(|f| f.2).collect();
    let y: Vec<f64> = forecasts.iter().map(|f| ctx.dataset.power[f.1]).collect();
    let flagged: Vec<bool> = forecasts.iter().map(|f| ctx.mask.is_flagged(f.1)).collect();
    let mut metrics = Vec::new();
    for &sc in scenarios {
        let m = evaluate_scenario(&y_hat, &y, Some(&flagged), sc)?;
        metrics.push((sc, m.nmae, m.nrmse, m.n_samples));
    }
    let seconds = t0.elapsed().as_secs_f64();
    log::info!("backtest {model}/{}/run {run}: {seconds:.2} s", prep.strategy);
    Ok(RunResult {
        model,
        strategy: prep.strategy,
        run,
        metrics,
        forecasts,
        seconds,
    })
}

/// Fits every (model, strategy) pair, forecasts at each daily origin, clips and
/// scores. Stochastic models run `cfg.restarts` times with consecutive seeds and
/// are reported as mean and sample standard deviation; deterministic models run
/// once with standard deviation 0.
pub fn backtest(
    ctx: &TurbineContext<'_>,
    turbine_id: &str,
    models: &[ModelKind],
    strategies: &[HandlingStrategy],
    scenarios: &[Scenario],
    cfg: &BacktestConfig,
) -> Result<BacktestOutput> {
    cfg.validate()?;
    ctx.mask.check_aligned(ctx.dataset)?;
    if models.is_empty() || strategies.is_empty() || scenarios.is_empty() {
        return Err(Error::Config("models, strategies and scenarios must be non-empty".into()));
    }
    let origins = origins(ctx, cfg);
    if origins.is_empty() {
        return Err(Error::Forecast("the test period contains no complete forecast day".into()));
    }
    let mut needed: Vec<HandlingStrategy> = Vec::new();
    for &s in strategies {
        for &m in models {
            let k = training_key(m, s);
            if !needed.contains(&k) {
                needed.push(k);
            }
        }
    }
    let preps: Vec<PreparedTraining> = needed
        .iter()
        .map(|&s| prepare_training(ctx, s))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for prep in &preps {
        for &m in models {
            let used = strategies.iter().any(|&s| training_key(m, s) == prep.strategy);
            let runs = if m.is_stochastic() { cfg.restarts } else { 1 };
            if used {
                jobs.extend((0..runs).map(|r| (prep, m, r)));
            }
        }
    }
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(prep, m, r)| run_once(ctx, prep, m, r, &origins, scenarios, cfg))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut forecasts = Vec::new();
    for &s in strategies {
        for &m in models {
            let key = training_key(m, s);
            let group: Vec<&RunResult> = results.iter().filter(|r| r.model == m && r.strategy == key).collect();
            let runtime: f64 = group.iter().map(|r| r.seconds).sum();
            for (k, &sc) in scenarios.iter().enumerate() {
                let nmae: Vec<f64> = group.iter().map(|r| r.metrics[k].1).collect();
                let nrmse: Vec<f64> = group.iter().map(|r| r.metrics[k].2).collect();
                let (nmae_mean, nmae_std) = mean_and_std(&nmae);
                let (nrmse_mean, nrmse_std) = mean_and_std(&nrmse);
                rows.push(ReportRow {
                    turbine_id: turbine_id.to_string(),
                    model: m,
                    strategy: s,
                    scenario: sc,
                    nmae_mean,
                    nmae_std,
                    nrmse_mean,
                    nrmse_std,
                    n_samples: group[0].metrics[k].3,
                    runtime_s: if cfg.record_runtime { runtime } else { 0.0 },
                });
            }
            if let Some(first) = group.iter().find(|r| r.run == 0) {
                forecasts.extend(first.forecasts.iter().map(|&(o, i, y_hat)| ForecastRecord {
                    timestamp: ctx.dataset.timestamps[i],
                    origin: ctx.dataset.timestamps[o],
                    model: m,
                    strategy: s,
                    y_kw: ctx.dataset.power[i],
                    y_hat_kw: y_hat,
                    flagged: ctx.mask.is_flagged(i),
                }));
            }
        }
    }
    Ok(BacktestOutput {
        report: EvaluationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            turbine_id: turbine_id.to_string(),
            seed: cfg.seed,
            origins: origins.len(),
            results: rows,
        },
        forecasts,
    })
}
