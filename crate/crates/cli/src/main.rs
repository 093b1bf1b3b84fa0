use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use windcurve::commands::{self, ForecastOptions};
use windcurve::config::RunConfig;
use windcurve::metrics::Scenario;
use windcurve::pipeline::ModelKind;
use windcurve::shutdown::HandlingStrategy;
use windcurve::timeseries::Timestamp;
use windcurve::{Error, Result};

/// Day-ahead wind-power forecasting for individual turbines.
#[derive(Debug, Parser)]
#[command(name = "windcurve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic turbine bundle from a preset.
    Generate {
        /// Preset name (turbine1, turbine2) or preset JSON file.
        #[arg(long, default_value = "turbine2")]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Flag abnormal operation and write the mask CSV.
    Detect(RunArgs),
    /// Fit the selected models and write their JSON documents.
    Fit(RunArgs),
    /// Run the rolling day-ahead backtest.
    Backtest(RunArgs),
    /// Forecast 96 steps from a saved model and a weather forecast.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weather: PathBuf,
        /// First forecast timestamp (ISO-8601).
        #[arg(long)]
        origin: String,
        /// Run config providing power history, needed by autoregressive models.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        peak_rating_kw: Option<f64>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated handling strategies.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    /// Comma-separated evaluation scenarios.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<String>>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        if let Some(n) = self.jobs {
            init_threads(n)?;
        }
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out_dir = std::path::absolute(out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.models {
            cfg.models = m.iter().map(|s| s.trim().parse()).collect::<Result<Vec<ModelKind>>>()?;
        }
        if let Some(m) = &self.strategies {
            cfg.strategies = m.iter().map(|s| s.trim().parse()).collect::<Result<Vec<HandlingStrategy>>>()?;
        }
        if let Some(m) = &self.scenarios {
            cfg.scenarios = m
                .iter()
                .map(|s| {
                    Scenario::parse(s.trim())
                        .ok_or_else(|| Error::Config(format!("unknown scenario '{s}' (valid: consider, disregard)")))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("--jobs must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let m = commands::cmd_generate(&config, &out, seed)?;
            println!(
                "generated {} rows for {} in {} (true shutdown share {:.3})",
                m.rows,
                m.turbine_id,
                out.display(),
                m.truth_shutdown_share
            );
        }
        Command::Detect(args) => {
            let s = commands::cmd_detect(&args.load()?)?;
            println!(
                "flagged {} of {} rows ({:.3}); rule-based {}; mask written to {}",
                s.flagged,
                s.rows,
                s.share,
                s.rule_flagged,
                s.mask_path.display()
            );
        }
        Command::Fit(args) => {
            let s = commands::cmd_fit(&args.load()?)?;
            println!("effective hub height {:.2} m", s.context.h_eff_m);
            if let Some(a) = &s.autowp {
                for (id, w) in a.pool_ids.iter().zip(&a.weights) {
                    println!("  {id} {w:.6}");
                }
                println!("autowp weights sum: {:.6}", a.weight_sum);
            }
            for p in &s.model_paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Backtest(args) => {
            let cfg = args.load()?;
            let report = commands::cmd_backtest(&cfg)?;
            for r in &report.results {
                println!("{}", serde_json::to_string(r)?);
            }
            println!("wrote {}", cfg.out_dir().join(commands::REPORT_FILE).display());
        }
        Command::Forecast { model, weather, origin, config, peak_rating_kw, out } => {
            let origin = Timestamp::parse(&origin).ok_or_else(|| Error::Config(format!("invalid origin '{origin}'")))?;
            let history = config.as_deref().map(RunConfig::load).transpose()?;
            let opts = ForecastOptions { history, peak_rating_kw, out: out.clone() };
            let f = commands::cmd_forecast(&model, &weather, origin, &opts)?;
            if out.is_none() {
                println!("timestamp,y_hat_kw");
                for (t, y) in f.timestamps.iter().zip(&f.y_hat_kw) {
                    println!("{t},{}", windcurve::io::fmt_f64(*y));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WINDCURVE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

