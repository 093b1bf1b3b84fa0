use std::collections::BTreeMap;

use windcurve::commands::{cmd_backtest, cmd_fit, cmd_forecast, cmd_generate, ForecastOptions, FORECASTS_FILE, MODELS_DIR};
use windcurve::config::RunConfig;
use windcurve::pipeline::ModelKind;
use windcurve::shutdown::HandlingStrategy;
use windcurve::timeseries::Timestamp;

/// Forecasts from the saved model documents reproduce the backtest's
/// in-process forecasts for the same strategy.
#[test]
fn saved_models_match_backtest_forecasts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cmd_generate("turbine1", dir, Some(11)).unwrap();
    let mut cfg = RunConfig::load(&dir.join("run.json")).unwrap();
    cfg.data.mask = None;
    cfg.models = vec![ModelKind::Oem, ModelKind::Autowp, ModelKind::Arx];
    cfg.strategies = vec![cfg.fit_strategy];
    let fit = cmd_fit(&cfg).unwrap();
    assert_eq!(fit.model_paths.len(), 3);
    cmd_backtest(&cfg).unwrap();

    let origin = "2020-03-15T00:00:00Z";
    let text = std::fs::read_to_string(dir.join(FORECASTS_FILE)).unwrap();
    let mut expected: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == origin && f[3] == cfg.fit_strategy.to_string() {
            expected.entry(f[2].to_string()).or_default().push(f[5].parse().unwrap());
        }
    }
    assert_eq!(expected.len(), 3);

    let opts = ForecastOptions {
        history: Some(cfg.clone()),
        ..Default::default()
    };
    for kind in &cfg.models {
        let path = dir.join(MODELS_DIR).join(format!("{kind}.json"));
        let out = cmd_forecast(&path, &dir.join("weather.csv"), Timestamp::parse(origin).unwrap(), &opts).unwrap();
        assert_eq!(out.model, *kind);
        let want = &expected[&kind.to_string()];
        assert_eq!(out.y_hat_kw.len(), want.len());
        for (a, b) in out.y_hat_kw.iter().zip(want) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{kind}: {a} vs {b}");
        }
    }
}

#[test]
fn forecast_rejects_origin_outside_weather() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    cmd_generate("turbine1", dir, Some(1)).unwrap();
    let mut cfg = RunConfig::load(&dir.join("run.json")).unwrap();
    cfg.data.mask = None;
    cfg.models = vec![ModelKind::Oem];
    cfg.fit_strategy = HandlingStrategy::None;
    cmd_fit(&cfg).unwrap();
    let model = dir.join(MODELS_DIR).join("oem.json");
    let late = Timestamp::parse("2030-01-01T00:00:00Z").unwrap();
    let e = cmd_forecast(&model, &dir.join("weather.csv"), late, &ForecastOptions::default()).unwrap_err();
    assert_eq!(e.kind(), "forecast");
}
