//! CSV ingestion and export with fixed float formatting and atomic writes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::backtest::ForecastRecord;
use crate::curve::PowerCurve;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shutdown::{Flag, ShutdownMask};
use crate::synth::TruthKind;
use crate::timeseries::{EnergySeries, HubWindSeries, PowerSeries, TimeSeries, Timestamp, WeatherForecastFrame, WeatherRow};

pub const POWER_COLUMNS: [&str; 1] = ["power_kw"];
pub const ENERGY_COLUMNS: [&str; 1] = ["energy_kwh"];
pub const WIND_COLUMNS: [&str; 1] = ["wind_ms"];
pub const WEATHER_COLUMNS: [&str; 5] = ["v100_ms", "v10_ms", "dir_deg", "temp_c", "pressure_hpa"];

/// Formats with 9 significant digits, trailing zeros trimmed. Missing values
/// are empty cells.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { String::new() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes `bytes` to a temporary sibling and renames it over `path`, creating
/// parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.set_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Builds a CSV document in memory from a header and pre-formatted rows.
fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| Error::Schema(format!("csv encoding: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Schema(format!("csv encoding: {e}")))
}

/// Parsed time-indexed CSV: timestamps and one optional value per requested column.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub timestamps: Vec<Timestamp>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Reads `timestamp` plus the named columns (in any order; extra columns are
/// ignored). Empty cells and `NaN` become missing values.
pub fn read_columns_from<R: Read>(reader: R, source: &str, names: &[&str]) -> Result<Columns> {
    let perr = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| perr(1, format!("missing column '{name}' (expected timestamp,{})", names.join(","))))
    };
    let ts_col = find("timestamp")?;
    let cols: Vec<usize> = names.iter().map(|n| find(n)).collect::<Result<_>>()?;
    let mut out = Columns {
        timestamps: Vec::new(),
        values: vec![Vec::new(); names.len()],
    };
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        let raw_ts = rec.get(ts_col).unwrap_or("");
        let ts = Timestamp::parse(raw_ts).ok_or_else(|| perr(line, format!("invalid timestamp '{raw_ts}'")))?;
        if out.timestamps.last().is_some_and(|&p| ts <= p) {
            return Err(perr(line, format!("timestamp {ts} is not after the previous row")));
        }
        out.timestamps.push(ts);
        for (j, &c) in cols.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            let v = if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                None
            } else {
                let x: f64 = cell
                    .parse()
                    .map_err(|_| perr(line, format!("invalid number '{cell}' in column '{}'", names[j])))?;
                if !x.is_finite() {
                    return Err(perr(line, format!("non-finite value in column '{}'", names[j])));
                }
                Some(x)
            };
            out.values[j].push(v);
        }
    }
    Ok(out)
}

pub fn read_columns(path: &Path, names: &[&str]) -> Result<Columns> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_columns_from(file, &path.display().to_string(), names)
}

fn single<T: Scalar>(c: Columns) -> Result<TimeSeries<T>> {
    let values = c.values.into_iter().next().unwrap_or_default();
    TimeSeries::new(c.timestamps, values.into_iter().map(|v| v.map(T::lit)).collect())
}

pub fn read_power_csv<T: Scalar>(path: &Path) -> Result<PowerSeries<T>> {
    Ok(PowerSeries {
        series: single(read_columns(path, &POWER_COLUMNS)?)?,
        peak_rating_kw: None,
    })
}

pub fn read_energy_csv<T: Scalar>(path: &Path, period_hours: T) -> Result<EnergySeries<T>> {
    Ok(EnergySeries {
        series: single(read_columns(path, &ENERGY_COLUMNS)?)?,
        period_hours,
    })
}

pub fn read_wind_csv<T: Scalar>(path: &Path) -> Result<HubWindSeries<T>> {
    HubWindSeries::new(single(read_columns(path, &WIND_COLUMNS)?)?)
}

pub fn read_weather_csv<T: Scalar>(path: &Path) -> Result<WeatherForecastFrame<T>> {
    let c = read_columns(path, &WEATHER_COLUMNS)?;
    let rows = (0..c.timestamps.len())
        .map(|i| {
            let g = |j: usize| c.values[j][i].map(T::lit);
            WeatherRow {
                v100: g(0),
                v10: g(1),
                direction_deg: g(2),
                temperature_c: g(3),
                pressure_hpa: g(4),
            }
        })
        .collect();
    WeatherForecastFrame::new(c.timestamps, rows)
}

pub fn write_series_csv(path: &Path, column: &str, timestamps: &[Timestamp], values: &[Option<f64>]) -> Result<()> {
    if timestamps.len() != values.len() {
        return Err(Error::Misaligned(format!("{column}: timestamps vs values")));
    }
    let rows = timestamps.iter().zip(values).map(|(t, v)| vec![t.to_string(), fmt_opt(*v)]);
    write_atomic(path, &csv_bytes(&["timestamp", column], rows)?)
}

pub fn write_weather_csv(path: &Path, timestamps: &[Timestamp], rows: &[WeatherRow<f64>]) -> Result<()> {
    let mut header = vec!["timestamp"];
    header.extend(WEATHER_COLUMNS);
    let body = timestamps.iter().zip(rows).map(|(t, w)| {
        vec![
            t.to_string(),
            fmt_opt(w.v100),
            fmt_opt(w.v10),
            fmt_opt(w.direction_deg),
            fmt_opt(w.temperature_c),
            fmt_opt(w.pressure_hpa),
        ]
    });
    write_atomic(path, &csv_bytes(&header, body)?)
}

/// `timestamp,flag,source`
pub fn write_mask_csv(path: &Path, mask: &ShutdownMask) -> Result<()> {
    let rows = mask
        .timestamps
        .iter()
        .zip(&mask.flags)
        .map(|(t, f)| vec![t.to_string(), f.name().to_string(), mask.source.clone()]);
    write_atomic(path, &csv_bytes(&["timestamp", "flag", "source"], rows)?)
}

pub fn read_mask_csv(path: &Path) -> Result<ShutdownMask> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let source_name = path.display().to_string();
    let perr = |line: usize, message: String| Error::Parse {
        path: source_name.clone(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "flag", "source"] {
        return Err(perr(1, "header must be timestamp,flag,source".into()));
    }
    let mut mask = ShutdownMask::empty(&[], "");
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        let ts = Timestamp::parse(&rec[0]).ok_or_else(|| perr(line, format!("invalid timestamp '{}'", &rec[0])))?;
        let flag = Flag::parse(&rec[1]).ok_or_else(|| perr(line, format!("unknown flag '{}'", &rec[1])))?;
        if k == 0 {
            mask.source = rec[2].to_string();
        }
        mask.timestamps.push(ts);
        mask.flags.push(flag);
    }
    Ok(mask)
}

/// `timestamp,kind` with kinds normal / shutdown / transition.
pub fn write_truth_mask_csv(path: &Path, timestamps: &[Timestamp], truth: &[TruthKind]) -> Result<()> {
    let rows = timestamps.iter().zip(truth).map(|(t, k)| vec![t.to_string(), k.name().to_string()]);
    write_atomic(path, &csv_bytes(&["timestamp", "kind"], rows)?)
}

/// `id,v_ms,p_kw`, the long curve-library format.
pub fn write_curve_csv(path: &Path, curves: &[&PowerCurve<f64>]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        c.points()
            .iter()
            .map(|&(v, p)| vec![c.id.clone(), fmt_f64(v), fmt_f64(p)])
            .collect::<Vec<_>>()
    });
    write_atomic(path, &csv_bytes(&["id", "v_ms", "p_kw"], rows)?)
}

pub fn write_forecast_records_csv(path: &Path, records: &[ForecastRecord]) -> Result<()> {
    let header = ["timestamp", "origin", "model", "strategy", "y_kw", "y_hat_kw", "flagged"];
    let rows = records.iter().map(|r| {
        vec![
            r.timestamp.to_string(),
            r.origin.to_string(),
            r.model.to_string(),
            r.strategy.to_string(),
            fmt_f64(r.y_kw),
            fmt_f64(r.y_hat_kw),
            u8::from(r.flagged).to_string(),
        ]
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Single-origin forecast: `timestamp,y_hat_kw`.
pub fn write_forecast_csv(path: &Path, timestamps: &[Timestamp], y_hat: &[f64]) -> Result<()> {
    let rows = timestamps.iter().zip(y_hat).map(|(t, y)| vec![t.to_string(), fmt_f64(*y)]);
    write_atomic(path, &csv_bytes(&["timestamp", "y_hat_kw"], rows)?)
}

/// Serializes to pretty JSON with floats rounded to 9 significant digits.
pub fn to_json_pretty<S: serde::Serialize>(value: &S) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&round_json(v)).map_err(|e| Error::Schema(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            fmt_f64(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
