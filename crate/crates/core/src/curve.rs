//! OEM power curves: ingestion, resampling onto a uniform wind-speed grid,
//! normalization, diversity-preserving pool selection and evaluation.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default grid step for resampled curves (m/s).
pub const DEFAULT_GRID_STEP: f64 = 0.1;
/// Default upper end of the resampling grid (m/s).
pub const DEFAULT_GRID_MAX: f64 = 35.0;
/// Default ensemble pool size.
pub const DEFAULT_POOL_SIZE: usize = 10;

/// Tabulated power curve in kW over wind speed in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve<T> {
    pub id: String,
    points: Vec<(T, T)>,
    peak_rating: T,
    pub reference_height: Option<T>,
}

impl<T: Scalar> PowerCurve<T> {
    /// Requires strictly increasing wind speeds and non-negative power.
    /// The peak rating is the maximum tabulated power.
    pub fn new(id: impl Into<String>, points: Vec<(T, T)>) -> Result<Self> {
        let id = id.into();
        if points.is_empty() {
            return Err(Error::Parameter(format!("curve {id}: no points")));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Parameter(format!(
                "curve {id}: wind speeds not strictly increasing"
            )));
        }
        if points
            .iter()
            .any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < T::zero())
        {
            return Err(Error::Parameter(format!(
                "curve {id}: power must be finite and >= 0"
            )));
        }
        let peak_rating = points.iter().fold(T::zero(), |m, &(_, p)| m.max(p));
        Ok(Self {
            id,
            points,
            peak_rating,
            reference_height: None,
        })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn peak_rating(&self) -> T {
        self.peak_rating
    }

    pub fn cut_in(&self) -> T {
        self.points[0].0
    }

    pub fn cut_out(&self) -> T {
        self.points[self.points.len() - 1].0
    }

    /// Linear interpolation between support points, zero outside them.
    pub fn evaluate(&self, v: T) -> T {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if v.is_nan() || v < first.0 || v > last.0 {
            return T::zero();
        }
        let hi = pts.partition_point(|&(x, _)| x < v);
        if hi == 0 {
            return first.1;
        }
        let (x1, y1) = pts[hi];
        if x1 == v {
            return y1;
        }
        let (x0, y0) = pts[hi - 1];
        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
    }
}

/// Uniform wind-speed grid `start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid<T> {
    pub start: T,
    pub step: T,
    pub len: usize,
}

impl<T: Scalar> UniformGrid<T> {
    pub fn new(start: T, step: T, len: usize) -> Result<Self> {
        if !(step > T::zero()) || len == 0 {
            return Err(Error::Parameter("grid needs step > 0 and at least one node".into()));
        }
        Ok(Self { start, step, len })
    }

    /// Grid from 0 to `v_max` inclusive.
    pub fn from_zero(step: T, v_max: T) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::Parameter("grid step must be > 0".into()));
        }
        let n = (v_max / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
        Self::new(T::zero(), step, n)
    }

    pub fn node(&self, i: usize) -> T {
        self.start + self.step * T::from_usize_lossy(i)
    }

    pub fn last(&self) -> T {
        self.node(self.len - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(|i| self.node(i))
    }
}

/// Power curve divided by its peak rating, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPowerCurve<T> {
    pub id: String,
    pub grid: UniformGrid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> NormalizedPowerCurve<T> {
    pub fn new(id: impl Into<String>, grid: UniformGrid<T>, values: Vec<T>) -> Result<Self> {
        let id = id.into();
        if values.len() != grid.len {
            return Err(Error::Parameter(format!(
                "curve {id}: {} values for {} grid nodes",
                values.len(),
                grid.len
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("curve {id}: non-finite value")));
        }
        Ok(Self { id, grid, values })
    }

    /// Linear interpolation on the grid; zero below the first and above the last node.
    pub fn evaluate(&self, v: T) -> T {
        let g = &self.grid;
        if v.is_nan() || v < g.start {
            return T::zero();
        }
        let pos = (v - g.start) / g.step;
        let last = g.len - 1;
        let idx = pos.floor().to_usize().unwrap_or(usize::MAX);
        if idx > last {
            return T::zero();
        }
        if idx == last {
            return if pos - T::from_usize_lossy(last) <= T::lit(1e-9) {
                self.values[last]
            } else {
                T::zero()
            };
        }
        let frac = pos - T::from_usize_lossy(idx);
        let (y0, y1) = (self.values[idx], self.values[idx + 1]);
        y0 + (y1 - y0) * frac
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

/// Linearly interpolates `c` onto the grid `[0, v_max]` at `grid_step`; zero outside
/// the original support.
pub fn resample_curve<T: Scalar>(c: &PowerCurve<T>, grid_step: T, v_max: T) -> Result<PowerCurve<T>> {
    let grid = UniformGrid::from_zero(grid_step, v_max)?;
    let points = grid.nodes().map(|v| (v, c.evaluate(v))).collect();
    let mut out = PowerCurve::new(c.id.clone(), points)?;
    // The nameplate rating survives resampling even if the rated node falls off-grid.
    out.peak_rating = c.peak_rating;
    out.reference_height = c.reference_height;
    Ok(out)
}

/// Divides by the peak rating. The curve must already sit on a uniform grid.
pub fn normalize_curve<T: Scalar>(c: &PowerCurve<T>) -> Result<NormalizedPowerCurve<T>> {
    if !(c.peak_rating > T::zero()) {
        return Err(Error::Normalization(format!("curve {}: peak rating is 0", c.id)));
    }
    let pts = c.points();
    let grid = if pts.len() == 1 {
        UniformGrid::new(pts[0].0, T::one(), 1)?
    } else {
        let step = pts[1].0 - pts[0].0;
        let tol = step * T::lit(1e-3);
        if pts.windows(2).any(|w| ((w[1].0 - w[0].0) - step).abs() > tol) {
            return Err(Error::Normalization(format!(
                "curve {}: points are not uniformly spaced; resample first",
                c.id
            )));
        }
        UniformGrid::new(pts[0].0, step, pts.len())?
    };
    let values = pts.iter().map(|&(_, p)| p / c.peak_rating).collect();
    NormalizedPowerCurve::new(c.id.clone(), grid, values)
}

/// A diverse subset of normalized curves forming the ensemble basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePool<T> {
    curves: Vec<NormalizedPowerCurve<T>>,
}

impl<T: Scalar> CurvePool<T> {
    pub fn new(curves: Vec<NormalizedPowerCurve<T>>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Parameter("curve pool is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = curves.iter().find(|c| !seen.insert(c.id.as_str())) {
            return Err(Error::Parameter(format!("duplicate curve id {}", dup.id)));
        }
        Ok(Self { curves })
    }

    pub fn curves(&self) -> &[NormalizedPowerCurve<T>] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.curves.iter().map(|c| c.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&NormalizedPowerCurve<T>> {
        self.curves.iter().find(|c| c.id == id)
    }
}

/// Index of the `i`-th of `pool_size` picks spread evenly over `n` sorted curves,
/// `round(i * (n - 1) / (pool_size - 1))` with halves rounded up.
fn spread_index(i: usize, n: usize, pool_size: usize) -> usize {
    let den = pool_size - 1;
    (2 * i * (n - 1) + den) / (2 * den)
}

/// Sorts by the sum of normalized values (ties by id) and keeps `pool_size`
/// equally spaced curves including the first and the last.
pub fn select_pool<T: Scalar>(
    mut curves: Vec<NormalizedPowerCurve<T>>,
    pool_size: usize,
) -> Result<CurvePool<T>> {
    if curves.is_empty() {
        return Err(Error::Parameter("no curves to select from".into()));
    }
    if pool_size == 0 {
        return Err(Error::Parameter("pool size must be >= 1".into()));
    }
    curves.sort_by(|a, b| {
        a.sum()
            .partial_cmp(&b.sum())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    let n = curves.len();
    if n <= pool_size {
        return CurvePool::new(curves);
    }
    if pool_size == 1 {
        return Err(Error::Parameter(
            "pool size must be >= 2 when the library is larger than the pool".into(),
        ));
    }
    let picked = (0..pool_size)
        .map(|i| curves[spread_index(i, n, pool_size)].clone())
        .collect();
    CurvePool::new(picked)
}

/// Resample, normalize and select in one pass.
pub fn build_pool<T: Scalar>(
    library: &[PowerCurve<T>],
    grid_step: T,
    v_max: T,
    pool_size: usize,
) -> Result<CurvePool<T>> {
    let normalized = library
        .iter()
        .map(|c| resample_curve(c, grid_step, v_max).and_then(|r| normalize_curve(&r)))
        .collect::<Result<Vec<_>>>()?;
    select_pool(normalized, pool_size)
}

/// Parsed curve library plus the number of incomplete entries skipped.
#[derive(Debug, Clone)]
pub struct CurveLibrary<T> {
    pub curves: Vec<PowerCurve<T>>,
    pub skipped: usize,
}

impl<T: Scalar> CurveLibrary<T> {
    pub fn get(&self, id: &str) -> Option<&PowerCurve<T>> {
        self.curves.iter().find(|c| c.id == id)
    }
}

/// The fixture library shipped with the crate.
pub const BUNDLED_LIBRARY_CSV: &str = include_str!("../assets/curves.csv");

pub fn bundled_library<T: Scalar>() -> CurveLibrary<T> {
    parse_curve_library_from(BUNDLED_LIBRARY_CSV.as_bytes(), "curves.csv", None)
        .expect("bundled curve library parses")
}

/// Reads a curve library CSV.
///
/// Long format `id,v_ms,p_kw` holds one row per support point. A file with only
/// `v_ms,p_kw` holds a single curve named after the file stem. Entries with an
/// empty wind or power cell, or with no positive power, are skipped and counted.
pub fn parse_curve_library<T: Scalar>(path: &Path) -> Result<CurveLibrary<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "curve".into());
    parse_curve_library_from(file, &path.display().to_string(), Some(stem))
}

pub fn parse_curve_library_from<T: Scalar, R: Read>(
    reader: R,
    source: &str,
    single_curve_id: Option<String>,
) -> Result<CurveLibrary<T>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, v_col, p_col) = (col("id"), col("v_ms"), col("p_kw"));
    let (v_col, p_col) = match (v_col, p_col) {
        (Some(v), Some(p)) => (v, p),
        _ => return Err(parse_err(1, "header must contain v_ms and p_kw".into())),
    };
    if id_col.is_none() && single_curve_id.is_none() {
        return Err(parse_err(1, "header must contain id".into()));
    }

    struct Entry<T> {
        points: Vec<(T, T)>,
        incomplete: bool,
    }
    let mut order: Vec<String> = Vec::new();
    let mut entries: HashMap<String, Entry<T>> = HashMap::new();

    for (row_idx, record) in rdr.records().enumerate() {
        let line = row_idx + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let id = match id_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => single_curve_id.clone().unwrap_or_default(),
        };
        if id.is_empty() {
            return Err(parse_err(line, "empty curve id".into()));
        }
        let entry = entries.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Entry {
                points: Vec::new(),
                incomplete: false,
            }
        });
        let v_raw = record.get(v_col).unwrap_or("");
        let p_raw = record.get(p_col).unwrap_or("");
        if v_raw.is_empty() || p_raw.is_empty() {
            entry.incomplete = true;
            continue;
        }
        let num = |s: &str, what: &str| -> Result<T> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(T::lit)
                .ok_or_else(|| parse_err(line, format!("invalid {what} '{s}'")))
        };
        let v = num(v_raw, "wind speed")?;
        let p = num(p_raw, "power")?;
        if v < T::zero() || p < T::zero() {
            return Err(parse_err(line, "wind speed and power must be >= 0".into()));
        }
        if let Some(&(prev, _)) = entry.points.last() {
            if !(v > prev) {
                return Err(parse_err(
                    line,
                    format!("curve {id}: wind speed {v} does not increase (previous {prev})"),
                ));
            }
        }
        entry.points.push((v, p));
    }

    let mut curves = Vec::new();
    let mut skipped = 0;
    for id in order {
        let entry = entries.remove(&id).expect("entry recorded");
        let has_power = entry.points.iter().any(|&(_, p)| p > T::zero());
        if entry.incomplete || entry.points.len() < 2 || !has_power {
            skipped += 1;
            continue;
        }
        curves.push(PowerCurve::new(id, entry.points)?);
    }
    if skipped > 0 {
        log::warn!("{source}: skipped {skipped} entries without a complete power curve");
    }
    Ok(CurveLibrary { curves, skipped })
}
