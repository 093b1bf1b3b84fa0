//! Forecasting with the manufacturer's curve applied to the height-corrected
//! wind speed forecast.

use serde::{Deserialize, Serialize};

use crate::curve::PowerCurve;
use crate::error::{Error, Result};
use crate::height::HeightCorrectionModel;
use crate::scalar::Scalar;

pub const OEM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct OemCurveForecaster<T> {
    pub curve: PowerCurve<T>,
    pub height: HeightCorrectionModel<T>,
}

impl<T: Scalar> OemCurveForecaster<T> {
    pub fn new(curve: PowerCurve<T>, height: HeightCorrectionModel<T>) -> Self {
        Self { curve, height }
    }

    pub fn predict_one(&self, v100: T) -> T {
        self.curve.evaluate(self.height.correct(v100))
    }

    pub fn predict(&self, v100: &[T]) -> Vec<T> {
        v100.iter().map(|&v| self.predict_one(v)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = OemJson {
            schema_version: OEM_SCHEMA_VERSION,
            model: "oem".into(),
            curve_id: self.curve.id.clone(),
            points: self
                .curve
                .points()
                .iter()
                .map(|&(v, p)| [v.to_f64_lossy(), p.to_f64_lossy()])
                .collect(),
            alpha_h: self.height.alpha_h.to_f64_lossy(),
            h_eff_m: self.height.h_eff_m.to_f64_lossy(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: OemJson = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema_version != OEM_SCHEMA_VERSION || doc.model != "oem" {
            return Err(Error::Schema(format!(
                "expected oem model with schema_version {OEM_SCHEMA_VERSION}"
            )));
        }
        let points = doc.points.iter().map(|p| (T::lit(p[0]), T::lit(p[1]))).collect();
        let curve = PowerCurve::new(doc.curve_id, points).map_err(|e| Error::Schema(e.to_string()))?;
        let height = HeightCorrectionModel::new(T::lit(doc.alpha_h), T::lit(doc.h_eff_m))
            .map_err(|e| Error::Schema(e.to_string()))?;
        Ok(Self { curve, height })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OemJson {
    schema_version: u32,
    model: String,
    curve_id: String,
    points: Vec<[f64; 2]>,
    alpha_h: f64,
    h_eff_m: f64,
}
