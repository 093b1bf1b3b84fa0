//! Comparison forecasters for the ensemble: the single OEM curve, a static MLP
//! regressor and an autoregressive ARX model.

pub mod arx;
pub mod mlp;
pub mod oem;

pub use arx::{ArxConfig, ArxModel};
pub use mlp::{MlpConfig, MlpRegressor};
pub use oem::OemCurveForecaster;
