pub mod autowp;
pub mod backtest;
pub mod baseline;
pub mod commands;
pub mod config;
pub mod curve;
pub mod dataset;
pub mod error;
pub mod height;
pub mod io;
pub mod linalg;
pub mod lof;
pub mod metrics;
pub mod nnls;
pub mod pipeline;
pub mod postprocess;
pub mod scalar;
pub mod shutdown;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PowerCurveF64 = curve::PowerCurve<f64>;
pub type PowerCurveF32 = curve::PowerCurve<f32>;
pub type EnsembleModel = autowp::EnsembleModel<f64>;
pub type EnsembleModelF32 = autowp::EnsembleModel<f32>;
pub type HeightCorrectionModel = height::HeightCorrectionModel<f64>;
pub type HeightCorrectionModelF32 = height::HeightCorrectionModel<f32>;
pub type AlignedDataset = dataset::AlignedDataset<f64>;
pub type AlignedDatasetF32 = dataset::AlignedDataset<f32>;
pub type MlpRegressor = baseline::MlpRegressor<f64>;
pub type MlpRegressorF32 = baseline::MlpRegressor<f32>;
pub type ArxModel = baseline::ArxModel<f64>;
pub type ArxModelF32 = baseline::ArxModel<f32>;
