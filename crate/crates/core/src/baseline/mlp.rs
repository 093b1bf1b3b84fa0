//! Static multilayer perceptron regressor mapping weather covariates to power.
//!
//! Hidden layers use `tanh`, the output is linear. Inputs and target are
//! standardized with constants from the training rows. Training is mini-batch
//! Adam with a fixed learning rate and early stopping on the holdout loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timeseries::WeatherRow;

pub const MLP_SCHEMA_VERSION: u32 = 1;
/// v100, sin and cos of direction, temperature, pressure.
pub const MLP_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without holdout improvement before training stops.
    pub patience: usize,
    pub batch_size: usize,
    /// Independent initializations; the one with the lowest holdout loss is kept.
    pub restarts: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            learning_rate: 1e-3,
            max_epochs: 200,
            patience: 10,
            batch_size: 64,
            restarts: 1,
        }
    }
}

/// Covariate row for the MLP. Missing values become NaN and are mapped to the
/// training mean by the standardization.
pub fn mlp_features<T: Scalar>(row: &WeatherRow<T>) -> [T; MLP_FEATURES] {
    let nan = T::nan();
    let (s, c) = match row.direction_deg {
        Some(d) => {
            let r = d.to_radians();
            (r.sin(), r.cos())
        }
        None => (nan, nan),
    };
    [
        row.v100.unwrap_or(nan),
        s,
        c,
        row.temperature_c.unwrap_or(nan),
        row.pressure_hpa.unwrap_or(nan),
    ]
}

fn param_count(layers: &[usize]) -> usize {
    layers.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Forward/backward buffers for a batch of rows. Each layer's weights are stored
/// input-major (`n_in x n_out`) followed by its biases, so the inner loops run
/// over contiguous output units.
struct Workspace<T> {
    acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
    offsets: Vec<usize>,
}

impl<T: Scalar> Workspace<T> {
    fn new(layers: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(layers.len() - 1);
        let mut off = 0;
        for w in layers.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        Self {
            acts: vec![Vec::new(); layers.len()],
            deltas: vec![Vec::new(); layers.len()],
            offsets,
        }
    }

    /// Forward pass over `rows` inputs; returns the output column.
    fn forward(&mut self, layers: &[usize], params: &[T], xs: &[T], rows: usize) -> &[T] {
        self.acts[0].clear();
        self.acts[0].extend_from_slice(&xs[..rows * layers[0]]);
        let last = layers.len() - 2;
        for l in 0..=last {
            let (n_in, n_out) = (layers[l], layers[l + 1]);
            let off = self.offsets[l];
            let w = &params[off..off + n_in * n_out];
            let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (prev, next) = self.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            out.clear();
            out.resize(rows * n_out, T::zero());
            for r in 0..rows {
                let z = &mut out[r * n_out..(r + 1) * n_out];
                z.copy_from_slice(b);
                for (k, &a) in input[r * n_in..(r + 1) * n_in].iter().enumerate() {
                    for (zj, &wj) in z.iter_mut().zip(&w[k * n_out..(k + 1) * n_out]) {
                        *zj = *zj + a * wj;
                    }
                }
                if l != last {
                    z.iter_mut().for_each(|v| *v = v.tanh());
                }
            }
        }
        &self.acts[layers.len() - 1]
    }

    /// Accumulates parameter gradients given `d(loss)/d(output)` per row. Uses
    /// the activations of the preceding [`Workspace::forward`] call.
    fn backward(&mut self, layers: &[usize], params: &[T], d_out: &[T], grad: &mut [T]) {
        let nl = layers.len();
        let rows = d_out.len();
        self.deltas[nl - 1].clear();
        self.deltas[nl - 1].extend_from_slice(d_out);
        for l in (0..nl - 1).rev() {
            let (n_in, n_out) = (layers[l], layers[l + 1]);
            let off = self.offsets[l];
            let (dprev, dnext) = self.deltas.split_at_mut(l + 1);
            let delta = &dnext[0];
            let input = &self.acts[l];
            let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            for r in 0..rows {
                let d = &delta[r * n_out..(r + 1) * n_out];
                for (gbj, &dj) in gb.iter_mut().zip(d) {
                    *gbj = *gbj + dj;
                }
                for (k, &a) in input[r * n_in..(r + 1) * n_in].iter().enumerate() {
                    for (g, &dj) in gw[k * n_out..(k + 1) * n_out].iter_mut().zip(d) {
                        *g = *g + a * dj;
                    }
                }
            }
            if l > 0 {
                let w = &params[off..off + n_in * n_out];
                let dp = &mut dprev[l];
                dp.clear();
                dp.resize(rows * n_in, T::zero());
                for r in 0..rows {
                    let d = &delta[r * n_out..(r + 1) * n_out];
                    for k in 0..n_in {
                        let s = w[k * n_out..(k + 1) * n_out]
                            .iter()
                            .zip(d)
                            .fold(T::zero(), |s, (&wj, &dj)| s + wj * dj);
                        let a = input[r * n_in + k];
                        dp[r * n_in + k] = s * (T::one() - a * a);
                    }
                }
            }
        }
    }
}

/// Mean squared error of the network on standardized rows `xs` (row-major,
/// `layers[0]` columns) and its gradient with respect to `params`.
pub fn loss_and_gradient<T: Scalar>(layers: &[usize], params: &[T], xs: &[T], ys: &[T]) -> (T, Vec<T>) {
    let mut ws = Workspace::new(layers);
    let mut grad = vec![T::zero(); params.len()];
    let mut d_out = Vec::new();
    let loss = accumulate(&mut ws, layers, params, xs, ys, &mut grad, &mut d_out);
    (loss, grad)
}

fn accumulate<T: Scalar>(
    ws: &mut Workspace<T>,
    layers: &[usize],
    params: &[T],
    xs: &[T],
    ys: &[T],
    grad: &mut [T],
    d_out: &mut Vec<T>,
) -> T {
    let n = T::from_usize_lossy(ys.len());
    let out = ws.forward(layers, params, xs, ys.len());
    d_out.clear();
    let mut loss = T::zero();
    for (&f, &y) in out.iter().zip(ys) {
        let r = f - y;
        loss = loss + r * r;
        d_out.push(T::lit(2.0) * r / n);
    }
    ws.backward(layers, params, d_out, grad);
    loss / n
}

const EVAL_CHUNK: usize = 256;

fn predict_standardized<T: Scalar>(ws: &mut Workspace<T>, layers: &[usize], params: &[T], xs: &[T], out: &mut Vec<T>) {
    let d = layers[0];
    out.clear();
    for chunk in xs.chunks(EVAL_CHUNK * d) {
        let rows = chunk.len() / d;
        out.extend_from_slice(ws.forward(layers, params, chunk, rows));
    }
}

fn mse<T: Scalar>(ws: &mut Workspace<T>, layers: &[usize], params: &[T], xs: &[T], ys: &[T]) -> T {
    let mut pred = Vec::with_capacity(ys.len());
    predict_standardized(ws, layers, params, xs, &mut pred);
    let s = pred.iter().zip(ys).fold(T::zero(), |s, (&f, &y)| s + (f - y) * (f - y));
    s / T::from_usize_lossy(ys.len())
}

fn init_params<T: Scalar>(layers: &[usize], rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut p = Vec::with_capacity(param_count(layers));
    for w in layers.windows(2) {
        let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
        for _ in 0..w[0] * w[1] {
            p.push(T::lit(rng.random_range(-limit..limit)));
        }
        p.extend(std::iter::repeat_n(T::zero(), w[1]));
    }
    p
}

fn column_stats<T: Scalar>(xs: &[T], d: usize) -> (Vec<T>, Vec<T>) {
    let mut mean = vec![T::zero(); d];
    let mut std = vec![T::one(); d];
    for j in 0..d {
        let col: Vec<T> = xs.iter().skip(j).step_by(d).copied().filter(|v| v.is_finite()).collect();
        if col.is_empty() {
            continue;
        }
        let n = T::from_usize_lossy(col.len());
        let m = col.iter().copied().sum::<T>() / n;
        let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
        mean[j] = m;
        if var.sqrt() > T::zero() {
            std[j] = var.sqrt();
        }
    }
    (mean, std)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpRegressor<T> {
    /// Input width, hidden widths, output width 1.
    pub layers: Vec<usize>,
    pub params: Vec<T>,
    pub x_mean: Vec<T>,
    pub x_std: Vec<T>,
    pub y_mean: T,
    pub y_std: T,
    pub config: MlpConfig,
    pub seed: u64,
    pub holdout_mse: T,
    pub epochs: usize,
}

struct Run<T> {
    params: Vec<T>,
    holdout: T,
    epochs: usize,
}

fn train_one<T: Scalar>(
    layers: &[usize],
    x: &[T],
    y: &[T],
    hx: &[T],
    hy: &[T],
    cfg: &MlpConfig,
    seed: u64,
    restart: usize,
) -> Result<Run<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(restart as u64)));
    let mut params: Vec<T> = init_params(layers, &mut rng);
    let np = params.len();
    let d = layers[0];
    let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
    let lr = T::lit(cfg.learning_rate);
    let (mut m, mut v) = (vec![T::zero(); np], vec![T::zero(); np]);
    let (mut b1t, mut b2t) = (T::one(), T::one());
    let mut ws = Workspace::new(layers);
    let mut grad = vec![T::zero(); np];
    let mut d_out = Vec::with_capacity(cfg.batch_size);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut bx = Vec::with_capacity(cfg.batch_size * d);
    let mut by = Vec::with_capacity(cfg.batch_size);

    let mut best = Run {
        params: params.clone(),
        holdout: mse(&mut ws, layers, &params, hx, hy),
        epochs: 0,
    };
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            bx.clear();
            by.clear();
            for &i in batch {
                bx.extend_from_slice(&x[i * d..(i + 1) * d]);
                by.push(y[i]);
            }
            grad.iter_mut().for_each(|g| *g = T::zero());
            let loss = accumulate(&mut ws, layers, &params, &bx, &by, &mut grad, &mut d_out);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch} (restart {restart}, learning rate {}, batch {})",
                    cfg.learning_rate,
                    batch.len()
                )));
            }
            b1t = b1t * b1;
            b2t = b2t * b2;
            for k in 0..np {
                let g = grad[k];
                m[k] = b1 * m[k] + (T::one() - b1) * g;
                v[k] = b2 * v[k] + (T::one() - b2) * g * g;
                let mh = m[k] / (T::one() - b1t);
                let vh = v[k] / (T::one() - b2t);
                params[k] = params[k] - lr * mh / (vh.sqrt() + eps);
            }
        }
        let h = mse(&mut ws, layers, &params, hx, hy);
        if !h.is_finite() {
            return Err(Error::Training(format!(
                "non-finite holdout loss at epoch {epoch} (restart {restart})"
            )));
        }
        if h < best.holdout {
            best = Run {
                params: params.clone(),
                holdout: h,
                epochs: epoch,
            };
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(best)
}

impl<T: Scalar> MlpRegressor<T> {
    /// Fits on row-major inputs with `d` columns; `holdout_*` drive early stopping.
    pub fn fit(
        x: &[T],
        y: &[T],
        holdout_x: &[T],
        holdout_y: &[T],
        d: usize,
        config: &MlpConfig,
        seed: u64,
    ) -> Result<Self> {
        if d == 0 || x.len() != y.len() * d || holdout_x.len() != holdout_y.len() * d {
            return Err(Error::Misaligned("feature rows and targets differ in length".into()));
        }
        if y.is_empty() || holdout_y.is_empty() {
            return Err(Error::Training("need at least one training and one holdout row".into()));
        }
        if config.restarts == 0 || config.hidden.contains(&0) {
            return Err(Error::Parameter("restarts and hidden widths must be >= 1".into()));
        }
        if y.iter().chain(holdout_y).any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite target values".into()));
        }
        let (x_mean, x_std) = column_stats(x, d);
        let (ym, ys) = column_stats(y, 1);
        let (y_mean, y_std) = (ym[0], ys[0]);
        let standardize = |xs: &[T]| -> Vec<T> {
            xs.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let j = i % d;
                    if v.is_finite() {
                        (v - x_mean[j]) / x_std[j]
                    } else {
                        T::zero()
                    }
                })
                .collect()
        };
        let sx = standardize(x);
        let shx = standardize(holdout_x);
        let sy: Vec<T> = y.iter().map(|&v| (v - y_mean) / y_std).collect();
        let shy: Vec<T> = holdout_y.iter().map(|&v| (v - y_mean) / y_std).collect();

        let mut layers = vec![d];
        layers.extend(&config.hidden);
        layers.push(1);

        let mut best: Option<Run<T>> = None;
        for r in 0..config.restarts {
            let run = train_one(&layers, &sx, &sy, &shx, &shy, config, seed, r)?;
            log::debug!("mlp restart {r}: holdout mse {} after {} epochs", run.holdout, run.epochs);
            if best.as_ref().is_none_or(|b| run.holdout < b.holdout) {
                best = Some(run);
            }
        }
        let best = best.expect("at least one restart");
        Ok(Self {
            layers,
            params: best.params,
            x_mean,
            x_std,
            y_mean,
            y_std,
            config: config.clone(),
            seed,
            holdout_mse: best.holdout * y_std * y_std,
            epochs: best.epochs,
        })
    }

    pub fn n_features(&self) -> usize {
        self.layers[0]
    }

    /// Per-row prediction in kW.
    pub fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        let d = self.n_features();
        if !x.len().is_multiple_of(d) {
            return Err(Error::Misaligned(format!("feature rows must have {d} columns")));
        }
        let mut ws = Workspace::new(&self.layers);
        let mut xs = Vec::with_capacity(x.len());
        for xr in x.chunks_exact(d) {
            for j in 0..d {
                xs.push(if xr[j].is_finite() {
                    (xr[j] - self.x_mean[j]) / self.x_std[j]
                } else {
                    T::zero()
                });
            }
        }
        let mut out = Vec::with_capacity(x.len() / d);
        predict_standardized(&mut ws, &self.layers, &self.params, &xs, &mut out);
        Ok(out.into_iter().map(|v| v * self.y_std + self.y_mean).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        let doc = MlpJson {
            schema_version: MLP_SCHEMA_VERSION,
            model: "mlp".into(),
            layers: self.layers.clone(),
            params: f(&self.params),
            x_mean: f(&self.x_mean),
            x_std: f(&self.x_std),
            y_mean: self.y_mean.to_f64_lossy(),
            y_std: self.y_std.to_f64_lossy(),
            config: self.config.clone(),
            seed: self.seed,
            holdout_mse: self.holdout_mse.to_f64_lossy(),
            epochs: self.epochs,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MlpJson = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema_version != MLP_SCHEMA_VERSION || doc.model != "mlp" {
            return Err(Error::Schema(format!(
                "expected mlp model with schema_version {MLP_SCHEMA_VERSION}"
            )));
        }
        if doc.layers.len() < 2
            || doc.layers.last() != Some(&1)
            || doc.params.len() != param_count(&doc.layers)
            || doc.x_mean.len() != doc.layers[0]
            || doc.x_std.len() != doc.layers[0]
        {
            return Err(Error::Schema("mlp layer sizes and parameter counts disagree".into()));
        }
        if doc.params.iter().chain(&doc.x_mean).chain(&doc.x_std).any(|v| !v.is_finite()) {
            return Err(Error::Schema("mlp parameters must be finite".into()));
        }
        let g = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<_>>();
        Ok(Self {
            layers: doc.layers,
            params: g(doc.params),
            x_mean: g(doc.x_mean),
            x_std: g(doc.x_std),
            y_mean: T::lit(doc.y_mean),
            y_std: T::lit(doc.y_std),
            config: doc.config,
            seed: doc.seed,
            holdout_mse: T::lit(doc.holdout_mse),
            epochs: doc.epochs,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpJson {
    schema_version: u32,
    model: String,
    layers: Vec<usize>,
    params: Vec<f64>,
    x_mean: Vec<f64>,
    x_std: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    config: MlpConfig,
    seed: u64,
    holdout_mse: f64,
    epochs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(rng: &mut ChaCha8Rng, d: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
        let x = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let layers = [5, 8, 6, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let params: Vec<f64> = init_params(&layers, &mut rng);
            let params: Vec<f64> = params.iter().map(|p| p + rng.random_range(-0.1..0.1)).collect();
            let (x, y) = random_batch(&mut rng, 5, 10);
            let (_, g) = loss_and_gradient(&layers, &params, &x, &y);
            let h = 1e-6;
            for k in 0..params.len() {
                let mut p = params.clone();
                p[k] += h;
                let (lp, _) = loss_and_gradient(&layers, &p, &x, &y);
                p[k] -= 2.0 * h;
                let (lm, _) = loss_and_gradient(&layers, &p, &x, &y);
                let fd = (lp - lm) / (2.0 * h);
                let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6);
                assert!(rel < 1e-4, "param {k}: analytic {} vs fd {fd}", g[k]);
            }
        }
    }

    fn split_rows(x: &[f64], y: &[f64], d: usize, n_train: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            x[..n_train * d].to_vec(),
            y[..n_train].to_vec(),
            x[n_train * d..].to_vec(),
            y[n_train..].to_vec(),
        )
    }

    #[test]
    fn constant_target_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, _) = random_batch(&mut rng, 5, 250);
        let c = 420.0;
        let y = vec![c; 250];
        let (tx, ty, hx, hy) = split_rows(&x, &y, 5, 200);
        let m = MlpRegressor::fit(&tx, &ty, &hx, &hy, 5, &MlpConfig::default(), 1).unwrap();
        let pred = m.predict(&hx).unwrap();
        let holdout_mse = pred.iter().map(|p| (p - c) * (p - c)).sum::<f64>() / pred.len() as f64;
        assert!(holdout_mse < 1e-3 * c * c, "{holdout_mse}");
    }

    #[test]
    fn learns_smooth_curve_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 600;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..20.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1500.0 / (1.0 + (-(v - 9.0)).exp())).collect();
        let (tx, ty, hx, hy) = split_rows(&x, &y, 1, 480);
        let cfg = MlpConfig {
            learning_rate: 1e-2,
            ..MlpConfig::default()
        };
        let m = MlpRegressor::fit(&tx, &ty, &hx, &hy, 1, &cfg, 9).unwrap();
        assert!(m.holdout_mse.sqrt() < 60.0, "rmse {}", m.holdout_mse.sqrt());
        let m2 = MlpRegressor::fit(&tx, &ty, &hx, &hy, 1, &cfg, 9).unwrap();
        assert_eq!(m, m2);
        let m3 = MlpRegressor::fit(&tx, &ty, &hx, &hy, 1, &cfg, 10).unwrap();
        assert_ne!(m.params, m3.params);
    }

    #[test]
    fn predictions_are_stateless() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y) = random_batch(&mut rng, 5, 60);
        let cfg = MlpConfig {
            max_epochs: 5,
            ..MlpConfig::default()
        };
        let m = MlpRegressor::fit(&x[..200], &y[..40], &x[200..], &y[40..], 5, &cfg, 2).unwrap();
        let p = m.predict(&x).unwrap();
        let mut rev = Vec::new();
        for row in x.chunks(5).rev() {
            rev.extend_from_slice(row);
        }
        let mut pr = m.predict(&rev).unwrap();
        pr.reverse();
        assert_eq!(p, pr);
        let dup = m.predict(&[&x[..5], &x[..5]].concat()).unwrap();
        assert_eq!(dup[0], dup[1]);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn diverging_training_reports_error() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let cfg = MlpConfig {
            learning_rate: 1e300,
            ..MlpConfig::default()
        };
        let err = MlpRegressor::fit(&x[..15], &x[..15], &x[15..], &x[15..], 1, &cfg, 0);
        assert!(matches!(err, Err(Error::Training(_))));
    }

    #[test]
    fn needs_holdout() {
        let err = MlpRegressor::fit(&[1.0], &[1.0], &[], &[], 1, &MlpConfig::default(), 0);
        assert!(matches!(err, Err(Error::Training(_))));
    }

    #[test]
    fn json_round_trip_and_f32() {
        let x: Vec<f32> = (0..40).map(|i| i as f32 * 0.1).collect();
        let y: Vec<f32> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let cfg = MlpConfig {
            max_epochs: 3,
            ..MlpConfig::default()
        };
        let m = MlpRegressor::fit(&x[..30], &y[..30], &x[30..], &y[30..], 1, &cfg, 4).unwrap();
        let back = MlpRegressor::<f32>::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn direction_encoding() {
        let row = WeatherRow {
            v100: Some(7.0),
            v10: None,
            direction_deg: Some(90.0),
            temperature_c: None,
            pressure_hpa: Some(1000.0),
        };
        let f = mlp_features(&row);
        assert_eq!(f[0], 7.0);
        assert!((f[1] - 1.0f64).abs() < 1e-12 && f[2].abs() < 1e-12);
        assert!(f[3].is_nan());
    }
}
