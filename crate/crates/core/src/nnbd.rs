//! Neural-network battery-degradation surrogate.
//!
//! A small fully connected network (5 inputs, two rectifier hidden layers,
//! one linear output) maps standardized cycle features to the standardized
//! relative capacity loss of that cycle. Training is plain mini-batch
//! gradient descent on the mean squared error with a step-decayed learning
//! rate and best-validation checkpointing.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataprep::{Dataset, NormStats};
use crate::error::{Error, Result};

/// Guards relative errors against near-zero targets.
pub const ACCURACY_EPS_ABS: f64 = 1e-7;
pub const DEFAULT_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub widths: Vec<usize>,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            widths: vec![5, 20, 10, 1],
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::param("network needs at least an input and an output layer"));
        }
        if self.widths[0] != 5 {
            return Err(Error::param("input width must be 5"));
        }
        if *self.widths.last().unwrap() != 1 {
            return Err(Error::param("output width must be 1"));
        }
        if self.widths.contains(&0) {
            return Err(Error::param("layer widths must be positive"));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Dense layer with row-major weights (`outputs x inputs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub final_train_mse: f64,
    pub final_val_mse: f64,
}

/// Network parameters plus the statistics needed to run it on raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationModel {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
    pub stats: NormStats,
    /// `None` until the model has been trained (or loaded from a trained file).
    pub fingerprint: Option<Fingerprint>,
}

/// Untrained network with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases.
pub fn init_network(spec: &NetworkSpec, seed: u64) -> Result<DegradationModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .widths
        .windows(2)
        .map(|w| {
            let bound = 1.0 / (w[0] as f64).sqrt();
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1])
                    .map(|_| rng.random_range(-bound..bound))
                    .collect(),
                biases: vec![0.0; w[1]],
            }
        })
        .collect();
    Ok(DegradationModel {
        spec: spec.clone(),
        layers,
        stats: NormStats::identity(),
        fingerprint: None,
    })
}

/// Activations kept from a forward pass for backpropagation.
struct Trace {
    // per layer: pre-activation and post-activation values
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl DegradationModel {
    pub fn is_trained(&self) -> bool {
        self.fingerprint.is_some()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn new_trace(&self) -> Trace {
        Trace {
            pre: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            post: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
        }
    }

    /// Network output on already standardized inputs.
    pub fn forward_scaled(&self, x: &[f64; 5]) -> f64 {
        let mut trace = self.new_trace();
        self.run(x, &mut trace)
    }

    fn run(&self, x: &[f64], trace: &mut Trace) -> f64 {
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let (before, rest) = trace.post.split_at_mut(li);
            let input: &[f64] = if li == 0 { x } else { &before[li - 1] };
            let pre = &mut trace.pre[li];
            let post = &mut rest[0];
            for o in 0..layer.outputs {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let z = row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>() + layer.biases[o];
                pre[o] = z;
                post[o] = if li == last { z } else { z.max(0.0) };
            }
        }
        trace.post[last][0]
    }

    /// Adds `scale * dLoss/dparam` for one sample to `grad` (flattened layer by
    /// layer: weights then biases) given `dl_dout`, the derivative of the loss
    /// with respect to the network output.
    fn backprop(&self, x: &[f64], trace: &Trace, dl_dout: f64, grad: &mut [f64], delta: &mut [Vec<f64>]) {
        let last = self.layers.len() - 1;
        delta[last][0] = dl_dout;
        let offsets = self.offsets();
        for li in (0..=last).rev() {
            let layer = &self.layers[li];
            if li != last {
                for o in 0..layer.outputs {
                    if trace.pre[li][o] <= 0.0 {
                        delta[li][o] = 0.0;
                    }
                }
            }
            let input: &[f64] = if li == 0 { x } else { &trace.post[li - 1] };
            let off = offsets[li];
            let (wg, bg) = grad[off..off + layer.weights.len() + layer.biases.len()]
                .split_at_mut(layer.weights.len());
            for o in 0..layer.outputs {
                let d = delta[li][o];
                if d == 0.0 {
                    continue;
                }
                bg[o] += d;
                let row = &mut wg[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
            }
            if li > 0 {
                let (lower, upper) = delta.split_at_mut(li);
                let prev = &mut lower[li - 1];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for o in 0..layer.outputs {
                    let d = upper[0][o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
            }
        }
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            out.push(acc);
            acc += l.weights.len() + l.biases.len();
        }
        out
    }

    /// All parameters flattened layer by layer (weights, then biases).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = *it.next().expect("parameter vector too short");
            }
        }
    }

    fn step(&mut self, grad: &[f64], lr: f64) {
        let mut it = grad.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w -= lr * it.next().unwrap();
            }
        }
    }

    /// Analytic gradient of the squared error on one standardized sample.
    pub fn sample_gradient(&self, x: &[f64; 5], y: f64) -> Vec<f64> {
        let mut trace = self.new_trace();
        let out = self.run(x, &mut trace);
        let mut grad = vec![0.0; self.parameter_count()];
        let mut delta: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        self.backprop(x, &trace, 2.0 * (out - y), &mut grad, &mut delta);
        grad
    }

    /// Smallest |pre-activation| over all hidden units for a standardized input.
    pub fn kink_margin(&self, x: &[f64; 5]) -> f64 {
        let mut trace = self.new_trace();
        self.run(x, &mut trace);
        let hidden = self.layers.len() - 1;
        trace.pre[..hidden]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Predicted relative degradation for raw (unstandardized) features, clamped at zero.
pub fn forward(model: &DegradationModel, features: &[f64; 5]) -> Result<f64> {
    for (k, v) in features.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::domain(
                crate::dataprep::FEATURE_NAMES[k],
                "non-finite feature",
            ));
        }
    }
    let x = model.stats.scale_features(features);
    let z = model.forward_scaled(&x);
    Ok(model.stats.unscale_target(z).max(0.0))
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::param("prediction and target lengths differ"));
    }
    if predictions.is_empty() {
        return Err(Error::param("mse of an empty set"));
    }
    let s: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (t - p).powi(2))
        .sum();
    Ok(s / predictions.len() as f64)
}

/// Mean squared error of the network on a standardized dataset.
pub fn dataset_mse(model: &DegradationModel, ds: &Dataset) -> f64 {
    let mut trace = model.new_trace();
    let s: f64 = ds
        .rows
        .iter()
        .map(|r| (model.run(&r.x, &mut trace) - r.y).powi(2))
        .sum();
    s / ds.len().max(1) as f64
}

/// Same as [`dataset_mse`] with chunks evaluated on the rayon pool.
pub fn dataset_mse_parallel(model: &DegradationModel, ds: &Dataset) -> f64 {
    let s: f64 = ds
        .rows
        .par_chunks(4096)
        .map(|chunk| {
            let mut trace = model.new_trace();
            chunk
                .iter()
                .map(|r| (model.run(&r.x, &mut trace) - r.y).powi(2))
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    s / ds.len().max(1) as f64
}

fn within(pred: f64, target: f64, tol: f64) -> bool {
    (pred - target).abs() / target.max(ACCURACY_EPS_ABS) <= tol
}

/// Share of rows whose prediction is within `tol` relative error.
///
/// Standardized datasets are compared in raw units using the model's statistics.
pub fn accuracy(model: &DegradationModel, ds: &Dataset, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    if ds.is_empty() {
        return Err(Error::param("accuracy of an empty dataset"));
    }
    let hits = ds
        .rows
        .iter()
        .filter(|r| {
            let (pred, target) = if ds.standardized {
                let p = model.stats.unscale_target(model.forward_scaled(&r.x)).max(0.0);
                (p, model.stats.unscale_target(r.y))
            } else {
                (forward(model, &r.x).unwrap_or(f64::NAN), r.y)
            };
            within(pred, target, tol)
        })
        .count();
    Ok(hits as f64 / ds.len() as f64)
}

/// Accuracy of arbitrary prediction/target pairs.
pub fn accuracy_of(predictions: &[f64], targets: &[f64], tol: f64) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::param("need equal, non-zero lengths"));
    }
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| within(**p, **t, tol))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub decay_factor: f64,
    pub decay_period: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub spec: NetworkSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_epochs: 65,
            learning_rate: 1e-2,
            decay_factor: 0.5,
            decay_period: 20,
            seed: 42,
            shuffle: false,
            spec: NetworkSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be >= 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::param("max_epochs must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be positive"));
        }
        if self.decay_period == 0 {
            return Err(Error::param("decay period must be >= 1"));
        }
        self.spec.validate()
    }

    pub fn rate_at(&self, epoch: usize) -> f64 {
        let k = (epoch.saturating_sub(1) / self.decay_period) as i32;
        self.learning_rate * self.decay_factor.powi(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub val_acc_15: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Trains a fresh network on standardized data.
pub fn train(
    train_ds: &Dataset,
    val_ds: &Dataset,
    stats: &NormStats,
    config: &TrainConfig,
) -> Result<(DegradationModel, TrainReport)> {
    config.validate()?;
    stats.validate()?;
    if !train_ds.standardized || !val_ds.standardized {
        return Err(Error::param("training expects standardized datasets"));
    }
    if train_ds.is_empty() || val_ds.is_empty() {
        return Err(Error::param("training and validation sets must be non-empty"));
    }

    let mut model = init_network(&config.spec, config.seed)?;
    model.stats = stats.clone();

    let n_params = model.parameter_count();
    let mut grad = vec![0.0; n_params];
    let mut delta: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
    let mut trace = model.new_trace();
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);

    let mut epochs = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=config.max_epochs {
        let lr = config.rate_at(epoch);
        if config.shuffle {
            use rand::seq::SliceRandom;
            order.shuffle(&mut shuffler);
        }
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let row = &train_ds.rows[i];
                let out = model.run(&row.x, &mut trace);
                model.backprop(&row.x, &trace, scale * (out - row.y), &mut grad, &mut delta);
            }
            model.step(&grad, lr);
        }

        let train_mse = dataset_mse(&model, train_ds);
        let val_mse = dataset_mse(&model, val_ds);
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Training { epoch });
        }
        let val_acc_15 = accuracy(&model, val_ds, DEFAULT_TOLERANCE)?;
        epochs.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
            val_acc_15,
        });
        if best.as_ref().is_none_or(|(v, _, _)| val_mse < *v) {
            best = Some((val_mse, epoch, model.parameters()));
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    model.set_parameters(&params);
    let last = epochs.last().expect("at least one epoch");
    model.fingerprint = Some(Fingerprint {
        seed: config.seed,
        epochs: config.max_epochs,
        best_epoch,
        final_train_mse: last.train_mse,
        final_val_mse: last.val_mse,
    });
    Ok((model, TrainReport { epochs, best_epoch }))
}

/// Loss of one standardized sample.
fn sample_loss(model: &DegradationModel, x: &[f64; 5], y: f64) -> f64 {
    (model.forward_scaled(x) - y).powi(2)
}

/// Largest relative gap between the backpropagated gradient and central
/// finite differences with step `h`, over every parameter.
pub fn gradient_check(model: &DegradationModel, x: &[f64; 5], y: f64, h: f64) -> f64 {
    let analytic = model.sample_gradient(x, y);
    let mut probe = model.clone();
    let base = model.parameters();
    let mut worst: f64 = 0.0;
    for (k, &g_a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[k] = base[k] + h;
        probe.set_parameters(&p);
        let up = sample_loss(&probe, x, y);
        p[k] = base[k] - h;
        probe.set_parameters(&p);
        let down = sample_loss(&probe, x, y);
        let g_n = (up - down) / (2.0 * h);
        let rel = (g_a - g_n).abs() / g_a.abs().max(g_n.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

pub fn save_model(path: &Path, model: &DegradationModel) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<DegradationModel> {
    let model: DegradationModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    model.spec.validate()?;
    for (l, w) in model.layers.iter().zip(model.spec.widths.windows(2)) {
        if l.inputs != w[0] || l.outputs != w[1] || l.weights.len() != w[0] * w[1] || l.biases.len() != w[1] {
            return Err(Error::param("model layer shapes do not match the network spec"));
        }
    }
    model.stats.validate()?;
    Ok(model)
}

pub fn write_report_csv(path: &Path, report: &TrainReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in &report.epochs {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::{Group, Mode, Row};

    fn ds(rows: Vec<Row>, standardized: bool) -> Dataset {
        let n = rows.len();
        Dataset {
            rows,
            groups: vec![Group { test_id: 0, rows: 0..n }],
            mode: Mode::Regressed,
            standardized,
        }
    }

    #[test]
    fn init_is_deterministic_and_seeded() {
        let spec = NetworkSpec::default();
        let a = init_network(&spec, 0).unwrap();
        let b = init_network(&spec, 0).unwrap();
        let c = init_network(&spec, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.parameters(), c.parameters());
        assert_eq!(a.parameter_count(), 341);
        assert_eq!(spec.parameter_count(), 341);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|b| *b == 0.0)));
        let bound = 1.0 / 5f64.sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_network_predicts_target_mean() {
        let mut m = init_network(&NetworkSpec::default(), 3).unwrap();
        let zeros = vec![0.0; m.parameter_count()];
        m.set_parameters(&zeros);
        m.stats.target_mean = 4e-6;
        m.stats.target_var = 1e-12;
        let p = forward(&m, &[25.0, 0.5, 0.5, 0.5, 0.9]).unwrap();
        assert!((p - 4e-6).abs() < 1e-18);
        m.stats.target_mean = -1.0;
        assert_eq!(forward(&m, &[25.0, 0.5, 0.5, 0.5, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn hand_built_toy_network() {
        // 5 -> 2 -> 1: hidden = relu([x0 - 1, -x0]), out = 3*h0 + 2*h1 + 0.5
        let spec = NetworkSpec { widths: vec![5, 2, 1] };
        let mut m = init_network(&spec, 0).unwrap();
        m.layers[0].weights = vec![1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0];
        m.layers[0].biases = vec![-1.0, 0.0];
        m.layers[1].weights = vec![3.0, 2.0];
        m.layers[1].biases = vec![0.5];
        // x0 = 4: h = [3, 0] -> 9.5 ; x0 = -2: h = [0, 2] -> 4.5
        assert!((forward(&m, &[4.0, 9.0, 9.0, 9.0, 9.0]).unwrap() - 9.5).abs() < 1e-12);
        assert!((forward(&m, &[-2.0, 0.0, 0.0, 0.0, 0.0]).unwrap() - 4.5).abs() < 1e-12);
        let a = forward(&m, &[1.5, 0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = forward(&m, &[1.5 + 0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let m = init_network(&NetworkSpec::default(), 0).unwrap();
        assert!(matches!(
            forward(&m, &[f64::NAN, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::Domain { field: "temp", .. })
        ));
    }

    #[test]
    fn mse_hand_cases() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[2.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(mse(&[3.0], &[0.0]).unwrap(), 9.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_cases() {
        let t = [1e-5, 2e-5, 4e-5];
        assert_eq!(accuracy_of(&t, &t, 0.15).unwrap(), 1.0);
        let off: Vec<f64> = t.iter().map(|v| v * 1.15).collect();
        assert_eq!(accuracy_of(&off, &t, 0.15).unwrap(), 1.0);
        let double: Vec<f64> = t.iter().map(|v| v * 2.0).collect();
        assert_eq!(accuracy_of(&double, &t, 0.15).unwrap(), 0.0);
        let m = init_network(&NetworkSpec::default(), 0).unwrap();
        assert!(accuracy(&m, &ds(vec![], true), 0.15).is_err());
        assert!(accuracy(&m, &ds(vec![], true), 0.0).is_err());
    }

    fn toy_rows(n: usize, seed: u64) -> Vec<Row> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
                let y = 0.6 * x[0] - 0.3 * x[1] + 0.4 * (x[2] * x[3]).abs() - 0.2 * x[4];
                Row { x, y }
            })
            .collect()
    }

    #[test]
    fn zero_targets_are_fit() {
        let mut rows = toy_rows(8, 1);
        rows.iter_mut().for_each(|r| r.y = 0.0);
        let d = ds(rows, true);
        let cfg = TrainConfig {
            batch_size: 8,
            max_epochs: 20000,
            learning_rate: 0.4,
            decay_factor: 1.0,
            ..TrainConfig::default()
        };
        let (m, rep) = train(&d, &d, &NormStats::identity(), &cfg).unwrap();
        assert!(dataset_mse(&m, &d) <= 1e-8, "{:?}", rep.epochs.last());
    }

    #[test]
    fn small_dataset_is_memorized() {
        let d = ds(toy_rows(8, 2), true);
        let cfg = TrainConfig {
            batch_size: 8,
            max_epochs: 5000,
            learning_rate: 0.05,
            decay_factor: 1.0,
            decay_period: 1000,
            ..TrainConfig::default()
        };
        let (m, _) = train(&d, &d, &NormStats::identity(), &cfg).unwrap();
        assert!(dataset_mse(&m, &d) < 1e-6, "{}", dataset_mse(&m, &d));
    }

    #[test]
    fn training_is_deterministic() {
        let d = ds(toy_rows(200, 3), true);
        let cfg = TrainConfig {
            batch_size: 32,
            max_epochs: 10,
            ..TrainConfig::default()
        };
        let a = train(&d, &d, &NormStats::identity(), &cfg).unwrap();
        let b = train(&d, &d, &NormStats::identity(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_reports_the_epoch() {
        let mut rows = toy_rows(50, 4);
        rows.iter_mut().for_each(|r| r.y *= 1e6);
        let d = ds(rows, true);
        let cfg = TrainConfig {
            batch_size: 1,
            max_epochs: 50,
            learning_rate: 1e3,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&d, &d, &NormStats::identity(), &cfg),
            Err(Error::Training { .. })
        ));
    }

    #[test]
    fn unstandardized_input_is_rejected() {
        let d = ds(toy_rows(10, 5), false);
        assert!(train(&d, &d, &NormStats::identity(), &TrainConfig::default()).is_err());
    }

    #[test]
    fn parallel_mse_matches_sequential() {
        let d = ds(toy_rows(10_000, 6), true);
        let m = init_network(&NetworkSpec::default(), 6).unwrap();
        let a = dataset_mse(&m, &d);
        let b = dataset_mse_parallel(&m, &d);
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn all_active_network_has_exact_gradients() {
        let mut m = init_network(&NetworkSpec::default(), 9).unwrap();
        let p: Vec<f64> = m.parameters().iter().map(|w| w.abs() + 0.05).collect();
        m.set_parameters(&p);
        let x = [0.3, 0.7, 1.1, 0.2, 0.9];
        assert!(m.kink_margin(&x) > 0.1);
        let d = gradient_check(&m, &x, -2.0, 1e-3);
        assert!(d <= 1e-9, "{d}");
    }

    #[test]
    fn random_model_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = init_network(&NetworkSpec::default(), 11).unwrap();
        let mut checked = 0;
        while checked < 5 {
            let x: [f64; 5] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            if m.kink_margin(&x) < 1e-3 {
                continue;
            }
            assert!(gradient_check(&m, &x, 0.7, 1e-5) <= 1e-4);
            checked += 1;
        }
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = init_network(&NetworkSpec::default(), 1).unwrap();
        save_model(&path, &m).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }
}
