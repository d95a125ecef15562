//! Dense feed-forward regression networks trained with adamax on an RMS loss.
//!
//! Weights are stored row-major as `(outputs, inputs)`. Hidden layers apply an
//! affine map followed by the network's activation; the output layer is
//! linear. Training in this module is single-threaded and fixed-order, so a
//! seed fully determines the resulting weights.

use std::io::Write;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{model_input, FeatureError, NormStats, N_FEATURES};
use crate::linkmodel::{LabeledRecord, Scenario};

pub const LEAKY_RELU_SLOPE: f64 = 0.01;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
/// Added under the square root of the batch MSE.
pub const RMS_EPS: f64 = 1e-12;
pub const MIN_TRAINING_RECORDS: usize = 100;

const PREDICT_CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("need at least {MIN_TRAINING_RECORDS} records to train, got {0}")]
    TooFewRecords(usize),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Selu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_RELU_SLOPE * x
                }
            }
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
                }
            }
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_RELU_SLOPE
                }
            }
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp()
                }
            }
        }
    }

    /// Standard deviation of the normal initializer for a layer with
    /// `fan_in` inputs: He for leaky ReLU, LeCun for SELU.
    pub fn init_std(self, fan_in: usize) -> f64 {
        match self {
            Activation::LeakyRelu => {
                (2.0 / ((1.0 + LEAKY_RELU_SLOPE * LEAKY_RELU_SLOPE) * fan_in as f64)).sqrt()
            }
            Activation::Selu => (1.0 / fan_in as f64).sqrt(),
        }
    }
}

/// The two tuned architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Cone of 8 leaky-ReLU layers halving from 512 to 4.
    Ann,
    /// 16 SELU layers of 64 units.
    Snn,
}

impl Preset {
    pub fn layer_sizes(self, n_inputs: usize) -> Vec<usize> {
        let mut sizes = vec![n_inputs];
        match self {
            Preset::Ann => sizes.extend((0..8).map(|k| 512 >> k)),
            Preset::Snn => sizes.extend(std::iter::repeat_n(64, 16)),
        }
        sizes.push(1);
        sizes
    }

    pub fn activation(self) -> Activation {
        match self {
            Preset::Ann => Activation::LeakyRelu,
            Preset::Snn => Activation::Selu,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ann => "ann",
            Preset::Snn => "snn",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ann" => Ok(Preset::Ann),
            "snn" => Ok(Preset::Snn),
            other => Err(format!("unknown architecture {other:?}, expected ann or snn")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(outputs, inputs)`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            biases: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Per-layer gradients, shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl Mlp {
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self, NeuralError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NeuralError::Architecture(format!(
                "need at least input and output sizes, all positive: {layer_sizes:?}"
            )));
        }
        if layer_sizes.last() != Some(&1) {
            return Err(NeuralError::Architecture("output dimension must be 1".into()));
        }
        Ok(Self {
            layers: layer_sizes
                .windows(2)
                .map(|w| Dense::zeros(w[0], w[1]))
                .collect(),
            activation,
        })
    }

    /// Normal-initialized weights (scheme per activation), zero biases.
    pub fn init(
        layer_sizes: &[usize],
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, NeuralError> {
        let mut mlp = Self::zeros(layer_sizes, activation)?;
        for layer in &mut mlp.layers {
            let std = activation.init_std(layer.inputs());
            for w in layer.weights.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *w = std * z;
            }
        }
        Ok(mlp)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs()];
        sizes.extend(self.layers.iter().map(Dense::outputs));
        sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn check_inputs(&self, got: usize) -> Result<(), NeuralError> {
        if got != self.n_inputs() {
            return Err(NeuralError::DimensionMismatch {
                expected: self.n_inputs(),
                got,
            });
        }
        Ok(())
    }

    /// Outputs for each row of `inputs` (`batch x n_inputs`).
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array1<f64>, NeuralError> {
        self.check_inputs(inputs.ncols())?;
        let mut act = inputs.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = act.dot(&layer.weights.t());
            z += &layer.biases;
            if i < last {
                z.mapv_inplace(|v| self.activation.apply(v));
            }
            act = z;
        }
        Ok(act.index_axis_move(Axis(1), 0))
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64, NeuralError> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| NeuralError::Architecture(e.to_string()))?;
        Ok(self.forward_batch(view)?[0])
    }

    /// RMS loss over the batch and its gradient with respect to every weight
    /// and bias.
    pub fn backward(
        &self,
        inputs: ArrayView2<f64>,
        targets: ArrayView1<f64>,
    ) -> Result<(f64, Gradients), NeuralError> {
        self.check_inputs(inputs.ncols())?;
        if inputs.nrows() != targets.len() || targets.is_empty() {
            return Err(NeuralError::DimensionMismatch {
                expected: inputs.nrows(),
                got: targets.len(),
            });
        }
        let n = targets.len() as f64;
        let last = self.layers.len() - 1;

        // pre-activations per layer and activations feeding each layer
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(inputs.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&layer.weights.t());
            z += &layer.biases;
            if i < last {
                acts.push(z.mapv(|v| self.activation.apply(v)));
            }
            pre.push(z);
        }

        let out = pre[last].column(0);
        let resid = &out - &targets;
        let mse = resid.mapv(|r| r * r).sum() / n;
        let loss = (mse + RMS_EPS).sqrt();

        let mut delta: Array2<f64> = (resid / (n * loss)).insert_axis(Axis(1));
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let weights = delta.t().dot(&acts[i]);
            let biases = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights);
                ndarray::Zip::from(&mut back)
                    .and(&pre[i - 1])
                    .for_each(|d, &z| *d *= self.activation.derivative(z));
                delta = back;
            }
            grads.push(Dense { weights, biases });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }
}

/// RMS loss without the gradient.
pub fn rms_loss(predictions: ArrayView1<f64>, targets: ArrayView1<f64>) -> f64 {
    let n = targets.len() as f64;
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    (mse + RMS_EPS).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamaxParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamaxParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One elementwise adamax update at step `t` (1-based).
pub fn adamax_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    u: &mut [f64],
    lr: f64,
    t: u64,
    hp: &AdamaxParams,
) {
    assert!(t >= 1, "adamax steps are 1-based");
    let step = lr / (1.0 - hp.beta1.powi(t as i32));
    for (((p, g), m), u) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(u.iter_mut()) {
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *u = (hp.beta2 * *u).max(g.abs());
        *p -= step * *m / (*u + hp.eps);
    }
}

/// Optimizer moments for a whole network.
#[derive(Debug, Clone)]
pub struct Adamax {
    pub params: AdamaxParams,
    m: Vec<Dense>,
    u: Vec<Dense>,
    t: u64,
}

impl Adamax {
    pub fn new(mlp: &Mlp, params: AdamaxParams) -> Self {
        let zeros: Vec<Dense> = mlp
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs(), l.outputs()))
            .collect();
        Self {
            params,
            m: zeros.clone(),
            u: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients, lr: f64) {
        self.t += 1;
        for (((layer, g), m), u) in mlp
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.u)
        {
            adamax_step(
                layer.weights.as_slice_mut().expect("standard layout"),
                g.weights.as_slice().expect("standard layout"),
                m.weights.as_slice_mut().expect("standard layout"),
                u.weights.as_slice_mut().expect("standard layout"),
                lr,
                self.t,
                &self.params,
            );
            adamax_step(
                layer.biases.as_slice_mut().expect("standard layout"),
                g.biases.as_slice().expect("standard layout"),
                m.biases.as_slice_mut().expect("standard layout"),
                u.biases.as_slice_mut().expect("standard layout"),
                lr,
                self.t,
                &self.params,
            );
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    /// Divide the learning rate by 10 every this many epochs.
    pub lr_decade_every: usize,
    pub adamax: AdamaxParams,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            lr0: 0.01,
            lr_decade_every: 10,
            adamax: AdamaxParams::default(),
            split: [0.70, 0.15, 0.15],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.lr_decade_every == 0 {
            return bad("lr_decade_every must be at least 1");
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return bad("lr0 must be positive");
        }
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f))
            || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("split fractions must lie in [0, 1] and sum to 1");
        }
        Ok(())
    }
}

/// Learning rate for a 1-based epoch.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let decades = (epoch.max(1) - 1) / config.lr_decade_every;
    config.lr0 / 10f64.powi(decades as i32)
}

/// Index sets of a seeded train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Shuffles `0..n` with `seed` and cuts it by `fractions`; the test split
    /// takes the remainder.
    pub fn new(n: usize, fractions: [f64; 3], seed: u64) -> Self {
        let n_train = ((n as f64) * fractions[0]).round() as usize;
        let n_val = (((n as f64) * fractions[1]).round() as usize).min(n - n_train.min(n));
        let n_train = n_train.min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        idx.shuffle(&mut rng);
        let test = idx.split_off(n_train + n_val);
        let validation = idx.split_off(n_train);
        Self {
            train: idx,
            validation,
            test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Writes the loss log as `epoch,lr,train_loss,val_loss` CSV.
pub fn write_loss_log(mut out: impl Write, log: &[EpochLog]) -> std::io::Result<()> {
    writeln!(out, "epoch,lr,train_loss,val_loss")?;
    for e in log {
        writeln!(out, "{},{},{},{}", e.epoch, e.lr, e.train_loss, e.val_loss)?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub model_id: String,
    pub preset: Option<Preset>,
    pub seed: u64,
    pub epochs_trained: usize,
    pub n_records: usize,
    /// Train, validation and test sizes.
    pub split_sizes: [usize; 3],
    pub split_fractions: [f64; 3],
    /// SHA-256 over the canonical JSON of the training records.
    pub dataset_fingerprint: String,
}

/// A trained network with the normalization it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Mlp,
    pub norm_stats: NormStats,
    pub metadata: ModelMetadata,
}

/// Stable digest of a record set, used to tie a model to its data.
pub fn dataset_fingerprint(records: &[LabeledRecord]) -> String {
    let mut hasher = Sha256::new();
    for r in records {
        hasher.update(serde_json::to_vec(r).expect("records serialize"));
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn feature_matrix(features: &[[f64; N_FEATURES]]) -> Array2<f64> {
    Array2::from_shape_vec(
        (features.len(), N_FEATURES),
        features.iter().flatten().copied().collect(),
    )
    .expect("rows have N_FEATURES columns")
}

/// Trains `preset` on `records` and returns the model with the per-epoch
/// log. `on_epoch` sees every log entry as it is produced.
pub fn train(
    records: &[LabeledRecord],
    preset: Preset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(MlpModel, Vec<EpochLog>), NeuralError> {
    config.validate()?;
    if records.len() < MIN_TRAINING_RECORDS {
        return Err(NeuralError::TooFewRecords(records.len()));
    }
    let split = Split::new(records.len(), config.split, config.seed);
    let features: Vec<_> = records.par_iter().map(|r| model_input(&r.scenario)).collect();

    let train_feats: Vec<_> = split.train.iter().map(|&i| features[i]).collect();
    let train_etas: Vec<f64> = split.train.iter().map(|&i| records[i].eta).collect();
    let stats = NormStats::fit(&train_feats, &train_etas)?;

    let normalized = |idx: &[usize]| -> (Array2<f64>, Array1<f64>) {
        let rows: Vec<[f64; N_FEATURES]> =
            idx.iter().map(|&i| stats.normalize(&features[i])).collect();
        let y = idx
            .iter()
            .map(|&i| stats.normalize_target(records[i].eta))
            .collect();
        (feature_matrix(&rows), y)
    };
    let (x_train, y_train) = normalized(&split.train);
    let (x_val, y_val) = normalized(&split.validation);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut network = Mlp::init(
        &preset.layer_sizes(N_FEATURES),
        preset.activation(),
        &mut rng,
    )?;
    let mut optimizer = Adamax::new(&network, config.adamax);

    let mut order: Vec<usize> = (0..x_train.nrows()).collect();
    let mut x_batch = Array2::<f64>::zeros((config.batch_size, N_FEATURES));
    let mut y_batch = Array1::<f64>::zeros(config.batch_size);
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let lr = lr_at(epoch, config);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let rows = chunk.len();
            for (r, &i) in chunk.iter().enumerate() {
                x_batch.row_mut(r).assign(&x_train.row(i));
                y_batch[r] = y_train[i];
            }
            let (loss, grads) = network.backward(
                x_batch.slice(s![..rows, ..]),
                y_batch.slice(s![..rows]),
            )?;
            if !loss.is_finite() {
                return Err(NeuralError::Diverged {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            optimizer.step(&mut network, &grads, lr);
            loss_sum += loss;
            n_batches += 1;
        }
        let val_loss = if x_val.nrows() > 0 {
            rms_loss(network.forward_batch(x_val.view())?.view(), y_val.view())
        } else {
            f64::NAN
        };
        let entry = EpochLog {
            epoch,
            lr,
            train_loss: loss_sum / n_batches as f64,
            val_loss,
        };
        on_epoch(&entry);
        log.push(entry);
    }

    let fingerprint = dataset_fingerprint(records);
    let metadata = ModelMetadata {
        model_id: format!("{}-s{}-{}", preset.name(), config.seed, &fingerprint[..12]),
        preset: Some(preset),
        seed: config.seed,
        epochs_trained: config.epochs,
        n_records: records.len(),
        split_sizes: split.sizes(),
        split_fractions: config.split,
        dataset_fingerprint: fingerprint,
    };
    Ok((
        MlpModel {
            network,
            norm_stats: stats,
            metadata,
        },
        log,
    ))
}

impl MlpModel {
    /// The partition this model was trained under, recomputed from its
    /// metadata.
    pub fn split(&self) -> Split {
        Split::new(
            self.metadata.n_records,
            self.metadata.split_fractions,
            self.metadata.seed,
        )
    }

    pub fn predict_eta(&self, scenario: &Scenario) -> Result<f64, NeuralError> {
        let x = self.norm_stats.normalize(&model_input(scenario));
        let y = self.network.forward(&x)?;
        Ok(self.norm_stats.denormalize_target(y))
    }

    /// Batched prediction, single-threaded, in input order.
    pub fn predict_etas<'a>(
        &self,
        scenarios: impl IntoIterator<Item = &'a Scenario>,
    ) -> Result<Vec<f64>, NeuralError> {
        let scenarios: Vec<&Scenario> = scenarios.into_iter().collect();
        let mut out = Vec::with_capacity(scenarios.len());
        let mut x = Array2::<f64>::zeros((PREDICT_CHUNK.min(scenarios.len()), N_FEATURES));
        for chunk in scenarios.chunks(PREDICT_CHUNK) {
            for (r, s) in chunk.iter().enumerate() {
                let row = x.row_mut(r);
                self.norm_stats
                    .normalize_into(&model_input(s), row.into_slice().expect("row-major"));
            }
            let y = self.network.forward_batch(x.slice(s![..chunk.len(), ..]))?;
            out.extend(y.iter().map(|v| self.norm_stats.denormalize_target(*v)));
        }
        Ok(out)
    }

    pub fn save(&self, out: impl Write) -> Result<(), NeuralError> {
        let file = ModelFile::from(self);
        serde_json::to_writer(out, &file).map_err(|e| NeuralError::ModelFile(e.to_string()))
    }

    pub fn load(reader: impl std::io::Read) -> Result<Self, NeuralError> {
        let file: ModelFile =
            serde_json::from_reader(reader).map_err(|e| NeuralError::ModelFile(e.to_string()))?;
        file.try_into()
    }

    pub fn save_path(&self, path: &std::path::Path) -> Result<(), NeuralError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.save(f)
    }

    pub fn load_path(path: &std::path::Path) -> Result<Self, NeuralError> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[derive(Serialize, Deserialize)]
struct ArchitectureRepr {
    layer_sizes: Vec<usize>,
    preset: Option<Preset>,
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    /// Row-major `(outputs, inputs)`.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FeatureNormRepr {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TargetTransformRepr {
    kind: String,
    mean: f64,
    std: f64,
}

const TARGET_KIND: &str = "log10_zscore";
const INPUT_KIND: &str = "log_link_lengths_zscore";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    architecture: ArchitectureRepr,
    activation: Activation,
    layers: Vec<LayerRepr>,
    input_transform: String,
    norm_stats: FeatureNormRepr,
    target_transform: TargetTransformRepr,
    metadata: ModelMetadata,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        ModelFile {
            architecture: ArchitectureRepr {
                layer_sizes: m.network.layer_sizes(),
                preset: m.metadata.preset,
            },
            activation: m.network.activation,
            layers: m
                .network
                .layers
                .iter()
                .map(|l| LayerRepr {
                    weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
            input_transform: INPUT_KIND.to_string(),
            norm_stats: FeatureNormRepr {
                mean: m.norm_stats.feature_mean.clone(),
                std: m.norm_stats.feature_std.clone(),
            },
            target_transform: TargetTransformRepr {
                kind: TARGET_KIND.to_string(),
                mean: m.norm_stats.target_mean,
                std: m.norm_stats.target_std,
            },
            metadata: m.metadata.clone(),
        }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = NeuralError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let bad = |m: String| NeuralError::ModelFile(m);
        let sizes = &f.architecture.layer_sizes;
        if f.layers.len() + 1 != sizes.len() {
            return Err(bad(format!(
                "{} layers for layer_sizes {sizes:?}",
                f.layers.len()
            )));
        }
        if f.input_transform != INPUT_KIND {
            return Err(bad(format!(
                "unsupported input transform {:?}",
                f.input_transform
            )));
        }
        if f.target_transform.kind != TARGET_KIND {
            return Err(bad(format!(
                "unsupported target transform {:?}",
                f.target_transform.kind
            )));
        }
        if sizes[0] != N_FEATURES
            || f.norm_stats.mean.len() != N_FEATURES
            || f.norm_stats.std.len() != N_FEATURES
        {
            return Err(bad(format!(
                "model expects {} inputs and {} norm entries, features have {N_FEATURES}",
                sizes[0],
                f.norm_stats.mean.len()
            )));
        }
        let mut network = Mlp::zeros(sizes, f.activation)?;
        for (k, (layer, repr)) in network.layers.iter_mut().zip(f.layers).enumerate() {
            let (outs, ins) = layer.weights.dim();
            if repr.weights.len() != outs
                || repr.weights.iter().any(|r| r.len() != ins)
                || repr.biases.len() != outs
            {
                return Err(bad(format!("layer {k} is not {outs}x{ins}")));
            }
            for (mut row, values) in layer.weights.rows_mut().into_iter().zip(&repr.weights) {
                row.assign(&ArrayView1::from(values.as_slice()));
            }
            layer.biases = Array1::from(repr.biases);
        }
        Ok(MlpModel {
            network,
            norm_stats: NormStats {
                feature_mean: f.norm_stats.mean,
                feature_std: f.norm_stats.std,
                target_mean: f.target_transform.mean,
                target_std: f.target_transform.std,
            },
            metadata: f.metadata,
        })
    }
}
