use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::boolcore::{BitInput, BooleanFunction};
use crate::error::{parse_json, Error, Result};
use crate::rng_from_seed;

use super::dataset::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// tanh approximation of GELU
    Gelu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                0.5 * z * (1.0 + u.tanh())
            }
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                let t = u.tanh();
                let du = GELU_C * (1.0 + 3.0 * 0.044715 * z * z);
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du
            }
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// Shape of a [`ResidualMLP`]: `d` inputs, `layers` hidden layers of `width`
/// units with an identity skip around every layer after the first, and one
/// output logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub d: usize,
    pub layers: usize,
    pub width: usize,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(d: usize, layers: usize, width: usize) -> Self {
        Self {
            d,
            layers,
            width,
            activation: Activation::Tanh,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.layers == 0 || self.width == 0 {
            return Err(Error::invalid(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let (d, h, l) = (self.d, self.width, self.layers);
        h * d + h + (l - 1) * (h * h + h) + h + 1
    }

    /// Representation width `m = layers * width`.
    pub fn representation_dim(&self) -> usize {
        self.layers * self.width
    }

    fn layout(&self) -> Vec<TensorSlot> {
        let (d, h) = (self.d, self.width);
        let mut slots = Vec::new();
        let mut offset = 0;
        let mut add = |name: String, rows: usize, cols: usize| {
            slots.push(TensorSlot {
                name,
                rows,
                cols,
                offset,
            });
            offset += rows * cols;
        };
        add("input.weight".into(), h, d);
        add("input.bias".into(), h, 1);
        for l in 1..self.layers {
            add(format!("residual{l}.weight"), h, h);
            add(format!("residual{l}.bias"), h, 1);
        }
        add("output.weight".into(), 1, h);
        add("output.bias".into(), 1, 1);
        slots
    }
}

#[derive(Debug, Clone)]
struct TensorSlot {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}

impl TensorSlot {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

/// A small residual multilayer perceptron with all parameters in one flat
/// column-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMLP {
    arch: Architecture,
    seed: u64,
    params: Vec<f64>,
}

/// Intermediate values of a batched forward pass; samples are columns.
struct ForwardCache {
    pre: Vec<DMatrix<f64>>,
    hidden: Vec<DMatrix<f64>>,
    logits: DVector<f64>,
}

impl ResidualMLP {
    /// Random initialization: weights `N(0, 1/fan_in)`, biases zero.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut params = vec![0.0; arch.param_count()];
        for slot in arch.layout() {
            if slot.name.ends_with(".bias") {
                continue;
            }
            let normal = Normal::new(0.0, (1.0 / slot.cols as f64).sqrt()).expect("finite std");
            for p in &mut params[slot.offset..slot.offset + slot.len()] {
                *p = normal.sample(&mut rng);
            }
        }
        Ok(Self { arch, seed, params })
    }

    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch,
            seed: 0,
            params: vec![0.0; arch.param_count()],
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn view<'a>(&self, params: &'a [f64], slot: &TensorSlot) -> DMatrixView<'a, f64> {
        DMatrixView::from_slice(&params[slot.offset..slot.offset + slot.len()], slot.rows, slot.cols)
    }

    fn input_matrix(&self, xs: &[BitInput]) -> Result<DMatrix<f64>> {
        let d = self.arch.d;
        if let Some(bad) = xs.iter().find(|x| x.dim() != d) {
            return Err(Error::invalid(format!(
                "input has dimension {}, model expects {d}",
                bad.dim()
            )));
        }
        Ok(DMatrix::from_fn(d, xs.len(), |i, j| {
            if xs[j].get(i) {
                1.0
            } else {
                0.0
            }
        }))
    }

    fn forward_cached(&self, x: &DMatrix<f64>) -> ForwardCache {
        self.forward_with(&self.params, x)
    }

    fn forward_with(&self, params: &[f64], x: &DMatrix<f64>) -> ForwardCache {
        let layout = self.arch.layout();
        let act = self.arch.activation;
        let mut pre = Vec::with_capacity(self.arch.layers);
        let mut hidden: Vec<DMatrix<f64>> = Vec::with_capacity(self.arch.layers);
        for l in 0..self.arch.layers {
            let w = self.view(params, &layout[2 * l]);
            let b = self.view(params, &layout[2 * l + 1]);
            let input = if l == 0 { x } else { &hidden[l - 1] };
            let mut z = w * input;
            for mut col in z.column_iter_mut() {
                col += b.column(0);
            }
            let mut h = z.map(|v| act.apply(v));
            if l > 0 {
                h += &hidden[l - 1];
            }
            pre.push(z);
            hidden.push(h);
        }
        let out_w = self.view(params, &layout[2 * self.arch.layers]);
        let out_b = params[layout[2 * self.arch.layers + 1].offset];
        let last = hidden.last().expect("at least one layer");
        let logits = (out_w * last).row(0).transpose().add_scalar(out_b);
        ForwardCache {
            pre,
            hidden,
            logits,
        }
    }

    /// Logits for a batch.
    pub fn logits(&self, xs: &[BitInput]) -> Result<Vec<f64>> {
        let x = self.input_matrix(xs)?;
        Ok(self.forward_cached(&x).logits.iter().copied().collect())
    }

    /// Concatenated hidden activations, one row per input (`n x m`).
    pub fn representation(&self, xs: &[BitInput]) -> Result<DMatrix<f64>> {
        let x = self.input_matrix(xs)?;
        let cache = self.forward_cached(&x);
        let h = self.arch.width;
        let mut out = DMatrix::zeros(xs.len(), self.arch.representation_dim());
        for (l, layer) in cache.hidden.iter().enumerate() {
            out.view_mut((0, l * h), (xs.len(), h))
                .copy_from(&layer.transpose());
        }
        Ok(out)
    }

    /// `(prediction, logit, φ(x))` for one input; the prediction is
    /// `logit > 0`.
    pub fn forward_with_representation(&self, x: &BitInput) -> Result<(bool, f64, Vec<f64>)> {
        let xs = std::slice::from_ref(x);
        let xm = self.input_matrix(xs)?;
        let cache = self.forward_cached(&xm);
        let logit = cache.logits[0];
        let phi = cache
            .hidden
            .iter()
            .flat_map(|h| h.column(0).iter().copied().collect::<Vec<_>>())
            .collect();
        Ok((logit > 0.0, logit, phi))
    }

    /// Mean logistic loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, xs: &[BitInput], labels: &[bool]) -> Result<(f64, Vec<f64>)> {
        let x = self.input_matrix(xs)?;
        let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
        Ok(self.loss_and_gradient_matrix(&self.params, &x, &y))
    }

    /// Mean logistic loss at an arbitrary parameter vector.
    pub fn loss_at(&self, params: &[f64], xs: &[BitInput], labels: &[bool]) -> Result<f64> {
        let x = self.input_matrix(xs)?;
        let cache = self.forward_with(params, &x);
        Ok(mean_logistic_loss(&cache.logits, labels.iter().map(|&b| b as u8 as f64)))
    }

    fn loss_and_gradient_matrix(&self, params: &[f64], x: &DMatrix<f64>, y: &[f64]) -> (f64, Vec<f64>) {
        let layout = self.arch.layout();
        let act = self.arch.activation;
        let n = y.len() as f64;
        let cache = self.forward_with(params, x);
        let loss = mean_logistic_loss(&cache.logits, y.iter().copied());

        let mut grad = vec![0.0; params.len()];
        let dlogit = DVector::from_iterator(
            y.len(),
            cache.logits.iter().zip(y).map(|(&z, &t)| (sigmoid(z) - t) / n),
        );
        let nl = self.arch.layers;
        let out_slot = &layout[2 * nl];
        let last = &cache.hidden[nl - 1];
        {
            let gw = last * &dlogit;
            grad[out_slot.offset..out_slot.offset + out_slot.len()].copy_from_slice(gw.as_slice());
            grad[layout[2 * nl + 1].offset] = dlogit.sum();
        }
        let out_w = self.view(params, out_slot);
        // gradient w.r.t. the residual stream after layer l
        let mut g_h: DMatrix<f64> = out_w.transpose() * dlogit.transpose();
        for l in (0..nl).rev() {
            let dz = g_h.zip_map(&cache.pre[l], |g, z| g * act.derivative(z));
            let w_slot = &layout[2 * l];
            let b_slot = &layout[2 * l + 1];
            let input = if l == 0 { x } else { &cache.hidden[l - 1] };
            {
                let mut gw = DMatrixViewMut::from_slice(
                    &mut grad[w_slot.offset..w_slot.offset + w_slot.len()],
                    w_slot.rows,
                    w_slot.cols,
                );
                gw.gemm(1.0, &dz, &input.transpose(), 0.0);
            }
            let gb = dz.column_sum();
            grad[b_slot.offset..b_slot.offset + b_slot.len()].copy_from_slice(gb.as_slice());
            if l > 0 {
                let w = self.view(params, w_slot);
                g_h += w.transpose() * &dz;
            }
        }
        (loss, grad)
    }

    pub fn to_json(&self) -> String {
        let tensors = self
            .arch
            .layout()
            .into_iter()
            .map(|slot| {
                let m = self.view(&self.params, &slot);
                // row-major in the file
                let values = (0..slot.rows)
                    .flat_map(|r| (0..slot.cols).map(move |c| (r, c)))
                    .map(|(r, c)| m[(r, c)])
                    .collect();
                TensorRepr {
                    name: slot.name,
                    shape: [slot.rows, slot.cols],
                    values,
                }
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            architecture: self.arch,
            seed: self.seed,
            tensors,
        };
        serde_json::to_string(&file).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = parse_json("model file", text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::invalid(format!("unknown model format {:?}", file.format)));
        }
        file.architecture.validate()?;
        let layout = file.architecture.layout();
        if layout.len() != file.tensors.len() {
            return Err(Error::invalid(format!(
                "expected {} tensors, found {}",
                layout.len(),
                file.tensors.len()
            )));
        }
        let mut params = vec![0.0; file.architecture.param_count()];
        for (slot, tensor) in layout.iter().zip(&file.tensors) {
            if tensor.name != slot.name || tensor.shape != [slot.rows, slot.cols] {
                return Err(Error::invalid(format!(
                    "tensor {} {:?} does not match expected {} [{}, {}]",
                    tensor.name, tensor.shape, slot.name, slot.rows, slot.cols
                )));
            }
            if tensor.values.len() != slot.len() {
                return Err(Error::invalid(format!("tensor {} has wrong length", tensor.name)));
            }
            let mut m = DMatrixViewMut::from_slice(
                &mut params[slot.offset..slot.offset + slot.len()],
                slot.rows,
                slot.cols,
            );
            for r in 0..slot.rows {
                for c in 0..slot.cols {
                    m[(r, c)] = tensor.values[r * slot.cols + c];
                }
            }
        }
        Ok(Self {
            arch: file.architecture,
            seed: file.seed,
            params,
        })
    }
}

const MODEL_FORMAT: &str = "pacdist-residual-mlp/1";

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    architecture: Architecture,
    seed: u64,
    tensors: Vec<TensorRepr>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `softplus(z) - y z`, computed stably.
#[inline]
fn logistic_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

fn mean_logistic_loss(logits: &DVector<f64>, labels: impl Iterator<Item = f64>) -> f64 {
    let n = logits.len().max(1) as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&z, y)| logistic_loss(z, y))
        .sum::<f64>()
        / n
}

impl BooleanFunction for ResidualMLP {
    fn dim(&self) -> usize {
        self.arch.d
    }

    fn eval_bit(&self, x: &BitInput) -> bool {
        self.eval_many(std::slice::from_ref(x))[0]
    }

    fn eval_many(&self, xs: &[BitInput]) -> Vec<bool> {
        let mut out = Vec::with_capacity(xs.len());
        for chunk in xs.chunks(EVAL_CHUNK) {
            let logits = self.logits(chunk).expect("dimension checked by caller");
            out.extend(logits.into_iter().map(|z| z > 0.0));
        }
        out
    }
}

const EVAL_CHUNK: usize = 2048;

/// Optimizer settings for [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub layers: usize,
    pub width: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: 5,
            width: 128,
            activation: Activation::Tanh,
            epochs: 10,
            batch_size: 128,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub final_loss: f64,
    pub steps: usize,
    /// Minibatch loss at every step.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    /// Median minibatch loss over the first and last tenth of training.
    pub fn early_late_median_loss(&self) -> (f64, f64) {
        let n = self.loss_history.len();
        let tenth = (n / 10).max(1);
        let median = |s: &[f64]| {
            let mut v = s.to_vec();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        (
            median(&self.loss_history[..tenth]),
            median(&self.loss_history[n - tenth..]),
        )
    }
}

/// Trains a fresh network on `data` with Adam on the logistic loss.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<(ResidualMLP, TrainReport)> {
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::invalid("batch size and epochs must be positive"));
    }
    let arch = Architecture {
        d: data.dim(),
        layers: cfg.layers,
        width: cfg.width,
        activation: cfg.activation,
    };
    let mut model = ResidualMLP::init(arch, cfg.seed)?;
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(0x5eed));
    let x_all = model.input_matrix(data.inputs())?;
    let y_all: Vec<f64> = data.labels().iter().map(|&b| b as u8 as f64).collect();

    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::new();
    let mut step = 0usize;
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x_all.select_columns(batch);
            let yb: Vec<f64> = batch.iter().map(|&i| y_all[i]).collect();
            let (loss, grad) = model.loss_and_gradient_matrix(&model.params, &xb, &yb);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingFailure {
                    step,
                    reason: format!("non-finite loss {loss}"),
                    last_loss: history.last().copied().unwrap_or(f64::NAN),
                });
            }
            history.push(loss);
            step += 1;
            let bc1 = 1.0 - beta1.powi(step as i32);
            let bc2 = 1.0 - beta2.powi(step as i32);
            for (((p, g), m), v) in model.params.iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            }
        }
    }

    let predictions = model.eval_many(data.inputs());
    let correct = predictions
        .iter()
        .zip(data.labels())
        .filter(|(p, y)| p == y)
        .count();
    let final_loss = model.loss_at(&model.params, data.inputs(), data.labels())?;
    if !final_loss.is_finite() {
        return Err(Error::TrainingFailure {
            step,
            reason: "non-finite loss on the full training set".into(),
            last_loss: history.last().copied().unwrap_or(f64::NAN),
        });
    }
    let report = TrainReport {
        train_accuracy: correct as f64 / data.len() as f64,
        final_loss,
        steps: step,
        loss_history: history,
    };
    Ok((model, report))
}
