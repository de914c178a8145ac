//! Feed-forward value network trained by Monte-Carlo regression.
//!
//! The network maps the normalized state features to the resources-left
//! ratio. Hidden layers use the rectifier; the single output unit is a
//! sigmoid, so predictions lie strictly inside (0, 1). Training is plain
//! mini-batch gradient descent with a fixed learning rate; initialization and
//! the per-epoch shuffle both derive from the config seed, so two runs with
//! the same seed and data produce bit-identical weight trajectories.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::state::McSample;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("bad config: {0}")]
    Config(String),
    #[error("feature vector has length {found}, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error("model file error: {0}")]
    ModelFile(String),
}

/// Training and topology settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// 5 for the first innings, 6 for the second.
    pub input_width: usize,
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(
        input_width: usize,
        hidden_widths: Vec<usize>,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self, NetError> {
        if input_width != 5 && input_width != 6 {
            return Err(NetError::Config(format!(
                "input_width must be 5 or 6, got {input_width}"
            )));
        }
        if hidden_widths.iter().any(|&w| w == 0) {
            return Err(NetError::Config("hidden widths must be positive".into()));
        }
        if epochs == 0 || batch_size == 0 {
            return Err(NetError::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(NetError::Config("learning_rate must be positive".into()));
        }
        Ok(NetworkConfig {
            input_width,
            hidden_widths,
            epochs,
            learning_rate,
            batch_size,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl Layer {
    fn forward(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        for row in 0..self.out_dim {
            let mut z = self.biases[row];
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            for (wi, xi) in w.iter().zip(input) {
                z += wi * xi;
            }
            output.push(self.activation.apply(z));
        }
    }
}

/// The value-function approximator.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork {
    layers: Vec<Layer>,
}

impl ValueNetwork {
    /// Freshly initialized network: weights uniform in `±1/sqrt(fan_in)`
    /// drawn from the seed, biases zero.
    pub fn initialize(input_width: usize, hidden_widths: &[usize], seed: u64) -> ValueNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut in_dim = input_width;
        for &width in hidden_widths {
            layers.push(Self::init_layer(&mut rng, in_dim, width, Activation::Relu));
            in_dim = width;
        }
        layers.push(Self::init_layer(&mut rng, in_dim, 1, Activation::Sigmoid));
        ValueNetwork { layers }
    }

    fn init_layer(
        rng: &mut ChaCha8Rng,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
    ) -> Layer {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Layer {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .collect()
    }

    /// Resources-left prediction, strictly inside (0, 1).
    pub fn forward(&self, features: &[f64]) -> Result<f64, NetError> {
        if features.len() != self.input_width() {
            return Err(NetError::DimensionMismatch {
                expected: self.input_width(),
                found: features.len(),
            });
        }
        let mut current = features.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        // Clamp away exact 0/1 that extreme saturation could produce.
        Ok(current[0].clamp(1e-12, 1.0 - 1e-12))
    }

    /// Forward pass keeping every layer's activations (for backprop).
    fn forward_trace(&self, features: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(features.to_vec());
        for layer in &self.layers {
            let mut out = Vec::new();
            layer.forward(activations.last().unwrap(), &mut out);
            activations.push(out);
        }
        activations
    }

    /// Squared-error loss on one sample.
    fn sample_loss(&self, sample: &McSample) -> f64 {
        let y = self
            .forward(&sample.features)
            .expect("sample width checked by caller");
        (y - sample.target) * (y - sample.target)
    }

    /// Accumulate parameter gradients of the squared error on one sample.
    ///
    /// `grads` mirrors the layer layout: for each layer, `out_dim * in_dim`
    /// weight slots followed by `out_dim` bias slots.
    fn accumulate_gradients(&self, sample: &McSample, grads: &mut [Vec<f64>]) {
        let activations = self.forward_trace(&sample.features);
        let output = activations.last().unwrap()[0];
        // d(loss)/d(output)
        let mut delta = vec![2.0 * (output - sample.target)];
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let input = &activations[idx];
            let out_act = &activations[idx + 1];
            // Through the activation.
            let mut dz = vec![0.0; layer.out_dim];
            for row in 0..layer.out_dim {
                dz[row] = delta[row] * layer.activation.derivative_from_output(out_act[row]);
            }
            let g = &mut grads[idx];
            for row in 0..layer.out_dim {
                let base = row * layer.in_dim;
                for col in 0..layer.in_dim {
                    g[base + col] += dz[row] * input[col];
                }
                g[layer.out_dim * layer.in_dim + row] += dz[row];
            }
            if idx > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for row in 0..layer.out_dim {
                    let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                    for (col, wi) in w.iter().enumerate() {
                        prev[col] += dz[row] * wi;
                    }
                }
                delta = prev;
            }
        }
    }

    fn zero_gradients(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .map(|l| vec![0.0; l.out_dim * l.in_dim + l.out_dim])
            .collect()
    }

    fn apply_gradients(&mut self, grads: &[Vec<f64>], scale: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            let n_w = layer.out_dim * layer.in_dim;
            for (w, gw) in layer.weights.iter_mut().zip(&g[..n_w]) {
                *w -= scale * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g[n_w..]) {
                *b -= scale * gb;
            }
        }
    }

    fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim * l.in_dim + l.out_dim)
            .sum()
    }

    fn parameters_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite())
        })
    }

    fn get_parameter(&self, mut flat: usize) -> f64 {
        for layer in &self.layers {
            let n = layer.out_dim * layer.in_dim;
            if flat < n {
                return layer.weights[flat];
            }
            flat -= n;
            if flat < layer.out_dim {
                return layer.biases[flat];
            }
            flat -= layer.out_dim;
        }
        unreachable!("parameter index out of range")
    }

    fn set_parameter(&mut self, mut flat: usize, value: f64) {
        for layer in &mut self.layers {
            let n = layer.out_dim * layer.in_dim;
            if flat < n {
                layer.weights[flat] = value;
                return;
            }
            flat -= n;
            if flat < layer.out_dim {
                layer.biases[flat] = value;
                return;
            }
            flat -= layer.out_dim;
        }
        unreachable!("parameter index out of range")
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epoch_mse: Vec<f64>,
    pub final_mse: f64,
    pub config: NetworkConfig,
    pub seed: u64,
}

fn full_mse(net: &ValueNetwork, samples: &[McSample]) -> f64 {
    samples.iter().map(|s| net.sample_loss(s)).sum::<f64>() / samples.len() as f64
}

/// Train a network by mini-batch gradient descent on mean squared error.
pub fn train(
    config: &NetworkConfig,
    samples: &[McSample],
) -> Result<(ValueNetwork, TrainingReport), NetError> {
    if samples.is_empty() {
        return Err(NetError::Config("no training samples".into()));
    }
    for s in samples {
        if s.features.len() != config.input_width {
            return Err(NetError::DimensionMismatch {
                expected: config.input_width,
                found: s.features.len(),
            });
        }
        if !(0.0..=1.0).contains(&s.target) {
            return Err(NetError::Config(format!(
                "target {} outside [0,1]",
                s.target
            )));
        }
    }

    let mut net = ValueNetwork::initialize(config.input_width, &config.hidden_widths, config.seed);
    // Separate stream for the shuffle schedule, still seed-derived.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_mse = Vec::with_capacity(config.epochs);
    let mut grads = net.zero_gradients();

    for epoch in 0..config.epochs {
        // Fisher-Yates with the dedicated stream.
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(config.batch_size) {
            for g in &mut grads {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in batch {
                net.accumulate_gradients(&samples[i], &mut grads);
            }
            net.apply_gradients(&grads, lr / batch.len() as f64);
        }
        let mse = full_mse(&net, samples);
        if !mse.is_finite() || !net.parameters_finite() {
            return Err(NetError::Diverged { epoch });
        }
        epoch_mse.push(mse);
    }

    let final_mse = *epoch_mse.last().unwrap();
    let report = TrainingReport {
        epoch_mse,
        final_mse,
        config: config.clone(),
        seed: config.seed,
    };
    Ok((net, report))
}

/// Analytic and central-finite-difference gradients of the squared error on
/// one sample, flattened over all parameters.
pub fn gradient_pair(
    net: &ValueNetwork,
    sample: &McSample,
    epsilon: f64,
) -> Result<(Vec<f64>, Vec<f64>), NetError> {
    if sample.features.len() != net.input_width() {
        return Err(NetError::DimensionMismatch {
            expected: net.input_width(),
            found: sample.features.len(),
        });
    }
    let mut grads = net.zero_gradients();
    net.accumulate_gradients(sample, &mut grads);
    let analytic: Vec<f64> = grads.into_iter().flatten().collect();

    let n = net.parameter_count();
    let mut numeric = Vec::with_capacity(n);
    let mut probe = net.clone();
    for p in 0..n {
        let original = probe.get_parameter(p);
        probe.set_parameter(p, original + epsilon);
        let plus = probe.sample_loss(sample);
        probe.set_parameter(p, original - epsilon);
        let minus = probe.sample_loss(sample);
        probe.set_parameter(p, original);
        numeric.push((plus - minus) / (2.0 * epsilon));
    }
    Ok((analytic, numeric))
}

/// Maximum relative error between analytic and finite-difference gradients.
pub fn gradient_check(
    net: &ValueNetwork,
    sample: &McSample,
    epsilon: f64,
) -> Result<f64, NetError> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(NetError::Config(format!(
            "epsilon {epsilon} outside (0, 1e-3]"
        )));
    }
    let (analytic, numeric) = gradient_pair(net, sample, epsilon)?;
    let max_rel = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0f64, f64::max);
    Ok(max_rel)
}

// --- model file payload -----------------------------------------------------

/// Serialized network: weights as IEEE-754 bit patterns in hex so the
/// round trip is exact to the last bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPayload {
    pub config: NetworkConfig,
    pub layers: Vec<LayerPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPayload {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub weights_hex: Vec<String>,
    pub biases_hex: Vec<String>,
}

fn f64_to_hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn f64_from_hex(s: &str) -> Result<f64, NetError> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| NetError::ModelFile(format!("bad hex float `{s}`")))
}

impl ModelPayload {
    pub fn from_network(net: &ValueNetwork, config: &NetworkConfig) -> ModelPayload {
        ModelPayload {
            config: config.clone(),
            layers: net
                .layers
                .iter()
                .map(|l| LayerPayload {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    activation: l.activation,
                    weights_hex: l.weights.iter().copied().map(f64_to_hex).collect(),
                    biases_hex: l.biases.iter().copied().map(f64_to_hex).collect(),
                })
                .collect(),
        }
    }

    pub fn into_network(self) -> Result<(ValueNetwork, NetworkConfig), NetError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut expected_in = self.config.input_width;
        for lp in &self.layers {
            if lp.in_dim != expected_in {
                return Err(NetError::ModelFile(format!(
                    "layer expects input {} but previous layer produces {expected_in}",
                    lp.in_dim
                )));
            }
            if lp.weights_hex.len() != lp.in_dim * lp.out_dim || lp.biases_hex.len() != lp.out_dim {
                return Err(NetError::ModelFile(
                    "layer dimensions disagree with arrays".into(),
                ));
            }
            let weights = lp
                .weights_hex
                .iter()
                .map(|s| f64_from_hex(s))
                .collect::<Result<Vec<_>, _>>()?;
            let biases = lp
                .biases_hex
                .iter()
                .map(|s| f64_from_hex(s))
                .collect::<Result<Vec<_>, _>>()?;
            layers.push(Layer {
                in_dim: lp.in_dim,
                out_dim: lp.out_dim,
                weights,
                biases,
                activation: lp.activation,
            });
            expected_in = lp.out_dim;
        }
        match layers.last() {
            Some(last) if last.out_dim == 1 => {}
            _ => {
                return Err(NetError::ModelFile(
                    "final layer must have one output".into(),
                ))
            }
        }
        Ok((ValueNetwork { layers }, self.config))
    }
}
