//! Fully connected network with a sigmoid multi-label head, forward pass,
//! BCE loss and hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always the logistic sigmoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Gelu,
    Sin,
    Tanh,
}

const LEAKY_SLOPE: f64 = 0.01;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Relu,
        Activation::LeakyRelu,
        Activation::Gelu,
        Activation::Sin,
        Activation::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Gelu => "gelu",
            Activation::Sin => "sin",
            Activation::Tanh => "tanh",
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            // Exact (erf) form.
            Activation::Gelu => 0.5 * z * (1.0 + libm::erf(z * std::f64::consts::FRAC_1_SQRT_2)),
            Activation::Sin => z.sin(),
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Gelu => {
                0.5 * (1.0 + libm::erf(z * std::f64::consts::FRAC_1_SQRT_2))
                    + z * FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
            }
            Activation::Sin => z.cos(),
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown activation {s:?}")))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || (self.hidden_layers > 0 && self.hidden_width == 0) {
            return Err(Error::InvalidConfig("network dimensions must be positive".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer in order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// One affine layer; `weights` is `fan_in x fan_out` so a batch maps as
/// `X W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<Layer>,
}

/// Sigmoid outputs for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub q: Vec<f64>,
}

impl Prediction {
    /// `q < 0.5 -> 0`, `q >= 0.5 -> 1`.
    pub fn threshold(&self) -> Vec<u8> {
        self.q.iter().map(|&q| u8::from(q >= 0.5)).collect()
    }
}

/// Per-sample gradients summed in a fixed order, so results are reproducible.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    /// Same layout as [`Mlp::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

impl Mlp {
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let layers = config.layer_shapes().into_iter().map(|(i, o)| Layer::zeros(i, o)).collect();
        Ok(Mlp { config, layers })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(config: MlpConfig, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        for layer in &mut net.layers {
            let (fan_in, fan_out) = layer.weights.dim();
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a);
            layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
        }
        Ok(net)
    }

    pub fn from_layers(config: MlpConfig, layers: Vec<Layer>) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len()
            || shapes
                .iter()
                .zip(&layers)
                .any(|(&(i, o), l)| l.weights.dim() != (i, o) || l.bias.len() != o)
        {
            return Err(Error::ConfigMismatch("layer shapes do not match network config".into()));
        }
        if layers.iter().any(|l| l.weights.iter().chain(l.bias.iter()).any(|x| !x.is_finite())) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(Mlp { config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// All parameters, layer by layer: weights row-major then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn from_flat(config: MlpConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.param_count() {
            return Err(Error::DimensionMismatch {
                context: "flat parameter list",
                expected: config.param_count(),
                actual: flat.len(),
            });
        }
        let mut rest = flat;
        let mut layers = Vec::new();
        for (i, o) in config.layer_shapes() {
            let (w, tail) = rest.split_at(i * o);
            let (b, tail) = tail.split_at(o);
            rest = tail;
            layers.push(Layer {
                weights: Array2::from_shape_vec((i, o), w.to_vec()).expect("shape checked"),
                bias: Array1::from(b.to_vec()),
            });
        }
        Self::from_layers(config, layers)
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.config.input_dim,
                actual: width,
            });
        }
        Ok(())
    }

    /// Pre-sigmoid outputs for a batch (one row per sample).
    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let act = self.config.activation;
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        let mut a = x.to_owned();
        for l in hidden {
            a = a.dot(&l.weights) + &l.bias;
            a.mapv_inplace(|z| act.apply(z));
        }
        Ok(a.dot(&last.weights) + &last.bias)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.logits(x)?.mapv(sigmoid))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(Prediction {
            q: self.forward_batch(view)?.into_raw_vec_and_offset().0,
        })
    }

    /// Mean-over-samples BCE and its exact gradient for a batch.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        self.check_input(x.ncols())?;
        let batch = x.nrows();
        if batch == 0 {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        if targets.dim() != (batch, self.config.output_dim) {
            return Err(Error::DimensionMismatch {
                context: "batch targets",
                expected: batch * self.config.output_dim,
                actual: targets.len(),
            });
        }
        let act = self.config.activation;
        let depth = self.layers.len();

        // inputs[k] feeds layer k; pre[k] is its affine output.
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(depth);
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(depth);
        let mut a = x.to_owned();
        for (k, l) in self.layers.iter().enumerate() {
            let z = a.dot(&l.weights) + &l.bias;
            inputs.push(a);
            a = if k + 1 < depth { z.mapv(|v| act.apply(v)) } else { Array2::zeros((0, 0)) };
            pre.push(z);
        }

        let logits = pre.last().expect("output layer");
        let loss = bce_from_logits(logits.view(), targets) / batch as f64;
        let mut delta = (logits.mapv(sigmoid) - targets) / batch as f64;

        let mut grads: Vec<Layer> = Vec::with_capacity(depth);
        for k in (0..depth).rev() {
            let weights = inputs[k].t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&self.layers[k].weights.t());
                back.zip_mut_with(&pre[k - 1], |d, &z| *d *= act.derivative(z));
                delta = back;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }

    /// `w <- w - lr * g`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.scaled_add(-lr, &g.weights);
            l.bias.scaled_add(-lr, &g.bias);
        }
    }
}

const LOG_CLAMP: f64 = 1e-12;

/// `-Σ [p log q + (1 - p) log(1 - q)]` for one sample, with `q` clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(q: &[f64], p: &[f64]) -> f64 {
    assert_eq!(q.len(), p.len(), "prediction and label lengths differ");
    q.iter()
        .zip(p)
        .map(|(&q, &p)| {
            let q = q.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            -(p * q.ln() + (1.0 - p) * (1.0 - q).ln())
        })
        .sum()
}

/// Mean per-sample BCE over a batch of predictions.
pub fn batch_bce(q: ArrayView2<f64>, p: ArrayView2<f64>) -> f64 {
    let total: f64 = q
        .outer_iter()
        .zip(p.outer_iter())
        .map(|(q, p)| bce_loss(q.as_slice().expect("contiguous"), &p.to_vec()))
        .sum();
    total / q.nrows() as f64
}

/// Summed BCE computed from logits without forming `q`:
/// `max(z, 0) - z p + ln(1 + e^{-|z|})`.
pub fn bce_from_logits(z: ArrayView2<f64>, p: ArrayView2<f64>) -> f64 {
    z.iter()
        .zip(p.iter())
        .map(|(&z, &p)| z.max(0.0) - z * p + (-z.abs()).exp().ln_1p())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(input: usize, hidden: usize, width: usize, out: usize, act: Activation) -> MlpConfig {
        MlpConfig {
            input_dim: input,
            hidden_layers: hidden,
            hidden_width: width,
            output_dim: out,
            activation: act,
        }
    }

    #[test]
    fn zero_network_predicts_one_half() {
        let net = Mlp::zeros(cfg(6, 2, 8, 5, Activation::Relu)).unwrap();
        let p = net.forward(&[0.3; 6]).unwrap();
        assert_eq!(p.q, vec![0.5; 5]);
        assert_eq!(p.threshold(), vec![1; 5]);
    }

    #[test]
    fn hand_computed_single_unit() {
        // x=2 -> h = tanh(0.5*2 + 0.1) -> q = sigmoid(-1.5 h + 0.2)
        let mut net = Mlp::zeros(cfg(1, 1, 1, 1, Activation::Tanh)).unwrap();
        net.layers_mut()[0].weights[[0, 0]] = 0.5;
        net.layers_mut()[0].bias[0] = 0.1;
        net.layers_mut()[1].weights[[0, 0]] = -1.5;
        net.layers_mut()[1].bias[0] = 0.2;
        let h = (1.1f64).tanh();
        let q = sigmoid(-1.5 * h + 0.2);
        assert!((net.forward(&[2.0]).unwrap().q[0] - q).abs() < 1e-15);

        // Chain rule for target p = 1.
        let x = array![[2.0]];
        let t = array![[1.0]];
        let (loss, g) = net.loss_and_gradients(x.view(), t.view()).unwrap();
        assert!((loss + q.ln()).abs() < 1e-12);
        let d_out = q - 1.0;
        assert!((g.layers[1].bias[0] - d_out).abs() < 1e-15);
        assert!((g.layers[1].weights[[0, 0]] - d_out * h).abs() < 1e-15);
        let d_hidden = d_out * -1.5 * (1.0 - h * h);
        assert!((g.layers[0].bias[0] - d_hidden).abs() < 1e-15);
        assert!((g.layers[0].weights[[0, 0]] - d_hidden * 2.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_labels_give_zero_output_bias_gradient() {
        let net = Mlp::zeros(cfg(3, 1, 4, 2, Activation::Relu)).unwrap();
        let x = array![[0.1, 0.2, 0.3]];
        let t = array![[0.5, 0.5]];
        let (_, g) = net.loss_and_gradients(x.view(), t.view()).unwrap();
        assert!(g.layers[1].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(&[0.5; 7], &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]) - 7.0 * 2f64.ln()).abs() < 1e-12);
        assert!(bce_loss(&[1.0 - 1e-13], &[1.0]) < 1e-11);
        // Scalar reference: -(ln 0.9 + ln(1-0.2) + ln 0.35)
        let want = -(0.9f64.ln() + 0.8f64.ln() + 0.35f64.ln());
        assert!((bce_loss(&[0.9, 0.2, 0.35], &[1.0, 0.0, 1.0]) - want).abs() < 1e-14);
        let z = array![[0.3, -2.0, 4.0]];
        let p = array![[1.0, 0.0, 0.0]];
        let q = z.mapv(sigmoid);
        assert!((bce_from_logits(z.view(), p.view()) - batch_bce(q.view(), p.view())).abs() < 1e-12);
    }

    #[test]
    fn forward_is_pure_and_checks_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::init(cfg(4, 2, 6, 3, Activation::Gelu), &mut rng).unwrap();
        let x = [0.1, -0.4, 0.9, 0.0];
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
        assert!(matches!(net.forward(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        let q = net.forward(&x).unwrap().q;
        assert!(q.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn init_respects_glorot_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::init(cfg(240, 4, 128, 19, Activation::Relu), &mut rng).unwrap();
        for l in net.layers() {
            let (i, o) = l.weights.dim();
            let a = (6.0 / (i + o) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= a));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
        assert_eq!(net.flat_params().len(), 240 * 128 + 3 * 128 * 128 + 128 * 19 + 4 * 128 + 19);
        let back = Mlp::from_flat(net.config().clone(), &net.flat_params()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn activation_names_round_trip() {
        for a in Activation::ALL {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("swish".parse::<Activation>().is_err());
    }

    #[test]
    fn gelu_matches_reference_values() {
        // 0.5 x (1 + erf(x / sqrt 2)) evaluated independently.
        assert!((Activation::Gelu.apply(1.0) - 0.8413447460685429).abs() < 1e-15);
        assert!((Activation::Gelu.apply(-0.5) + 0.15426876936299344).abs() < 1e-15);
    }
}
