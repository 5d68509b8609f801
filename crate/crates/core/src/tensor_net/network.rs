use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    SoftPlus,
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::SoftPlus => softplus(x),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y = f(x)`,
    /// so the tape only has to keep post-activation values.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            // sigmoid(x) = 1 - exp(-softplus(x))
            Activation::SoftPlus => -(-y).exp_m1(),
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`; handy for choosing an output bias.
pub fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    /// Input width first, output width (always 1) last.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Initial value of the output bias.
    #[serde(default)]
    pub output_bias: f64,
}

impl NetSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.layer_sizes.len() < 2 {
            return Err(NetError::BadSpec("need at least an input and an output layer".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(NetError::BadSpec("layer sizes must be positive".into()));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(NetError::BadSpec("networks are scalar-valued".into()));
        }
        if !matches!(
            self.output_activation,
            Activation::Identity | Activation::SoftPlus | Activation::Tanh
        ) {
            return Err(NetError::BadSpec(format!(
                "output activation {:?} not one of Identity, SoftPlus, Tanh",
                self.output_activation
            )));
        }
        if !self.output_bias.is_finite() {
            return Err(NetError::BadSpec("output bias must be finite".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn activation_count(&self) -> usize {
        self.layer_sizes.iter().sum()
    }
}

/// Post-activation values of one forward evaluation, input layer first.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    values: Vec<f64>,
    recorded: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        !self.recorded
    }

    pub fn clear(&mut self) {
        self.recorded = false;
    }

    /// Recorded network output.
    pub fn output(&self) -> Option<f64> {
        self.recorded.then(|| *self.values.last().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetGradient {
    pub params: Vec<f64>,
    pub inputs: Vec<f64>,
}

/// Dense feedforward network. Parameters are stored layer by layer as a
/// row-major weight matrix (`out x in`) followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    spec: NetSpec,
    params: Vec<f64>,
}

impl Network {
    /// Weights drawn from N(0, 1/fan_in); biases zero except the output
    /// bias, which starts at `spec.output_bias`.
    pub fn init(spec: NetSpec, seed: u64) -> Result<Self, NetError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(spec.param_count());
        let layers = spec.layer_sizes.len() - 1;
        for (l, w) in spec.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let z: f64 = StandardNormal.sample(&mut rng);
                params.push(z * scale);
            }
            let bias = if l + 1 == layers { spec.output_bias } else { 0.0 };
            params.extend(std::iter::repeat_n(bias, fan_out));
        }
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self, NetError> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(NetError::ShapeMismatch {
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { spec, params })
    }

    /// A network whose output is `activation(bias)` regardless of input.
    pub fn constant(spec: NetSpec, bias: f64) -> Result<Self, NetError> {
        spec.validate()?;
        let mut params = vec![0.0; spec.param_count()];
        *params.last_mut().unwrap() = bias;
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, features: &[f64], tape: &mut Tape) -> Result<f64, NetError> {
        let sizes = &self.spec.layer_sizes;
        if features.len() != sizes[0] {
            return Err(NetError::ShapeMismatch {
                expected: sizes[0],
                got: features.len(),
            });
        }
        tape.recorded = false;
        tape.values.clear();
        tape.values.reserve(self.spec.activation_count());
        tape.values.extend_from_slice(features);

        let layers = sizes.len() - 1;
        let mut p = 0;
        let mut in_start = 0;
        let mut finite = features.iter().all(|v| v.is_finite());
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let act = if l + 1 == layers {
                self.spec.output_activation
            } else {
                self.spec.hidden_activation
            };
            let w = &self.params[p..p + n_in * n_out];
            let b = &self.params[p + n_in * n_out..p + n_in * n_out + n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, xi) in row.iter().zip(&tape.values[in_start..in_start + n_in]) {
                    z += wi * xi;
                }
                finite &= z.is_finite();
                tape.values.push(act.apply(z));
            }
            p += n_in * n_out + n_out;
            in_start += n_in;
        }
        let out = *tape.values.last().unwrap();
        if !finite || !out.is_finite() {
            return Err(NetError::NonFinite);
        }
        tape.recorded = true;
        Ok(out)
    }

    pub fn backward(&self, tape: &Tape, seed: f64) -> Result<NetGradient, NetError> {
        let mut params = vec![0.0; self.params.len()];
        let mut inputs = vec![0.0; self.spec.input_dim()];
        let mut scratch = Vec::new();
        self.backward_into(tape, seed, &mut params, &mut inputs, &mut scratch)?;
        Ok(NetGradient { params, inputs })
    }

    /// Accumulates `seed * d(output)/d(params)` into `param_grad` and
    /// `seed * d(output)/d(features)` into `input_grad`.
    pub fn backward_into(
        &self,
        tape: &Tape,
        seed: f64,
        param_grad: &mut [f64],
        input_grad: &mut [f64],
        scratch: &mut Vec<f64>,
    ) -> Result<(), NetError> {
        if !tape.recorded {
            return Err(NetError::EmptyTape);
        }
        let sizes = &self.spec.layer_sizes;
        if tape.values.len() != self.spec.activation_count() || param_grad.len() != self.params.len() {
            return Err(NetError::ShapeMismatch {
                expected: self.params.len(),
                got: param_grad.len(),
            });
        }
        let layers = sizes.len() - 1;
        let widest = *sizes.iter().max().unwrap();
        scratch.clear();
        scratch.resize(2 * widest, 0.0);
        let (delta, next) = scratch.split_at_mut(widest);

        // Offsets of each layer's values in the tape and its params.
        let mut value_end = tape.values.len();
        let mut param_end = self.params.len();

        let y = tape.values[value_end - 1];
        delta[0] = seed * self.spec.output_activation.derivative_from_output(y);

        for l in (0..layers).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let in_start = value_end - n_out - n_in;
            let inputs = &tape.values[in_start..in_start + n_in];
            let p = param_end - n_in * n_out - n_out;
            let w = &self.params[p..p + n_in * n_out];
            {
                let (gw, gb) = param_grad[p..param_end].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, x) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(inputs) {
                        *g += d * x;
                    }
                }
            }
            for v in next[..n_in].iter_mut() {
                *v = 0.0;
            }
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (acc, wi) in next[..n_in].iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *acc += d * wi;
                }
            }
            if l == 0 {
                for (g, v) in input_grad.iter_mut().zip(&next[..n_in]) {
                    *g += v;
                }
            } else {
                let act = self.spec.hidden_activation;
                for i in 0..n_in {
                    delta[i] = next[i] * act.derivative_from_output(inputs[i]);
                }
            }
            value_end -= n_out;
            param_end = p;
        }
        Ok(())
    }
}
