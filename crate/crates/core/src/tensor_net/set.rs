use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{inverse_softplus, Activation, NetSpec, Network};
use super::NetError;

/// The eight coefficient networks of the neural jump-diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    /// NN1, drift of the asset level.
    PriceDrift,
    /// NN2, diffusion of the asset level.
    PriceDiffusion,
    /// NN3, asset jump-size scale.
    PriceJump,
    /// NN4, drift of the variance.
    VarianceDrift,
    /// NN5, diffusion of the variance.
    VarianceDiffusion,
    /// NN6, variance jump-size scale.
    VarianceJump,
    /// NN7, jump intensity.
    Intensity,
    /// NN8, correlation between the two Brownian drivers.
    Correlation,
}

impl Head {
    pub const ALL: [Head; 8] = [
        Head::PriceDrift,
        Head::PriceDiffusion,
        Head::PriceJump,
        Head::VarianceDrift,
        Head::VarianceDiffusion,
        Head::VarianceJump,
        Head::Intensity,
        Head::Correlation,
    ];

    /// Heads that form the jump channel; clamped off in the jump-free model.
    pub const JUMP: [Head; 3] = [Head::PriceJump, Head::VarianceJump, Head::Intensity];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::PriceDrift => "nn1_price_drift",
            Head::PriceDiffusion => "nn2_price_diffusion",
            Head::PriceJump => "nn3_price_jump",
            Head::VarianceDrift => "nn4_variance_drift",
            Head::VarianceDiffusion => "nn5_variance_diffusion",
            Head::VarianceJump => "nn6_variance_jump",
            Head::Intensity => "nn7_intensity",
            Head::Correlation => "nn8_correlation",
        }
    }
}

/// Architecture shared by all eight heads plus per-head output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    /// Output head of NN3/NN6. SoftPlus keeps jumps one-signed.
    pub jump_size_activation: Activation,
    /// Initial output of each head, in head order.
    pub initial_output: [f64; 8],
    /// Multiplier on the output-layer weights at initialization, so fresh
    /// heads sit close to `initial_output` whatever the features.
    pub output_gain: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            hidden_activation: Activation::Tanh,
            jump_size_activation: Activation::SoftPlus,
            // Price heads are in units of spot, so 0.2 means a 20% normal vol.
            initial_output: [0.0, 0.2, 0.05, 0.0, 0.1, 0.05, 0.5, 0.0],
            output_gain: 0.1,
        }
    }
}

impl ArchConfig {
    pub fn output_activation(&self, head: Head) -> Activation {
        match head {
            Head::PriceDrift | Head::VarianceDrift => Activation::Identity,
            Head::PriceDiffusion | Head::VarianceDiffusion | Head::Intensity => Activation::SoftPlus,
            Head::PriceJump | Head::VarianceJump => self.jump_size_activation,
            Head::Correlation => Activation::Tanh,
        }
    }

    pub fn spec(&self, head: Head, input_dim: usize) -> Result<NetSpec, NetError> {
        let output_activation = self.output_activation(head);
        let target = self.initial_output[head.index()];
        let output_bias = match output_activation {
            Activation::SoftPlus => {
                if !(target > 0.0) {
                    return Err(NetError::BadSpec(format!(
                        "{}: initial output {target} must be positive for a SoftPlus head",
                        head.name()
                    )));
                }
                inverse_softplus(target)
            }
            Activation::Tanh => {
                if !(target.abs() < 1.0) {
                    return Err(NetError::BadSpec(format!(
                        "{}: initial output {target} outside (-1, 1)",
                        head.name()
                    )));
                }
                target.atanh()
            }
            _ => target,
        };
        let mut layer_sizes = Vec::with_capacity(self.hidden.len() + 2);
        layer_sizes.push(input_dim);
        layer_sizes.extend_from_slice(&self.hidden);
        layer_sizes.push(1);
        let spec = NetSpec {
            layer_sizes,
            hidden_activation: self.hidden_activation,
            output_activation,
            output_bias,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// NN1..NN8 with independent weights, plus the clamp flags used to switch
/// heads off. A clamped head evaluates to exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSet {
    nets: Vec<Network>,
    clamped: [bool; 8],
}

impl NetworkSet {
    pub fn init(arch: &ArchConfig, input_dim: usize, seed: u64) -> Result<Self, NetError> {
        let nets = Head::ALL
            .iter()
            .map(|&h| {
                let spec = arch.spec(h, input_dim)?;
                // Distinct stream per head so no two heads share weights.
                let mut net = Network::init(
                    spec,
                    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add(h.index() as u64 + 1),
                )?;
                let fan_in = net.spec().layer_sizes[net.spec().layer_sizes.len() - 2];
                let n = net.params().len();
                for w in &mut net.params_mut()[n - 1 - fan_in..n - 1] {
                    *w *= arch.output_gain;
                }
                Ok::<_, NetError>(net)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            nets,
            clamped: [false; 8],
        })
    }

    /// Heads that ignore their features and output `outputs` (in head
    /// order) exactly as given by the output activations of `arch`.
    pub fn constant(arch: &ArchConfig, input_dim: usize, outputs: [f64; 8]) -> Result<Self, NetError> {
        let arch = ArchConfig {
            initial_output: outputs,
            ..arch.clone()
        };
        let nets = Head::ALL
            .iter()
            .map(|&h| {
                let spec = arch.spec(h, input_dim)?;
                let bias = spec.output_bias;
                Network::constant(spec, bias)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_networks(nets)
    }

    pub fn from_networks(nets: Vec<Network>) -> Result<Self, NetError> {
        if nets.len() != 8 {
            return Err(NetError::ShapeMismatch {
                expected: 8,
                got: nets.len(),
            });
        }
        let dim = nets[0].spec().input_dim();
        if nets.iter().any(|n| n.spec().input_dim() != dim) {
            return Err(NetError::BadSpec("all heads must share the same input features".into()));
        }
        Ok(Self {
            nets,
            clamped: [false; 8],
        })
    }

    pub fn net(&self, head: Head) -> &Network {
        &self.nets[head.index()]
    }

    pub fn net_mut(&mut self, head: Head) -> &mut Network {
        &mut self.nets[head.index()]
    }

    pub fn input_dim(&self) -> usize {
        self.nets[0].spec().input_dim()
    }

    pub fn is_clamped(&self, head: Head) -> bool {
        self.clamped[head.index()]
    }

    pub fn set_clamped(&mut self, head: Head, clamped: bool) {
        self.clamped[head.index()] = clamped;
    }

    pub fn clamps(&self) -> [bool; 8] {
        self.clamped
    }

    /// Start of each head's block in the flattened parameter vector, plus
    /// the total length as a ninth entry.
    pub fn offsets(&self) -> [usize; 9] {
        let mut out = [0; 9];
        for (i, n) in self.nets.iter().enumerate() {
            out[i + 1] = out[i] + n.params().len();
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.offsets()[8]
    }

    /// Flattened parameter vector, heads in NN1..NN8 order.
    pub fn params_flat(&self) -> Vec<f64> {
        self.nets.iter().flat_map(|n| n.params().iter().copied()).collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<(), NetError> {
        if flat.len() != self.param_count() {
            return Err(NetError::ShapeMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut start = 0;
        for n in &mut self.nets {
            let len = n.params().len();
            n.params_mut().copy_from_slice(&flat[start..start + len]);
            start += len;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, seed: u64) -> Result<(), NetError> {
        let ckpt = NetCheckpoint::new(self.clone(), seed);
        fs::write(path, serde_json::to_string_pretty(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, u64), NetError> {
        let ckpt: NetCheckpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        ckpt.into_parts()
    }
}

pub const CHECKPOINT_FORMAT: &str = "jumpcal-networks";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned on-disk form of a [`NetworkSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub heads: Vec<HeadRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRecord {
    pub head: Head,
    pub clamped: bool,
    pub spec: NetSpec,
    pub params: Vec<f64>,
}

impl NetCheckpoint {
    pub fn new(set: NetworkSet, seed: u64) -> Self {
        let heads = Head::ALL
            .iter()
            .map(|&h| HeadRecord {
                head: h,
                clamped: set.is_clamped(h),
                spec: set.net(h).spec().clone(),
                params: set.net(h).params().to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            seed,
            heads,
        }
    }

    pub fn into_parts(self) -> Result<(NetworkSet, u64), NetError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(NetError::BadSpec(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.heads.len() != 8 || self.heads.iter().zip(Head::ALL).any(|(r, h)| r.head != h) {
            return Err(NetError::BadSpec("checkpoint must list NN1..NN8 in order".into()));
        }
        let clamps: Vec<bool> = self.heads.iter().map(|r| r.clamped).collect();
        let nets = self
            .heads
            .into_iter()
            .map(|r| Network::from_params(r.spec, r.params))
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = NetworkSet::from_networks(nets)?;
        for (h, c) in Head::ALL.iter().zip(clamps) {
            set.set_clamped(*h, c);
        }
        Ok((set, self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_net::Tape;

    #[test]
    fn heads_get_expected_output_ranges() {
        let set = NetworkSet::init(&ArchConfig::default(), 4, 1).unwrap();
        let mut t = Tape::new();
        let x = [1.0, 1.0, 0.5, 0.025];
        for h in Head::ALL {
            let y = set.net(h).forward(&x, &mut t).unwrap();
            match h {
                Head::PriceDiffusion
                | Head::VarianceDiffusion
                | Head::Intensity
                | Head::PriceJump
                | Head::VarianceJump => {
                    assert!(y > 0.0)
                }
                Head::Correlation => assert!(y.abs() < 1.0),
                _ => {}
            }
        }
    }

    #[test]
    fn heads_are_independent() {
        let set = NetworkSet::init(&ArchConfig::default(), 4, 1).unwrap();
        let a = set.net(Head::PriceDrift).params();
        let b = set.net(Head::VarianceDrift).params();
        assert_ne!(a, b);
    }

    #[test]
    fn flatten_round_trip_and_offsets() {
        let mut set = NetworkSet::init(&ArchConfig::default(), 4, 3).unwrap();
        let flat = set.params_flat();
        let per_head = 4 * 32 + 32 + 32 * 32 + 32 + 32 + 1;
        assert_eq!(flat.len(), 8 * per_head);
        assert_eq!(set.offsets()[3], 3 * per_head);
        let shifted: Vec<f64> = flat.iter().map(|v| v + 1.0).collect();
        set.set_params_flat(&shifted).unwrap();
        assert_eq!(set.params_flat(), shifted);
        assert!(set.set_params_flat(&flat[1..]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nets.json");
        let mut set = NetworkSet::init(
            &ArchConfig {
                hidden: vec![4],
                ..ArchConfig::default()
            },
            4,
            9,
        )
        .unwrap();
        set.set_clamped(Head::Intensity, true);
        set.save(&path, 9).unwrap();
        let (back, seed) = NetworkSet::load(&path).unwrap();
        assert_eq!(seed, 9);
        assert_eq!(back, set);
        let bits: Vec<u64> = back.params_flat().iter().map(|v| v.to_bits()).collect();
        let orig: Vec<u64> = set.params_flat().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, orig);
    }

    #[test]
    fn initial_outputs_follow_config() {
        let arch = ArchConfig::default();
        for h in Head::ALL {
            let spec = arch.spec(h, 4).unwrap();
            let net = Network::constant(spec.clone(), spec.output_bias).unwrap();
            let y = net.forward(&[0.0; 4], &mut Tape::new()).unwrap();
            assert!((y - arch.initial_output[h.index()]).abs() < 1e-12, "{h:?}");
        }
    }
}
