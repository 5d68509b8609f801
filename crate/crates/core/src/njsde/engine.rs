use rayon::prelude::*;

use super::{
    ContractSpec, EngineError, FeatureConfig, ModelKind, NoiseBank, PathState, StepNoise, Target, TrainConfig,
};
use crate::jump_relax::{jump_count, JumpCount, RelaxScratch};
use crate::tensor_net::{Head, NetworkSet, Tape};

/// Everything a step needs besides the state, the nets and the noise.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub contract: &'a ContractSpec,
    pub dt: f64,
    pub tau: f64,
    pub hard_mode: bool,
    pub features: FeatureConfig,
    pub model: ModelKind,
    /// Evolve V even when the price cannot depend on it.
    pub track_variance: bool,
}

impl<'a> StepContext<'a> {
    pub fn new(contract: &'a ContractSpec, cfg: &TrainConfig, tau: f64, track_variance: bool) -> Self {
        Self {
            contract,
            dt: contract.maturity / cfg.steps as f64,
            tau,
            hard_mode: cfg.relax.hard_mode,
            features: cfg.features,
            model: cfg.model,
            track_variance: track_variance || cfg.features.variance,
        }
    }

    fn jumps(&self) -> bool {
        self.model == ModelKind::Njsde
    }

    fn needs(&self, h: Head) -> bool {
        match h {
            Head::PriceDrift | Head::PriceDiffusion => true,
            Head::PriceJump | Head::Intensity => self.jumps(),
            Head::VarianceDrift | Head::VarianceDiffusion | Head::Correlation => self.track_variance,
            Head::VarianceJump => self.track_variance && self.jumps(),
        }
    }

    /// Price-channel heads are expressed in units of spot.
    fn scale(&self, h: Head) -> f64 {
        match h {
            Head::PriceDrift | Head::PriceDiffusion | Head::PriceJump => self.contract.spot,
            _ => 1.0,
        }
    }
}

/// Record of one step, enough to run the step backwards.
#[derive(Debug, Clone, Default)]
pub struct StepTape {
    features: Vec<f64>,
    tapes: [Tape; 8],
    active: [bool; 8],
    coef: [f64; 8],
    jump: Option<JumpCount>,
    eps_s: f64,
    eps_w: f64,
    u_s: f64,
    u_v: f64,
    v_positive: bool,
    relax: RelaxScratch,
}

impl StepTape {
    /// Coefficient values of the last recorded step, zero for heads that
    /// were not evaluated.
    pub fn coefficients(&self) -> [f64; 8] {
        self.coef
    }

    pub fn jump_count(&self) -> f64 {
        self.jump.map_or(0.0, |j| j.value)
    }

    /// Maps adjoints of the step output onto the step input, accumulating
    /// parameter gradients into `grad` (laid out as `nets.params_flat()`).
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        nets: &NetworkSet,
        ctx: &StepContext,
        offsets: &[usize; 9],
        adj_s: f64,
        adj_v: f64,
        grad: &mut [f64],
        dx: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) -> Result<(f64, f64), EngineError> {
        let a = &self.coef;
        let sq = ctx.dt.sqrt();
        let f = self.jump_count();
        let mut g = [0.0; 8];
        g[0] = adj_s * ctx.dt;
        g[1] = adj_s * sq * self.eps_s;
        let mut adj_f = 0.0;
        if ctx.jumps() {
            g[2] = adj_s * self.u_s * f;
            adj_f += adj_s * a[2] * self.u_s;
        }
        if ctx.track_variance {
            let rho = a[7];
            let root = (1.0 - rho * rho).sqrt();
            let eps_v = rho * self.eps_s + root * self.eps_w;
            g[3] = adj_v * ctx.dt;
            g[4] = adj_v * sq * eps_v;
            g[7] = adj_v * a[4] * sq * (self.eps_s - rho / root.max(1e-12) * self.eps_w);
            if ctx.jumps() {
                g[5] = adj_v * self.u_v * f;
                adj_f += adj_v * a[5] * self.u_v;
            }
        }
        if let Some(j) = self.jump {
            g[6] = adj_f * j.d_intensity;
        }

        dx.clear();
        dx.resize(self.features.len(), 0.0);
        for h in Head::ALL {
            let i = h.index();
            if !self.active[i] || g[i] == 0.0 {
                continue;
            }
            nets.net(h).backward_into(
                &self.tapes[i],
                g[i] * ctx.scale(h),
                &mut grad[offsets[i]..offsets[i + 1]],
                dx,
                scratch,
            )?;
        }
        let prev_s = adj_s + dx[0] / ctx.contract.spot;
        let prev_v = if ctx.features.variance && self.v_positive {
            adj_v + dx[4]
        } else {
            adj_v
        };
        Ok((prev_s, prev_v))
    }
}

/// One Euler step. Heads that are clamped, or that cannot influence the
/// tracked state, contribute exactly zero and are not evaluated.
pub fn step(
    state: PathState,
    nets: &NetworkSet,
    noise: &StepNoise,
    ctx: &StepContext,
    tape: &mut StepTape,
) -> Result<PathState, EngineError> {
    if !(ctx.dt > 0.0) {
        return Err(EngineError::NegativeDt(ctx.dt));
    }
    let c = ctx.contract;
    ctx.features
        .fill(state.s, state.v, state.step as f64 * ctx.dt, c, &mut tape.features);
    for h in Head::ALL {
        let i = h.index();
        tape.active[i] = ctx.needs(h) && !nets.is_clamped(h);
        tape.coef[i] = if tape.active[i] {
            ctx.scale(h) * nets.net(h).forward(&tape.features, &mut tape.tapes[i])?
        } else {
            0.0
        };
    }
    tape.eps_s = noise.eps_s;
    tape.eps_w = noise.eps_w;
    tape.u_s = noise.u_s;
    tape.u_v = noise.u_v;
    tape.v_positive = state.v > 0.0;

    let a = &tape.coef;
    let sq = ctx.dt.sqrt();
    tape.jump = if ctx.jumps() {
        Some(jump_count(
            a[6],
            ctx.dt,
            noise.gumbel,
            ctx.tau,
            ctx.hard_mode,
            &mut tape.relax,
        )?)
    } else {
        None
    };
    let f = tape.jump.map_or(0.0, |j| j.value);

    let mut s = state.s + a[0] * ctx.dt + a[1] * sq * noise.eps_s;
    if ctx.jumps() {
        s += a[2] * noise.u_s * f;
    }
    let mut v = state.v;
    if ctx.track_variance {
        let rho = a[7];
        let eps_v = rho * noise.eps_s + (1.0 - rho * rho).sqrt() * noise.eps_w;
        v += a[3] * ctx.dt + a[4] * sq * eps_v;
        if ctx.jumps() {
            v += a[5] * noise.u_v * f;
        }
    }
    if !s.is_finite() || !v.is_finite() {
        return Err(EngineError::NonFinite { step: state.step });
    }
    Ok(PathState {
        s,
        v,
        step: state.step + 1,
    })
}

/// Monte-Carlo price with the discounted payoff of every path.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceResult {
    pub price: f64,
    pub std_error: f64,
    pub payoffs: Vec<f64>,
}

impl PriceResult {
    fn from_payoffs(payoffs: Vec<f64>) -> Self {
        let n = payoffs.len() as f64;
        let price = payoffs.iter().sum::<f64>() / n;
        let var = if payoffs.len() > 1 {
            payoffs.iter().map(|p| (p - price).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            price,
            std_error: (var / n).sqrt(),
            payoffs,
        }
    }
}

fn check_shapes(nets: &NetworkSet, bank: &NoiseBank, cfg: &TrainConfig) -> Result<(), EngineError> {
    let checks = [
        ("bank paths", cfg.paths, bank.paths()),
        ("bank steps", cfg.steps, bank.steps()),
        ("network inputs", cfg.features.dim(), nets.input_dim()),
    ];
    for (what, expected, got) in checks {
        if expected != got {
            return Err(EngineError::ShapeMismatch { what, expected, got });
        }
    }
    if cfg.model == ModelKind::Njsde && bank.categories() != cfg.relax.categories() {
        return Err(EngineError::ShapeMismatch {
            what: "bank jump categories",
            expected: cfg.relax.categories(),
            got: bank.categories(),
        });
    }
    Ok(())
}

/// Prices at the final relaxation temperature.
pub fn price_call(
    spec: &ContractSpec,
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
) -> Result<PriceResult, EngineError> {
    price_call_at(spec, nets, bank, cfg, cfg.relax.final_tau())
}

pub fn price_call_at(
    spec: &ContractSpec,
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
    tau: f64,
) -> Result<PriceResult, EngineError> {
    check_shapes(nets, bank, cfg)?;
    spec.validate()?;
    let ctx = StepContext::new(spec, cfg, tau, false);
    let disc = spec.discount();
    let mut tape = StepTape::default();
    let mut payoffs = Vec::with_capacity(cfg.paths);
    for p in 0..cfg.paths {
        let mut st = PathState::start(spec.spot, cfg.v0);
        for k in 0..cfg.steps {
            st = step(st, nets, &bank.at(p, k), &ctx, &mut tape)?;
        }
        payoffs.push(disc * (st.s - spec.strike).max(0.0));
    }
    Ok(PriceResult::from_payoffs(payoffs))
}

/// Price together with `dP/dw`, the derivative of the Monte-Carlo price
/// with respect to every parameter in `nets.params_flat()` order.
///
/// The payoff kink is handled with its subgradient: paths that finish at
/// or below the strike contribute nothing.
pub fn price_and_gradient(
    spec: &ContractSpec,
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
    tau: f64,
) -> Result<(PriceResult, Vec<f64>), EngineError> {
    check_shapes(nets, bank, cfg)?;
    spec.validate()?;
    let ctx = StepContext::new(spec, cfg, tau, false);
    let disc = spec.discount();
    let offsets = nets.offsets();
    let mut grad = vec![0.0; nets.param_count()];
    let mut tapes: Vec<StepTape> = (0..cfg.steps).map(|_| StepTape::default()).collect();
    let (mut dx, mut scratch) = (Vec::new(), Vec::new());
    let mut payoffs = Vec::with_capacity(cfg.paths);
    let seed = disc / cfg.paths as f64;
    for p in 0..cfg.paths {
        let mut st = PathState::start(spec.spot, cfg.v0);
        for (k, tape) in tapes.iter_mut().enumerate() {
            st = step(st, nets, &bank.at(p, k), &ctx, tape)?;
        }
        payoffs.push(disc * (st.s - spec.strike).max(0.0));
        if st.s <= spec.strike {
            continue;
        }
        let (mut adj_s, mut adj_v) = (seed, 0.0);
        for tape in tapes.iter().rev() {
            (adj_s, adj_v) = tape.backward(nets, &ctx, &offsets, adj_s, adj_v, &mut grad, &mut dx, &mut scratch)?;
        }
    }
    Ok((PriceResult::from_payoffs(payoffs), grad))
}

/// Full trajectory of one path, variance included.
pub fn simulate_path(
    spec: &ContractSpec,
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
    tau: f64,
    path: usize,
) -> Result<Vec<PathState>, EngineError> {
    check_shapes(nets, bank, cfg)?;
    let ctx = StepContext::new(spec, cfg, tau, true);
    let mut tape = StepTape::default();
    let mut out = Vec::with_capacity(cfg.steps + 1);
    let mut st = PathState::start(spec.spot, cfg.v0);
    out.push(st);
    for k in 0..cfg.steps {
        st = step(st, nets, &bank.at(path, k), &ctx, &mut tape)?;
        out.push(st);
    }
    Ok(out)
}

/// Sum of squared pricing errors.
pub fn loss(
    targets: &[Target],
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
    tau: f64,
) -> Result<f64, EngineError> {
    if targets.is_empty() {
        return Err(EngineError::EmptyTargets);
    }
    let prices = targets
        .par_iter()
        .map(|t| price_call_at(&t.contract, nets, bank, cfg, tau).map(|r| r.price))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(targets.iter().zip(&prices).map(|(t, p)| (t.price - p).powi(2)).sum())
}

/// Loss and its gradient. Contracts are priced in parallel but reduced in
/// a fixed order, so the result does not depend on the thread count.
pub fn grad_loss(
    targets: &[Target],
    nets: &NetworkSet,
    bank: &NoiseBank,
    cfg: &TrainConfig,
    tau: f64,
) -> Result<(f64, Vec<f64>), EngineError> {
    if targets.is_empty() {
        return Err(EngineError::EmptyTargets);
    }
    let parts = targets
        .par_iter()
        .map(|t| price_and_gradient(&t.contract, nets, bank, cfg, tau))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    let mut grad = vec![0.0; nets.param_count()];
    for (t, (res, dp)) in targets.iter().zip(&parts) {
        let resid = t.price - res.price;
        total += resid * resid;
        for (g, d) in grad.iter_mut().zip(dp) {
            *g -= 2.0 * resid * d;
        }
    }
    Ok((total, grad))
}

/// Same nets with the price jump, variance jump and intensity heads
/// clamped to zero.
pub fn disable_jumps(nets: &NetworkSet) -> NetworkSet {
    let mut out = nets.clone();
    for h in Head::JUMP {
        out.set_clamped(h, true);
    }
    out
}
