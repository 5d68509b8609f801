//! Truncated-Poisson jump counts and their Gumbel-Softmax relaxation.
//!
//! The number of jumps in a step of length `dt` is restricted to `0..=n`
//! and renormalized. Sampling it through `argmax(g + log pi)` with Gumbel
//! noise `g` moves all randomness into `g`; replacing the argmax by a
//! tempered softmax makes the count differentiable in the intensity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor applied to `log pi_i` so that zero-probability categories stay finite.
pub const LOG_PROB_FLOOR: f64 = -69.077_552_789_821_37; // ln(1e-30)

#[derive(Debug, Error, PartialEq)]
pub enum RelaxError {
    #[error("jump intensity must be non-negative and finite, got {0}")]
    NegativeIntensity(f64),
    #[error("degenerate probability vector: {0}")]
    DegenerateProbabilities(String),
    #[error("invalid relaxation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauDecay {
    Constant,
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxConfig {
    /// Largest number of jumps a single step may carry.
    pub max_jumps: usize,
    pub tau_start: f64,
    pub tau_end: f64,
    pub decay: TauDecay,
    /// Straight-through: forward uses the argmax count, backward the soft one.
    pub hard_mode: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            max_jumps: 3,
            tau_start: 1.0,
            tau_end: 0.1,
            decay: TauDecay::Geometric,
            hard_mode: false,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Result<(), RelaxError> {
        if self.max_jumps < 1 {
            return Err(RelaxError::BadConfig("max_jumps must be at least 1".into()));
        }
        if !(self.tau_end > 0.0 && self.tau_start.is_finite()) {
            return Err(RelaxError::BadConfig("temperatures must be positive and finite".into()));
        }
        if self.tau_end > self.tau_start {
            return Err(RelaxError::BadConfig("tau_end must not exceed tau_start".into()));
        }
        Ok(())
    }

    pub fn categories(&self) -> usize {
        self.max_jumps + 1
    }

    /// Temperature used during `epoch` (0-based) of a `total`-epoch run.
    pub fn tau_at(&self, epoch: usize, total: usize) -> f64 {
        let frac = if total <= 1 {
            0.0
        } else {
            epoch.min(total - 1) as f64 / (total - 1) as f64
        };
        match self.decay {
            TauDecay::Constant => self.tau_start,
            TauDecay::Geometric => self.tau_start * (self.tau_end / self.tau_start).powf(frac),
            TauDecay::Linear => self.tau_start + (self.tau_end - self.tau_start) * frac,
        }
    }

    /// Temperature for pricing once training is over.
    pub fn final_tau(&self) -> f64 {
        match self.decay {
            TauDecay::Constant => self.tau_start,
            _ => self.tau_end,
        }
    }
}

/// One vector of standard-Gumbel samples, one entry per jump count.
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelDraw {
    pub g: Vec<f64>,
}

impl GumbelDraw {
    /// Maps uniforms on (0, 1) to standard Gumbel samples.
    pub fn from_uniforms(u: &[f64]) -> Self {
        Self {
            g: u.iter().map(|&u| gumbel_from_uniform(u)).collect(),
        }
    }
}

#[inline]
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

fn ln_factorial(i: usize) -> f64 {
    (2..=i).map(|k| (k as f64).ln()).sum()
}

/// Normalized truncated-Poisson log probabilities for `0..=n` jumps and
/// their derivative with respect to the intensity. Entries below
/// [`LOG_PROB_FLOOR`] are clamped and get zero derivative.
pub fn truncated_poisson_log(
    intensity: f64,
    dt: f64,
    n: usize,
    log_pi: &mut [f64],
    dlog_pi: &mut [f64],
) -> Result<(), RelaxError> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(RelaxError::NegativeIntensity(intensity));
    }
    let x = intensity * dt;
    if !x.is_finite() || !(dt > 0.0) {
        return Err(RelaxError::BadConfig(format!("intensity * dt = {x} not usable")));
    }
    let k = n + 1;
    if x == 0.0 {
        log_pi[0] = 0.0;
        dlog_pi[0] = -dt;
        for i in 1..k {
            log_pi[i] = LOG_PROB_FLOOR;
            dlog_pi[i] = 0.0;
        }
        return Ok(());
    }
    let ln_x = x.ln();
    let mut max = f64::NEG_INFINITY;
    for (i, l) in log_pi[..k].iter_mut().enumerate() {
        *l = i as f64 * ln_x - ln_factorial(i);
        max = max.max(*l);
    }
    let sum: f64 = log_pi[..k].iter().map(|l| (l - max).exp()).sum();
    let log_norm = max + sum.ln();
    let mut mean = 0.0;
    for (i, l) in log_pi[..k].iter_mut().enumerate() {
        *l -= log_norm;
        mean += i as f64 * l.exp();
    }
    for i in 0..k {
        if log_pi[i] < LOG_PROB_FLOOR {
            log_pi[i] = LOG_PROB_FLOOR;
            dlog_pi[i] = 0.0;
        } else {
            dlog_pi[i] = (i as f64 - mean) / intensity;
        }
    }
    Ok(())
}

/// `pi_i = ((l dt)^i / i!) / sum_j ((l dt)^j / j!)` for `i = 0..=n`.
pub fn truncated_poisson(intensity: f64, dt: f64, n: usize) -> Result<Vec<f64>, RelaxError> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(RelaxError::NegativeIntensity(intensity));
    }
    let x = intensity * dt;
    let mut terms = Vec::with_capacity(n + 1);
    let mut t = 1.0;
    terms.push(t);
    for i in 1..=n {
        t *= x / i as f64;
        terms.push(t);
    }
    let total: f64 = terms.iter().sum();
    if !total.is_finite() {
        // large intensity: fall back to log space
        let mut lp = vec![0.0; n + 1];
        let mut d = vec![0.0; n + 1];
        truncated_poisson_log(intensity, dt, n, &mut lp, &mut d)?;
        return Ok(lp.into_iter().map(f64::exp).collect());
    }
    Ok(terms.into_iter().map(|t| t / total).collect())
}

fn clamped_log_probs(pi: &[f64], draw: &GumbelDraw) -> Result<Vec<f64>, RelaxError> {
    if pi.is_empty() || pi.len() != draw.g.len() {
        return Err(RelaxError::DegenerateProbabilities(format!(
            "{} probabilities vs {} gumbel samples",
            pi.len(),
            draw.g.len()
        )));
    }
    if pi.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) || !pi.iter().any(|p| *p > 0.0) {
        return Err(RelaxError::DegenerateProbabilities(format!("{pi:?}")));
    }
    if draw.g.iter().any(|g| !g.is_finite()) {
        return Err(RelaxError::DegenerateProbabilities("non-finite gumbel sample".into()));
    }
    Ok(pi.iter().map(|p| p.ln().max(LOG_PROB_FLOOR)).collect())
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Categorical draw `argmax_i (g_i + log pi_i)`.
pub fn gumbel_max(pi: &[f64], draw: &GumbelDraw) -> Result<usize, RelaxError> {
    let lp = clamped_log_probs(pi, draw)?;
    let scores: Vec<f64> = lp.iter().zip(&draw.g).map(|(l, g)| g + l).collect();
    Ok(argmax(&scores))
}

/// Tempered softmax of `g + log pi`.
pub fn gumbel_softmax(pi: &[f64], draw: &GumbelDraw, tau: f64) -> Result<Vec<f64>, RelaxError> {
    if !(tau > 0.0) {
        return Err(RelaxError::BadConfig(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let lp = clamped_log_probs(pi, draw)?;
    let mut y = vec![0.0; lp.len()];
    softmax_scores(&lp, &draw.g, tau, &mut y);
    Ok(y)
}

/// Writes `softmax((g + log_pi) / tau)` into `y`.
pub fn softmax_scores(log_pi: &[f64], g: &[f64], tau: f64, y: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for i in 0..y.len() {
        y[i] = (g[i] + log_pi[i]) / tau;
        max = max.max(y[i]);
    }
    let mut sum = 0.0;
    for v in y.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in y.iter_mut() {
        *v /= sum;
    }
}

/// `dy_i / dlog pi_j = y_i (delta_ij - y_j) / tau`, row-major.
pub fn gumbel_softmax_jacobian(y: &[f64], tau: f64) -> Vec<f64> {
    let k = y.len();
    let mut jac = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let delta = if i == j { 1.0 } else { 0.0 };
            jac[i * k + j] = y[i] * (delta - y[j]) / tau;
        }
    }
    jac
}

/// Scalar jump count carried by a relaxed one-hot vector: the expected
/// count `sum_i i y_i`, or in hard mode the argmax index.
pub fn relaxed_jump_count(y: &[f64], hard_mode: bool) -> f64 {
    if hard_mode {
        argmax(y) as f64
    } else {
        y.iter().enumerate().map(|(i, v)| i as f64 * v).sum()
    }
}

/// Relaxed count and its derivative with respect to the intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCount {
    pub value: f64,
    pub d_intensity: f64,
}

/// Reusable buffers for [`jump_count`].
#[derive(Debug, Clone, Default)]
pub struct RelaxScratch {
    log_pi: Vec<f64>,
    dlog_pi: Vec<f64>,
    y: Vec<f64>,
}

/// Full chain intensity -> pi -> relaxed vector -> count for one step.
/// The derivative is always the soft one, also in hard mode.
pub fn jump_count(
    intensity: f64,
    dt: f64,
    gumbel: &[f64],
    tau: f64,
    hard_mode: bool,
    scratch: &mut RelaxScratch,
) -> Result<JumpCount, RelaxError> {
    let k = gumbel.len();
    if k < 2 {
        return Err(RelaxError::BadConfig("need at least two jump categories".into()));
    }
    scratch.log_pi.resize(k, 0.0);
    scratch.dlog_pi.resize(k, 0.0);
    scratch.y.resize(k, 0.0);
    truncated_poisson_log(intensity, dt, k - 1, &mut scratch.log_pi, &mut scratch.dlog_pi)?;
    softmax_scores(&scratch.log_pi, gumbel, tau, &mut scratch.y);
    let soft: f64 = scratch.y.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
    let mut d = 0.0;
    for j in 0..k {
        d += scratch.y[j] * (j as f64 - soft) / tau * scratch.dlog_pi[j];
    }
    let value = if hard_mode { argmax(&scratch.y) as f64 } else { soft };
    Ok(JumpCount { value, d_intensity: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn draw(rng: &mut ChaCha8Rng, k: usize) -> GumbelDraw {
        let u: Vec<f64> = (0..k).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
        GumbelDraw::from_uniforms(&u)
    }

    #[test]
    fn zero_intensity_means_no_jumps() {
        assert_eq!(truncated_poisson(0.0, 1.0, 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn direct_evaluation_of_truncated_terms() {
        // terms 1, 0.1, 0.005 normalized by 1.105
        let pi = truncated_poisson(0.1, 1.0, 2).unwrap();
        let expect = [1.0 / 1.105, 0.1 / 1.105, 0.005 / 1.105];
        for (a, b) in pi.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((pi[0] - 0.904977).abs() < 1e-6);
        assert!((pi[1] - 0.090498).abs() < 1e-6);
        assert!((pi[2] - 0.004525).abs() < 1e-6);
    }

    #[test]
    fn log_form_agrees_with_direct_form() {
        for &(l, dt, n) in &[(0.1, 1.0, 2), (3.0, 0.5, 5), (1e-6, 1.0 / 252.0, 3), (40.0, 1.0, 10)] {
            let pi = truncated_poisson(l, dt, n).unwrap();
            let mut lp = vec![0.0; n + 1];
            let mut d = vec![0.0; n + 1];
            truncated_poisson_log(l, dt, n, &mut lp, &mut d).unwrap();
            for (p, l) in pi.iter().zip(&lp) {
                if *l > LOG_PROB_FLOOR {
                    assert!((p.ln() - l).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn negative_intensity_rejected() {
        assert_eq!(
            truncated_poisson(-1.0, 1.0, 2),
            Err(RelaxError::NegativeIntensity(-1.0))
        );
    }

    #[test]
    fn point_mass_always_picks_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_eq!(gumbel_max(&[1.0, 0.0, 0.0], &draw(&mut rng, 3)).unwrap(), 0);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let uniform = [0.25; 4];
        let g = GumbelDraw { g: vec![0.0; 4] };
        assert_eq!(gumbel_max(&uniform, &g).unwrap(), 0);
        let y = gumbel_softmax(&uniform, &g, 0.7).unwrap();
        assert!(y.iter().all(|v| *v == 0.25));
    }

    #[test]
    fn degenerate_inputs() {
        let g = GumbelDraw { g: vec![0.0; 3] };
        assert!(matches!(
            gumbel_max(&[0.0, 0.0, 0.0], &g),
            Err(RelaxError::DegenerateProbabilities(_))
        ));
        assert!(matches!(
            gumbel_max(&[0.5, 0.5], &g),
            Err(RelaxError::DegenerateProbabilities(_))
        ));
        assert!(matches!(
            gumbel_max(&[f64::NAN, 0.5, 0.5], &g),
            Err(RelaxError::DegenerateProbabilities(_))
        ));
    }

    #[test]
    fn gumbel_max_frequencies() {
        let pi = [0.7, 0.2, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        let n = 1_000_000;
        for _ in 0..n {
            counts[gumbel_max(&pi, &draw(&mut rng, 3)).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(pi) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005);
        }
    }

    #[test]
    fn cold_softmax_is_one_hot_at_argmax() {
        let pi = [0.6, 0.3, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let d = draw(&mut rng, 3);
            let y = gumbel_softmax(&pi, &d, 1e-6).unwrap();
            let z = gumbel_max(&pi, &d).unwrap();
            assert!(y[z] > 1.0 - 1e-6);
        }
    }

    #[test]
    fn softmax_jacobian_matches_finite_differences() {
        let pi = [0.5, 0.3, 0.15, 0.05];
        let d = GumbelDraw {
            g: vec![0.3, -0.2, 1.1, 0.4],
        };
        let tau = 0.6;
        let y = gumbel_softmax(&pi, &d, tau).unwrap();
        let jac = gumbel_softmax_jacobian(&y, tau);
        let lp: Vec<f64> = pi.iter().map(|p: &f64| p.ln()).collect();
        let h = 1e-6;
        for j in 0..4 {
            let mut up = lp.clone();
            up[j] += h;
            let mut dn = lp.clone();
            dn[j] -= h;
            let mut yu = vec![0.0; 4];
            let mut yd = vec![0.0; 4];
            softmax_scores(&up, &d.g, tau, &mut yu);
            softmax_scores(&dn, &d.g, tau, &mut yd);
            for i in 0..4 {
                let fd = (yu[i] - yd[i]) / (2.0 * h);
                let a = jac[i * 4 + j];
                assert!(
                    (a - fd).abs() / a.abs().max(fd.abs()).max(1e-10) < 1e-6,
                    "{i},{j}: {a} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn relaxed_counts() {
        assert_eq!(relaxed_jump_count(&[1.0, 0.0, 0.0], false), 0.0);
        assert_eq!(relaxed_jump_count(&[0.0, 0.0, 1.0], false), 2.0);
        assert_eq!(relaxed_jump_count(&[0.5, 0.5], false), 0.5);
        assert_eq!(relaxed_jump_count(&[0.2, 0.5, 0.3], true), 1.0);
    }

    #[test]
    fn normalization_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let l: f64 = rng.random_range(0.0..50.0);
            let dt: f64 = rng.random_range(1e-4..1.0);
            let n = rng.random_range(1..8);
            let pi = truncated_poisson(l, dt, n).unwrap();
            assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let tau: f64 = rng.random_range(0.01..2.0);
            let y = gumbel_softmax(&pi, &draw(&mut rng, n + 1), tau).unwrap();
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cold_argmax_matches_distribution_chi_square() {
        // lambda dt = 0.1 with n = 2 gives (0.905, 0.090, 0.005)
        let pi = truncated_poisson(0.1, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut counts = [0f64; 3];
        for _ in 0..n {
            let y = gumbel_softmax(&pi, &draw(&mut rng, 3), 0.01).unwrap();
            counts[argmax(&y)] += 1.0;
        }
        let stat: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(c, p)| (c - n as f64 * p).powi(2) / (n as f64 * p))
            .sum();
        let p_value = 1.0 - ChiSquared::new(2.0).unwrap().cdf(stat);
        assert!(p_value > 0.01, "chi2 {stat}, p {p_value}");
    }

    #[test]
    fn intensity_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut scratch = RelaxScratch::default();
        for _ in 0..200 {
            let tau: f64 = rng.random_range(0.1..1.0);
            let lambda: f64 = rng.random_range(0.05..5.0);
            let dt: f64 = rng.random_range(0.01..0.5);
            let g = draw(&mut rng, 4).g;
            let jc = jump_count(lambda, dt, &g, tau, false, &mut scratch).unwrap();
            let h = 1e-6 * lambda;
            let up = jump_count(lambda + h, dt, &g, tau, false, &mut scratch).unwrap().value;
            let dn = jump_count(lambda - h, dt, &g, tau, false, &mut scratch).unwrap().value;
            let fd = (up - dn) / (2.0 * h);
            assert!(jc.d_intensity != 0.0);
            // absolute floor covers round-off in the difference quotient
            let tol = 1e-4 * jc.d_intensity.abs().max(fd.abs()) + 1e-9;
            assert!(
                (jc.d_intensity - fd).abs() < tol,
                "tau {tau} lambda {lambda}: {} vs {fd}",
                jc.d_intensity
            );
        }
    }

    #[test]
    fn straight_through_uses_hard_value_soft_gradient() {
        let g = [0.1, 0.9, -0.3, 0.2];
        let mut s = RelaxScratch::default();
        let soft = jump_count(2.0, 0.4, &g, 0.5, false, &mut s).unwrap();
        let hard = jump_count(2.0, 0.4, &g, 0.5, true, &mut s).unwrap();
        assert_eq!(hard.value, hard.value.round());
        assert_eq!(hard.d_intensity, soft.d_intensity);
    }

    #[test]
    fn truncation_is_consistent() {
        for &(l, dt) in &[(0.1, 1.0), (2.0, 0.3), (10.0, 0.5)] {
            for n in 1..8 {
                let small = truncated_poisson(l, dt, n).unwrap();
                let big = truncated_poisson(l, dt, n + 1).unwrap();
                let mass: f64 = big[..=n].iter().sum();
                for i in 0..=n {
                    assert!((big[i] / mass - small[i]).abs() < 1e-14);
                }
                // un-normalized mass sum_{i<=n} x^i/i! grows with n
                let x: f64 = l * dt;
                let un = |n: usize| {
                    (0..=n)
                        .map(|i| x.powi(i as i32) / (1..=i).product::<usize>().max(1) as f64)
                        .sum::<f64>()
                };
                assert!(un(n + 1) >= un(n));
            }
        }
    }

    #[test]
    fn schedule_decays_geometrically() {
        let cfg = RelaxConfig::default();
        assert_eq!(cfg.tau_at(0, 11), 1.0);
        assert!((cfg.tau_at(10, 11) - 0.1).abs() < 1e-15);
        assert!((cfg.tau_at(5, 11) - 0.1f64.sqrt()).abs() < 1e-12);
        assert!(RelaxConfig {
            tau_end: 2.0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(RelaxConfig { max_jumps: 0, ..cfg }.validate().is_err());
    }
}
