use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::black_scholes::check_contract;
use super::quadrature::{adaptive, Rule};
use super::BenchError;

/// Absolute price tolerance of the semi-analytic pricer.
pub const HESTON_TOL: f64 = 1e-8;

/// Integrand evaluations allowed per price. Parameters whose characteristic
/// function barely decays (tiny variance with extreme vol-of-vol and
/// correlation) hit this and fail instead of stalling a calibration.
pub const HESTON_MAX_EVALS: usize = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Drift of the asset under the data-generating measure.
    pub mu: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma_v: f64,
    pub rho: f64,
    pub v0: f64,
}

impl HestonParams {
    /// Parameters of the synthetic Heston study.
    pub fn baseline() -> Self {
        Self {
            mu: 0.04,
            kappa: 1.5,
            theta: 0.1,
            sigma_v: 0.3,
            rho: -0.5,
            v0: 0.04,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let ok = self.mu.is_finite()
            && [self.kappa, self.theta, self.sigma_v, self.v0]
                .iter()
                .all(|x| x.is_finite() && *x > 0.0)
            && self.rho > -1.0
            && self.rho < 1.0;
        if ok {
            Ok(())
        } else {
            Err(BenchError::BadInput(format!("invalid Heston parameters {self:?}")))
        }
    }

    /// `2 kappa theta / sigma_v^2`; at least one means the variance cannot
    /// reach zero.
    pub fn feller_ratio(&self) -> f64 {
        2.0 * self.kappa * self.theta / (self.sigma_v * self.sigma_v)
    }
}

/// Characteristic function of `ln(S_T / F_T)` at complex argument `u`,
/// in the rotation-free form that keeps the logarithm on its principal
/// branch.
pub fn heston_cf(u: Complex64, maturity: f64, p: &HestonParams) -> Complex64 {
    let i = Complex64::i();
    let s2 = p.sigma_v * p.sigma_v;
    let b = p.kappa - p.rho * p.sigma_v * i * u;
    let d = (b * b + s2 * (i * u + u * u)).sqrt();
    let g = (b - d) / (b + d);
    let e = (-d * maturity).exp();
    let c = p.kappa * p.theta / s2 * ((b - d) * maturity - 2.0 * ((1.0 - g * e) / (1.0 - g)).ln());
    let dd = (b - d) / s2 * (1.0 - e) / (1.0 - g * e);
    (c + dd * p.v0).exp()
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::new(15))
}

/// Risk-neutral call price (the asset drifts at `rate`), from the single
/// Fourier integral
/// `C = S - sqrt(S K) e^{-rT/2} / pi * int_0^inf Re[e^{iux} phi(u - i/2)] / (u^2 + 1/4) du`
/// with `x = ln(S/K) + rT`.
pub fn heston_call(spot: f64, strike: f64, rate: f64, maturity: f64, p: &HestonParams) -> Result<f64, BenchError> {
    check_contract(spot, strike, rate, maturity)?;
    p.validate()?;
    let x = (spot / strike).ln() + rate * maturity;
    let scale = (spot * strike).sqrt() * (-0.5 * rate * maturity).exp() / PI;
    let tol = HESTON_TOL / scale;
    let mut evals = 0usize;
    let mut f = |u: f64| {
        evals += 1;
        if evals > HESTON_MAX_EVALS {
            return f64::NAN;
        }
        let z = Complex64::new(u, -0.5);
        let v = Complex64::new(0.0, u * x).exp() * heston_cf(z, maturity, p);
        v.re / (u * u + 0.25)
    };

    let mut total = 0.0;
    let mut err = 0.0;
    let (mut a, mut width) = (0.0, 1.0);
    let mut quiet = 0;
    for j in 0..60 {
        // geometric share of the budget, floored above round-off in the integrand
        let budget = tol * 0.5f64.powi(j.min(12) + 1);
        let (v, e) = adaptive(rule(), &mut f, a, a + width, budget, 40).map_err(|e| BenchError::QuadratureFailed {
            achieved: (err + e) * scale,
        })?;
        total += v;
        err += e;
        quiet = if v.abs() < budget { quiet + 1 } else { 0 };
        if quiet >= 2 {
            let price = spot - scale * total;
            let floor = (spot - strike * (-rate * maturity).exp()).max(0.0);
            return Ok(price.clamp(floor, spot));
        }
        a += width;
        width *= 2.0;
    }
    Err(BenchError::QuadratureFailed { achieved: err * scale })
}

/// Price when the asset drifts at `p.mu` but cash flows are discounted at
/// `rate`: `e^{(mu - r) T}` times the risk-neutral price at rate `mu`.
pub fn heston_call_under_drift(
    spot: f64,
    strike: f64,
    rate: f64,
    maturity: f64,
    p: &HestonParams,
) -> Result<f64, BenchError> {
    check_contract(spot, strike, rate, maturity)?;
    Ok(((p.mu - rate) * maturity).exp() * heston_call(spot, strike, p.mu, maturity, p)?)
}
