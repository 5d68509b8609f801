use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub sigma: f64,
}

impl BsParams {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.sigma.is_finite() && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(BenchError::BadInput(format!(
                "volatility must be positive, got {}",
                self.sigma
            )))
        }
    }
}

pub(crate) fn check_contract(spot: f64, strike: f64, rate: f64, maturity: f64) -> Result<(), BenchError> {
    if [spot, strike, maturity].iter().all(|x| x.is_finite() && *x > 0.0) && rate.is_finite() {
        Ok(())
    } else {
        Err(BenchError::BadInput(format!(
            "bad contract: spot {spot}, strike {strike}, rate {rate}, maturity {maturity}"
        )))
    }
}

/// Closed-form European call.
pub fn bs_call(spot: f64, strike: f64, rate: f64, maturity: f64, sigma: f64) -> Result<f64, BenchError> {
    check_contract(spot, strike, rate, maturity)?;
    BsParams { sigma }.validate()?;
    let sd = sigma * maturity.sqrt();
    let d1 = ((spot / strike).ln() + rate * maturity) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    let n = Normal::standard();
    let price = spot * n.cdf(d1) - strike * (-rate * maturity).exp() * n.cdf(d2);
    // clip round-off below the arbitrage floor
    Ok(price.max((spot - strike * (-rate * maturity).exp()).max(0.0)))
}
