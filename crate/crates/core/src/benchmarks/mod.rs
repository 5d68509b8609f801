//! Comparison pricers: Black-Scholes, semi-analytic Heston, Monte-Carlo
//! SVCJ, a plain regression network, and least-squares calibration of the
//! parametric ones.

mod ann;
mod black_scholes;
mod calibrate;
mod heston;
pub mod quadrature;
mod svcj;

use thiserror::Error;

use crate::tensor_net::NetError;

pub use ann::{ann_train, AnnConfig, AnnModel};
pub use black_scholes::{bs_call, BsParams};
pub use calibrate::{
    calibrate_parametric, Calibrated, CalibrationOptions, Minimum, NelderMead, ParametricKind, ParametricModel,
};
pub use heston::{heston_call, heston_call_under_drift, heston_cf, HestonParams, HESTON_MAX_EVALS, HESTON_TOL};
pub use svcj::{svcj_call, svcj_surface, McPrice, McSettings, SvcjParams};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("quadrature did not converge, error estimate {achieved:e}")]
    QuadratureFailed { achieved: f64 },
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}
