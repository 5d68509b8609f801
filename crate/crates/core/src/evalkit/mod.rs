//! Pricing-error metrics, bucketed reports and Diebold-Mariano comparisons.

mod dm;
mod metrics;
mod report;

use thiserror::Error;

pub use dm::{dm_matrix, dm_test, DmMatrix, DmResult, LossKind, DM_MIN_LEN};
pub use metrics::{mae, mse};
pub use report::{bucket_report, BucketSummary, PricingReport, ReportRow, Sample, OUTSIDE_BUCKET};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("need at least {min} observations, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("loss differential has zero long-run variance but nonzero mean")]
    ZeroVariance,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_aligned(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b {
        return Err(EvalError::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(EvalError::Empty);
    }
    Ok(())
}
