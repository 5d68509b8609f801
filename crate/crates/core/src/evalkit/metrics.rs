use super::{check_aligned, EvalError};

fn mean_of(observed: &[f64], predicted: &[f64], f: impl Fn(f64) -> f64) -> Result<f64, EvalError> {
    check_aligned(observed.len(), predicted.len())?;
    let total: f64 = observed.iter().zip(predicted).map(|(o, p)| f(o - p)).sum();
    Ok(total / observed.len() as f64)
}

/// Mean absolute error.
pub fn mae(observed: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    mean_of(observed, predicted, f64::abs)
}

/// Mean squared error.
pub fn mse(observed: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    mean_of(observed, predicted, |e| e * e)
}
