use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{check_aligned, EvalError};

/// Smallest sample accepted by [`dm_test`].
pub const DM_MIN_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub loss_kind: LossKind,
    pub n: usize,
}

/// Diebold-Mariano test on squared-error losses.
///
/// The differential is `d_i = a_i^2 - b_i^2`, so a positive statistic means
/// the second model forecasts better. The long-run variance is the
/// Newey-West estimate with Bartlett weights and `floor(n^{1/3})` lags.
/// Identical loss series give statistic 0 and p-value 1.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64]) -> Result<DmResult, EvalError> {
    check_aligned(errors_a.len(), errors_b.len())?;
    let n = errors_a.len();
    if n < DM_MIN_LEN {
        return Err(EvalError::TooShort {
            min: DM_MIN_LEN,
            got: n,
        });
    }
    let d: Vec<f64> = errors_a.iter().zip(errors_b).map(|(a, b)| a * a - b * b).collect();
    if let Some(i) = d.iter().position(|x| !x.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let lag = (nf.cbrt() + 1e-9).floor() as usize;
    let autocov = |k: usize| (k..n).map(|i| (d[i] - mean) * (d[i - k] - mean)).sum::<f64>() / nf;
    let mut lrv = autocov(0);
    for k in 1..=lag {
        lrv += 2.0 * (1.0 - k as f64 / (lag as f64 + 1.0)) * autocov(k);
    }
    let (statistic, p_value) = if lrv > 0.0 {
        let s = mean / (lrv / nf).sqrt();
        (s, erfc(s.abs() / std::f64::consts::SQRT_2))
    } else if mean == 0.0 {
        (0.0, 1.0)
    } else {
        return Err(EvalError::ZeroVariance);
    };
    Ok(DmResult {
        statistic,
        p_value,
        loss_kind: LossKind::Squared,
        n,
    })
}

/// Pairwise tests; `entries[i][j]` for `i < j` compares row model `i`
/// against column model `j`, so positive values prefer the column model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Option<DmResult>>>,
}

pub fn dm_matrix(models: &[(String, Vec<f64>)]) -> Result<DmMatrix, EvalError> {
    let k = models.len();
    let mut entries = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            entries[i][j] = Some(dm_test(&models[i].1, &models[j].1)?);
        }
    }
    Ok(DmMatrix {
        labels: models.iter().map(|m| m.0.clone()).collect(),
        entries,
    })
}

impl DmMatrix {
    /// One row per model; each upper-triangle cell reads `stat (p)`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.entries) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|c| match c {
                Some(r) => format!("{:.4} ({:.4})", r.statistic, r.p_value),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
