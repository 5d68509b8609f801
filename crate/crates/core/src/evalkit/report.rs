use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{check_aligned, EvalError};
use crate::market_data::{classify, OptionQuote};

/// Bucket label for quotes outside the bucketable moneyness/maturity range.
pub const OUTSIDE_BUCKET: &str = "outside";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sample {
    In,
    Out,
}

impl Sample {
    pub fn label(self) -> &'static str {
        match self {
            Sample::In => "in",
            Sample::Out => "out",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Position of the contract in the input list.
    pub id: usize,
    pub strike: f64,
    pub maturity: f64,
    pub observed: f64,
    pub predicted: f64,
    pub abs_error: f64,
    pub sq_error: f64,
    pub bucket: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket: String,
    pub count: usize,
    pub mae: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingReport {
    pub model: String,
    pub sample: Sample,
    pub mae: f64,
    pub mse: f64,
    /// Bucketed summaries in bucket order, with the outside bucket last.
    pub buckets: Vec<BucketSummary>,
    pub rows: Vec<ReportRow>,
}

fn summarize<'a>(label: String, rows: impl Iterator<Item = &'a ReportRow>) -> BucketSummary {
    let (mut count, mut abs, mut sq) = (0usize, 0.0, 0.0);
    for r in rows {
        count += 1;
        abs += r.abs_error;
        sq += r.sq_error;
    }
    BucketSummary {
        bucket: label,
        count,
        mae: abs / count as f64,
        mse: sq / count as f64,
    }
}

/// Scores `predictions` against the quoted prices and groups the errors by
/// moneyness/maturity bucket.
pub fn bucket_report(
    quotes: &[OptionQuote],
    predictions: &[f64],
    model: &str,
    sample: Sample,
) -> Result<PricingReport, EvalError> {
    check_aligned(quotes.len(), predictions.len())?;
    if let Some(i) = predictions.iter().position(|p| !p.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let mut keyed = Vec::with_capacity(quotes.len());
    let rows: Vec<ReportRow> = quotes
        .iter()
        .zip(predictions)
        .enumerate()
        .map(|(id, (q, &p))| {
            let e = q.price - p;
            let bucket = classify(q).ok();
            keyed.push(bucket);
            ReportRow {
                id,
                strike: q.strike,
                maturity: q.maturity,
                observed: q.price,
                predicted: p,
                abs_error: e.abs(),
                sq_error: e * e,
                bucket: bucket.map_or_else(|| OUTSIDE_BUCKET.to_string(), |b| b.to_string()),
            }
        })
        .collect();

    let mut groups: BTreeMap<_, Vec<&ReportRow>> = BTreeMap::new();
    for (row, key) in rows.iter().zip(&keyed) {
        // None sorts first in a BTreeMap; it is moved to the end below
        groups.entry(*key).or_default().push(row);
    }
    let mut buckets: Vec<BucketSummary> = groups
        .iter()
        .filter_map(|(k, v)| k.map(|b| summarize(b.to_string(), v.iter().copied())))
        .collect();
    if let Some(v) = groups.get(&None) {
        buckets.push(summarize(OUTSIDE_BUCKET.to_string(), v.iter().copied()));
    }
    let all = summarize(String::new(), rows.iter());
    Ok(PricingReport {
        model: model.to_string(),
        sample,
        mae: all.mae,
        mse: all.mse,
        buckets,
        rows,
    })
}

impl PricingReport {
    /// Largest gap between the stored aggregates and a recomputation from
    /// the rows.
    pub fn recompute_gap(&self) -> f64 {
        let mut gap = 0.0f64;
        let all = summarize(String::new(), self.rows.iter());
        gap = gap.max((all.mae - self.mae).abs()).max((all.mse - self.mse).abs());
        for b in &self.buckets {
            let s = summarize(b.bucket.clone(), self.rows.iter().filter(|r| r.bucket == b.bucket));
            gap = gap.max((s.mae - b.mae).abs()).max((s.mse - b.mse).abs());
            if s.count != b.count {
                return f64::INFINITY;
            }
        }
        if self.buckets.iter().map(|b| b.count).sum::<usize>() != self.rows.len() {
            return f64::INFINITY;
        }
        gap
    }

    pub fn write_rows_csv<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plot-ready lines `bucket,model,sample,count,mae`.
    pub fn write_buckets_csv<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bucket", "model", "sample", "count", "mae"])?;
        for b in &self.buckets {
            w.write_record([
                b.bucket.as_str(),
                &self.model,
                self.sample.label(),
                &b.count.to_string(),
                &b.mae.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// Errors `observed - predicted`, in row order.
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.observed - r.predicted).collect()
    }
}
