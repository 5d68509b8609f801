use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use jumpcal::evalkit::{bucket_report, PricingReport, Sample};
use jumpcal::market_data::{read_quotes, ColumnMap};
use serde_json::json;

use super::{check_distinct, create_out, validation};
use crate::config::RunConfig;
use crate::manifest::{write_json, Manifest, MANIFEST_FILE};
use crate::model::TrainedModel;
use crate::ValidationError;

/// MAE/MSE table: one row per (sample, metric), one column per model.
pub const SUMMARY_FILE: &str = "summary.csv";
/// Plot data: per-bucket MAE of every model and sample.
pub const BUCKETS_FILE: &str = "buckets.csv";
pub const REPORT_DIR: &str = "reports";

/// File name of one model's report; `ext` is `json` or `csv`.
pub fn report_name(label: &str, sample: Sample, ext: &str) -> String {
    format!("{REPORT_DIR}/{label}_{}.{ext}", sample.label())
}

fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    if !ok {
        bail!(ValidationError(format!(
            "model label `{label}` must use letters, digits, `_`, `-` or `.`"
        )));
    }
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let e = &cfg.evaluate;
    if e.models.is_empty() {
        bail!(ValidationError(
            "evaluate needs at least one model (--model LABEL=PATH)".into()
        ));
    }
    for (i, m) in e.models.iter().enumerate() {
        check_label(&m.label)?;
        if e.models[..i].iter().any(|o| o.label == m.label) {
            bail!(ValidationError(format!("duplicate model label `{}`", m.label)));
        }
    }
    let samples: Vec<(Sample, &Path)> = [(Sample::In, &e.train_data), (Sample::Out, &e.test_data)]
        .into_iter()
        .filter_map(|(s, p)| p.as_deref().map(|p| (s, p)))
        .collect();
    if samples.is_empty() {
        bail!(ValidationError("evaluate needs `train_data` and/or `test_data`".into()));
    }

    let mut outputs = vec![SUMMARY_FILE.to_string(), BUCKETS_FILE.to_string()];
    for m in &e.models {
        for (s, _) in &samples {
            outputs.push(report_name(&m.label, *s, "json"));
            outputs.push(report_name(&m.label, *s, "csv"));
        }
    }
    let mut inputs: Vec<&Path> = samples.iter().map(|(_, p)| *p).collect();
    inputs.extend(e.models.iter().map(|m| m.path.as_path()));
    let mut all_outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    all_outputs.push(MANIFEST_FILE);
    check_distinct(&inputs, out, &all_outputs)?;

    let data: Vec<_> = samples
        .iter()
        .map(|(s, p)| Ok((*s, read_quotes(p, &ColumnMap::default())?)))
        .collect::<Result<_>>()?;
    if data.iter().any(|(_, q)| q.is_empty()) {
        bail!(ValidationError("empty quote file".into()));
    }
    let mut reports: Vec<PricingReport> = Vec::new();
    for m in &e.models {
        let model = TrainedModel::load(&m.path)?;
        for (s, quotes) in &data {
            let prices = model.price(quotes)?;
            reports.push(bucket_report(quotes, &prices, &m.label, *s).map_err(validation)?);
        }
    }

    create_out(out)?;
    fs::create_dir_all(out.join(REPORT_DIR)).context("creating the report directory")?;
    let mut buckets = BufWriter::new(File::create(out.join(BUCKETS_FILE))?);
    let mut summary: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    for (i, r) in reports.iter().enumerate() {
        write_json(&out.join(report_name(&r.model, r.sample, "json")), r)?;
        r.write_rows_csv(File::create(out.join(report_name(&r.model, r.sample, "csv")))?)?;
        let mut text = Vec::new();
        r.write_buckets_csv(&mut text)?;
        let text = String::from_utf8(text)?;
        // keep the header only once
        let body = if i == 0 {
            &text[..]
        } else {
            text.split_once('\n').map_or("", |x| x.1)
        };
        buckets.write_all(body.as_bytes())?;
        summary.insert(
            format!("{}_{}", r.model, r.sample.label()),
            json!({"mae": r.mae, "mse": r.mse}),
        );
    }
    buckets.flush()?;

    let mut table = BufWriter::new(File::create(out.join(SUMMARY_FILE))?);
    write!(table, "sample,metric")?;
    for m in &e.models {
        write!(table, ",{}", m.label)?;
    }
    writeln!(table)?;
    for (s, _) in &samples {
        for metric in ["MAE", "MSE"] {
            write!(table, "{},{metric}", s.label())?;
            for r in reports.iter().filter(|r| r.sample == *s) {
                let v = if metric == "MAE" { r.mae } else { r.mse };
                write!(table, ",{v}")?;
            }
            writeln!(table)?;
        }
    }
    table.flush()?;

    let manifest = Manifest::new("evaluate", cfg, outputs, json!(summary));
    manifest.write(out)?;
    Ok(manifest)
}
