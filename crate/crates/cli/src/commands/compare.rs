use std::fs::{self, File};
use std::path::Path;

use anyhow::{bail, Context, Result};
use jumpcal::evalkit::{dm_matrix, PricingReport, Sample};
use serde_json::json;

use super::{check_distinct, create_out, validation};
use crate::config::RunConfig;
use crate::manifest::{write_json, Manifest, MANIFEST_FILE};
use crate::ValidationError;

pub const DM_CSV: &str = "dm_matrix.csv";
pub const DM_JSON: &str = "dm_matrix.json";

/// Pairwise Diebold-Mariano tests between report files.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let refs = &cfg.compare.reports;
    if refs.len() < 2 {
        bail!(ValidationError(format!(
            "compare needs at least two reports, got {}",
            refs.len()
        )));
    }
    let inputs: Vec<&Path> = refs.iter().map(|r| r.path.as_path()).collect();
    check_distinct(&inputs, out, &[DM_CSV, DM_JSON, MANIFEST_FILE])?;

    let mut series = Vec::with_capacity(refs.len());
    let mut first: Option<PricingReport> = None;
    for r in refs {
        let text = fs::read_to_string(&r.path).with_context(|| format!("reading report {}", r.path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let report: PricingReport = serde_path_to_error::deserialize(de)
            .map_err(|e| ValidationError(format!("{}: field `{}`: {}", r.path.display(), e.path(), e.inner())))?;
        if report.sample != Sample::Out {
            eprintln!("note: {} holds in-sample errors", r.path.display());
        }
        if let Some(f) = &first {
            let same = f.rows.len() == report.rows.len()
                && f.rows
                    .iter()
                    .zip(&report.rows)
                    .all(|(a, b)| a.strike == b.strike && a.maturity == b.maturity);
            if !same {
                bail!(ValidationError(format!(
                    "{} covers different contracts",
                    r.path.display()
                )));
            }
        }
        series.push((r.label.clone(), report.errors()));
        first.get_or_insert(report);
    }
    let matrix = dm_matrix(&series).map_err(validation)?;
    create_out(out)?;
    matrix.write_csv(File::create(out.join(DM_CSV))?)?;
    write_json(&out.join(DM_JSON), &matrix)?;
    let pairs = matrix.entries.iter().flatten().filter(|e| e.is_some()).count();
    let manifest = Manifest::new(
        "compare",
        cfg,
        vec![DM_CSV.into(), DM_JSON.into()],
        json!({ "pairs": pairs }),
    );
    manifest.write(out)?;
    Ok(manifest)
}
