use std::path::Path;

use anyhow::Result;
use jumpcal::market_data::write_quotes;
use jumpcal::synthetic::{generate_prices, heston_testing_grid, heston_training_grid, svcj_grids, Generator};
use serde_json::json;

use super::{create_out, validation};
use crate::config::{GeneratorKind, RunConfig};
use crate::manifest::Manifest;

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";

/// Writes the training and testing grids priced by the configured generator.
pub fn generate(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let seed = cfg.require_seed()?;
    let g = &cfg.generate;
    let (mut train, mut test) = match g.model {
        GeneratorKind::Heston => (heston_training_grid(), heston_testing_grid()),
        GeneratorKind::Svcj => svcj_grids(),
    };
    let generator = match g.model {
        GeneratorKind::Heston => Generator::Heston(g.heston),
        GeneratorKind::Svcj => Generator::Svcj {
            params: g.svcj,
            mc: g.mc,
        },
    };
    train.generator = generator.clone();
    test.generator = generator;
    train.validate().map_err(validation)?;
    if let Generator::Svcj { params, .. } = &train.generator {
        params.validate().map_err(validation)?;
    }

    let train_quotes = generate_prices(&train, seed)?;
    let test_quotes = generate_prices(&test, seed)?;
    create_out(out)?;
    write_quotes(out.join(TRAIN_FILE), &train_quotes)?;
    write_quotes(out.join(TEST_FILE), &test_quotes)?;

    let manifest = Manifest::new(
        "generate",
        cfg,
        vec![TRAIN_FILE.into(), TEST_FILE.into()],
        json!({
            "generator": train.generator.name(),
            "train_rows": train_quotes.len(),
            "test_rows": test_quotes.len(),
        }),
    );
    manifest.write(out)?;
    Ok(manifest)
}
