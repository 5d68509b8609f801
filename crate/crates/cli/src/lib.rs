//! Pipeline behind the `jumpcal` binary: `generate`, `train`, `evaluate`
//! and `compare`, each writing its outputs and a manifest into one
//! directory.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod model;

use std::fmt;

use jumpcal::benchmarks::BenchError;
use jumpcal::evalkit::EvalError;
use jumpcal::market_data::MarketDataError;
use jumpcal::tensor_net::NetError;
use jumpcal::EngineError;

pub use args::{Cli, Command};
pub use commands::run;

/// A bad config, flag or input file; exits with [`EXIT_VALIDATION`].
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let mut io = false;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<EngineError>() {
            match e {
                EngineError::Diverged { .. } => return EXIT_DIVERGED,
                EngineError::Io(_) | EngineError::Net(NetError::Io(_)) => io = true,
                _ => {}
            }
        } else if let Some(e) = cause.downcast_ref::<BenchError>() {
            match e {
                BenchError::Diverged { .. } => return EXIT_DIVERGED,
                BenchError::Net(NetError::Io(_)) => io = true,
                _ => {}
            }
        } else if let Some(e) = cause.downcast_ref::<MarketDataError>() {
            match e {
                MarketDataError::Io(_) => io = true,
                MarketDataError::Csv(c) if c.is_io_error() => io = true,
                _ => {}
            }
        } else if let Some(e) = cause.downcast_ref::<EvalError>() {
            match e {
                EvalError::Io(_) => io = true,
                EvalError::Csv(c) if c.is_io_error() => io = true,
                _ => {}
            }
        } else if let Some(NetError::Io(_)) = cause.downcast_ref::<NetError>() {
            io = true;
        } else if cause.is::<std::io::Error>() {
            io = true;
        }
    }
    if io {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}
