//! Option pricing with a neural jump-diffusion.
//!
//! The crate is organised bottom-up:
//!
//! - [`market_data`] loads, filters and buckets option quotes.
//! - [`tensor_net`] holds the small coefficient networks and their tapes.
//! - [`jump_relax`] turns a jump intensity into a differentiable jump count.
//! - [`njsde`] simulates, prices and trains the model.
//! - [`benchmarks`] provides Black-Scholes, Heston, SVCJ and a plain network.
//! - [`synthetic`] produces the training and test surfaces.
//! - [`evalkit`] scores predictions and compares forecast errors.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod evalkit;
pub mod jump_relax;
pub mod market_data;
pub mod njsde;
pub mod optim;
pub mod synthetic;
pub mod tensor_net;

pub use market_data::OptionQuote;
pub use njsde::{ContractSpec, EngineError, ModelKind, NoiseBank, Target, TrainConfig};
pub use tensor_net::{ArchConfig, Head, NetworkSet};
