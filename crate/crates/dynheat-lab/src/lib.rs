//! File-driven runs of the `dynheat` core: TOML configuration, seeded ensembles, CSV/JSON
//! artifacts and the merged report behind the `dynheat` command.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod format;

pub use commands::{report, run, Command, Options, Outcome};
pub use config::RunConfig;
