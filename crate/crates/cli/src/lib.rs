//! Command-line front end for `redem`: rate tables, limit tables and
//! seeded Monte Carlo runs driven by a TOML config.

// Negated float comparisons are guards that must also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod table;

pub use config::RunConfig;
pub use error::{exit, CliError, Result};
pub use table::{fmt_real, parse_ext, Cell, Table};
