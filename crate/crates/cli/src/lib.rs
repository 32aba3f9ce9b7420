//! Scenario-driven front end for the `qrenewal` library: curve tables,
//! verification reports and cross-method comparison.

pub mod compare;
pub mod curves;
pub mod error;
pub mod scenario;
pub mod verify;

pub use compare::{compare, Comparison, PairComparison};
pub use curves::{compute, CurveTable};
pub use error::{CliError, CliResult};
pub use scenario::{Companion, Grid, Method, Overrides, Scenario};
