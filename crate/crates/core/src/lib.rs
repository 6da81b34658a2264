//! Co-evolution of a technological system and its search space, both
//! variable-length bitstrings, under a resource budget earned from how well
//! the two fit.

pub mod bitstring;
pub mod config;
mod corridor;
pub mod distance;
pub mod dynamics;
pub mod error;
pub mod report;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params64 = dynamics::Params<f64>;
pub type Params32 = dynamics::Params<f32>;
pub type RunResult64 = dynamics::RunResult<f64>;
pub type SocietyState64 = dynamics::SocietyState<f64>;
pub type SweepConfig64 = sweep::SweepConfig<f64>;
pub type SweepOutcome64 = sweep::SweepOutcome<f64>;
pub type CellSummary64 = sweep::CellSummary<f64>;
pub type TrajectoryTable64 = report::TrajectoryTable<f64>;
pub type Config64 = config::Config<f64>;
