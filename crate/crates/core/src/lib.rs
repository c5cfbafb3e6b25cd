//! Two-donor phosphorus-in-silicon register driven by global pulses: static
//! spectrum, exchange model, pulse design, coherent and dissipative dynamics,
//! the chain initialization protocol and its displacement-error ensemble.

pub mod basis;
pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod exchange;
pub mod exec;
pub mod linalg;
pub mod params;
pub mod protocols;
pub mod pulse;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::Execution;
