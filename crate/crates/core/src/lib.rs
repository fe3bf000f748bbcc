//! Fixed-step co-simulation of autonomous field vehicles with parameter
//! sweeps for model calibration and safety-case evidence generation.

pub mod cli;
pub mod dse;
pub mod error;
pub mod numfmt;
pub mod orchestrator;
pub mod safety;
pub mod simunit;
pub mod traces;
pub mod units;

pub use error::{Error, Result};
pub use orchestrator::{run_cosim, validate_config, MultiModelConfig, PortRef};
pub use simunit::{Registry, UnitInstance};
pub use traces::TimedTrace;
