//! Scenario files, simulation output and the `rendezvous` command-line
//! driver around [`rendezvous_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{Scenario, ScenarioConfig};
pub use error::{ConfigError, Error};
pub use run::{run, Run};
