//! IO, configuration, parallel scans, sweeps and the verification suite
//! around [`scoremax_core`].

pub mod config;
pub mod formats;
pub mod run;
pub mod scan;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, parse_config_str, Overrides, RunConfig, RunMode};
pub use run::{run, RunError, Status};
