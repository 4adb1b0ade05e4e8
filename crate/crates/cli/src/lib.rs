//! Front end for `polaremit`: TOML run configurations, bundled presets and
//! the spectrum, sweep, validate and steady run modes.
//!
//! Every number written to disk is in units of the spontaneous emission rate;
//! the metadata records the input `Γ` so results can be rescaled.

pub mod config;
pub mod run;

pub use config::{parse_config, preset, ConfigError, Mode, RunConfig};
pub use run::{run, Artifacts, RunError};
