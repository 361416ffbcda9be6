//! Configuration, experiment drivers and result files.

pub mod check;
pub mod config;
pub mod run;
pub mod vtk;

pub use config::{parse_config_str, resolve, ConfigFile, Kind, Overrides, RunConfig};
pub use run::{run, ResultBundle};
