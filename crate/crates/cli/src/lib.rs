//! Configuration, orchestration and artifact emission for the `tidual`
//! binary.

pub mod artifacts;
pub mod config;
pub mod run;
pub mod svg;

pub use artifacts::{sha256_hex, ArtifactWriter, MANIFEST};
pub use config::{load_config, parse_config, ConfigError, Overrides, RunConfig};
pub use run::{run, Command, Outcome};
