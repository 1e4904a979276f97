//! File formats, parallel drivers, batch evaluation and synthetic scenes
//! around `salgame-core`. The `salgame` binary is a thin layer over this.

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod runner;
pub mod synth;

pub use config::{ConfigFile, RunConfig};
pub use error::{SgError, SgResult};
