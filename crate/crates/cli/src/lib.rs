//! File formats, the command line front end and the parallel sweep driver
//! for [`bethe_core`].
//!
//! - [`io`]: model, certificate, exact-solution and minimization files (JSON)
//!   and optimizer traces (CSV).
//! - [`config`]: sweep configuration files and built-in ensembles.
//! - [`sweep`]: ensemble sweeps over a `β` grid and their tables.

pub mod config;
pub mod error;
pub mod io;
pub mod sweep;

pub use config::{Ensemble, GraphShape, OptimizerSettings, SweepConfig};
pub use error::{CliError, Result};
pub use sweep::{emit_tables, run_sweep, SweepResult, TableFormat};
