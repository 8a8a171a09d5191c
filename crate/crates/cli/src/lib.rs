//! Sweeps, tables and plots on top of `qppm-core`.

pub mod error;
pub mod render;
pub mod selftest;
pub mod spec;
pub mod sweep;

pub use error::{CliError, Result};
pub use render::{read_csv, render, write_csv, Format};
pub use spec::{parse_grid, parse_methods, Caps, MethodSel, SweepSpec};
pub use sweep::{run_sweep, Row, RunOptions, Table};
