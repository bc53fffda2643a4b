//! Command line front end over the lattice transport library.
//!
//! The `latdiff` binary exposes five subcommands: `figure` emits the data
//! behind the standard panels, `propagate` runs one density-matrix
//! evolution, `validate` runs the analytic-vs-numeric suites, `sweep`
//! evaluates closed-form targets over parameter grids, and `difflength`
//! summarizes lifetime-averaged diffusion lengths. All tabular output is
//! byte-stable CSV; see [`csvout`] for the format.

pub mod cli;
pub mod csvout;
pub mod figures;
pub mod pool;

pub use cli::{run, Cli};
