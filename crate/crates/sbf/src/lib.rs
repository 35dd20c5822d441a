//! File formats, the LP back-end and command implementations for `sbf`.

pub mod cli;
pub mod error;
pub mod io;
pub mod lp_format;
pub mod montecarlo;
pub mod problem_file;
pub mod run;
pub mod solver;
pub mod sweep;

pub use error::{CliError, CliResult};
pub use problem_file::ProblemFile;
pub use solver::ClarabelSolver;
