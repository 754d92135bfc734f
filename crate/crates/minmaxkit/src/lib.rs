//! Toolkit for nonconvex, strongly concave min-max optimization: three
//! single-loop schemes, admissible step-size calculators, runtime
//! certificates for the underlying descent and tracking inequalities, and a
//! matrix-free image-restoration instance.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod image;
pub mod imaging;
pub mod linops;
pub mod oracle;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod stepsize;
pub mod vecops;

pub use error::{Error, Result};
pub use problem::{MinMaxProblem, SmoothnessConstants};
pub use solver::{run_solver, IterateTrace, Scheme, StepSizeConfig, StopRule, TraceOpts};
