//! Classical simulation of approximate span programs.
//!
//! [`spanprog`] computes witness quantities exactly, [`spectral`] builds the
//! reflection products the algorithms walk on, [`qsim`] simulates phase and
//! amplitude estimation from exact outcome distributions while counting
//! queries, [`algorithms`] composes them into decision and estimation
//! procedures, and [`resistance`] applies the whole stack to st-connectivity.

pub mod algorithms;
pub mod error;
pub mod linalg;
pub mod spanprog;
pub mod qsim;
pub mod resistance;
pub mod spectral;

pub use nalgebra;

pub use error::{Error, Result};
pub use linalg::Tolerances;
pub use spanprog::{InputString, SpanProgram, WitnessReport, WitnessSize};
