//! Solver for conservative solutions of a regularized nonlinear variational
//! wave system.
//!
//! The pipeline maps initial data on the line into characteristic coordinates,
//! solves a semilinear system on rectangles by fixed-point iteration, extracts
//! constant-time curves from the solved region and maps them back. Energy is
//! tracked by finite positive measures so that concentration at wave breaking
//! is preserved instead of lost.

pub mod diagnostics;
pub mod error;
pub mod eulerian;
pub mod evolution;
pub mod goursat;
pub mod lagrangian;
pub mod measures;
pub(crate) mod pl;
pub mod reference;
pub mod report;
pub mod wavespeed;

pub use error::Error;
pub use eulerian::EulerianState;
pub use goursat::{CharRectangle, GridSolution, SolverParams};
pub use lagrangian::{CurveData, PsiBranch, PsiPair};
pub use measures::{MonotoneMap, RadonMeasure};
pub use report::CheckReport;
pub use wavespeed::WaveSpeedModel;

pub type Result<T> = std::result::Result<T, Error>;
