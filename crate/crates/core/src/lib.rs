//! Spectral-descent optimizers for non-smooth matrix problems.
//!
//! The crate provides the spectral kernels (`msgn`, truncated `msgn`, Ky Fan
//! norms), the SD / TSD / Muon / MuonW / RSD-WD / RTSD-WD iterations, the
//! closed-form convergence constants with brute-force checks, and synthetic
//! LAD sensing, LAD regression and hinge-loss problems.

pub mod error;
pub mod mat;
pub mod metrics;
pub mod optimizers;
pub mod problems;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use mat::Mat;
pub use optimizers::{Algorithm, OptimizerSpec, Schedule, Trace, TraceRecord};
pub use problems::{Objective, Problem, ProblemSpec};
