//! Hermite-Taylor correction function method for Maxwell's equations.
pub mod basis;
pub mod cfm;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod hermite;
pub mod exact;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod runner;
pub mod solver;
pub use error::{Error, Result};
