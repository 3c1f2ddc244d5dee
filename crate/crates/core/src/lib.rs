//! Minkowski spacetime extended with configuration-space (hap) coordinates,
//! with a De Broglie-Bohm trajectory engine, cross-observer coordinate
//! changes and the experiments built on them.

pub mod bohmengine;
pub mod config;
pub mod error;
pub mod experiments;
pub mod framechange;
pub mod hapgeometry;
pub mod io;
pub mod relativity;
pub mod stats;

pub use error::{Error, Result};
