//! De Broglie-Bohm dynamics on a configuration-space grid.

mod equilibrium;
mod field;
mod flow;
mod grid;
mod path;
mod potential;
mod sampling;
mod spectral;
mod wavefunction;

pub use equilibrium::{equilibrium_preservation_check, marginal_ks, EquilibriumReport};
pub use field::{guiding_velocity, VelocityField};
pub use flow::{EngineSettings, FieldFoliation, Foliation, GuidingFlow, Record};
pub use grid::{Axis, Grid, Stencil, MAX_AXES};
pub use path::Path;
pub use potential::{evolve, Potential, Propagator};
pub use sampling::{sample_equilibrium, Ensemble, GridMarginal};
pub use spectral::Spectral;
pub use wavefunction::{Snapshot, WaveFunction};
