//! Two-type Kawasaki lattice gas on a finite box: exact landscapes,
//! capacities, random-walk estimates and kinetic Monte Carlo.

pub mod error;
pub mod kmc;
pub mod landscape;
pub mod lattice;
pub mod potential;
pub mod srw;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
pub use landscape::{Analysis, Landscape, Level, Partition, StateSpace};
pub use lattice::{Configuration, Geometry, ModelParams, Rational};
