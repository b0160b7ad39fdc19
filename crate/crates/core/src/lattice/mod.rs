//! Box geometry, configurations, Hamiltonian and Metropolis moves.

mod config;
mod geometry;
mod moves;
mod params;

pub use config::{
    active_bonds, checkerboard, droplets, energy_level, hamiltonian, observables, Configuration,
    Observables,
};
pub use geometry::{lattice_neighbors, Geometry, Site, MAX_SITES};
pub use moves::{communicate, for_each_move, neighbors, rate, swap_types, MoveKind, Rate};
pub use params::{parse_rational, rational_text, EnergyScale, ModelParams, Rational};
