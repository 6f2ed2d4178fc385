//! Miquel dynamics on the octahedral lattice.

pub mod circle;
pub mod generators;
pub mod io;
pub mod lattice;
pub mod miquel;
pub mod projective;
pub mod reconstruct;
pub mod svg;
pub mod variables;
pub mod verify;
