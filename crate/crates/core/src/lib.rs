#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod evolve;
pub mod field;
pub mod grid;
pub mod isochron;
pub mod measure;
pub mod model;
pub mod phase;
pub mod pulse;
pub mod pulse_io;
pub mod reduction;
pub mod spde;
pub mod spectral;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
pub use field::FieldState;
pub use grid::Grid1D;
pub use model::{FhnParams, ModelSpec, NoiseShape, Reaction};
