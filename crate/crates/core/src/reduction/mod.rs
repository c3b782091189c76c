//! Phase-reduced SDE coefficients.

pub mod coefficients;
pub mod io;
pub mod noise;
pub mod pairing;
pub mod trig;

pub use coefficients::{
    build_a, build_b, nondegeneracy_check, strat_drift, CoefficientEvaluator, NondegeneracyReport, ReducedModel,
};
pub use io::{read_reduced, reduced_from_str, reduced_to_string, write_reduced};
pub use noise::{basis, NoiseSpec};
pub use pairing::{compute_pairings, fourier_pairings, noise_direction, q_matrix, PairingSet, QBlock};
pub use trig::{Harmonics, TrigSeries};
