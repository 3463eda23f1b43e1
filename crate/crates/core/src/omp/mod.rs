//! Dictionary-based OMP baseline with random quantized-phase sounding.

mod dictionary;
mod solver;
mod sounding;

pub use dictionary::{build_dictionary, Dictionary, GridPoint};
pub use solver::{omp_estimate, stopping_threshold, threshold_factor, OmpEstimate, OmpStop, DEFAULT_MAX_PATHS};
pub use sounding::{build_sounding, SoundingOperator};
