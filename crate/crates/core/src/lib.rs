pub mod channel;
pub mod error;
pub mod estimator;
pub mod frontend;
pub mod gcg_alt;
pub mod harness;
pub mod imc;
pub mod linalg;
pub mod omp;

pub use error::{Error, Result};
