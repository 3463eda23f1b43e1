use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Per-antenna gain/phase errors of one array side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayErrors {
    pub values: Vec<Complex64>,
    pub phase_level: f64,
    pub gain_level: f64,
}

impl ArrayErrors {
    pub fn ideal(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(1.0, 0.0); n],
            phase_level: 0.0,
            gain_level: 0.0,
        }
    }

    /// Entries `rho * exp(j kappa)` with `kappa ~ U(-phase_level, phase_level)`
    /// and `rho ~ U(1 - gain_level, 1 + gain_level)`.
    pub fn draw(phase_level: f64, gain_level: f64, n: usize, seed: u64) -> Result<Self> {
        if !(phase_level >= 0.0) || !phase_level.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "phase error level must be >= 0, got {phase_level}"
            )));
        }
        if !(0.0..1.0).contains(&gain_level) {
            return Err(Error::InvalidParameter(format!(
                "gain error level must lie in [0, 1), got {gain_level}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let kappa = phase_level * (2.0 * u - 1.0);
                let rho = 1.0 + gain_level * (2.0 * v - 1.0);
                Complex64::from_polar(rho, kappa)
            })
            .collect();
        Ok(Self {
            values,
            phase_level,
            gain_level,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_vector(&self) -> CVector {
        CVector::from_column_slice(&self.values)
    }

    pub fn is_ideal(&self) -> bool {
        self.values.iter().all(|z| *z == Complex64::new(1.0, 0.0))
    }
}

/// Transmit and receive array errors together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentProfile {
    pub tx: ArrayErrors,
    pub rx: ArrayErrors,
}

impl ImpairmentProfile {
    pub fn ideal(n_t: usize, n_r: usize) -> Self {
        Self {
            tx: ArrayErrors::ideal(n_t),
            rx: ArrayErrors::ideal(n_r),
        }
    }

    /// Same levels on both sides, independent draws derived from `seed`.
    pub fn draw(phase_level: f64, gain_level: f64, n_t: usize, n_r: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            tx: ArrayErrors::draw(phase_level, gain_level, n_t, crate::linalg::mix_seed(seed, 1))?,
            rx: ArrayErrors::draw(phase_level, gain_level, n_r, crate::linalg::mix_seed(seed, 2))?,
        })
    }
}

/// Draws a single-side error vector.
pub fn impairment_profile(phase_level: f64, gain_level: f64, n: usize, seed: u64) -> Result<ArrayErrors> {
    ArrayErrors::draw(phase_level, gain_level, n, seed)
}

/// `diag(e_r) H diag(e_t)^H`.
pub fn apply_impairments(h: &CMatrix, profile: &ImpairmentProfile) -> Result<CMatrix> {
    if profile.rx.len() != h.nrows() || profile.tx.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{} but errors have lengths rx={} tx={}",
            h.nrows(),
            h.ncols(),
            profile.rx.len(),
            profile.tx.len()
        )));
    }
    let er = &profile.rx.values;
    let et = &profile.tx.values;
    Ok(CMatrix::from_fn(h.nrows(), h.ncols(), |i, k| er[i] * h[(i, k)] * et[k].conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_matrix, singular_values};
    use std::f64::consts::PI;

    fn random_h(seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        complex_gaussian_matrix(&mut rng, 6, 9, 1.0)
    }

    #[test]
    fn identity_errors_leave_channel_unchanged() {
        let h = random_h(1);
        let p = ImpairmentProfile::ideal(9, 6);
        assert_eq!(apply_impairments(&h, &p).unwrap(), h);
    }

    #[test]
    fn common_receive_phase_factors_out() {
        let h = random_h(2);
        let mut p = ImpairmentProfile::ideal(9, 6);
        p.rx.values = vec![Complex64::new(0.0, 1.0); 6];
        let out = apply_impairments(&h, &p).unwrap();
        let expect = &h * Complex64::new(0.0, 1.0);
        assert!(crate::linalg::max_abs_diff(&out, &expect) < 1e-15);
    }

    #[test]
    fn entrywise_oracle() {
        let h = random_h(3);
        let p = ImpairmentProfile::draw(0.7, 0.3, 9, 6, 4).unwrap();
        let out = apply_impairments(&h, &p).unwrap();
        for i in 0..6 {
            for k in 0..9 {
                let e = p.rx.values[i] * h[(i, k)] * p.tx.values[k].conj();
                assert!((out[(i, k)] - e).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let h = random_h(5);
        let p = ImpairmentProfile::ideal(6, 9);
        assert!(matches!(apply_impairments(&h, &p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_levels_give_ones() {
        let e = impairment_profile(0.0, 0.0, 16, 7).unwrap();
        assert!(e.is_ideal());
    }

    #[test]
    fn gain_level_one_rejected() {
        assert!(impairment_profile(0.1, 1.0, 4, 0).is_err());
        assert!(impairment_profile(-0.1, 0.1, 4, 0).is_err());
    }

    #[test]
    fn bounds_and_mean_modulus() {
        let e = impairment_profile(PI / 4.0, 0.2, 100_000, 8).unwrap();
        let mut sum = 0.0;
        for z in &e.values {
            assert!(z.arg().abs() <= PI / 4.0 + 1e-15);
            assert!(z.norm() >= 0.8 - 1e-15 && z.norm() <= 1.2 + 1e-15);
            sum += z.norm();
        }
        let mean = sum / e.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
    }

    #[test]
    fn spectral_norm_bound() {
        let h = random_h(9);
        let p = ImpairmentProfile::draw(0.5, 0.25, 9, 6, 10).unwrap();
        let out = apply_impairments(&h, &p).unwrap();
        let bound = 1.25 * 1.25 * singular_values(&h)[0];
        assert!(singular_values(&out)[0] <= bound + 1e-12);
    }
}
