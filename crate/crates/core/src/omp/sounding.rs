use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ArrayErrors;
use crate::error::{Error, Result};
use crate::frontend::{noise_variance, PhaseShifterSet};
use crate::linalg::{complex_gaussian, CMatrix, CVector};

/// Random quantized-phase sounding.
///
/// Every transmit beam is paired with every receive beam, so the observation
/// block is `Y = W^H H F` and each entry is one measurement `w^H H f`.
/// Receive beams come in groups of `k_r` (one group per receive step).
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingOperator {
    /// `N_t x M_t`, unit-norm columns.
    pub f: CMatrix,
    /// `N_r x M_r`, unit-norm columns.
    pub w: CMatrix,
    /// Receive beams per step, used to group the noise draws.
    pub k_r: usize,
}

fn random_beams(n: usize, count: usize, shifter: &PhaseShifterSet, rng: &mut ChaCha8Rng) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let levels = shifter.levels();
    CMatrix::from_fn(n, count, |_, _| shifter.value(rng.random_range(0..levels)) * scale)
}

impl SoundingOperator {
    /// Wraps explicit beams; columns are normalized to unit norm.
    pub fn from_beams(f: CMatrix, w: CMatrix, k_r: usize) -> Result<Self> {
        if f.ncols() == 0 || w.ncols() == 0 {
            return Err(Error::Config("sounding needs at least one beam on each side".into()));
        }
        if k_r == 0 {
            return Err(Error::InvalidParameter("k_r must be positive".into()));
        }
        let normalize = |mut m: CMatrix| -> Result<CMatrix> {
            for mut c in m.column_iter_mut() {
                let n = c.norm();
                if n == 0.0 {
                    return Err(Error::DegenerateInput("zero sounding beam".into()));
                }
                c.unscale_mut(n);
            }
            Ok(m)
        };
        Ok(Self { f: normalize(f)?, w: normalize(w)?, k_r })
    }

    pub fn n_t(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_r(&self) -> usize {
        self.w.nrows()
    }

    pub fn num_measurements(&self) -> usize {
        self.f.ncols() * self.w.ncols()
    }

    /// Noiseless observation block `W^H H F`.
    pub fn apply(&self, h: &CMatrix) -> Result<CMatrix> {
        if h.shape() != (self.n_r(), self.n_t()) {
            return Err(Error::DimensionMismatch(format!(
                "channel is {:?}, sounding expects {}x{}",
                h.shape(),
                self.n_r(),
                self.n_t()
            )));
        }
        Ok(self.w.adjoint() * (h * &self.f))
    }

    /// Row of the sensing matrix for measurement `(rx, tx)` acting on column-major `vec(H)`.
    pub fn sensing_row(&self, rx: usize, tx: usize) -> CVector {
        let (n_r, n_t) = (self.n_r(), self.n_t());
        CVector::from_fn(n_r * n_t, |idx, _| {
            let (i, j) = (idx % n_r, idx / n_r);
            self.w[(i, rx)].conj() * self.f[(j, tx)]
        })
    }

    /// Noisy sounding: for each transmit beam and receive step,
    /// `y = W_s^H (H f + E_r n)` with `n ~ CN(0, sigma^2 I)`.
    pub fn sound(&self, h_eff: &CMatrix, rx_errors: &ArrayErrors, pnr_db: f64, seed: u64) -> Result<CMatrix> {
        let noise_var = noise_variance(pnr_db)?;
        if rx_errors.len() != self.n_r() {
            return Err(Error::DimensionMismatch(format!(
                "receive errors have length {}, array has {}",
                rx_errors.len(),
                self.n_r()
            )));
        }
        let mut y = self.apply(h_eff)?;
        if noise_var == 0.0 {
            return Ok(y);
        }
        let e_r = rx_errors.as_vector();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m_r = self.w.ncols();
        for tx in 0..self.f.ncols() {
            let mut start = 0;
            while start < m_r {
                let end = (start + self.k_r).min(m_r);
                let n = CVector::from_fn(self.n_r(), |i, _| e_r[i] * complex_gaussian(&mut rng, noise_var));
                for rx in start..end {
                    y[(rx, tx)] += self.w.column(rx).dotc(&n);
                }
                start = end;
            }
        }
        Ok(y)
    }
}

/// Draws `num_tx` transmit beams and `num_rx` receive beams with i.i.d. phase-set entries.
#[allow(clippy::too_many_arguments)]
pub fn build_sounding(
    n_t: usize,
    n_r: usize,
    k_t: usize,
    k_r: usize,
    num_tx: usize,
    num_rx: usize,
    shifter: &PhaseShifterSet,
    seed: u64,
) -> Result<SoundingOperator> {
    if n_t == 0 || n_r == 0 || k_t == 0 || k_r == 0 {
        return Err(Error::InvalidParameter("array sizes and RF chain counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_beams(n_t, num_tx, shifter, &mut rng);
    let w = random_beams(n_r, num_rx, shifter, &mut rng);
    SoundingOperator::from_beams(f, w, k_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_matrix, ONE};

    #[test]
    fn selection_special_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = complex_gaussian_matrix(&mut rng, 8, 16, 1.0);
        let mut f = CMatrix::zeros(16, 1);
        f[(0, 0)] = ONE;
        let mut w = CMatrix::zeros(8, 1);
        w[(0, 0)] = ONE;
        let s = SoundingOperator::from_beams(f, w, 1).unwrap();
        let y = s.apply(&h).unwrap();
        assert_eq!(y.shape(), (1, 1));
        assert_eq!(y[(0, 0)], h[(0, 0)]);
    }

    #[test]
    fn sensing_rows_match_bilinear_form() {
        let shifter = PhaseShifterSet::new(2).unwrap();
        let s = build_sounding(16, 8, 2, 4, 10, 10, &shifter, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = complex_gaussian_matrix(&mut rng, 8, 16, 1.0);
        let vec_h = CVector::from_column_slice(h.as_slice());
        let y = s.apply(&h).unwrap();
        for rx in 0..10 {
            for tx in 0..10 {
                let row = s.sensing_row(rx, tx);
                let direct = s.w.column(rx).dotc(&(&h * s.f.column(tx)));
                let via_phi = row.transpose() * &vec_h;
                assert!((via_phi[(0, 0)] - direct).norm() < 1e-12);
                assert!((y[(rx, tx)] - direct).norm() < 1e-12);
                assert!((row.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beams_are_quantized_and_unit_norm() {
        let shifter = PhaseShifterSet::new(3).unwrap();
        let s = build_sounding(32, 8, 2, 4, 5, 8, &shifter, 9).unwrap();
        for c in s.f.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
            for z in c.iter() {
                let scaled = z * (32f64).sqrt();
                assert!(shifter.values().iter().any(|v| (v - scaled).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn noise_variance_per_measurement() {
        let shifter = PhaseShifterSet::new(2).unwrap();
        let s = build_sounding(4, 8, 1, 4, 200, 8, &shifter, 5).unwrap();
        let h = CMatrix::zeros(8, 4);
        let y = s.sound(&h, &ArrayErrors::ideal(8), 0.0, 6).unwrap();
        let mean = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }
}
