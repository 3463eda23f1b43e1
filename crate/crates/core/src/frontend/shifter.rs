use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// The `2^I` quantized phases `exp(j 2 pi k / 2^I)` available to an analog phase shifter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseShifterSet {
    pub bits: u32,
}

impl PhaseShifterSet {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 30 {
            return Err(Error::InvalidParameter(format!(
                "phase shifter resolution must be 1..=30 bits, got {bits}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    /// Quarter turns are returned exactly so `+-1` and `+-j` carry no roundoff.
    pub fn value(&self, index: usize) -> Complex64 {
        let n = self.levels();
        let k = index % n;
        if (4 * k) % n == 0 {
            return match 4 * k / n {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
        }
        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
    }

    pub fn values(&self) -> Vec<Complex64> {
        (0..self.levels()).map(|k| self.value(k)).collect()
    }

    /// Exact (bitwise) membership test.
    pub fn contains(&self, z: Complex64) -> bool {
        self.values().contains(&z)
    }
}

/// Analog matrix stored as phase indices with a shared real scale, so every
/// entry is `scale * shifter.value(index)` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major phase indices.
    pub indices: Vec<usize>,
    pub scale: f64,
    pub shifter: PhaseShifterSet,
}

impl AnalogMatrix {
    pub fn index(&self, i: usize, j: usize) -> usize {
        self.indices[i * self.cols + j]
    }

    /// Entries before the shared scale, exact members of the phase set.
    pub fn unscaled(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.shifter.value(self.index(i, j)))
    }

    pub fn to_matrix(&self) -> CMatrix {
        self.unscaled() * Complex64::new(self.scale, 0.0)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.indices.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}
