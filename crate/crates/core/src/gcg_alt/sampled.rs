use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::{ObservationMatrix, SamplingPattern};
use crate::linalg::{CMatrix, ZERO};

/// Values on the sampled support, indexed both by column and by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrix {
    pub n_r: usize,
    pub n_t: usize,
    /// `by_col[t]` holds `(row, value)` pairs sorted by row.
    pub by_col: Vec<Vec<(usize, Complex64)>>,
    /// `by_row[i]` holds `(col, value)` pairs sorted by column.
    pub by_row: Vec<Vec<(usize, Complex64)>>,
}

impl SampledMatrix {
    pub fn from_pattern(m: &CMatrix, pattern: &SamplingPattern) -> Result<Self> {
        if m.nrows() != pattern.n_r || m.ncols() != pattern.n_t {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but the pattern covers {}x{}",
                m.nrows(),
                m.ncols(),
                pattern.n_r,
                pattern.n_t
            )));
        }
        let by_col: Vec<Vec<(usize, Complex64)>> = pattern
            .rows
            .iter()
            .enumerate()
            .map(|(t, rows)| rows.iter().map(|&i| (i, m[(i, t)])).collect())
            .collect();
        Ok(Self::from_columns(pattern.n_r, pattern.n_t, by_col))
    }

    pub fn from_observation(obs: &ObservationMatrix) -> Result<Self> {
        Self::from_pattern(&obs.h_tilde, &obs.pattern)
    }

    pub fn from_columns(n_r: usize, n_t: usize, by_col: Vec<Vec<(usize, Complex64)>>) -> Self {
        let mut by_row = vec![Vec::new(); n_r];
        for (t, col) in by_col.iter().enumerate() {
            for &(i, z) in col {
                by_row[i].push((t, z));
            }
        }
        Self {
            n_r,
            n_t,
            by_col,
            by_row,
        }
    }

    pub fn len(&self) -> usize {
        self.by_col.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_sq(&self) -> f64 {
        self.by_col.iter().flatten().map(|(_, z)| z.norm_sqr()).sum()
    }

    /// Same support with values replaced by `f(row, col, value)`.
    pub fn map(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let by_col = self
            .by_col
            .iter()
            .enumerate()
            .map(|(t, col)| col.iter().map(|&(i, z)| (i, f(i, t, z))).collect())
            .collect();
        Self::from_columns(self.n_r, self.n_t, by_col)
    }

    /// `P(U V^H)` on this support.
    pub fn project_factors(&self, u: &CMatrix, v: &CMatrix) -> Self {
        self.map(|i, t, _| factor_entry(u, v, i, t))
    }

    /// `P(self - U V^H)`.
    pub fn residual(&self, u: &CMatrix, v: &CMatrix) -> Self {
        self.map(|i, t, z| z - factor_entry(u, v, i, t))
    }

    /// Real part of `<self, other>` over the shared support.
    pub fn inner_re(&self, other: &Self) -> f64 {
        self.by_col
            .iter()
            .zip(&other.by_col)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|((_, x), (_, y))| (x.conj() * y).re)
            .sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_r, self.n_t);
        for (t, col) in self.by_col.iter().enumerate() {
            for &(i, z) in col {
                m[(i, t)] = z;
            }
        }
        m
    }

    /// `self * x` for a dense `n_t x l` block.
    pub fn mul(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_r, x.ncols());
        for c in 0..x.ncols() {
            for (t, col) in self.by_col.iter().enumerate() {
                let xt = x[(t, c)];
                if xt == ZERO {
                    continue;
                }
                for &(i, z) in col {
                    out[(i, c)] += z * xt;
                }
            }
        }
        out
    }

    /// `self^H * y` for a dense `n_r x l` block.
    pub fn mul_adjoint(&self, y: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_t, y.ncols());
        for c in 0..y.ncols() {
            for (t, col) in self.by_col.iter().enumerate() {
                let mut acc = ZERO;
                for &(i, z) in col {
                    acc += z.conj() * y[(i, c)];
                }
                out[(t, c)] = acc;
            }
        }
        out
    }
}

/// `(U V^H)[i, t]`.
pub fn factor_entry(u: &CMatrix, v: &CMatrix, i: usize, t: usize) -> Complex64 {
    let mut acc = ZERO;
    for c in 0..u.ncols() {
        acc += u[(i, c)] * v[(t, c)].conj();
    }
    acc
}
