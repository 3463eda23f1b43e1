//! Small complex linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Draws a circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    // column-major fill keeps the draw order stable
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn kron(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Thin SVD with singular values sorted in descending order.
pub struct SortedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns (not the adjoint).
    pub v: CMatrix,
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

// nalgebra 0.35's complex SVD can return wrong singular vectors for rank-deficient
// inputs, so decompositions go through faer.
pub fn sorted_svd(m: &CMatrix) -> SortedSvd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return SortedSvd { u: CMatrix::zeros(m.nrows(), 0), singular_values: Vec::new(), v: CMatrix::zeros(m.ncols(), 0) };
    }
    let svd = to_faer(m).thin_svd().expect("SVD converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.partial_cmp(&s[a].re).unwrap_or(std::cmp::Ordering::Equal));
    SortedSvd {
        u: CMatrix::from_fn(m.nrows(), k, |i, c| u[(i, order[c])]),
        singular_values: order.iter().map(|&c| s[c].re).collect(),
        v: CMatrix::from_fn(m.ncols(), k, |i, c| v[(i, order[c])]),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_faer(m).singular_values().expect("SVD converges").into_iter().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn nuclear_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// `a^H b` for two complex vectors.
pub fn dot_h(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Complex matrix held as separate real and imaginary parts, so products run
/// through the real GEMM kernel (much faster than the generic complex one).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn new(m: &CMatrix) -> Self {
        Self { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    pub fn mul(&self, rhs: &SplitMatrix) -> SplitMatrix {
        assert_eq!(self.re.ncols(), rhs.re.nrows(), "SplitMatrix::mul: inner dimensions differ");
        SplitMatrix {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }

    pub fn to_complex(&self) -> CMatrix {
        self.re.zip_map(&self.im, Complex64::new)
    }
}

pub fn split_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    SplitMatrix::new(a).mul(&SplitMatrix::new(b)).to_complex()
}

/// Row-major interleaved real/imaginary payload used by JSON exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPayload {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixPayload {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(2 * m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)].re);
                data.push(m[(i, j)].im);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != 2 * self.rows * self.cols {
            return Err(Error::DimensionMismatch(format!(
                "payload has {} reals, expected {}",
                self.data.len(),
                2 * self.rows * self.cols
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = 2 * (i * self.cols + j);
            Complex64::new(self.data[k], self.data[k + 1])
        }))
    }
}

/// SplitMix64 finalizer; used to derive independent sub-seeds.
pub fn mix_seed(base: u64, tag: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn real_matrix_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
