use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, numerical_rank, sorted_svd, CMatrix};

/// `||H_hat - H_ref||_F^2 / ||H_ref||_F^2`.
pub fn nmse(h_hat: &CMatrix, h_ref: &CMatrix) -> Result<f64> {
    if h_hat.shape() != h_ref.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {:?}, reference is {:?}",
            h_hat.shape(),
            h_ref.shape()
        )));
    }
    let den = frobenius_sq(h_ref);
    if den == 0.0 {
        return Err(Error::DegenerateInput("NMSE reference is the zero matrix".into()));
    }
    Ok(frobenius_sq(&(h_hat - h_ref)) / den)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEfficiency {
    /// bits/s/Hz
    pub value: f64,
    /// The estimate had fewer than `N_s` significant singular values.
    pub padded: bool,
}

fn hermitian_log2_det(m: DMatrix<Complex64>) -> Result<f64> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::DegenerateInput("matrix in the rate expression is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.re.log2()).sum::<f64>())
}

/// Rate with SVD beamforming designed on `h_est` and evaluated on `h_true`.
///
/// Equal power `P / N_s` per stream with `P = SNR` and unit noise variance:
/// `log2 det(I + (W^H W)^-1 W^H H F F^H H^H W)`, computed as
/// `log2 det(W^H W + A A^H) - log2 det(W^H W)` with `A = W^H H F`.
pub fn spectral_efficiency(h_true: &CMatrix, h_est: &CMatrix, n_s: usize, snr_db: f64) -> Result<SpectralEfficiency> {
    if h_true.shape() != h_est.shape() {
        return Err(Error::DimensionMismatch(format!(
            "true channel is {:?}, estimate is {:?}",
            h_true.shape(),
            h_est.shape()
        )));
    }
    let max_streams = h_true.nrows().min(h_true.ncols());
    if n_s == 0 || n_s > max_streams {
        return Err(Error::InvalidParameter(format!("N_s = {n_s} must be in 1..={max_streams}")));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR is NaN".into()));
    }
    if frobenius_sq(h_est) == 0.0 {
        return Err(Error::DegenerateInput("channel estimate is the zero matrix".into()));
    }
    let padded = numerical_rank(h_est, 1e-10) < n_s;
    if snr_db == f64::NEG_INFINITY {
        return Ok(SpectralEfficiency { value: 0.0, padded });
    }
    let power = 10f64.powf(snr_db / 10.0);
    let svd = sorted_svd(h_est);
    let w = svd.u.columns(0, n_s).into_owned();
    let f = svd.v.columns(0, n_s).into_owned() * Complex64::new((power / n_s as f64).sqrt(), 0.0);
    let gram = w.adjoint() * &w;
    let a = w.adjoint() * h_true * f;
    let value = hermitian_log2_det(&gram + &a * a.adjoint())? - hermitian_log2_det(gram)?;
    Ok(SpectralEfficiency { value: value.max(0.0), padded })
}
