//! Inductive completion: sound `C = X_L^H H X_R` through unitary feature columns,
//! complete `C`, then map back.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ArrayErrors;
use crate::error::{Error, Result};
use crate::frontend::{sound, ObservationMatrix, ObservationMode, TrainingBeams, TrainingPlan};
use crate::linalg::{numerical_rank, sorted_svd, CMatrix, CVector, MatrixPayload};

/// Square unitary feature matrices for the receive (`X_L`) and transmit (`X_R`) sides.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub x_l: CMatrix,
    pub x_r: CMatrix,
    pub seed: Option<u64>,
}

fn unit_modulus_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
}

/// Left singular vectors of random unit-modulus matrices.
pub fn generate_features(n_r: usize, n_t: usize, seed: u64) -> Result<FeaturePair> {
    if n_r == 0 || n_t == 0 {
        return Err(Error::InvalidParameter("feature dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = unit_modulus_matrix(&mut rng, n_r);
    let b = unit_modulus_matrix(&mut rng, n_t);
    Ok(FeaturePair {
        x_l: sorted_svd(&a).u,
        x_r: sorted_svd(&b).u,
        seed: Some(seed),
    })
}

/// Unitary DFT matrix, `F[n, k] = exp(j 2 pi n k / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |a, b| {
        Complex64::from_polar(s, 2.0 * PI * ((a * b) % n) as f64 / n as f64)
    })
}

impl FeaturePair {
    pub fn identity(n_r: usize, n_t: usize) -> Self {
        Self {
            x_l: CMatrix::identity(n_r, n_r),
            x_r: CMatrix::identity(n_t, n_t),
            seed: None,
        }
    }

    pub fn dft(n_r: usize, n_t: usize) -> Self {
        Self {
            x_l: dft_matrix(n_r),
            x_r: dft_matrix(n_t),
            seed: None,
        }
    }

    pub fn n_r(&self) -> usize {
        self.x_l.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.x_r.nrows()
    }

    /// `C = X_L^H H X_R`.
    pub fn transform(&self, h: &CMatrix) -> CMatrix {
        self.x_l.adjoint() * h * &self.x_r
    }

    pub fn to_document(&self) -> FeatureDocument {
        FeatureDocument {
            seed: self.seed,
            x_l: MatrixPayload::from_matrix(&self.x_l),
            x_r: MatrixPayload::from_matrix(&self.x_r),
        }
    }
}

/// Full-matrix export for cross-implementation checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureDocument {
    pub seed: Option<u64>,
    pub x_l: MatrixPayload,
    pub x_r: MatrixPayload,
}

/// `f_m = X_R(:, j_m)` and `W_{m,s} = X_L(:, rows)`, applied digitally.
pub struct FeatureBeams<'a>(pub &'a FeaturePair);

impl TrainingBeams for FeatureBeams<'_> {
    fn precoder(&self, plan: &TrainingPlan, stage: usize) -> Result<CVector> {
        Ok(self.0.x_r.column(plan.targets[stage]).into_owned())
    }

    fn combiner(&self, plan: &TrainingPlan, stage: usize, step: usize) -> Result<CMatrix> {
        Ok(self.0.x_l.select_columns(plan.row_sets[stage][step].iter()))
    }
}

/// Sounds `C~` with the feature columns over the plan's sampled entries.
pub fn simulate_imc_training(
    h_eff: &CMatrix,
    rx_errors: &ArrayErrors,
    features: &FeaturePair,
    plan: &TrainingPlan,
    pnr_db: f64,
    seed: u64,
) -> Result<ObservationMatrix> {
    if features.n_r() != plan.n_r || features.n_t() != plan.n_t {
        return Err(Error::DimensionMismatch(format!(
            "features are {}x{} but the plan is {}x{}",
            features.n_r(),
            features.n_t(),
            plan.n_r,
            plan.n_t
        )));
    }
    sound(h_eff, rx_errors, plan, pnr_db, seed, &FeatureBeams(features), ObservationMode::Imc)
}

/// `H = X_L C X_R^H`; unitarity turns the inverses into adjoints.
pub fn recover_channel(c_hat: &CMatrix, features: &FeaturePair) -> Result<CMatrix> {
    if c_hat.nrows() != features.n_r() || c_hat.ncols() != features.n_t() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, features are {}x{}",
            c_hat.nrows(),
            c_hat.ncols(),
            features.n_r(),
            features.n_t()
        )));
    }
    Ok(&features.x_l * c_hat * features.x_r.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    pub rank: usize,
    /// `max_i ||U^H x_{L,i}||`.
    pub max_left: f64,
    /// `max_j ||V^H x_{R,j}||`.
    pub max_right: f64,
    /// `max_{i,j} |x_{L,i}^H U V^H x_{R,j}|`.
    pub max_joint: f64,
    /// Largest feature column norm over both sides.
    pub max_column_norm: f64,
    /// Smallest `mu_0` meeting all three incoherence bounds.
    pub mu0: f64,
    /// Smallest `mu_1` meeting the self-incoherence bound with `d = N`.
    pub mu1: f64,
}

pub fn incoherence_report(features: &FeaturePair, h: &CMatrix) -> Result<IncoherenceReport> {
    let rank = numerical_rank(h, 1e-10);
    if rank == 0 {
        return Err(Error::UndefinedRank);
    }
    let svd = sorted_svd(h);
    let u = svd.u.columns(0, rank).into_owned();
    let v = svd.v.columns(0, rank).into_owned();
    let (n_r, n_t) = (h.nrows() as f64, h.ncols() as f64);
    let r = rank as f64;

    let left = u.adjoint() * &features.x_l;
    let right = v.adjoint() * &features.x_r;
    let col_max = |m: &CMatrix| (0..m.ncols()).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    let max_left = col_max(&left);
    let max_right = col_max(&right);
    let joint = left.adjoint() * &right;
    let max_joint = joint.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_column_norm = col_max(&features.x_l).max(col_max(&features.x_r));

    let mu0 = (max_left * max_left * n_r / r)
        .max(max_right * max_right * n_t / r)
        .max(max_joint * max_joint * n_r * n_t / r);
    Ok(IncoherenceReport {
        rank,
        max_left,
        max_right,
        max_joint,
        max_column_norm,
        mu0,
        mu1: max_column_norm * max_column_norm,
    })
}
