use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::design::selection_matrix;
use super::pattern::SamplingPattern;
use super::plan::TrainingPlan;
use crate::channel::ArrayErrors;
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    Mc,
    Imc,
}

/// Noisy sampled matrix assembled from the received training signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    /// `N_r x N_t`, zero off the pattern.
    pub h_tilde: CMatrix,
    pub pattern: SamplingPattern,
    pub pnr_db: f64,
    /// Per-sample noise variance `sigma^2 = 1 / PNR` (zero when noise is off).
    pub noise_var: f64,
    pub mode: ObservationMode,
    /// Stacked received vector of every stage.
    pub received: Vec<CVector>,
}

impl ObservationMatrix {
    pub fn sigma(&self) -> f64 {
        self.noise_var.sqrt()
    }

    pub fn sample_count(&self) -> usize {
        self.pattern.len()
    }
}

/// `sigma^2 = P / PNR` with `P = 1`; an infinite PNR disables noise.
pub fn noise_variance(pnr_db: f64) -> Result<f64> {
    if pnr_db.is_nan() || pnr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!(
            "pilot-to-noise ratio must be positive, got {pnr_db} dB"
        )));
    }
    if pnr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(10f64.powf(-pnr_db / 10.0))
}

/// Precoder and combiner actually applied at each stage and step.
pub trait TrainingBeams {
    fn precoder(&self, plan: &TrainingPlan, stage: usize) -> Result<CVector>;
    fn combiner(&self, plan: &TrainingPlan, stage: usize, step: usize) -> Result<CMatrix>;
}

/// Exact unit-vector precoders and 0/1 combiners, i.e. what the hybrid designs realize.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdealSelection;

impl TrainingBeams for IdealSelection {
    fn precoder(&self, plan: &TrainingPlan, stage: usize) -> Result<CVector> {
        let mut f = CVector::zeros(plan.n_t);
        f[plan.targets[stage]] = crate::linalg::ONE;
        Ok(f)
    }

    fn combiner(&self, plan: &TrainingPlan, stage: usize, step: usize) -> Result<CMatrix> {
        Ok(selection_matrix(&plan.row_sets[stage][step], plan.n_r))
    }
}

/// Numerically realized `G b` and `Q D` products from the hybrid designs.
#[derive(Debug, Clone, Copy, Default)]
pub struct HybridRealization;

impl TrainingBeams for HybridRealization {
    fn precoder(&self, plan: &TrainingPlan, stage: usize) -> Result<CVector> {
        Ok(plan.stage_design(stage)?.realized())
    }

    fn combiner(&self, plan: &TrainingPlan, stage: usize, step: usize) -> Result<CMatrix> {
        Ok(plan.step_design(stage, step)?.realized())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Processor {
    #[default]
    Ideal,
    Hybrid,
}

/// Runs every training step: `y = W^H H_eff f + W^H (e_r .* n)`, `n ~ CN(0, sigma^2 I)`.
///
/// Noise is drawn as `N_r` values per step in stage/step order, so the same seed gives
/// the same noise regardless of the beams used.
pub fn sound(
    h_eff: &CMatrix,
    rx_errors: &ArrayErrors,
    plan: &TrainingPlan,
    pnr_db: f64,
    seed: u64,
    beams: &dyn TrainingBeams,
    mode: ObservationMode,
) -> Result<ObservationMatrix> {
    if h_eff.nrows() != plan.n_r || h_eff.ncols() != plan.n_t || rx_errors.len() != plan.n_r {
        return Err(Error::DimensionMismatch(format!(
            "plan is {}x{}, channel is {}x{}, receive errors have length {}",
            plan.n_r,
            plan.n_t,
            h_eff.nrows(),
            h_eff.ncols(),
            rx_errors.len()
        )));
    }
    let noise_var = noise_variance(pnr_db)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_r = rx_errors.as_vector();
    let mut h_tilde = CMatrix::zeros(plan.n_r, plan.n_t);
    let mut received = Vec::with_capacity(plan.stages());

    for m in 0..plan.stages() {
        let f = beams.precoder(plan, m)?;
        let hf = h_eff * f;
        let mut stacked = Vec::with_capacity(plan.stage_len(m));
        for (s, rows) in plan.row_sets[m].iter().enumerate() {
            let noise = (noise_var > 0.0).then(|| {
                CVector::from_fn(plan.n_r, |i, _| e_r[i] * complex_gaussian(&mut rng, noise_var))
            });
            if rows.is_empty() {
                continue;
            }
            let w = beams.combiner(plan, m, s)?;
            let mut y = w.adjoint() * &hf;
            if let Some(n) = &noise {
                y += w.adjoint() * n;
            }
            for (c, &row) in rows.iter().enumerate() {
                h_tilde[(row, plan.targets[m])] = y[c];
            }
            stacked.extend(y.iter().copied());
        }
        received.push(CVector::from_vec(stacked));
    }

    Ok(ObservationMatrix {
        h_tilde,
        pattern: plan.pattern.clone(),
        pnr_db,
        noise_var,
        mode,
        received,
    })
}

/// Simulates the training phase with the given front-end processor.
pub fn simulate_training(
    h_eff: &CMatrix,
    rx_errors: &ArrayErrors,
    plan: &TrainingPlan,
    pnr_db: f64,
    seed: u64,
    processor: Processor,
) -> Result<ObservationMatrix> {
    match processor {
        Processor::Ideal => sound(h_eff, rx_errors, plan, pnr_db, seed, &IdealSelection, ObservationMode::Mc),
        Processor::Hybrid => sound(h_eff, rx_errors, plan, pnr_db, seed, &HybridRealization, ObservationMode::Mc),
    }
}
