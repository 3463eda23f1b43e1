use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Axis, ExperimentConfig};
use super::metrics::{nmse, spectral_efficiency, to_db};
use crate::channel::{
    apply_impairments, energy_capture_rank, generate_channel, ArrayErrors, ChannelRealization, ImpairmentProfile,
};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, Registry, Trial, TrialSeeds};
use crate::frontend::{assemble_training_plan, noise_variance, rows_per_column, PlanConfig, SamplingPattern, TrainingPlan};
use crate::linalg::{mix_seed, CMatrix};

/// Energy fraction defining `r_sub`.
pub const SUBSPACE_ENERGY: f64 = 0.95;

/// Fully resolved parameters of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetup {
    pub stages: usize,
    pub steps: usize,
    pub p: Option<f64>,
    pub pnr_db: f64,
    pub phase_tx: f64,
    pub phase_rx: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    /// `(axis name, value)` in nesting order.
    pub coords: Vec<(String, f64)>,
    pub setup: PointSetup,
}

/// Cartesian product of the configured axes, last axis fastest.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let axes = cfg.axes();
    let base = PointSetup {
        stages: cfg.training.stages,
        steps: cfg.training.steps,
        p: cfg.training.p,
        pnr_db: f64::NAN,
        phase_tx: cfg.impairments.phase_tx.0,
        phase_rx: cfg.impairments.phase_rx.0,
        gain_tx: cfg.impairments.gain_tx,
        gain_rx: cfg.impairments.gain_rx,
    };
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut picks = vec![0usize; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            picks[k] = rem % a.values.len();
            rem /= a.values.len();
        }
        let mut setup = base.clone();
        let mut coords = Vec::with_capacity(axes.len());
        for (a, &i) in axes.iter().zip(&picks) {
            let v = a.values[i].value();
            match a.axis {
                Axis::Steps => setup.steps = v as usize,
                Axis::Stages => setup.stages = v as usize,
                Axis::P => setup.p = Some(v),
                Axis::PnrDb => setup.pnr_db = v,
                Axis::PhaseLevel => (setup.phase_tx, setup.phase_rx) = (v, v),
                Axis::GainLevel => (setup.gain_tx, setup.gain_rx) = (v, v),
                Axis::PhaseTx => setup.phase_tx = v,
                Axis::PhaseRx => setup.phase_rx = v,
                Axis::GainTx => setup.gain_tx = v,
                Axis::GainRx => setup.gain_rx = v,
            }
            coords.push((a.axis.name().to_string(), v));
        }
        points.push(SweepPoint { index, coords, setup });
    }
    points
}

/// Trial seeds depend on the trial index only, so every sweep point reuses the
/// same channels, error draws, patterns and noise streams.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix_seed(master, trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub coords: Vec<(String, f64)>,
    pub trial: usize,
    pub estimator: String,
    pub nmse: f64,
    pub nmse_db: f64,
    /// One value per configured SNR point.
    pub se: Vec<f64>,
    pub r_hat: usize,
    pub r_sub: usize,
    pub flops: f64,
    pub seed: u64,
    pub wall_ms: f64,
    /// `ok`, `se_padded`, or `error: ...`.
    pub status: String,
}

impl ResultRecord {
    pub fn is_ok(&self) -> bool {
        !self.status.starts_with("error")
    }

    pub fn coord(&self, axis: &str) -> Option<f64> {
        self.coords.iter().find(|(a, _)| a == axis).map(|&(_, v)| v)
    }
}

/// Per-column sample count: explicit `p`, or every row the plan can visit.
pub fn per_column_count(cfg: &ExperimentConfig, setup: &PointSetup) -> Result<usize> {
    let (n_t, n_r, k_r) = (cfg.system.n_t, cfg.system.n_r, cfg.system.k_r);
    match setup.p {
        Some(p) => rows_per_column(n_r, p),
        None => Ok(n_r.min(setup.stages * setup.steps * (k_r - 1) / n_t)),
    }
}

/// Channel, impairments and plan shared by every estimator of one trial.
pub struct TrialInputs {
    pub realization: ChannelRealization,
    pub profile: ImpairmentProfile,
    pub h_eff: CMatrix,
    pub plan: TrainingPlan,
    pub noise_var: f64,
    pub r_sub: usize,
    pub seeds: TrialSeeds,
}

pub fn prepare_trial(cfg: &ExperimentConfig, setup: &PointSetup, seed: u64) -> Result<TrialInputs> {
    let sys = &cfg.system;
    let (tx, rx) = sys.geometries()?;
    let seeds = TrialSeeds::derive(seed);
    let realization = generate_channel(&cfg.channel.params(), &tx, &rx, seeds.channel)?;
    let profile = ImpairmentProfile {
        tx: ArrayErrors::draw(setup.phase_tx, setup.gain_tx, sys.n_t, mix_seed(seeds.impairments, 1))?,
        rx: ArrayErrors::draw(setup.phase_rx, setup.gain_rx, sys.n_r, mix_seed(seeds.impairments, 2))?,
    };
    let h_eff = apply_impairments(&realization.h, &profile)?;
    let count = per_column_count(cfg, setup)?;
    let pattern = SamplingPattern::with_count(sys.n_t, sys.n_r, count, seeds.pattern)?;
    let plan = assemble_training_plan(
        &pattern,
        &PlanConfig {
            k_t: sys.k_t,
            k_r: sys.k_r,
            bits: sys.bits,
            stages: setup.stages,
            steps_per_stage: setup.steps,
            transmit_exponents: None,
            receive_block: None,
        },
    )?;
    let noise_var = noise_variance(setup.pnr_db)?;
    let r_sub = energy_capture_rank(&h_eff, SUBSPACE_ENERGY)?;
    Ok(TrialInputs { realization, profile, h_eff, plan, noise_var, r_sub, seeds })
}

fn run_estimator(
    cfg: &ExperimentConfig,
    est: &dyn Estimator,
    inputs: &TrialInputs,
    setup: &PointSetup,
) -> (Result<(f64, usize, f64)>, Vec<f64>, bool) {
    let (tx, rx) = match cfg.system.geometries() {
        Ok(g) => g,
        Err(e) => return (Err(e), Vec::new(), false),
    };
    let trial = Trial {
        h_eff: &inputs.h_eff,
        profile: &inputs.profile,
        plan: &inputs.plan,
        tx: &tx,
        rx: &rx,
        pnr_db: setup.pnr_db,
        noise_var: inputs.noise_var,
        seeds: inputs.seeds,
    };
    let out = match est.estimate(&trial) {
        Ok(o) => o,
        Err(e) => return (Err(e), vec![f64::NAN; cfg.se.snr_db.len()], false),
    };
    let n = match nmse(&out.h_hat, &inputs.h_eff) {
        Ok(n) => n,
        Err(e) => return (Err(e), vec![f64::NAN; cfg.se.snr_db.len()], false),
    };
    let mut padded = false;
    let mut se = Vec::with_capacity(cfg.se.snr_db.len());
    for &snr in &cfg.se.snr_db {
        match spectral_efficiency(&inputs.h_eff, &out.h_hat, cfg.n_s(), snr) {
            Ok(s) => {
                padded |= s.padded;
                se.push(s.value);
            }
            Err(_) => se.push(f64::NAN),
        }
    }
    (Ok((n, out.r_hat, out.flops)), se, padded)
}

/// Runs one trial of one sweep point for every estimator.
pub fn run_trial(
    cfg: &ExperimentConfig,
    estimators: &[Box<dyn Estimator>],
    point: &SweepPoint,
    trial: usize,
) -> Vec<ResultRecord> {
    let seed = trial_seed(cfg.seed, trial);
    let nan_se = vec![f64::NAN; cfg.se.snr_db.len()];
    let failed = |name: &str, e: &Error, r_sub: usize| ResultRecord {
        coords: point.coords.clone(),
        trial,
        estimator: name.to_string(),
        nmse: f64::NAN,
        nmse_db: f64::NAN,
        se: nan_se.clone(),
        r_hat: 0,
        r_sub,
        flops: 0.0,
        seed,
        wall_ms: 0.0,
        status: format!("error: {e}"),
    };
    let inputs = match prepare_trial(cfg, &point.setup, seed) {
        Ok(i) => i,
        Err(e) => return estimators.iter().map(|est| failed(est.name(), &e, 0)).collect(),
    };
    estimators
        .iter()
        .map(|est| {
            let start = Instant::now();
            let (res, se, padded) = run_estimator(cfg, est.as_ref(), &inputs, &point.setup);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match res {
                Ok((n, r_hat, flops)) => ResultRecord {
                    coords: point.coords.clone(),
                    trial,
                    estimator: est.name().to_string(),
                    nmse: n,
                    nmse_db: to_db(n),
                    se,
                    r_hat,
                    r_sub: inputs.r_sub,
                    flops,
                    seed,
                    wall_ms,
                    status: if padded { "se_padded".into() } else { "ok".into() },
                },
                Err(e) => ResultRecord { wall_ms, ..failed(est.name(), &e, inputs.r_sub) },
            }
        })
        .collect()
}

pub fn build_estimators(cfg: &ExperimentConfig, registry: &Registry) -> Result<Vec<Box<dyn Estimator>>> {
    let settings = cfg.settings();
    cfg.estimators
        .iter()
        .map(|name| registry.create(name, &settings).map_err(|e| Error::Config(e.to_string())))
        .collect()
}

/// All records in (sweep point, trial, estimator) order; trials run in parallel.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_sweep_with(cfg, &Registry::builtin())
}

pub fn run_sweep_with(cfg: &ExperimentConfig, registry: &Registry) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let estimators = build_estimators(cfg, registry)?;
    let points = sweep_points(cfg);
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let batches: Vec<Vec<ResultRecord>> =
        jobs.par_iter().map(|&(p, t)| run_trial(cfg, &estimators, &points[p], t)).collect();
    Ok(batches.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{AxisValue, SweepAxis};

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::ula();
        cfg.system.n_t = 16;
        cfg.system.n_r = 8;
        cfg.system.k_t = 2;
        cfg.training.stages = 16;
        cfg.training.steps = 2;
        cfg.trials = 3;
        cfg.estimators = vec!["gcg-alt".into(), "omp".into(), "perfect-csi".into()];
        cfg.se.snr_db = vec![-10.0, 0.0];
        cfg
    }

    #[test]
    fn points_nest_last_axis_fastest() {
        let mut cfg = small();
        cfg.sweep = vec![SweepAxis { axis: Axis::Steps, values: vec![AxisValue::from(1.0), AxisValue::from(2.0)] }];
        cfg.training.pnr_db = crate::harness::config::OneOrMany::Many(vec![0.0, 10.0, 20.0]);
        let pts = sweep_points(&cfg);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].coords, vec![("steps".to_string(), 1.0), ("pnr_db".to_string(), 10.0)]);
        assert_eq!(pts[3].setup.steps, 2);
        assert_eq!(pts[3].setup.pnr_db, 0.0);
    }

    #[test]
    fn default_count_fills_the_plan() {
        let cfg = ExperimentConfig::ula();
        let pts = sweep_points(&cfg);
        assert_eq!(per_column_count(&cfg, &pts[0].setup).unwrap(), 12);
        let mut setup = pts[0].setup.clone();
        setup.steps = 8;
        assert_eq!(per_column_count(&cfg, &setup).unwrap(), 24);
        setup.steps = 16;
        assert_eq!(per_column_count(&cfg, &setup).unwrap(), 32);
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let cfg = small();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.trial, y.trial);
            assert_eq!(x.estimator, y.estimator);
            assert_eq!(x.nmse.to_bits(), y.nmse.to_bits());
            assert_eq!(x.seed, y.seed);
        }
        assert_eq!(a[0].trial, 0);
        assert_eq!(a[3].trial, 1);
        let genie = &a[2];
        assert_eq!(genie.estimator, "perfect-csi");
        assert_eq!(genie.nmse, 0.0);
        assert!(a.iter().all(|r| r.is_ok()), "{:?}", a.iter().map(|r| &r.status).collect::<Vec<_>>());
    }

    #[test]
    fn failures_are_recorded_and_the_sweep_continues() {
        let mut cfg = small();
        // p that does not give an integral row count
        cfg.training.p = Some(0.3);
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.status.starts_with("error")));
    }

    #[test]
    fn record_reproducible_from_its_seed() {
        let cfg = small();
        let recs = run_sweep(&cfg).unwrap();
        let pts = sweep_points(&cfg);
        let ests = build_estimators(&cfg, &Registry::builtin()).unwrap();
        let again = run_trial(&cfg, &ests, &pts[0], 2);
        assert_eq!(again[1].nmse.to_bits(), recs[7].nmse.to_bits());
        assert_eq!(again[1].seed, recs[7].seed);
    }
}
