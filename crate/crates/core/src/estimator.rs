//! Channel estimators behind a common trait, selected by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ArrayKind, ImpairmentProfile};
use crate::error::{Error, Result};
use crate::frontend::{simulate_training, Processor, TrainingPlan};
use crate::gcg_alt::{estimate, SolverConfig};
use crate::imc::{generate_features, recover_channel, simulate_imc_training, FeaturePair};
use crate::linalg::{mix_seed, numerical_rank, CMatrix};
use crate::omp::{build_dictionary, build_sounding, omp_estimate, stopping_threshold, DEFAULT_MAX_PATHS};

/// Seeds shared by every estimator in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub channel: u64,
    pub impairments: u64,
    pub pattern: u64,
    pub noise: u64,
    pub features: u64,
    pub sounding: u64,
    pub solver: u64,
}

impl TrialSeeds {
    pub fn derive(trial_seed: u64) -> Self {
        Self {
            channel: mix_seed(trial_seed, 1),
            impairments: mix_seed(trial_seed, 2),
            pattern: mix_seed(trial_seed, 3),
            noise: mix_seed(trial_seed, 4),
            features: mix_seed(trial_seed, 5),
            sounding: mix_seed(trial_seed, 6),
            solver: mix_seed(trial_seed, 7),
        }
    }
}

/// Everything an estimator may look at in one trial.
///
/// `h_eff` is included for the genie estimator and for scoring; the
/// training-based estimators only touch it through their sounding.
pub struct Trial<'a> {
    pub h_eff: &'a CMatrix,
    pub profile: &'a ImpairmentProfile,
    pub plan: &'a TrainingPlan,
    pub tx: &'a ArrayGeometry,
    pub rx: &'a ArrayGeometry,
    pub pnr_db: f64,
    pub noise_var: f64,
    pub seeds: TrialSeeds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub h_hat: CMatrix,
    pub r_hat: usize,
    pub flops: f64,
    /// Selected dictionary pairs, for the OMP baseline.
    pub support: Option<Vec<(usize, usize)>>,
}

pub trait Estimator: Send + Sync {
    fn name(&self) -> &str;
    fn estimate(&self, trial: &Trial<'_>) -> Result<Estimate>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// `G = 2N` for linear arrays; planar arrays fall back to unitary.
    #[default]
    Redundant,
    Unitary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmpSettings {
    pub grid: GridMode,
    /// Explicit grid sizes override `grid`.
    pub g_t: Option<usize>,
    pub g_r: Option<usize>,
    pub max_paths: usize,
    /// Fixed threshold multiplier of `sigma^2`; `None` uses the PNR table.
    pub threshold_factor: Option<f64>,
}

impl Default for OmpSettings {
    fn default() -> Self {
        Self { grid: GridMode::Redundant, g_t: None, g_r: None, max_paths: DEFAULT_MAX_PATHS, threshold_factor: None }
    }
}

impl OmpSettings {
    fn grid_size(&self, geom: &ArrayGeometry, explicit: Option<usize>) -> usize {
        explicit.unwrap_or(match (self.grid, geom.kind) {
            (GridMode::Redundant, ArrayKind::Ula) => 2 * geom.num_antennas,
            _ => geom.num_antennas,
        })
    }

    pub fn grid_sizes(&self, tx: &ArrayGeometry, rx: &ArrayGeometry) -> (usize, usize) {
        (self.grid_size(tx, self.g_t), self.grid_size(rx, self.g_r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Random,
    Identity,
    Dft,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImcSettings {
    pub features: FeatureKind,
}

/// Settings handed to every factory; each estimator reads its own part.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub solver: SolverConfig,
    pub omp: OmpSettings,
    pub imc: ImcSettings,
    pub processor: Processor,
}

pub struct GcgAlt {
    solver: SolverConfig,
    processor: Processor,
}

impl Estimator for GcgAlt {
    fn name(&self) -> &str {
        "gcg-alt"
    }

    fn estimate(&self, trial: &Trial<'_>) -> Result<Estimate> {
        let obs = simulate_training(
            trial.h_eff,
            &trial.profile.rx,
            trial.plan,
            trial.pnr_db,
            trial.seeds.noise,
            self.processor,
        )?;
        let cfg = SolverConfig { seed: mix_seed(self.solver.seed, trial.seeds.solver), ..self.solver.clone() };
        let est = estimate(&obs, &cfg)?;
        Ok(Estimate { h_hat: est.h_hat(), r_hat: est.rank(), flops: est.flops(), support: None })
    }
}

pub struct Imc {
    solver: SolverConfig,
    features: FeatureKind,
}

impl Estimator for Imc {
    fn name(&self) -> &str {
        "imc"
    }

    fn estimate(&self, trial: &Trial<'_>) -> Result<Estimate> {
        let (n_r, n_t) = (trial.plan.n_r, trial.plan.n_t);
        let features = match self.features {
            FeatureKind::Random => generate_features(n_r, n_t, trial.seeds.features)?,
            FeatureKind::Identity => FeaturePair::identity(n_r, n_t),
            FeatureKind::Dft => FeaturePair::dft(n_r, n_t),
        };
        let obs = simulate_imc_training(
            trial.h_eff,
            &trial.profile.rx,
            &features,
            trial.plan,
            trial.pnr_db,
            trial.seeds.noise,
        )?;
        let cfg = SolverConfig { seed: mix_seed(self.solver.seed, trial.seeds.solver), ..self.solver.clone() };
        let est = estimate(&obs, &cfg)?;
        Ok(Estimate {
            h_hat: recover_channel(&est.h_hat(), &features)?,
            r_hat: est.rank(),
            flops: est.flops(),
            support: None,
        })
    }
}

/// OMP with `M` transmit beams and `S K_r` receive beams per transmit beam.
pub struct Omp {
    settings: OmpSettings,
}

impl Estimator for Omp {
    fn name(&self) -> &str {
        "omp"
    }

    fn estimate(&self, trial: &Trial<'_>) -> Result<Estimate> {
        let plan = trial.plan;
        let (g_t, g_r) = self.settings.grid_sizes(trial.tx, trial.rx);
        let dict = build_dictionary(trial.tx, trial.rx, g_t, g_r)?;
        let sounding = build_sounding(
            plan.n_t,
            plan.n_r,
            plan.k_t,
            plan.k_r,
            plan.stages(),
            plan.steps_per_stage() * plan.k_r,
            &plan.shifter,
            trial.seeds.sounding,
        )?;
        let y = sounding.sound(trial.h_eff, &trial.profile.rx, trial.pnr_db, trial.seeds.noise)?;
        let eps = match self.settings.threshold_factor {
            Some(f) => f * trial.noise_var,
            None => stopping_threshold(trial.pnr_db, trial.noise_var),
        };
        let est = omp_estimate(&y, &sounding, &dict, eps, self.settings.max_paths)?;
        Ok(Estimate { r_hat: est.r_hat(), flops: est.flops(), support: Some(est.support.clone()), h_hat: est.h_hat })
    }
}

/// Genie reference: returns the effective channel itself.
pub struct PerfectCsi;

impl Estimator for PerfectCsi {
    fn name(&self) -> &str {
        "perfect-csi"
    }

    fn estimate(&self, trial: &Trial<'_>) -> Result<Estimate> {
        Ok(Estimate { h_hat: trial.h_eff.clone(), r_hat: numerical_rank(trial.h_eff, 1e-10), flops: 0.0, support: None })
    }
}

pub type Factory = fn(&EstimatorSettings) -> Result<Box<dyn Estimator>>;

/// Name-to-factory table.
#[derive(Clone)]
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("gcg-alt", |s| {
            s.solver.validate()?;
            Ok(Box::new(GcgAlt { solver: s.solver.clone(), processor: s.processor }))
        });
        r.register("imc", |s| {
            s.solver.validate()?;
            Ok(Box::new(Imc { solver: s.solver.clone(), features: s.imc.features }))
        });
        r.register("omp", |s| {
            if s.omp.max_paths == 0 {
                return Err(Error::Config("omp.max_paths must be at least 1".into()));
            }
            if let Some(f) = s.omp.threshold_factor {
                if !(f >= 0.0) {
                    return Err(Error::Config(format!("omp.threshold_factor must be >= 0, got {f}")));
                }
            }
            Ok(Box::new(Omp { settings: s.omp.clone() }))
        });
        r.register("perfect-csi", |_| Ok(Box::new(PerfectCsi)));
        r
    }

    pub fn register(&mut self, name: &str, factory: Factory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, settings: &EstimatorSettings) -> Result<Box<dyn Estimator>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownEstimator(name.to_string()))?;
        factory(settings)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let r = Registry::builtin();
        assert_eq!(r.names(), vec!["gcg-alt", "imc", "omp", "perfect-csi"]);
        for name in r.names() {
            let e = r.create(name, &EstimatorSettings::default()).unwrap();
            assert_eq!(e.name(), name);
        }
    }

    #[test]
    fn unknown_name_is_reported() {
        let err = Registry::builtin().create("fista", &EstimatorSettings::default()).err().unwrap();
        assert!(matches!(err, Error::UnknownEstimator(ref n) if n == "fista"));
    }

    #[test]
    fn custom_factory_can_be_registered() {
        let mut r = Registry::empty();
        r.register("genie", |_| Ok(Box::new(PerfectCsi)));
        assert!(r.contains("genie"));
        assert!(!r.contains("omp"));
    }

    #[test]
    fn default_grid_sizes() {
        let s = OmpSettings::default();
        let tx = ArrayGeometry::ula(128, 0.5).unwrap();
        let rx = ArrayGeometry::ula(32, 0.5).unwrap();
        assert_eq!(s.grid_sizes(&tx, &rx), (256, 64));
        let tx = ArrayGeometry::uspa(144, 0.5).unwrap();
        let rx = ArrayGeometry::uspa(36, 0.5).unwrap();
        assert_eq!(s.grid_sizes(&tx, &rx), (144, 36));
    }
}
