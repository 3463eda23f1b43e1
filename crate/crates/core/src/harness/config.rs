use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{ArrayGeometry, ArrayKind, ChannelParams, ClusterPowerLaw, Normalization};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorSettings, ImcSettings, OmpSettings, Registry};
use crate::frontend::Processor;
use crate::gcg_alt::SolverConfig;

/// Angle stored in radians.
///
/// Accepts a bare number (radians), `{"deg": x}`, `{"rad": x}` or `{"pi": x}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(pub f64);

impl Angle {
    pub fn degrees(d: f64) -> Self {
        Angle(d.to_radians())
    }

    pub fn pi(f: f64) -> Self {
        Angle(f * std::f64::consts::PI)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Radians(f64),
    Deg { deg: f64 },
    Rad { rad: f64 },
    Pi { pi: f64 },
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match AngleRepr::deserialize(d)? {
            AngleRepr::Radians(r) | AngleRepr::Rad { rad: r } => Angle(r),
            AngleRepr::Deg { deg } => Angle::degrees(deg),
            AngleRepr::Pi { pi } => Angle::pi(pi),
        })
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// Number or angle; angles are converted to radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxisValue(pub Angle);

impl AxisValue {
    pub fn value(self) -> f64 {
        self.0 .0
    }
}

impl From<f64> for AxisValue {
    fn from(v: f64) -> Self {
        AxisValue(Angle(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub array: ArrayKind,
    pub n_t: usize,
    pub n_r: usize,
    pub k_t: usize,
    pub k_r: usize,
    pub bits: u32,
    /// Element spacing in wavelengths.
    #[serde(default = "half")]
    pub spacing: f64,
}

fn half() -> f64 {
    0.5
}

impl SystemConfig {
    pub fn geometries(&self) -> Result<(ArrayGeometry, ArrayGeometry)> {
        Ok((
            ArrayGeometry::new(self.array, self.n_t, self.spacing)?,
            ArrayGeometry::new(self.array, self.n_r, self.spacing)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub cluster_rate: f64,
    pub max_rays: usize,
    pub azimuth_spread_tx: Angle,
    pub azimuth_spread_rx: Angle,
    pub elevation_spread_tx: Angle,
    pub elevation_spread_rx: Angle,
    pub cluster_power: ClusterPowerLaw,
    pub center_separation: f64,
    pub normalization: Normalization,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            cluster_rate: p.cluster_rate,
            max_rays: p.max_rays,
            azimuth_spread_tx: Angle(p.azimuth_spread_tx),
            azimuth_spread_rx: Angle(p.azimuth_spread_rx),
            elevation_spread_tx: Angle(p.elevation_spread_tx),
            elevation_spread_rx: Angle(p.elevation_spread_rx),
            cluster_power: p.cluster_power,
            center_separation: p.center_separation,
            // unit average entry power, so PNR is the per-sample SNR
            normalization: Normalization::ArrayGain,
        }
    }
}

impl ChannelConfig {
    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            cluster_rate: self.cluster_rate,
            max_rays: self.max_rays,
            azimuth_spread_tx: self.azimuth_spread_tx.0,
            azimuth_spread_rx: self.azimuth_spread_rx.0,
            elevation_spread_tx: self.elevation_spread_tx.0,
            elevation_spread_rx: self.elevation_spread_rx.0,
            cluster_power: self.cluster_power,
            center_separation: self.center_separation,
            normalization: self.normalization,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentConfig {
    pub phase_tx: Angle,
    pub phase_rx: Angle,
    pub gain_tx: f64,
    pub gain_rx: f64,
}

/// One value or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    /// Stages `M`.
    pub stages: usize,
    /// Receive steps per stage `S`.
    pub steps: usize,
    /// Sampling ratio; `None` fills `S (K_r - 1)` rows per sounded column.
    #[serde(default)]
    pub p: Option<f64>,
    /// PNR values in dB; swept as the innermost axis unless `pnr_db` is a sweep axis.
    pub pnr_db: OneOrMany,
    #[serde(default)]
    pub processor: Processor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeConfig {
    /// Streams; `None` uses `K_r`.
    pub n_s: Option<usize>,
    pub snr_db: Vec<f64>,
}

impl Default for SeConfig {
    fn default() -> Self {
        Self { n_s: None, snr_db: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Steps,
    Stages,
    P,
    PnrDb,
    /// Same phase-error level on both arrays.
    PhaseLevel,
    /// Same gain-error level on both arrays.
    GainLevel,
    PhaseTx,
    PhaseRx,
    GainTx,
    GainRx,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Steps => "steps",
            Axis::Stages => "stages",
            Axis::P => "p",
            Axis::PnrDb => "pnr_db",
            Axis::PhaseLevel => "phase_level",
            Axis::GainLevel => "gain_level",
            Axis::PhaseTx => "phase_tx",
            Axis::PhaseRx => "phase_rx",
            Axis::GainTx => "gain_tx",
            Axis::GainRx => "gain_rx",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<AxisValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    pub training: TrainingConfig,
    pub estimators: Vec<String>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub omp: OmpSettings,
    #[serde(default)]
    pub imc: ImcSettings,
    #[serde(default)]
    pub se: SeConfig,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    200
}

impl ExperimentConfig {
    /// 128 x 32 ULA link, 16 and 4 RF chains, 6-bit shifters, `M = 128`, `S = 4`.
    pub fn ula() -> Self {
        Self {
            system: SystemConfig { array: ArrayKind::Ula, n_t: 128, n_r: 32, k_t: 16, k_r: 4, bits: 6, spacing: 0.5 },
            channel: ChannelConfig::default(),
            impairments: ImpairmentConfig::default(),
            training: TrainingConfig {
                stages: 128,
                steps: 4,
                p: None,
                pnr_db: OneOrMany::One(20.0),
                processor: Processor::Ideal,
            },
            estimators: vec!["gcg-alt".into(), "omp".into()],
            solver: SolverConfig::default(),
            omp: OmpSettings::default(),
            imc: ImcSettings::default(),
            se: SeConfig::default(),
            sweep: Vec::new(),
            trials: default_trials(),
            seed: 1,
        }
    }

    /// 144 x 36 planar link with `M = 144`, `S = 4` (576 steps).
    pub fn uspa() -> Self {
        let mut cfg = Self::ula();
        cfg.system = SystemConfig { array: ArrayKind::Uspa, n_t: 144, n_r: 36, k_t: 16, k_r: 4, bits: 6, spacing: 0.5 };
        cfg.training.stages = 144;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            solver: self.solver.clone(),
            omp: self.omp.clone(),
            imc: self.imc.clone(),
            processor: self.training.processor,
        }
    }

    pub fn n_s(&self) -> usize {
        self.se.n_s.unwrap_or(self.system.k_r)
    }

    /// Sweep axes in nesting order, with the PNR list appended when not swept explicitly.
    pub fn axes(&self) -> Vec<SweepAxis> {
        let mut axes = self.sweep.clone();
        if !axes.iter().any(|a| a.axis == Axis::PnrDb) {
            axes.push(SweepAxis {
                axis: Axis::PnrDb,
                values: self.training.pnr_db.values().into_iter().map(AxisValue::from).collect(),
            });
        }
        axes
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        self.system.geometries().map_err(|e| Error::Config(e.to_string()))?;
        if self.system.k_t == 0 || self.system.k_r < 2 {
            return cfg_err("need k_t >= 1 and k_r >= 2".into());
        }
        if self.trials == 0 {
            return cfg_err("trials must be at least 1".into());
        }
        if self.training.stages == 0 || self.training.steps == 0 {
            return cfg_err("training needs at least one stage and one step".into());
        }
        if self.estimators.is_empty() {
            return cfg_err("no estimators selected".into());
        }
        let registry = Registry::builtin();
        for name in &self.estimators {
            if !registry.contains(name) {
                return cfg_err(format!("unknown estimator `{name}` (known: {})", registry.names().join(", ")));
            }
        }
        if self.training.pnr_db.values().is_empty() {
            return cfg_err("training.pnr_db is empty".into());
        }
        let mut seen = Vec::new();
        for a in &self.sweep {
            if seen.contains(&a.axis) {
                return cfg_err(format!("sweep axis `{}` appears twice", a.axis));
            }
            if a.values.is_empty() {
                return cfg_err(format!("sweep axis `{}` has no values", a.axis));
            }
            seen.push(a.axis);
        }
        let both_phase = seen.contains(&Axis::PhaseLevel) && (seen.contains(&Axis::PhaseTx) || seen.contains(&Axis::PhaseRx));
        let both_gain = seen.contains(&Axis::GainLevel) && (seen.contains(&Axis::GainTx) || seen.contains(&Axis::GainRx));
        if both_phase || both_gain {
            return cfg_err("a per-side impairment axis conflicts with the shared level axis".into());
        }
        let n_s = self.n_s();
        if n_s == 0 || n_s > self.system.n_t.min(self.system.n_r) {
            return cfg_err(format!("se.n_s = {n_s} exceeds min(n_t, n_r)"));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.channel.params().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
