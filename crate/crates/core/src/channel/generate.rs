use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::geometry::{ArrayGeometry, ArrayKind};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, CMatrix, MatrixPayload};

/// Rejection-sampling budget for cluster-center separation.
pub const CENTER_RETRIES: usize = 1000;

/// Scale applied on top of the `1/sqrt(L)` ray normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Unit-norm steering vectors, `1/sqrt(L)` only: a single unit-gain ray has `||H||_F = 1`.
    #[default]
    Unit,
    /// Additional `sqrt(N_t N_r)` array gain, so entries have unit average power.
    ArrayGain,
}

impl Normalization {
    pub fn factor(self, n_t: usize, n_r: usize) -> f64 {
        match self {
            Normalization::Unit => 1.0,
            Normalization::ArrayGain => ((n_t * n_r) as f64).sqrt(),
        }
    }
}

/// Surrogate law for cluster fractional powers:
/// `gamma_k ∝ U^(tau-1) * 10^(-shadow_db * X / 10)`, `X ~ N(0,1)`, `U ~ U(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPowerLaw {
    pub tau: f64,
    pub shadow_db: f64,
}

impl Default for ClusterPowerLaw {
    fn default() -> Self {
        Self {
            tau: 2.0,
            shadow_db: 0.6,
        }
    }
}

impl ClusterPowerLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, clusters: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..clusters)
            .map(|_| {
                // (0, 1] keeps U^(tau-1) finite for tau < 1
                let u: f64 = 1.0 - rng.random::<f64>();
                let x: f64 = rng.sample(StandardNormal);
                u.powf(self.tau - 1.0) * 10f64.powf(-self.shadow_db * x / 10.0)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|z| z / total).collect()
    }
}

/// Small-scale clustered channel parameters. Angles are in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub cluster_rate: f64,
    pub max_rays: usize,
    pub azimuth_spread_tx: f64,
    pub azimuth_spread_rx: f64,
    pub elevation_spread_tx: f64,
    pub elevation_spread_rx: f64,
    pub cluster_power: ClusterPowerLaw,
    /// Minimum center gap in units of the corresponding angular spread.
    pub center_separation: f64,
    pub normalization: Normalization,
}

impl Default for ChannelParams {
    /// 28 GHz urban measurements: lambda = 1.8, L ~ U[1, 20], spreads
    /// 10.2 (AoD az), 15.5 (AoA az), 0 (AoD el), 6 (AoA el) degrees.
    fn default() -> Self {
        Self {
            cluster_rate: 1.8,
            max_rays: 20,
            azimuth_spread_tx: 10.2f64.to_radians(),
            azimuth_spread_rx: 15.5f64.to_radians(),
            elevation_spread_tx: 0.0,
            elevation_spread_rx: 6f64.to_radians(),
            cluster_power: ClusterPowerLaw::default(),
            center_separation: 1.0,
            normalization: Normalization::Unit,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cluster_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cluster rate must be positive, got {}",
                self.cluster_rate
            )));
        }
        if self.max_rays == 0 {
            return Err(Error::InvalidParameter("max_rays must be at least 1".into()));
        }
        let spreads = [
            self.azimuth_spread_tx,
            self.azimuth_spread_rx,
            self.elevation_spread_tx,
            self.elevation_spread_rx,
        ];
        if spreads.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("angular spreads must be >= 0".into()));
        }
        if !(self.center_separation >= 0.0) {
            return Err(Error::InvalidParameter(
                "center separation must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One ray of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub cluster: usize,
    pub ray: usize,
    pub gain: Complex64,
    pub aoa_azimuth: f64,
    pub aod_azimuth: f64,
    pub aoa_elevation: f64,
    pub aod_elevation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub paths: Vec<PathComponent>,
    pub rays_per_cluster: Vec<usize>,
    pub cluster_powers: Vec<f64>,
    pub normalization: Normalization,
    pub seed: Option<u64>,
}

impl ChannelRealization {
    /// Assembles `H = c / sqrt(L) * sum g a_r a_t^H` from an explicit path list,
    /// where `L` is the total number of paths.
    pub fn from_paths(
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        paths: Vec<PathComponent>,
        normalization: Normalization,
    ) -> Result<Self> {
        tx.validate()?;
        rx.validate()?;
        if paths.is_empty() {
            return Err(Error::Generation("a channel needs at least one path".into()));
        }
        let clusters = paths.iter().map(|p| p.cluster).max().unwrap_or(0) + 1;
        let mut rays_per_cluster = vec![0usize; clusters];
        for p in &paths {
            rays_per_cluster[p.cluster] += 1;
        }
        let h = assemble(&tx, &rx, &paths, normalization);
        Ok(Self {
            h,
            tx,
            rx,
            paths,
            rays_per_cluster,
            cluster_powers: Vec::new(),
            normalization,
            seed: None,
        })
    }

    pub fn clusters(&self) -> usize {
        self.rays_per_cluster.len()
    }

    pub fn total_rays(&self) -> usize {
        self.paths.len()
    }

    /// Recomputes `H` from the stored paths.
    pub fn rebuild(&self) -> CMatrix {
        assemble(&self.tx, &self.rx, &self.paths, self.normalization)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RealizationDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RealizationDocument = serde_json::from_str(text)?;
        doc.into_realization()
    }
}

fn assemble(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    paths: &[PathComponent],
    normalization: Normalization,
) -> CMatrix {
    let n_t = tx.num_antennas;
    let n_r = rx.num_antennas;
    let mut h = CMatrix::zeros(n_r, n_t);
    for p in paths {
        let a_r = rx.response(p.aoa_azimuth, p.aoa_elevation);
        let a_t = tx.response(p.aod_azimuth, p.aod_elevation);
        for j in 0..n_t {
            let w = p.gain * a_t[j].conj();
            for i in 0..n_r {
                h[(i, j)] += a_r[i] * w;
            }
        }
    }
    let scale = normalization.factor(n_t, n_r) / (paths.len() as f64).sqrt();
    h * Complex64::new(scale, 0.0)
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Draws `count` centers uniformly on `[0, 2pi)` with pairwise circular gap `>= min_gap`.
fn separated_centers<R: Rng + ?Sized>(rng: &mut R, count: usize, min_gap: f64) -> Result<Vec<f64>> {
    for _ in 0..CENTER_RETRIES {
        let centers: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let ok = centers.iter().enumerate().all(|(i, &a)| {
            centers[i + 1..]
                .iter()
                .all(|&b| circular_gap(a, b) >= min_gap)
        });
        if ok {
            return Ok(centers);
        }
    }
    Err(Error::Generation(format!(
        "could not separate {count} cluster centers by {min_gap} rad after {CENTER_RETRIES} tries"
    )))
}

fn spread_offset<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> f64 {
    if spread > 0.0 {
        (rng.random::<f64>() - 0.5) * spread
    } else {
        0.0
    }
}

/// Draws one realization of the clustered channel.
pub fn generate_channel(
    params: &ChannelParams,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    seed: u64,
) -> Result<ChannelRealization> {
    params.validate()?;
    tx.validate()?;
    rx.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let poisson = Poisson::new(params.cluster_rate)
        .map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?;
    let clusters = (poisson.sample(&mut rng) as usize).max(1);
    let rays: Vec<usize> = (0..clusters)
        .map(|_| rng.random_range(1..=params.max_rays))
        .collect();
    let powers = params.cluster_power.sample(&mut rng, clusters);

    let sep = params.center_separation;
    let aod_az = separated_centers(&mut rng, clusters, sep * params.azimuth_spread_tx)?;
    let aoa_az = separated_centers(&mut rng, clusters, sep * params.azimuth_spread_rx)?;
    // elevation only matters for planar arrays; a ULA sees the horizon
    let aod_el = match tx.kind {
        ArrayKind::Uspa => separated_centers(&mut rng, clusters, sep * params.elevation_spread_tx)?,
        ArrayKind::Ula => vec![PI / 2.0; clusters],
    };
    let aoa_el = match rx.kind {
        ArrayKind::Uspa => separated_centers(&mut rng, clusters, sep * params.elevation_spread_rx)?,
        ArrayKind::Ula => vec![PI / 2.0; clusters],
    };

    let mut paths = Vec::with_capacity(rays.iter().sum());
    for k in 0..clusters {
        for l in 0..rays[k] {
            let aod_azimuth = aod_az[k] + spread_offset(&mut rng, params.azimuth_spread_tx);
            let aoa_azimuth = aoa_az[k] + spread_offset(&mut rng, params.azimuth_spread_rx);
            let aod_elevation = match tx.kind {
                ArrayKind::Uspa => aod_el[k] + spread_offset(&mut rng, params.elevation_spread_tx),
                ArrayKind::Ula => aod_el[k],
            };
            let aoa_elevation = match rx.kind {
                ArrayKind::Uspa => aoa_el[k] + spread_offset(&mut rng, params.elevation_spread_rx),
                ArrayKind::Ula => aoa_el[k],
            };
            let gain = complex_gaussian(&mut rng, powers[k]);
            paths.push(PathComponent {
                cluster: k,
                ray: l,
                gain,
                aoa_azimuth,
                aod_azimuth,
                aoa_elevation,
                aod_elevation,
            });
        }
    }

    let h = assemble(tx, rx, &paths, params.normalization);
    Ok(ChannelRealization {
        h,
        tx: *tx,
        rx: *rx,
        paths,
        rays_per_cluster: rays,
        cluster_powers: powers,
        normalization: params.normalization,
        seed: Some(seed),
    })
}

/// JSON form of a realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationDocument {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub normalization: Normalization,
    pub seed: Option<u64>,
    pub clusters: usize,
    pub rays_per_cluster: Vec<usize>,
    pub cluster_powers: Vec<f64>,
    pub paths: Vec<PathComponent>,
    pub h: MatrixPayload,
}

impl From<&ChannelRealization> for RealizationDocument {
    fn from(r: &ChannelRealization) -> Self {
        Self {
            tx: r.tx,
            rx: r.rx,
            normalization: r.normalization,
            seed: r.seed,
            clusters: r.clusters(),
            rays_per_cluster: r.rays_per_cluster.clone(),
            cluster_powers: r.cluster_powers.clone(),
            paths: r.paths.clone(),
            h: MatrixPayload::from_matrix(&r.h),
        }
    }
}

impl RealizationDocument {
    /// Rebuilds `H` from the paths and checks it against the stored payload.
    pub fn into_realization(self) -> Result<ChannelRealization> {
        let mut r = ChannelRealization::from_paths(self.tx, self.rx, self.paths, self.normalization)?;
        let stored = self.h.to_matrix()?;
        if stored != r.h {
            return Err(Error::Config(
                "stored channel matrix does not match the one rebuilt from its paths".into(),
            ));
        }
        r.seed = self.seed;
        r.cluster_powers = self.cluster_powers;
        r.rays_per_cluster = self.rays_per_cluster;
        Ok(r)
    }
}
