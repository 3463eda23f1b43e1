use std::io::Write;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flops::{altmin_u_flops, altmin_v_flops, gcg_block};
use super::rsvd::{top_singular_pair_op, SingularPair};
use super::sampled::{factor_entry, SampledMatrix};
use crate::error::{Error, Result};
use crate::frontend::ObservationMatrix;
use crate::linalg::{CMatrix, CVector};

/// Stand-in for `sigma` when the observations are noiseless; `mu` then defaults to its square.
pub const NOISELESS_SURROGATE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Ridge weight; `None` uses `sigma^2`.
    #[serde(default)]
    pub mu: Option<f64>,
    pub eps: f64,
    pub eps_a: f64,
    /// Known noise standard deviation; `None` reads it from the observation.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Cap on outer iterations; `None` means `min(N_r, N_t) / 2`.
    #[serde(default)]
    pub max_rank: Option<usize>,
    pub rsvd_power: usize,
    pub rsvd_oversample: usize,
    /// Cap on AltMin sweeps per outer iteration.
    pub max_inner: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: None,
            eps: 0.01,
            eps_a: 0.1,
            sigma: None,
            max_rank: None,
            rsvd_power: 2,
            rsvd_oversample: 10,
            max_inner: 200,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_unit(self.eps) || !in_unit(self.eps_a) {
            return Err(Error::InvalidParameter(format!(
                "eps ({}) and eps_a ({}) must lie in (0, 1)",
                self.eps, self.eps_a
            )));
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0) {
                return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
            }
        }
        if self.max_rank == Some(0) || self.max_inner == 0 {
            return Err(Error::InvalidParameter(
                "max_rank and max_inner must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `(mu, sigma)` after filling defaults from the noise variance.
    pub fn resolve(&self, noise_var: f64) -> (f64, f64) {
        let sigma = self.sigma.unwrap_or_else(|| {
            if noise_var > 0.0 {
                noise_var.sqrt()
            } else {
                NOISELESS_SURROGATE
            }
        });
        (self.mu.unwrap_or(sigma * sigma), sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EnergyChange,
    NoiseFloor,
    MaxRank,
    NonPositiveStep,
    ZeroGradient,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub theta: f64,
    pub eta: f64,
    /// `phi~(U, V)` after refinement.
    pub objective: f64,
    /// Relative energy change; `NaN` at `k = 1`.
    pub eps_k: f64,
    pub delta_sq: f64,
    pub inner_iters: usize,
    pub flops_cumulative: f64,
    /// `phi~` before refinement and after every half-step.
    pub half_steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorEstimate {
    pub u: CMatrix,
    pub v: CMatrix,
    pub trace: Vec<IterationRecord>,
    pub stop: StopReason,
    pub truncated: bool,
}

impl FactorEstimate {
    pub fn h_hat(&self) -> CMatrix {
        &self.u * self.v.adjoint()
    }

    /// Number of rank-1 atoms kept, i.e. outer iterations.
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn flops(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.flops_cumulative)
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "k",
            "theta_k",
            "eta_k",
            "objective",
            "eps_k",
            "delta_sq",
            "inner_iters",
            "flops_cumulative",
        ])?;
        for r in &self.trace {
            out.write_record([
                r.k.to_string(),
                r.theta.to_string(),
                r.eta.to_string(),
                r.objective.to_string(),
                r.eps_k.to_string(),
                r.delta_sq.to_string(),
                r.inner_iters.to_string(),
                r.flops_cumulative.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn frob_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `phi~(U, V) = 1/2 ||P(H~ - U V^H)||^2 + mu/2 (||U||^2 + ||V||^2)`.
pub fn objective(obs: &SampledMatrix, u: &CMatrix, v: &CMatrix, mu: f64) -> f64 {
    0.5 * obs.residual(u, v).norm_sq() + 0.5 * mu * (frob_sq(u) + frob_sq(v))
}

/// `||U V^H||_F^2` through the `k x k` Gram matrices.
pub fn factor_energy(u: &CMatrix, v: &CMatrix) -> f64 {
    if u.ncols() == 0 {
        return 0.0;
    }
    let gu = u.adjoint() * u;
    let gv = v.adjoint() * v;
    (gu.component_mul(&gv.transpose())).iter().map(|z| z.re).sum()
}

/// Top singular pair of `P(H~ - U V^H)`; `None` when that residual is zero.
pub fn descent_atom(
    obs: &SampledMatrix,
    u: &CMatrix,
    v: &CMatrix,
    q: usize,
    g: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SingularPair>> {
    let r = obs.residual(u, v);
    if !(r.norm_sq() > 0.0) {
        return Ok(None);
    }
    top_singular_pair_op(&r, q, g, rng).map(Some)
}

/// Unconstrained minimizer of `h(theta) = f((1 - eta) H + theta Z) + mu (1 - eta) ||H||_* + mu theta`
/// with `f = 1/2 ||P(. - H~)||^2`, clamped at zero.
pub fn line_search_theta(
    obs: &SampledMatrix,
    u: &CMatrix,
    v: &CMatrix,
    atom: &SingularPair,
    eta: f64,
    mu: f64,
) -> Result<f64> {
    let (z_re, z_sq, zh_re) = line_search_terms(obs, u, v, atom);
    if !(z_sq > 0.0) {
        return Err(Error::DegenerateInput("atom vanishes on the sampled support".into()));
    }
    Ok(((z_re - (1.0 - eta) * zh_re - mu) / z_sq).max(0.0))
}

/// `(Re z^H h~, z^H z, Re z^H h^)` over the sampled support.
fn line_search_terms(obs: &SampledMatrix, u: &CMatrix, v: &CMatrix, atom: &SingularPair) -> (f64, f64, f64) {
    let (mut z_re, mut z_sq, mut zh_re) = (0.0, 0.0, 0.0);
    for (t, col) in obs.by_col.iter().enumerate() {
        let vt = atom.v[t].conj();
        for &(i, h) in col {
            let z = atom.u[i] * vt;
            z_re += (z.conj() * h).re;
            z_sq += z.norm_sqr();
            if u.ncols() > 0 {
                zh_re += (z.conj() * factor_entry(u, v, i, t)).re;
            }
        }
    }
    (z_re, z_sq, zh_re)
}

/// Evaluates `h(theta)` up to the constant `mu (1 - eta) ||H||_*`.
pub fn upper_bound_h(
    obs: &SampledMatrix,
    u: &CMatrix,
    v: &CMatrix,
    atom: &SingularPair,
    eta: f64,
    mu: f64,
    theta: f64,
) -> f64 {
    let mut f = 0.0;
    for (t, col) in obs.by_col.iter().enumerate() {
        for &(i, h) in col {
            let cur = if u.ncols() > 0 { factor_entry(u, v, i, t) } else { Complex64::new(0.0, 0.0) };
            let e = cur * (1.0 - eta) + atom.u[i] * atom.v[t].conj() * theta - h;
            f += e.norm_sqr();
        }
    }
    0.5 * f + mu * theta
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinOutcome {
    pub u: CMatrix,
    pub v: CMatrix,
    /// Completed sweeps `Q`.
    pub iterations: usize,
    /// `phi~` at the start and after every accepted half-step.
    pub objectives: Vec<f64>,
}

fn ridge_solve(gram: CMatrix, rhs: CVector) -> CVector {
    match Cholesky::new(gram.clone()) {
        Some(c) => c.solve(&rhs),
        // mu > 0 keeps the system positive definite; LU covers roundoff edge cases
        None => gram.lu().solve(&rhs).unwrap_or_else(|| CVector::zeros(rhs.len())),
    }
}

/// Column-by-column ridge update of `V` given `U`.
pub fn update_v(obs: &SampledMatrix, u: &CMatrix, mu: f64) -> CMatrix {
    let k = u.ncols();
    let mut v = CMatrix::zeros(obs.n_t, k);
    for (t, col) in obs.by_col.iter().enumerate() {
        let mut gram = CMatrix::from_diagonal_element(k, k, Complex64::new(mu, 0.0));
        let mut rhs = CVector::zeros(k);
        for &(i, h) in col {
            for a in 0..k {
                let ua = u[(i, a)].conj();
                rhs[a] += ua * h;
                for b in 0..k {
                    gram[(a, b)] += ua * u[(i, b)];
                }
            }
        }
        let x = ridge_solve(gram, rhs);
        for a in 0..k {
            v[(t, a)] = x[a].conj();
        }
    }
    v
}

/// Row-by-row ridge update of `U` given `V`.
pub fn update_u(obs: &SampledMatrix, v: &CMatrix, mu: f64) -> CMatrix {
    let k = v.ncols();
    let mut u = CMatrix::zeros(obs.n_r, k);
    for (i, row) in obs.by_row.iter().enumerate() {
        let mut gram = CMatrix::from_diagonal_element(k, k, Complex64::new(mu, 0.0));
        let mut rhs = CVector::zeros(k);
        for &(t, h) in row {
            for a in 0..k {
                // B = conj(V) restricted to the row's columns, so B^H = V^T
                let ba = v[(t, a)];
                rhs[a] += ba * h;
                for b in 0..k {
                    gram[(a, b)] += ba * v[(t, b)].conj();
                }
            }
        }
        let y = ridge_solve(gram, rhs);
        for a in 0..k {
            u[(i, a)] = y[a];
        }
    }
    u
}

/// Alternates the `V` and `U` ridge updates until the relative decrease of one sweep
/// drops to `eps_a`. A half-step that would raise the objective is discarded.
pub fn altmin_refine(
    obs: &SampledMatrix,
    u_in: &CMatrix,
    v_in: &CMatrix,
    mu: f64,
    eps_a: f64,
    max_inner: usize,
) -> AltMinOutcome {
    let mut u = u_in.clone();
    let mut v = v_in.clone();
    let mut current = objective(obs, &u, &v, mu);
    let mut objectives = vec![current];
    if u.ncols() == 0 {
        return AltMinOutcome { u, v, iterations: 0, objectives };
    }
    let mut iterations = 0;
    while iterations < max_inner {
        iterations += 1;
        let start = current;
        let mut rejected = false;

        let v_new = update_v(obs, &u, mu);
        let after_v = objective(obs, &u, &v_new, mu);
        if after_v <= current {
            v = v_new;
            current = after_v;
            objectives.push(current);
        } else {
            rejected = true;
        }

        let u_new = update_u(obs, &v, mu);
        let after_u = objective(obs, &u_new, &v, mu);
        if after_u <= current {
            u = u_new;
            current = after_u;
            objectives.push(current);
        } else {
            rejected = true;
        }

        let rel = if start > 0.0 { (start - current) / start } else { 0.0 };
        if rejected || rel <= eps_a {
            break;
        }
    }
    AltMinOutcome { u, v, iterations, objectives }
}

/// Relaxed conditional gradient with rank-1 atoms and AltMin refinement.
pub fn estimate(obs: &ObservationMatrix, cfg: &SolverConfig) -> Result<FactorEstimate> {
    let sampled = SampledMatrix::from_observation(obs)?;
    estimate_sampled(&sampled, obs.noise_var, cfg)
}

pub fn estimate_sampled(obs: &SampledMatrix, noise_var: f64, cfg: &SolverConfig) -> Result<FactorEstimate> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::DegenerateInput("no sampled entries".into()));
    }
    let (mu, sigma) = cfg.resolve(noise_var);
    let (n_r, n_t) = (obs.n_r, obs.n_t);
    let n = obs.len() as f64;
    let p = n / (n_r * n_t) as f64;
    let noise_floor = (n + (8.0 * n).sqrt()) * sigma * sigma;
    let max_rank = cfg.max_rank.unwrap_or((n_r.min(n_t) / 2).max(1));
    let atom_flops = 8.0 * gcg_block(p, cfg.rsvd_power, cfg.rsvd_oversample) * (n_t * n_r) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut u = CMatrix::zeros(n_r, 0);
    let mut v = CMatrix::zeros(n_t, 0);
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut energy_prev = 0.0;
    let mut flops = 0.0;

    loop {
        let k = u.ncols() + 1;
        let Some(atom) = descent_atom(obs, &u, &v, cfg.rsvd_power, cfg.rsvd_oversample, &mut rng)? else {
            return Ok(FactorEstimate { u, v, trace, stop: StopReason::ZeroGradient, truncated: false });
        };
        let eta = 2.0 / (k as f64 + 1.0);
        let theta = line_search_theta(obs, &u, &v, &atom, eta, mu)?;
        if theta <= 0.0 {
            return Ok(FactorEstimate { u, v, trace, stop: StopReason::NonPositiveStep, truncated: false });
        }

        let old = (1.0 - eta).sqrt();
        let new = theta.sqrt();
        let mut u_aug = CMatrix::zeros(n_r, k);
        let mut v_aug = CMatrix::zeros(n_t, k);
        u_aug.columns_mut(0, k - 1).copy_from(&(&u * Complex64::new(old, 0.0)));
        v_aug.columns_mut(0, k - 1).copy_from(&(&v * Complex64::new(old, 0.0)));
        u_aug.set_column(k - 1, &(&atom.u * Complex64::new(new, 0.0)));
        v_aug.set_column(k - 1, &(&atom.v * Complex64::new(new, 0.0)));

        let refined = altmin_refine(obs, &u_aug, &v_aug, mu, cfg.eps_a, cfg.max_inner);
        u = refined.u;
        v = refined.v;
        flops += atom_flops
            + refined.iterations as f64 * (altmin_v_flops(n_t, n_r, p, k) + altmin_u_flops(n_t, n_r, p, k));

        let energy = factor_energy(&u, &v);
        let eps_k = if k == 1 { f64::NAN } else { (energy - energy_prev) / energy_prev };
        let delta_sq = obs.residual(&u, &v).norm_sq();
        trace.push(IterationRecord {
            k,
            theta,
            eta,
            objective: *refined.objectives.last().expect("initial objective"),
            eps_k,
            delta_sq,
            inner_iters: refined.iterations,
            flops_cumulative: flops,
            half_steps: refined.objectives,
        });
        energy_prev = energy;

        let stop = if k > 1 && eps_k.abs() <= cfg.eps {
            Some((StopReason::EnergyChange, false))
        } else if delta_sq <= noise_floor {
            Some((StopReason::NoiseFloor, false))
        } else if k >= max_rank {
            Some((StopReason::MaxRank, true))
        } else {
            None
        };
        if let Some((stop, truncated)) = stop {
            return Ok(FactorEstimate { u, v, trace, stop, truncated });
        }
    }
}
