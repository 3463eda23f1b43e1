use serde::{Deserialize, Serialize};

use super::dictionary::Dictionary;
use super::sounding::SoundingOperator;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, split_mul, CMatrix, CVector, SplitMatrix, ZERO};

pub const DEFAULT_MAX_PATHS: usize = 64;

/// Residual below this fraction of the observation energy counts as an exact fit.
const EXACT_FIT: f64 = 1e-24;

/// Relative size of an orthogonalized atom below which it is treated as dependent.
const DEPENDENT_ATOM: f64 = 1e-10;

/// Stopping-threshold anchors, as multiples of the noise variance.
const THRESHOLD_TABLE: [(f64, f64); 5] = [(0.0, 0.025), (5.0, 0.05), (10.0, 0.1), (15.0, 0.2), (20.0, 0.4)];

/// Threshold multiplier of the anchor nearest to `pnr_db`.
pub fn threshold_factor(pnr_db: f64) -> f64 {
    THRESHOLD_TABLE
        .iter()
        .min_by(|a, b| (a.0 - pnr_db).abs().total_cmp(&(b.0 - pnr_db).abs()))
        .map(|&(_, f)| f)
        .unwrap_or(0.1)
}

/// `eps_stop = factor(pnr) * sigma^2`.
pub fn stopping_threshold(pnr_db: f64, noise_var: f64) -> f64 {
    threshold_factor(pnr_db) * noise_var
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmpStop {
    Threshold,
    ExactFit,
    MaxPaths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpEstimate {
    pub h_hat: CMatrix,
    /// Selected `(receive grid index, transmit grid index)` pairs, in selection order.
    pub support: Vec<(usize, usize)>,
    pub coefficients: Vec<num_complex::Complex64>,
    /// Residual mean-square before the first and after every iteration.
    pub residual_history: Vec<f64>,
    /// Candidate correlations evaluated (`G_t G_r` per iteration).
    pub correlations: u64,
    pub num_measurements: usize,
    pub stop: OmpStop,
}

impl OmpEstimate {
    pub fn r_hat(&self) -> usize {
        self.support.len()
    }

    /// Each correlation is an `N`-term complex inner product at 8 real flops per term.
    pub fn flops(&self) -> f64 {
        8.0 * self.num_measurements as f64 * self.correlations as f64
    }
}

fn flatten(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Greedy sparse recovery over the virtual-channel dictionary.
///
/// `y` is the `M_r x M_t` block returned by the sounding operator.
pub fn omp_estimate(
    y: &CMatrix,
    sounding: &SoundingOperator,
    dict: &Dictionary,
    eps_stop: f64,
    max_paths: usize,
) -> Result<OmpEstimate> {
    let (m_r, m_t) = (sounding.w.ncols(), sounding.f.ncols());
    if y.is_empty() {
        return Err(Error::DegenerateInput("empty observation".into()));
    }
    if y.shape() != (m_r, m_t) {
        return Err(Error::DimensionMismatch(format!(
            "observations are {:?}, sounding produces {m_r}x{m_t}",
            y.shape()
        )));
    }
    if dict.a_r.nrows() != sounding.n_r() || dict.a_t.nrows() != sounding.n_t() {
        return Err(Error::DimensionMismatch("dictionary and sounding disagree on array sizes".into()));
    }
    if !(eps_stop >= 0.0) {
        return Err(Error::InvalidParameter(format!("stopping threshold must be >= 0, got {eps_stop}")));
    }

    let n = m_r * m_t;
    let (g_r, g_t) = (dict.a_r.ncols(), dict.a_t.ncols());
    // Projected dictionaries: atom (a, b) observed as p_a t_b^H.
    let p = split_mul(&sounding.w.adjoint(), &dict.a_r);
    let t = split_mul(&sounding.f.adjoint(), &dict.a_t);
    let p_h_split = SplitMatrix::new(&p.adjoint());
    let t_split = SplitMatrix::new(&t);
    let inv_sq = |m: &CMatrix| -> Vec<f64> {
        m.column_iter()
            .map(|c| {
                let n = c.norm_squared();
                if n > 0.0 { 1.0 / n } else { 0.0 }
            })
            .collect()
    };
    let (p_inv, t_inv) = (inv_sq(&p), inv_sq(&t));
    let left_first = g_r * m_r * m_t + g_r * m_t * g_t <= m_r * m_t * g_t + g_r * m_r * g_t;

    let y_vec = flatten(y);
    let y_energy = y_vec.norm_squared();
    let mut residual = y.clone();
    let mut history = vec![y_energy / n as f64];
    let mut support: Vec<(usize, usize)> = Vec::new();
    let mut basis: Vec<CVector> = Vec::new();
    // Column k holds the coordinates of atom k in the orthonormal basis.
    let mut r_coef: Vec<Vec<num_complex::Complex64>> = Vec::new();
    let mut proj: Vec<num_complex::Complex64> = Vec::new();
    let mut correlations = 0u64;

    let stop = loop {
        let ms = *history.last().unwrap();
        if ms <= eps_stop {
            break OmpStop::Threshold;
        }
        if ms * n as f64 <= EXACT_FIT * y_energy {
            break OmpStop::ExactFit;
        }
        if support.len() >= max_paths {
            break OmpStop::MaxPaths;
        }

        let r_split = SplitMatrix::new(&residual);
        let c = if left_first { p_h_split.mul(&r_split).mul(&t_split) } else { p_h_split.mul(&r_split.mul(&t_split)) };
        correlations += (g_r * g_t) as u64;
        // ranked by |c|^2 / (|p_a|^2 |t_b|^2), which orders atoms like the normalized correlation
        let mut best = (0usize, 0usize, -1.0f64);
        for b in 0..g_t {
            if t_inv[b] == 0.0 {
                continue;
            }
            for (a, (x, y)) in c.re.column(b).iter().zip(c.im.column(b).iter()).enumerate() {
                let score = (x * x + y * y) * p_inv[a] * t_inv[b];
                if score > best.2 {
                    best = (a, b, score);
                }
            }
        }
        let (a, b, score) = best;
        if score <= 0.0 || support.contains(&(a, b)) {
            return Err(Error::OmpBreakdown(format!(
                "no new atom correlates with the residual after {} paths",
                support.len()
            )));
        }

        let atom = flatten(&(p.column(a) * t.column(b).adjoint()));
        let atom_norm = atom.norm();
        let mut v = atom.clone();
        let mut coords = vec![ZERO; basis.len() + 1];
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for (k, q) in basis.iter().enumerate() {
                let h = q.dotc(&v);
                coords[k] += h;
                v.axpy(-h, q, crate::linalg::ONE);
            }
        }
        let v_norm = v.norm();
        if v_norm <= DEPENDENT_ATOM * atom_norm {
            return Err(Error::OmpBreakdown(format!(
                "atom ({a}, {b}) is numerically dependent on the current support"
            )));
        }
        v.unscale_mut(v_norm);
        coords[basis.len()] = num_complex::Complex64::new(v_norm, 0.0);

        let r_vec = flatten(&residual);
        let z = v.dotc(&r_vec);
        let new_r = r_vec - &v * z;
        let new_ms = new_r.norm_squared() / n as f64;
        if !(new_ms < ms) {
            return Err(Error::OmpBreakdown(format!(
                "residual did not decrease at path {} ({ms:e} -> {new_ms:e})",
                support.len() + 1
            )));
        }
        residual = CMatrix::from_column_slice(m_r, m_t, new_r.as_slice());
        history.push(new_ms);
        support.push((a, b));
        basis.push(v);
        r_coef.push(coords);
        proj.push(z);
    };

    // Least-squares coefficients on the final support: R x = Q^H y.
    let k = support.len();
    let mut coef = vec![ZERO; k];
    for i in (0..k).rev() {
        let mut acc = proj[i];
        for j in i + 1..k {
            acc -= r_coef[j][i] * coef[j];
        }
        coef[i] = acc / r_coef[i][i];
    }

    let mut h_hat = CMatrix::zeros(sounding.n_r(), sounding.n_t());
    for (&(a, b), &x) in support.iter().zip(&coef) {
        h_hat += (dict.a_r.column(a) * dict.a_t.column(b).adjoint()) * x;
    }
    debug_assert!(frobenius_sq(&h_hat).is_finite());

    Ok(OmpEstimate {
        h_hat,
        support,
        coefficients: coef,
        residual_history: history,
        correlations,
        num_measurements: n,
        stop,
    })
}
