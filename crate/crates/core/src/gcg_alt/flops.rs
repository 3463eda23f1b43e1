//! Real-flop counts of the estimator and the OMP baseline.

use serde::{Deserialize, Serialize};

/// Per-iteration constant `B = (2q + 3)(g + 1) + (4p + 16)`.
pub fn gcg_block(p: f64, q: usize, g: usize) -> f64 {
    ((2 * q + 3) * (g + 1)) as f64 + (4.0 * p + 16.0)
}

/// `8 r B N_t N_r`: atoms plus step sizes over `r_hat` outer iterations.
pub fn gcg_flops(n_t: usize, n_r: usize, p: f64, r_hat: usize, q: usize, g: usize) -> f64 {
    8.0 * r_hat as f64 * gcg_block(p, q, g) * (n_t * n_r) as f64
}

/// One `V` update at width `k`: `(8k^2 p N_r + 4k^3 + 16k^2 + 8k p N_r) N_t`.
pub fn altmin_v_flops(n_t: usize, n_r: usize, p: f64, k: usize) -> f64 {
    let (k, nr, nt) = (k as f64, n_r as f64, n_t as f64);
    (8.0 * k * k * p * nr + 4.0 * k.powi(3) + 16.0 * k * k + 8.0 * k * p * nr) * nt
}

/// One `U` update at width `k`: `(8k^2 p N_t + 4k^3 + 16k^2 + 8k p N_t) N_r`.
pub fn altmin_u_flops(n_t: usize, n_r: usize, p: f64, k: usize) -> f64 {
    let (k, nr, nt) = (k as f64, n_r as f64, n_t as f64);
    (8.0 * k * k * p * nt + 4.0 * k.powi(3) + 16.0 * k * k + 8.0 * k * p * nt) * nr
}

/// `sum_{k=1}^{r} Q (V_k + U_k)` evaluated term by term.
pub fn altmin_flops_sum(n_t: usize, n_r: usize, p: f64, r_hat: usize, q_iters: usize) -> f64 {
    (1..=r_hat)
        .map(|k| q_iters as f64 * (altmin_v_flops(n_t, n_r, p, k) + altmin_u_flops(n_t, n_r, p, k)))
        .sum()
}

/// Closed form `Q r (r+1)/3 [p N_r N_t (16r + 32) + (N_t + N_r)(3r^2 + 19r + 8)]`.
pub fn altmin_flops_closed(n_t: usize, n_r: usize, p: f64, r_hat: usize, q_iters: usize) -> f64 {
    let (r, q) = (r_hat as f64, q_iters as f64);
    let (nr, nt) = (n_r as f64, n_t as f64);
    q * r * (r + 1.0) / 3.0
        * (p * nr * nt * (16.0 * r + 32.0) + (nt + nr) * (3.0 * r * r + 19.0 * r + 8.0))
}

/// `8 p r N_t N_r G_t G_r`.
pub fn omp_flops(n_t: usize, n_r: usize, p: f64, r_hat: usize, g_t: usize, g_r: usize) -> f64 {
    8.0 * p * r_hat as f64 * (n_t * n_r) as f64 * (g_t * g_r) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopReport {
    pub gcg: f64,
    pub altmin_closed: f64,
    pub altmin_sum: f64,
    pub total: f64,
}

/// Both AltMin forms are reported; `total` uses the term-by-term sum.
pub fn flop_count(
    n_t: usize,
    n_r: usize,
    p: f64,
    r_hat: usize,
    q_iters: usize,
    q: usize,
    g: usize,
) -> FlopReport {
    let gcg = gcg_flops(n_t, n_r, p, r_hat, q, g);
    let altmin_sum = altmin_flops_sum(n_t, n_r, p, r_hat, q_iters);
    FlopReport {
        gcg,
        altmin_closed: altmin_flops_closed(n_t, n_r, p, r_hat, q_iters),
        altmin_sum,
        total: gcg + altmin_sum,
    }
}
