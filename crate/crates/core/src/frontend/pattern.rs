use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform spatial sampling: the same number of distinct rows in every column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPattern {
    pub n_t: usize,
    pub n_r: usize,
    /// Sorted 0-based sampled rows of each column.
    pub rows: Vec<Vec<usize>>,
}

/// Converts a sampling ratio to a per-column count, rejecting non-integral `p N_r`.
pub fn rows_per_column(n_r: usize, p: f64) -> Result<usize> {
    let exact = p * n_r as f64;
    let count = exact.round();
    if !(p > 0.0 && p <= 1.0) || (exact - count).abs() > 1e-9 || count < 1.0 {
        return Err(Error::Config(format!(
            "sampling ratio {p} gives {exact} rows out of {n_r}; need a positive integer"
        )));
    }
    Ok(count as usize)
}

pub fn build_sampling_pattern(n_t: usize, n_r: usize, p: f64, seed: u64) -> Result<SamplingPattern> {
    let per_column = rows_per_column(n_r, p)?;
    SamplingPattern::with_count(n_t, n_r, per_column, seed)
}

impl SamplingPattern {
    pub fn with_count(n_t: usize, n_r: usize, per_column: usize, seed: u64) -> Result<Self> {
        if n_t == 0 || n_r == 0 || per_column == 0 || per_column > n_r {
            return Err(Error::Config(format!(
                "cannot draw {per_column} rows per column from a {n_r}x{n_t} grid"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n_t)
            .map(|_| {
                let mut r = sample(&mut rng, n_r, per_column).into_vec();
                r.sort_unstable();
                r
            })
            .collect();
        Ok(Self { n_t, n_r, rows })
    }

    /// Every entry of the grid.
    pub fn full(n_t: usize, n_r: usize) -> Self {
        Self {
            n_t,
            n_r,
            rows: vec![(0..n_r).collect(); n_t],
        }
    }

    pub fn per_column_count(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ratio(&self) -> f64 {
        self.len() as f64 / (self.n_t * self.n_r) as f64
    }

    /// `(row, column)` pairs in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(j, rows)| rows.iter().map(move |&i| (i, j)))
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.rows
            .get(col)
            .is_some_and(|r| r.binary_search(&row).is_ok())
    }

    /// Per-row lists of sampled columns.
    pub fn columns_by_row(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_r];
        for (i, j) in self.entries() {
            out[i].push(j);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_ratio_is_full_grid() {
        let p = build_sampling_pattern(8, 4, 1.0, 3).unwrap();
        assert_eq!(p, SamplingPattern::full(8, 4));
        assert_eq!(p.len(), 32);
    }

    #[test]
    fn twelve_distinct_rows_per_column() {
        let p = build_sampling_pattern(128, 32, 0.375, 9).unwrap();
        assert_eq!(p.len(), 1536);
        for rows in &p.rows {
            assert_eq!(rows.len(), 12);
            assert!(rows.windows(2).all(|w| w[0] < w[1]));
            assert!(*rows.last().unwrap() < 32);
        }
        assert_eq!(p, build_sampling_pattern(128, 32, 0.375, 9).unwrap());
    }

    #[test]
    fn rows_essentially_never_left_unsampled() {
        // each row is missed with probability (1 - p)^N_t, about 7e-27 here
        let trials = 2000;
        let mut missed = 0usize;
        for seed in 0..trials {
            let p = build_sampling_pattern(128, 32, 0.375, seed).unwrap();
            missed += p.columns_by_row().iter().filter(|c| c.is_empty()).count();
        }
        let frac = missed as f64 / (trials as usize * 32) as f64;
        assert!(frac < 1e-6);
    }

    #[test]
    fn non_integral_count_is_config_error() {
        assert!(matches!(
            build_sampling_pattern(8, 32, 0.3, 0),
            Err(Error::Config(_))
        ));
        assert!(build_sampling_pattern(8, 32, 0.0, 0).is_err());
    }
}
