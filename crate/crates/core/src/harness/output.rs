use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::metrics::to_db;
use super::sweep::ResultRecord;
use crate::error::{Error, Result};

/// Column name for the SE at one SNR point, e.g. `se_at_snr_-10`.
pub fn se_column(snr_db: f64) -> String {
    format!("se_at_snr_{snr_db}")
}

/// Writes records as CSV: sweep axes, trial, estimator, nmse_db, se_at_snr_*,
/// r_hat, r_sub, flops, seed, then nmse, wall_ms and status.
pub fn write_csv<W: Write>(out: W, records: &[ResultRecord], snr_db: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let axes: Vec<String> = records.first().map(|r| r.coords.iter().map(|(a, _)| a.clone()).collect()).unwrap_or_default();
    let mut header = axes.clone();
    header.extend(["trial", "estimator", "nmse_db"].map(String::from));
    header.extend(snr_db.iter().map(|&s| se_column(s)));
    header.extend(["r_hat", "r_sub", "flops", "seed", "nmse", "wall_ms", "status"].map(String::from));
    w.write_record(&header)?;
    for r in records {
        if r.coords.len() != axes.len() || r.se.len() != snr_db.len() {
            return Err(Error::DimensionMismatch("records disagree on sweep axes or SNR points".into()));
        }
        let mut row: Vec<String> = r.coords.iter().map(|(_, v)| v.to_string()).collect();
        row.push(r.trial.to_string());
        row.push(r.estimator.clone());
        row.push(r.nmse_db.to_string());
        row.extend(r.se.iter().map(f64::to_string));
        row.push(r.r_hat.to_string());
        row.push(r.r_sub.to_string());
        row.push(r.flops.to_string());
        row.push(r.seed.to_string());
        row.push(r.nmse.to_string());
        row.push(format!("{:.3}", r.wall_ms));
        row.push(r.status.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, column: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Config(format!("bad value `{field}` in column `{column}`")))
}

/// Reads a CSV written by [`write_csv`]; returns the records and the SNR points.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<ResultRecord>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("CSV has no `{name}` column")))
    };
    let trial_col = col("trial")?;
    let (est_col, db_col, rh_col, rs_col) = (col("estimator")?, col("nmse_db")?, col("r_hat")?, col("r_sub")?);
    let (fl_col, seed_col) = (col("flops")?, col("seed")?);
    let nmse_col = col("nmse").ok();
    let wall_col = col("wall_ms").ok();
    let status_col = col("status").ok();
    let se_cols: Vec<(usize, f64)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("se_at_snr_").and_then(|s| s.parse().ok()).map(|s| (i, s)))
        .collect();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let coords = (0..trial_col)
            .map(|i| Ok((header[i].clone(), parse::<f64>(get(i), &header[i])?)))
            .collect::<Result<Vec<_>>>()?;
        let nmse_db: f64 = parse(get(db_col), "nmse_db")?;
        records.push(ResultRecord {
            coords,
            trial: parse(get(trial_col), "trial")?,
            estimator: get(est_col).to_string(),
            nmse: match nmse_col {
                Some(c) => parse(get(c), "nmse")?,
                None => 10f64.powf(nmse_db / 10.0),
            },
            nmse_db,
            se: se_cols.iter().map(|&(i, _)| parse(get(i), &header[i])).collect::<Result<_>>()?,
            r_hat: parse(get(rh_col), "r_hat")?,
            r_sub: parse(get(rs_col), "r_sub")?,
            flops: parse(get(fl_col), "flops")?,
            seed: parse(get(seed_col), "seed")?,
            wall_ms: match wall_col {
                Some(c) => parse(get(c), "wall_ms")?,
                None => 0.0,
            },
            status: status_col.map(|c| get(c).to_string()).unwrap_or_else(|| "ok".into()),
        });
    }
    Ok((records, se_cols.into_iter().map(|(_, s)| s).collect()))
}

/// Mean metrics of one (sweep point, estimator) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub coords: Vec<(String, f64)>,
    pub estimator: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_nmse: f64,
    /// `10 log10(mean NMSE)`.
    pub mean_nmse_db: f64,
    pub mean_se: Vec<f64>,
    pub mean_r_hat: f64,
    pub mean_flops: f64,
}

fn coord_key(coords: &[(String, f64)]) -> Vec<u64> {
    coords.iter().map(|(_, v)| v.to_bits()).collect()
}

/// Groups successful records by sweep point and estimator, in first-seen order.
pub fn summarize(records: &[ResultRecord]) -> Vec<GroupSummary> {
    let mut order: Vec<(Vec<u64>, String)> = Vec::new();
    let mut groups: BTreeMap<(Vec<u64>, String), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        let key = (coord_key(&r.coords), r.estimator.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let all = &groups[&key];
            let ok: Vec<&&ResultRecord> = all.iter().filter(|r| r.is_ok()).collect();
            let n = ok.len().max(1) as f64;
            let mean_nmse = ok.iter().map(|r| r.nmse).sum::<f64>() / n;
            let n_se = all[0].se.len();
            let mean_se = (0..n_se).map(|k| ok.iter().map(|r| r.se[k]).sum::<f64>() / n).collect();
            GroupSummary {
                coords: all[0].coords.clone(),
                estimator: key.1.clone(),
                trials: ok.len(),
                failures: all.len() - ok.len(),
                mean_nmse,
                mean_nmse_db: to_db(mean_nmse),
                mean_se,
                mean_r_hat: ok.iter().map(|r| r.r_hat as f64).sum::<f64>() / n,
                mean_flops: ok.iter().map(|r| r.flops).sum::<f64>() / n,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub samples: usize,
    /// Probability per bin; bin `k` holds rank `k`.
    pub mass: Vec<f64>,
}

impl Histogram {
    fn from_values(values: &[usize], bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &v in values {
            counts[v] += 1;
        }
        let total = values.len();
        let mass = counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
        Histogram { samples: total, mass }
    }

    /// Probability of a value `<= k`.
    pub fn cdf(&self, k: usize) -> f64 {
        self.mass.iter().take(k + 1).sum()
    }

    /// Lower median.
    pub fn median(&self) -> Option<usize> {
        if self.samples == 0 {
            return None;
        }
        let mut acc = 0.0;
        for (k, m) in self.mass.iter().enumerate() {
            acc += m;
            if acc >= 0.5 - 1e-12 {
                return Some(k);
            }
        }
        Some(self.mass.len() - 1)
    }
}

/// Rank histograms on shared bins `0..=max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub bins: Vec<usize>,
    pub r_sub: Histogram,
    pub gcg: Histogram,
    pub omp: Histogram,
}

/// `r_sub` is counted once per (sweep point, trial); `r_hat` per estimator record.
pub fn rank_distribution(records: &[ResultRecord]) -> Result<RankDistribution> {
    let ok: Vec<&ResultRecord> = records.iter().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Err(Error::DegenerateInput("no successful records to histogram".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut sub = Vec::new();
    for r in &ok {
        if seen.insert((coord_key(&r.coords), r.trial)) {
            sub.push(r.r_sub);
        }
    }
    let gcg: Vec<usize> = ok.iter().filter(|r| r.estimator == "gcg-alt").map(|r| r.r_hat).collect();
    let omp: Vec<usize> = ok.iter().filter(|r| r.estimator == "omp").map(|r| r.r_hat).collect();
    let max = sub.iter().chain(&gcg).chain(&omp).copied().max().unwrap_or(0);
    let bins = max + 1;
    Ok(RankDistribution {
        bins: (0..bins).collect(),
        r_sub: Histogram::from_values(&sub, bins),
        gcg: Histogram::from_values(&gcg, bins),
        omp: Histogram::from_values(&omp, bins),
    })
}
