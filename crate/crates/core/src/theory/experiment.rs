use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::colex::binomial;
use super::recovery::{sparse_recover, RecoveryMethod, RecoveryOptions};
use super::sensing::{build_sensing, Allocation, BlockSensingMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::schema::AttributeSchema;

/// Grid and solver settings for a recovery Monte-Carlo run. Each grid point
/// uses a single attribute of cardinality `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub r: Vec<usize>,
    pub k: Vec<usize>,
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Nonzero counts are drawn uniformly from `entry_min..=entry_max`.
    pub entry_min: u64,
    pub entry_max: u64,
    pub method: RecoveryMethod,
    /// Entry scale; `None` means `r^{-1/2}`.
    pub scale: Option<f64>,
    pub max_iter: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            r: vec![100, 200, 400, 800],
            k: vec![40],
            n: vec![2],
            s: vec![5],
            trials: 100,
            seed: 0,
            entry_min: 1,
            entry_max: 4,
            method: RecoveryMethod::Omp,
            scale: None,
            max_iter: 5000,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r.is_empty() || self.k.is_empty() || self.n.is_empty() || self.s.is_empty() {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        if self.entry_min == 0 || self.entry_min > self.entry_max {
            return Err(Error::Config("entry range must satisfy 1 <= entry_min <= entry_max".into()));
        }
        if self.r.contains(&0) || self.n.contains(&0) {
            return Err(Error::Config("r and n must be positive".into()));
        }
        for &k in &self.k {
            if k < 2 {
                return Err(Error::Config("k must be at least 2".into()));
            }
            for &n in &self.n {
                let dim = binomial(k, n);
                if let Some(&s) = self.s.iter().find(|&&s| s > dim) {
                    return Err(Error::Config(format!("s = {s} exceeds C({k}, {n}) = {dim}")));
                }
            }
        }
        if let Some(scale) = self.scale {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::Config("scale must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub r: usize,
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
}

impl RecoveryRow {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Random nonnegative integer `c` with exactly `s` nonzeros.
pub fn random_sparse_counts(dim: usize, s: usize, lo: u64, hi: u64, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let mut c = vec![0.0; dim];
    for i in sample(&mut rng, dim, s) {
        c[i] = rng.random_range(lo..=hi) as f64;
    }
    c
}

/// Exact support match plus entrywise error below one half.
pub fn is_exact_recovery(truth: &[f64], estimate: &[f64]) -> bool {
    truth.iter().zip(estimate).all(|(&t, &e)| (t != 0.0) == (e != 0.0) && (t - e).abs() < 0.5)
}

fn run_trial(cfg: &RecoveryConfig, r: usize, k: usize, n: usize, s: usize, trial: usize) -> Result<bool> {
    let schema = AttributeSchema::uniform("recovery", &[k])?;
    let scale = cfg.scale.unwrap_or(1.0 / (r as f64).sqrt());
    // common random numbers: c depends only on (k, n, s, trial) and U on (r, k, trial)
    let c_seed = derive_seed(cfg.seed, &format!("recovery/c/{k}/{n}/{s}/{trial}"));
    let u_seed = derive_seed(cfg.seed, &format!("recovery/u/{r}/{k}/{trial}"));
    let b: BlockSensingMatrix = build_sensing(&schema, r, u_seed, Allocation::Equal, scale)?;
    let op = b.operator(n);
    let c = random_sparse_counts(op.cols(), s, cfg.entry_min, cfg.entry_max, c_seed);
    let f = op.apply(&c);
    let rec = sparse_recover(
        &f,
        op.as_ref(),
        &RecoveryOptions { method: cfg.method, budget: Some(s), max_iter: cfg.max_iter, ..Default::default() },
    )?;
    Ok(is_exact_recovery(&c, &rec.coefficients))
}

/// Success counts for every `(r, k, n, s)` grid point, trials in parallel.
pub fn recovery_experiment(cfg: &RecoveryConfig) -> Result<Vec<RecoveryRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &k in &cfg.k {
        for &n in &cfg.n {
            for &s in &cfg.s {
                for &r in &cfg.r {
                    let outcomes: Result<Vec<bool>> =
                        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, r, k, n, s, t)).collect();
                    let successes = outcomes?.into_iter().filter(|&ok| ok).count();
                    rows.push(RecoveryRow { r, k, n, s, trials: cfg.trials, successes });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_recovery_csv<W: Write>(mut out: W, rows: &[RecoveryRow]) -> Result<()> {
    writeln!(out, "r,k,n,s,trials,successes")?;
    for row in rows {
        writeln!(out, "{},{},{},{},{},{}", row.r, row.k, row.n, row.s, row.trials, row.successes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(s: Vec<usize>, r: Vec<usize>) -> RecoveryConfig {
        RecoveryConfig { r, k: vec![12], n: vec![2], s, trials: 20, ..Default::default() }
    }

    #[test]
    fn zero_sparsity_always_succeeds() {
        let rows = recovery_experiment(&small(vec![0], vec![4, 16])).unwrap();
        assert!(rows.iter().all(|row| row.successes == row.trials));
    }

    #[test]
    fn too_few_rows_fails() {
        let rows = recovery_experiment(&small(vec![5], vec![2])).unwrap();
        assert!(rows[0].rate() <= 0.1, "{rows:?}");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_recovery_csv(&mut buf, &[RecoveryRow { r: 8, k: 4, n: 2, s: 1, trials: 3, successes: 2 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "r,k,n,s,trials,successes\n8,4,2,1,3,2\n");
    }

    #[test]
    fn rejects_oversized_support() {
        let cfg = RecoveryConfig { k: vec![4], n: vec![2], s: vec![7], ..Default::default() };
        assert!(recovery_experiment(&cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let cfg = small(vec![3], vec![24]);
        assert_eq!(recovery_experiment(&cfg).unwrap(), recovery_experiment(&cfg).unwrap());
    }

    #[test]
    fn exactness_rule() {
        assert!(is_exact_recovery(&[0.0, 2.0], &[0.0, 2.3]));
        assert!(!is_exact_recovery(&[0.0, 2.0], &[0.1, 2.0]));
        assert!(!is_exact_recovery(&[0.0, 2.0], &[0.0, 2.6]));
    }
}
