use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Rmse,
    Mae,
    RocAuc,
    PrAuc,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::RocAuc | Metric::PrAuc)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE",
            Metric::Mae => "MAE",
            Metric::RocAuc => "ROC-AUC",
            Metric::PrAuc => "PR-AUC",
        }
    }

    /// `None` when the metric is undefined for these labels.
    pub fn compute(self, scores: &[f64], labels: &[f64]) -> Option<f64> {
        match self {
            Metric::Rmse => rmse(scores, labels),
            Metric::Mae => mae(scores, labels),
            Metric::RocAuc => roc_auc(scores, labels),
            Metric::PrAuc => pr_auc(scores, labels),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(Metric::Rmse),
            "mae" => Ok(Metric::Mae),
            "roc-auc" | "rocauc" | "auc" => Ok(Metric::RocAuc),
            "pr-auc" | "prauc" => Ok(Metric::PrAuc),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

pub fn rmse(pred: &[f64], y: &[f64]) -> Option<f64> {
    (!y.is_empty()).then(|| (pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], y: &[f64]) -> Option<f64> {
    (!y.is_empty()).then(|| pred.iter().zip(y).map(|(p, t)| (p - t).abs()).sum::<f64>() / y.len() as f64)
}

/// Rank-sum ROC-AUC with midranks for ties. Labels are positive when `> 0.5`.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&y| y > 0.5).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y > 0.5).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos as f64 * neg as f64))
}

/// Average precision: step integration of precision over recall, tied
/// scores entering together.
pub fn pr_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let n = scores.len();
    let pos = labels.iter().filter(|&&y| y > 0.5).count();
    if pos == 0 || pos == n {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut area, mut last_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] > 0.5 {
                tp += 1;
            }
            j += 1;
        }
        seen = j;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / seen as f64;
        area += (recall - last_recall) * precision;
        last_recall = recall;
        i = j;
    }
    debug_assert_eq!(seen, n);
    Some(area)
}
