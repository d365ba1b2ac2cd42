//! Quality measures for subgroup lists. All divergences are in bits.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::model::{Description, GaussianStats, RowSet, SubgroupList};

/// `D_KL(p; q)` between two normals given as (mean, variance).
pub fn kl_normal_params(mean_p: f64, var_p: f64, mean_q: f64, var_q: f64) -> Result<f64> {
    if !(var_p > 0.0 && var_q > 0.0) {
        return Err(Error::Encoding("KL divergence needs positive variances".into()));
    }
    let diff = mean_p - mean_q;
    let kl = -0.5 * LOG2_E + 0.5 * (var_q / var_p).log2() + (var_p + diff * diff) / (2.0 * var_q) * LOG2_E;
    Ok(kl.max(0.0))
}

pub fn kl_normal(p: &GaussianStats, q: &GaussianStats) -> Result<f64> {
    kl_normal_params(p.mean, p.variance, q.mean, q.variance)
}

/// Sum over subgroups of `n_i · D_KL(θ_i; θ_d)`, zero variances floored.
pub fn swkl(model: &SubgroupList) -> f64 {
    let floor = model.variance_floor();
    let d = model.default_stats();
    model
        .subgroups()
        .iter()
        .map(|s| {
            let kl = kl_normal_params(
                s.stats.mean,
                s.stats.floored_variance(floor),
                d.mean,
                d.floored_variance(floor),
            )
            .unwrap_or(0.0);
            s.stats.n as f64 * kl
        })
        .sum()
}

pub fn jaccard(a: &RowSet, b: &RowSet) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        0.0
    } else {
        a.intersection_count(b) as f64 / union as f64
    }
}

/// Mean pairwise Jaccard index of independent full-dataset covers; 0 for
/// fewer than two descriptions.
pub fn avg_jaccard(descriptions: &[Description], dataset: &Dataset) -> f64 {
    let covers: Vec<RowSet> = descriptions.iter().map(|d| d.cover(dataset)).collect();
    avg_jaccard_of_covers(&covers)
}

pub fn avg_jaccard_of_covers(covers: &[RowSet]) -> f64 {
    if covers.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..covers.len() {
        for j in i + 1..covers.len() {
            sum += jaccard(&covers[i], &covers[j]);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// `L(D, M) / L(D | Θ_d)`.
pub fn compression_ratio(model: &SubgroupList, encoder: &Encoder<'_>) -> f64 {
    let empty = SubgroupList::empty(encoder);
    model.code_lengths().total_bits / empty.code_lengths().total_bits
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub swkl_total: f64,
    pub swkl_per_row: f64,
    pub num_subgroups: usize,
    pub avg_conditions: f64,
    pub sigma_top1_norm: f64,
    pub avg_jaccard: f64,
    pub compression_ratio: f64,
    pub runtime_seconds: f64,
}

impl EvaluationReport {
    pub const COLUMNS: [&'static str; 8] = [
        "swkl_per_row",
        "sigma_top1_norm",
        "num_subgroups",
        "avg_conditions",
        "swkl_total",
        "avg_jaccard",
        "compression_ratio",
        "runtime_seconds",
    ];

    pub fn values(&self) -> [String; 8] {
        [
            format!("{:.6}", self.swkl_per_row),
            format!("{:.6}", self.sigma_top1_norm),
            self.num_subgroups.to_string(),
            format!("{:.4}", self.avg_conditions),
            format!("{:.6}", self.swkl_total),
            format!("{:.6}", self.avg_jaccard),
            format!("{:.6}", self.compression_ratio),
            format!("{:.3}", self.runtime_seconds),
        ]
    }

    /// Aligned two-row table in the column order above.
    pub fn render_table(&self) -> String {
        let values = self.values();
        let widths: Vec<usize> = Self::COLUMNS
            .iter()
            .zip(&values)
            .map(|(h, v)| h.len().max(v.len()))
            .collect();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        format!(
            "{}\n{}\n",
            line(Self::COLUMNS.to_vec()),
            line(values.iter().map(String::as_str).collect())
        )
    }
}

pub fn summarize(model: &SubgroupList, encoder: &Encoder<'_>, runtime_seconds: f64) -> EvaluationReport {
    let dataset = encoder.dataset();
    let total = swkl(model);
    let n_sub = model.len();
    let descriptions: Vec<Description> = model.descriptions().cloned().collect();
    let sigma_top1_norm = match model.subgroups().first() {
        Some(s) => {
            let sd = model.default_stats().floored_variance(model.variance_floor()).sqrt();
            s.stats.std() / sd
        }
        None => 1.0,
    };
    EvaluationReport {
        swkl_total: total,
        swkl_per_row: total / dataset.n_rows() as f64,
        num_subgroups: n_sub,
        avg_conditions: if n_sub == 0 {
            0.0
        } else {
            descriptions.iter().map(Description::len).sum::<usize>() as f64 / n_sub as f64
        },
        sigma_top1_norm,
        avg_jaccard: avg_jaccard(&descriptions, dataset),
        compression_ratio: compression_ratio(model, encoder),
        runtime_seconds,
    }
}
