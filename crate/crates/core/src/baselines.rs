//! Comparison miners scored by the weighted Kullback-Leibler divergence
//! without dispersion: top-k mining and sequential covering.

use std::f64::consts::LOG2_E;

use crate::data::Dataset;
use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::model::{Description, GaussianStats, SubgroupList};
use crate::search::{run_beam, BeamCandidate, BeamParams, ConditionPool, Objective, SearchConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    /// Number of subgroups returned by top-k.
    pub k: usize,
    pub search: SearchConfig,
    /// Seq-cover stops when the best usage or the remaining rows fall below
    /// this; `None` means `max(min_usage, ⌈n/100⌉)`.
    pub min_coverage: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 10,
            search: SearchConfig::default(),
            min_coverage: None,
        }
    }
}

impl BaselineConfig {
    pub fn min_coverage_for(&self, n_rows: usize) -> usize {
        self.min_coverage
            .unwrap_or_else(|| self.search.min_usage.max(n_rows.div_ceil(100)))
            .max(self.search.min_usage)
    }
}

/// `n_s (μ_s − μ_d)² / (2σ_d²) · log2 e`.
pub fn wkl_mu(stats_s: &GaussianStats, theta_d: &GaussianStats, variance_floor: f64) -> f64 {
    let var = theta_d.floored_variance(variance_floor);
    let diff = stats_s.mean - theta_d.mean;
    stats_s.n as f64 * diff * diff / (2.0 * var) * LOG2_E
}

struct MeanShift<'a> {
    theta_d: &'a GaussianStats,
    variance_floor: f64,
}

impl Objective for MeanShift<'_> {
    fn score(&self, _description: &Description, values: &[f64]) -> Option<(f64, f64, f64)> {
        let stats = GaussianStats::from_values(values);
        let q = wkl_mu(&stats, self.theta_d, self.variance_floor);
        Some((q, q / values.len() as f64, q))
    }
}

fn params(search: &SearchConfig) -> BeamParams {
    BeamParams {
        width: search.beam_width,
        depth: search.max_depth,
        min_usage: search.min_usage,
        execution: search.execution,
    }
}

/// A scored description from top-k mining.
#[derive(Debug, Clone)]
pub struct RankedSubgroup {
    pub description: Description,
    /// Statistics over the full-dataset cover.
    pub stats: GaussianStats,
    pub score: f64,
}

/// The `k` best distinct descriptions by WKL_μ over the full dataset.
pub fn topk_miner(dataset: &Dataset, config: &BaselineConfig) -> Result<Vec<RankedSubgroup>> {
    config.search.validate()?;
    if config.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let encoder = Encoder::for_dataset(dataset, config.search.n_cut);
    let pool = ConditionPool::new(dataset, encoder.binning());
    let objective = MeanShift {
        theta_d: dataset.theta_d(),
        variance_floor: encoder.config().variance_floor,
    };
    let mut all = crate::model::RowSet::with_capacity(dataset.n_rows());
    all.insert_range(..);
    let found = run_beam(dataset, &pool, &all, params(&config.search), &objective, config.k);
    Ok(found
        .into_iter()
        .map(|c: BeamCandidate| {
            let values: Vec<f64> = c.usage_cover.ones().map(|r| dataset.target()[r]).collect();
            RankedSubgroup {
                description: c.description,
                stats: GaussianStats::from_values(&values),
                score: c.score,
            }
        })
        .collect())
}

/// Orders a set of subgroups into a list (score order) and drops members
/// whose remaining usage is below `min_usage`.
pub fn listify(
    ranked: &[RankedSubgroup],
    encoder: &Encoder<'_>,
    min_usage: usize,
) -> Result<SubgroupList> {
    let dataset = encoder.dataset();
    let mut list = SubgroupList::empty(encoder);
    for r in ranked {
        let cover = r.description.cover(dataset);
        let mut usage = cover.clone();
        usage.intersect_with(list.default_cover());
        if usage.count_ones(..) >= min_usage.max(2) {
            list.push_with_usage(r.description.clone(), cover.count_ones(..), usage, encoder)?;
        }
    }
    Ok(list)
}

/// Sequential covering: repeatedly take the best WKL_μ subgroup on the
/// remaining rows and remove its cover.
pub fn seq_cover_miner(dataset: &Dataset, config: &BaselineConfig) -> Result<SubgroupList> {
    config.search.validate()?;
    let encoder = Encoder::for_dataset(dataset, config.search.n_cut);
    let pool = ConditionPool::new(dataset, encoder.binning());
    let objective = MeanShift {
        theta_d: dataset.theta_d(),
        variance_floor: encoder.config().variance_floor,
    };
    let min_coverage = config.min_coverage_for(dataset.n_rows());
    let mut search = params(&config.search);
    search.min_usage = min_coverage;
    let mut list = SubgroupList::empty(&encoder);
    loop {
        if list.default_cover().count_ones(..) < min_coverage {
            break;
        }
        let best = run_beam(dataset, &pool, list.default_cover(), search, &objective, 1);
        let Some(best) = best.into_iter().next() else {
            break;
        };
        if best.usage < min_coverage || best.score <= 0.0 {
            break;
        }
        let cover_size = best.description.cover(dataset).count_ones(..);
        list.push_with_usage(best.description, cover_size, best.usage_cover, &encoder)?;
    }
    Ok(list)
}
