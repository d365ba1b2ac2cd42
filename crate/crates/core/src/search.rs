//! Beam search over descriptions and the greedy subgroup-list miner.

use std::cmp::Ordering;
use std::collections::HashSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BinningScheme, ColumnKind, Dataset};
use crate::encoding::{gain_for_values, CodeLengths, Encoder};
use crate::error::{Error, Result};
use crate::model::{Condition, Description, Operator, RowSet, SubgroupList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// Compression gain divided by usage.
    #[default]
    Normalized,
    /// Compression gain in bits.
    Absolute,
}

/// How candidate scoring within a beam level is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon data-parallel scoring; falls back to sequential without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub beam_width: usize,
    pub max_depth: usize,
    pub n_cut: usize,
    pub min_usage: usize,
    pub gain_mode: GainMode,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            beam_width: 100,
            max_depth: 5,
            n_cut: 5,
            min_usage: 2,
            gain_mode: GainMode::Normalized,
            execution: Execution::Parallel,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.max_depth == 0 || self.n_cut == 0 {
            return Err(Error::Config(
                "beam width, max depth and n_cut must be positive".into(),
            ));
        }
        if self.min_usage < 2 {
            return Err(Error::Config("min_usage must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BeamCandidate {
    pub description: Description,
    /// Rows matched within the rows the search ran on.
    pub usage_cover: RowSet,
    pub usage: usize,
    /// Ranking score: per-row gain, absolute gain, or a quality measure.
    pub score: f64,
    pub gain_per_row: f64,
    pub gain_total: f64,
}

/// Total order used for every ranking: score desc, usage desc, size asc,
/// canonical description asc.
pub fn candidate_order(a: &BeamCandidate, b: &BeamCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.usage.cmp(&a.usage))
        .then(a.description.len().cmp(&b.description.len()))
        .then_with(|| a.description.cmp(&b.description))
}

/// Every single condition expressible on a column.
pub fn column_conditions(dataset: &Dataset, binning: &BinningScheme, column: usize) -> Vec<Condition> {
    let schema = dataset.column(column);
    match schema.kind {
        ColumnKind::Binary | ColumnKind::Nominal => (0..schema.domain_size as u32)
            .map(|v| Condition::new(column, Operator::Equals(v)))
            .collect(),
        ColumnKind::Numeric => {
            let cuts = binning.cuts(column);
            let mut out = Vec::with_capacity(crate::encoding::numeric_condition_count(cuts.len()));
            for &c in cuts {
                out.push(Condition::new(column, Operator::Geq(c)));
                out.push(Condition::new(column, Operator::Leq(c)));
            }
            for i in 0..cuts.len() {
                for j in i + 1..cuts.len() {
                    out.push(Condition::new(column, Operator::Between(cuts[i], cuts[j])));
                }
            }
            out
        }
    }
}

/// One refinement per unused column and expressible condition.
pub fn generate_refinements(
    candidate: &Description,
    dataset: &Dataset,
    binning: &BinningScheme,
) -> Vec<Description> {
    let mut seen = HashSet::new();
    (0..dataset.n_columns())
        .filter(|&c| !candidate.uses_column(c))
        .flat_map(|c| column_conditions(dataset, binning, c))
        .filter_map(|cond| candidate.refine(cond))
        .filter(|d| seen.insert(d.clone()))
        .collect()
}

/// All single conditions with their full-dataset covers.
#[derive(Debug, Clone)]
pub struct ConditionPool {
    conditions: Vec<Condition>,
    covers: Vec<RowSet>,
}

impl ConditionPool {
    pub fn new(dataset: &Dataset, binning: &BinningScheme) -> Self {
        let conditions: Vec<Condition> = (0..dataset.n_columns())
            .flat_map(|c| column_conditions(dataset, binning, c))
            .collect();
        let covers = conditions
            .iter()
            .map(|cond| {
                let mut set = RowSet::with_capacity(dataset.n_rows());
                for r in 0..dataset.n_rows() {
                    if cond.matches(&dataset.row(r)) {
                        set.insert(r);
                    }
                }
                set
            })
            .collect();
        ConditionPool { conditions, covers }
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }
}

/// Scoring of a candidate from the target values of its rows.
pub(crate) trait Objective: Sync {
    /// `(score, gain_per_row, gain_total)` or `None` when not scorable.
    fn score(&self, description: &Description, values: &[f64]) -> Option<(f64, f64, f64)>;
}

struct CompressionGain<'a, 'b> {
    encoder: &'b Encoder<'a>,
    n_subgroups: usize,
    mode: GainMode,
}

impl Objective for CompressionGain<'_, '_> {
    fn score(&self, description: &Description, values: &[f64]) -> Option<(f64, f64, f64)> {
        let bits = self.encoder.description_bits(description).ok()?;
        let g = gain_for_values(values, bits, self.n_subgroups, self.encoder)?;
        let score = match self.mode {
            GainMode::Normalized => g.per_row,
            GainMode::Absolute => g.total,
        };
        Some((score, g.per_row, g.total))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BeamParams {
    pub width: usize,
    pub depth: usize,
    pub min_usage: usize,
    pub execution: Execution,
}

pub(crate) fn map_items<T, R, F>(items: &[T], execution: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = execution;
    items.iter().map(f).collect()
}

struct Pending {
    description: Description,
    cover: RowSet,
}

/// Level-wise beam search restricted to `base` rows. Returns up to `keep`
/// candidates with positive score, best first.
pub(crate) fn run_beam<O: Objective>(
    dataset: &Dataset,
    pool: &ConditionPool,
    base: &RowSet,
    params: BeamParams,
    objective: &O,
    keep: usize,
) -> Vec<BeamCandidate> {
    let target = dataset.target();
    let score_all = |pending: Vec<Pending>| -> Vec<BeamCandidate> {
        let scored = map_items(&pending, params.execution, |p| {
            let usage = p.cover.count_ones(..);
            if usage < params.min_usage {
                return None;
            }
            let values: Vec<f64> = p.cover.ones().map(|r| target[r]).collect();
            let (score, gain_per_row, gain_total) = objective.score(&p.description, &values)?;
            if !score.is_finite() {
                return None;
            }
            Some((score, gain_per_row, gain_total, usage))
        });
        pending
            .into_iter()
            .zip(scored)
            .filter_map(|(p, s)| {
                s.map(|(score, gain_per_row, gain_total, usage)| BeamCandidate {
                    description: p.description,
                    usage_cover: p.cover,
                    usage,
                    score,
                    gain_per_row,
                    gain_total,
                })
            })
            .collect()
    };

    let mut best: Vec<BeamCandidate> = Vec::new();
    let absorb = |level: &[BeamCandidate], best: &mut Vec<BeamCandidate>| {
        best.extend(level.iter().filter(|c| c.score > 0.0).cloned());
        best.sort_by(candidate_order);
        best.truncate(keep);
    };

    let first: Vec<Pending> = pool
        .conditions
        .iter()
        .zip(&pool.covers)
        .map(|(cond, cover)| {
            let mut cover = cover.clone();
            cover.intersect_with(base);
            Pending {
                description: Description::empty().refine(*cond).expect("single condition"),
                cover,
            }
        })
        .collect();
    let mut level = score_all(first);
    level.sort_by(candidate_order);
    absorb(&level, &mut best);
    level.truncate(params.width);

    for _ in 1..params.depth {
        let mut seen = HashSet::new();
        let mut expansions: Vec<(usize, usize, Description)> = Vec::new();
        for (pi, parent) in level.iter().enumerate() {
            for (ci, cond) in pool.conditions.iter().enumerate() {
                if let Some(d) = parent.description.refine(*cond) {
                    if seen.insert(d.clone()) {
                        expansions.push((pi, ci, d));
                    }
                }
            }
        }
        if expansions.is_empty() {
            break;
        }
        let covers = map_items(&expansions, params.execution, |(pi, ci, _)| {
            let mut cover = level[*pi].usage_cover.clone();
            cover.intersect_with(&pool.covers[*ci]);
            cover
        });
        let pending = expansions
            .into_iter()
            .zip(covers)
            .map(|((_, _, description), cover)| Pending { description, cover })
            .collect();
        let mut next = score_all(pending);
        next.sort_by(candidate_order);
        absorb(&next, &mut best);
        next.truncate(params.width);
        if next.is_empty() {
            break;
        }
        level = next;
    }
    best
}

/// Best positive-gain candidate for appending to `model`, searched on its
/// default rows.
pub fn beam_search(
    model: &SubgroupList,
    encoder: &Encoder<'_>,
    pool: &ConditionPool,
    config: &SearchConfig,
) -> Option<BeamCandidate> {
    let objective = CompressionGain {
        encoder,
        n_subgroups: model.len(),
        mode: config.gain_mode,
    };
    let params = BeamParams {
        width: config.beam_width,
        depth: config.max_depth,
        min_usage: config.min_usage,
        execution: config.execution,
    };
    run_beam(
        encoder.dataset(),
        pool,
        model.default_cover(),
        params,
        &objective,
        1,
    )
    .into_iter()
    .next()
}

/// Output of [`ssd_plus_plus_traced`]: the list plus code lengths after each
/// step, starting with the empty list.
#[derive(Debug, Clone)]
pub struct MiningTrace {
    pub model: SubgroupList,
    pub history: Vec<CodeLengths>,
    pub accepted: Vec<BeamCandidate>,
}

/// Greedy subgroup-list mining: append the best beam candidate while it
/// compresses the data.
pub fn ssd_plus_plus(dataset: &Dataset, config: &SearchConfig) -> Result<SubgroupList> {
    Ok(ssd_plus_plus_traced(dataset, config)?.model)
}

pub fn ssd_plus_plus_traced(dataset: &Dataset, config: &SearchConfig) -> Result<MiningTrace> {
    config.validate()?;
    let encoder = Encoder::for_dataset(dataset, config.n_cut);
    let pool = ConditionPool::new(dataset, encoder.binning());
    let mut model = SubgroupList::empty(&encoder);
    let mut history = vec![model.code_lengths().clone()];
    let mut accepted = Vec::new();
    while let Some(best) = beam_search(&model, &encoder, &pool, config) {
        let before = model.code_lengths().total_bits;
        let cover_size = best.description.cover(dataset).count_ones(..);
        model.push_with_usage(
            best.description.clone(),
            cover_size,
            best.usage_cover.clone(),
            &encoder,
        )?;
        let after = model.code_lengths().total_bits;
        if after.is_nan() || after >= before {
            return Err(Error::Model(format!(
                "accepted subgroup did not compress: {before} -> {after} bits"
            )));
        }
        history.push(model.code_lengths().clone());
        accepted.push(best);
    }
    Ok(MiningTrace {
        model,
        history,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnData, ColumnSchema};

    fn dataset(columns: Vec<(ColumnSchema, ColumnData)>, target: Vec<f64>) -> Dataset {
        let (schemas, cells) = columns.into_iter().unzip();
        Dataset::new(schemas, cells, "y", target).unwrap()
    }

    #[test]
    fn refinement_counts() {
        let ds = dataset(
            vec![(
                ColumnSchema::categorical("b", vec!["a".into(), "b".into()]),
                ColumnData::Categorical(vec![0, 1, 0, 1]),
            )],
            vec![1.0, 2.0, 3.0, 4.0],
        );
        let binning = crate::data::equal_frequency_cuts(&ds, 5);
        assert_eq!(generate_refinements(&Description::empty(), &ds, &binning).len(), 2);
        let used = Description::new(vec![Condition::new(0, Operator::Equals(0))]).unwrap();
        assert!(generate_refinements(&used, &ds, &binning).is_empty());

        let x: Vec<f64> = (0..60).map(f64::from).collect();
        let ds = dataset(
            vec![(ColumnSchema::numeric("x"), ColumnData::Numeric(x.clone()))],
            x,
        );
        let binning = crate::data::equal_frequency_cuts(&ds, 5);
        assert_eq!(binning.cuts(0).len(), 5);
        let refs = generate_refinements(&Description::empty(), &ds, &binning);
        assert_eq!(refs.len(), 20);
        assert_eq!(refs.iter().collect::<HashSet<_>>().len(), 20);
    }

    #[test]
    fn no_candidate_when_usage_too_small() {
        let ds = dataset(
            vec![(
                ColumnSchema::categorical("n", vec!["a".into(), "b".into(), "c".into()]),
                ColumnData::Categorical(vec![0, 1, 2]),
            )],
            vec![1.0, 5.0, 9.0],
        );
        let model = ssd_plus_plus(&ds, &SearchConfig::default()).unwrap();
        assert!(model.is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = SearchConfig::default();
        assert!(c.validate().is_ok());
        c.min_usage = 1;
        assert!(c.validate().is_err());
        c = SearchConfig {
            beam_width: 0,
            ..SearchConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn order_is_total() {
        let mk = |score: f64, usage: usize, d: Description| BeamCandidate {
            description: d,
            usage_cover: RowSet::with_capacity(0),
            usage,
            score,
            gain_per_row: score,
            gain_total: score,
        };
        let d1 = Description::new(vec![Condition::new(0, Operator::Equals(0))]).unwrap();
        let d2 = Description::new(vec![Condition::new(0, Operator::Equals(1))]).unwrap();
        let d12 = d1.refine(Condition::new(1, Operator::Geq(0.0))).unwrap();
        assert_eq!(candidate_order(&mk(2.0, 1, d1.clone()), &mk(1.0, 9, d1.clone())), Ordering::Less);
        assert_eq!(candidate_order(&mk(1.0, 9, d1.clone()), &mk(1.0, 3, d1.clone())), Ordering::Less);
        assert_eq!(candidate_order(&mk(1.0, 3, d1.clone()), &mk(1.0, 3, d12)), Ordering::Less);
        assert_eq!(candidate_order(&mk(1.0, 3, d1.clone()), &mk(1.0, 3, d2)), Ordering::Less);
        assert_eq!(candidate_order(&mk(1.0, 3, d1.clone()), &mk(1.0, 3, d1)), Ordering::Equal);
    }
}
