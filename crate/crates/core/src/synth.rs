//! Seeded synthetic data with planted subgroups, and brute-force oracles for
//! the search and the code-length bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, ColumnKind, ColumnSchema, Dataset};
use crate::encoding::{
    self, gaussian_fixed_code, log2_binomial, normalized_gain, subgroup_data_code,
    universal_int_code, CodeLengths, Encoder,
};
use crate::error::{Error, Result};
use crate::model::{Condition, Description, Operator, RowSet, SubgroupList};
use crate::search::{candidate_order, BeamCandidate};
use crate::serialize::{description_from_doc, description_to_doc, ConditionDoc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSubgroup {
    pub conditions: Vec<ConditionDoc>,
    /// Mean shift in units of the background standard deviation.
    pub shift: f64,
    /// Subgroup standard deviation over the background one.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n_rows: usize,
    pub columns: Vec<ColumnSchema>,
    pub planted: Vec<PlantedSubgroup>,
    pub noise_seed: u64,
    #[serde(default)]
    pub base_mean: f64,
    #[serde(default = "one")]
    pub base_std: f64,
}

fn one() -> f64 {
    1.0
}

impl PlantedSpec {
    /// Marker column (nominal, one value per planted subgroup plus three
    /// background values), a binary flag and two uniform numeric columns.
    /// Planted subgroup `i` is `marker = m{i}`; the second one also requires
    /// `flag = yes`. Shifts alternate in sign.
    pub fn preset(n_rows: usize, n_planted: usize, seed: u64) -> Self {
        let marker_values = (0..n_planted + 3).map(|i| format!("m{i}")).collect();
        let columns = vec![
            ColumnSchema::categorical("marker", marker_values),
            ColumnSchema::categorical("flag", vec!["yes".into(), "no".into()]),
            ColumnSchema::numeric("x1"),
            ColumnSchema::numeric("x2"),
        ];
        let shifts = [3.0, -2.5, 2.0, -3.0, 2.5, -2.0];
        let ratios = [0.1, 0.2, 0.3];
        let planted = (0..n_planted)
            .map(|i| {
                let mut conditions = vec![ConditionDoc::Equals {
                    column: "marker".into(),
                    value: format!("m{i}"),
                }];
                if i == 1 {
                    conditions.push(ConditionDoc::Equals {
                        column: "flag".into(),
                        value: "yes".into(),
                    });
                }
                PlantedSubgroup {
                    conditions,
                    shift: shifts[i % shifts.len()],
                    ratio: ratios[i % ratios.len()],
                }
            })
            .collect();
        PlantedSpec {
            n_rows,
            columns,
            planted,
            noise_seed: seed,
            base_mean: 0.0,
            base_std: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 2 {
            return Err(Error::Config("synthetic data needs at least 2 rows".into()));
        }
        if !(self.base_std > 0.0 && self.base_std.is_finite() && self.base_mean.is_finite()) {
            return Err(Error::Config("base distribution must be finite with positive std".into()));
        }
        for p in &self.planted {
            if !(p.shift.is_finite() && p.ratio.is_finite() && p.ratio > 0.0) {
                return Err(Error::Config("planted shifts and ratios must be finite, ratios positive".into()));
            }
        }
        Ok(())
    }
}

/// Planted descriptions and their covers on the generated rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subgroups: Vec<GroundTruthSubgroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSubgroup {
    pub conditions: Vec<ConditionDoc>,
    pub shift: f64,
    pub ratio: f64,
    pub rows: Vec<usize>,
}

impl GroundTruth {
    pub fn covers(&self, n_rows: usize) -> Vec<RowSet> {
        self.subgroups
            .iter()
            .map(|g| {
                let mut s = RowSet::with_capacity(n_rows);
                g.rows.iter().for_each(|&r| s.insert(r));
                s
            })
            .collect()
    }
}

fn labels_for(schema: &ColumnSchema) -> Vec<String> {
    if schema.categories.len() >= schema.domain_size {
        schema.categories.clone()
    } else {
        (0..schema.domain_size).map(|i| format!("v{i}")).collect()
    }
}

/// Uniform explanatory cells; planted rows get `N(μ0 + shift·σ0, (ratio·σ0)²)`
/// targets, all others `N(μ0, σ0²)`.
pub fn generate_planted(spec: &PlantedSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = spec.n_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let mut columns = Vec::with_capacity(spec.columns.len());
    let mut cells = Vec::with_capacity(spec.columns.len());
    for schema in &spec.columns {
        match schema.kind {
            ColumnKind::Numeric => {
                columns.push(ColumnSchema::numeric(schema.name.clone()));
                cells.push(ColumnData::Numeric((0..n).map(|_| rng.gen::<f64>()).collect()));
            }
            ColumnKind::Binary | ColumnKind::Nominal => {
                let labels = labels_for(schema);
                let domain = labels.len() as u32;
                columns.push(ColumnSchema::categorical(schema.name.clone(), labels));
                cells.push(ColumnData::Categorical(
                    (0..n).map(|_| rng.gen_range(0..domain)).collect(),
                ));
            }
        }
    }
    // placeholder target; planted covers only depend on explanatory cells
    let provisional = Dataset::new(columns.clone(), cells.clone(), "target", vec![0.0; n])?;
    let descriptions = spec
        .planted
        .iter()
        .map(|p| description_from_doc(&p.conditions, &provisional))
        .collect::<Result<Vec<_>>>()?;
    let covers: Vec<RowSet> = descriptions.iter().map(|d| d.cover(&provisional)).collect();
    for i in 0..covers.len() {
        for j in i + 1..covers.len() {
            if !covers[i].is_disjoint(&covers[j]) {
                return Err(Error::Config(format!(
                    "planted subgroups {i} and {j} overlap on generated rows"
                )));
            }
        }
    }
    let mut owner = vec![None; n];
    for (i, c) in covers.iter().enumerate() {
        c.ones().for_each(|r| owner[r] = Some(i));
    }
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let target = owner
        .iter()
        .map(|o| {
            let z: f64 = unit.sample(&mut rng);
            match o {
                Some(i) => {
                    let p = &spec.planted[*i];
                    spec.base_mean + p.shift * spec.base_std + p.ratio * spec.base_std * z
                }
                None => spec.base_mean + spec.base_std * z,
            }
        })
        .collect();
    let dataset = Dataset::new(columns, cells, "target", target)?;
    let truth = GroundTruth {
        subgroups: spec
            .planted
            .iter()
            .zip(&descriptions)
            .zip(&covers)
            .map(|((p, d), c)| GroundTruthSubgroup {
                conditions: description_to_doc(d, &dataset),
                shift: p.shift,
                ratio: p.ratio,
                rows: c.ones().collect(),
            })
            .collect(),
    };
    Ok((dataset, truth))
}

fn oracle_conditions(dataset: &Dataset, cuts: &[f64], column: usize) -> Vec<Condition> {
    let schema = dataset.column(column);
    let mut out = Vec::new();
    if schema.is_categorical() {
        for v in 0..schema.domain_size {
            out.push(Condition::new(column, Operator::Equals(v as u32)));
        }
        return out;
    }
    for (i, &lo) in cuts.iter().enumerate() {
        out.push(Condition::new(column, Operator::Geq(lo)));
        out.push(Condition::new(column, Operator::Leq(lo)));
        for &hi in &cuts[i + 1..] {
            out.push(Condition::new(column, Operator::Between(lo, hi)));
        }
    }
    out
}

/// Best description of depth ≤ `max_depth` by normalized gain on the empty
/// model, found by enumerating everything. Candidates with usage below 2 are
/// skipped; `None` when nothing is scorable.
pub fn exhaustive_best_subgroup(
    encoder: &Encoder<'_>,
    max_depth: usize,
) -> Result<Option<BeamCandidate>> {
    let dataset = encoder.dataset();
    if dataset.n_columns() > 6 || dataset.n_rows() > 500 || max_depth > 2 || max_depth == 0 {
        return Err(Error::Config(
            "exhaustive oracle limited to 6 columns, 500 rows and depth 1..=2".into(),
        ));
    }
    let per_column: Vec<Vec<Condition>> = (0..dataset.n_columns())
        .map(|c| oracle_conditions(dataset, encoder.binning().cuts(c), c))
        .collect();
    let mut descriptions = Vec::new();
    for (a, conds_a) in per_column.iter().enumerate() {
        for ca in conds_a {
            descriptions.push(Description::new(vec![*ca])?);
            if max_depth == 2 {
                for conds_b in &per_column[a + 1..] {
                    for cb in conds_b {
                        descriptions.push(Description::new(vec![*ca, *cb])?);
                    }
                }
            }
        }
    }
    let empty = SubgroupList::empty(encoder);
    let mut best: Option<BeamCandidate> = None;
    for d in descriptions {
        let (per_row, usage) = normalized_gain(&empty, &d, encoder);
        if usage < 2 || !per_row.is_finite() {
            continue;
        }
        let cand = BeamCandidate {
            usage_cover: d.cover(dataset),
            description: d,
            usage,
            score: per_row,
            gain_per_row: per_row,
            gain_total: per_row * usage as f64,
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate_order(&cand, b).is_lt())
        {
            best = Some(cand);
        }
    }
    Ok(best)
}

/// From-scratch code lengths: row-by-row first-match assignment and
/// term-by-term model code, ignoring every cached value.
pub fn recompute_total_code(model: &SubgroupList, encoder: &Encoder<'_>) -> Result<CodeLengths> {
    let dataset = encoder.dataset();
    let descriptions: Vec<&Description> = model.descriptions().collect();
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); descriptions.len()];
    let mut default_values = Vec::new();
    for r in 0..dataset.n_rows() {
        let row = dataset.row(r);
        match descriptions.iter().position(|d| d.matches(&row)) {
            Some(i) => buckets[i].push(row.target()),
            None => default_values.push(row.target()),
        }
    }
    let theta = dataset.theta_d();
    let floor = encoder.config().variance_floor;
    let default_var = if theta.variance > 0.0 { theta.variance } else { floor };
    let per = buckets
        .iter()
        .map(|values| match values.len() {
            0 => Ok(0.0),
            _ => subgroup_data_code(values, theta, encoder.config()).map(|c| c.bits),
        })
        .collect::<Result<Vec<f64>>>()?;
    let default_bits = gaussian_fixed_code(&default_values, theta.mean, default_var)?;

    let k = dataset.n_columns();
    let mut model_bits = universal_int_code(descriptions.len() as u64 + 1)?;
    for d in &descriptions {
        model_bits += universal_int_code(d.len() as u64)? + log2_binomial(k, d.len());
        for c in d.conditions() {
            let schema = dataset.column(c.column);
            let cuts = encoder.binning().cuts(c.column).len();
            model_bits += encoding::condition_code(schema, cuts)?;
        }
    }
    Ok(CodeLengths::new(model_bits, per, default_bits))
}
