//! JSON documents for subgroup lists and descriptions.
//!
//! Conditions refer to columns by name and to categories by label, so a
//! document can be evaluated against any load of the same data.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::encoding::{CodeLengths, Encoder};
use crate::error::{Error, Result};
use crate::model::{Condition, Description, GaussianStats, Operator, SubgroupList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operator", rename_all = "lowercase")]
pub enum ConditionDoc {
    Equals { column: String, value: String },
    Geq { column: String, value: f64 },
    Leq { column: String, value: f64 },
    Between { column: String, value: [f64; 2] },
}

impl ConditionDoc {
    pub fn from_condition(condition: &Condition, dataset: &Dataset) -> Self {
        let schema = dataset.column(condition.column);
        let column = schema.name.clone();
        match condition.op {
            Operator::Equals(code) => ConditionDoc::Equals {
                column,
                value: schema
                    .categories
                    .get(code as usize)
                    .cloned()
                    .unwrap_or_else(|| code.to_string()),
            },
            Operator::Geq(value) => ConditionDoc::Geq { column, value },
            Operator::Leq(value) => ConditionDoc::Leq { column, value },
            Operator::Between(lo, hi) => ConditionDoc::Between {
                column,
                value: [lo, hi],
            },
        }
    }

    pub fn column(&self) -> &str {
        match self {
            ConditionDoc::Equals { column, .. }
            | ConditionDoc::Geq { column, .. }
            | ConditionDoc::Leq { column, .. }
            | ConditionDoc::Between { column, .. } => column,
        }
    }

    pub fn to_condition(&self, dataset: &Dataset) -> Result<Condition> {
        let index = dataset
            .column_index(self.column())
            .ok_or_else(|| Error::Model(format!("unknown column '{}'", self.column())))?;
        let op = match self {
            ConditionDoc::Equals { value, .. } => {
                let code = dataset.column(index).category_code(value).ok_or_else(|| {
                    Error::Model(format!(
                        "column '{}' has no category '{value}'",
                        self.column()
                    ))
                })?;
                Operator::Equals(code)
            }
            ConditionDoc::Geq { value, .. } => Operator::Geq(*value),
            ConditionDoc::Leq { value, .. } => Operator::Leq(*value),
            ConditionDoc::Between { value, .. } => Operator::Between(value[0], value[1]),
        };
        let condition = Condition::new(index, op);
        condition.validate(dataset)?;
        Ok(condition)
    }
}

pub fn description_to_doc(description: &Description, dataset: &Dataset) -> Vec<ConditionDoc> {
    description
        .conditions()
        .iter()
        .map(|c| ConditionDoc::from_condition(c, dataset))
        .collect()
}

pub fn description_from_doc(docs: &[ConditionDoc], dataset: &Dataset) -> Result<Description> {
    let conditions = docs
        .iter()
        .map(|d| d.to_condition(dataset))
        .collect::<Result<Vec<_>>>()?;
    Description::new(conditions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl From<&GaussianStats> for StatsDoc {
    fn from(s: &GaussianStats) -> Self {
        StatsDoc {
            n: s.n,
            mean: s.mean,
            std: s.std(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupDoc {
    /// Human-readable form; ignored on load.
    pub description: String,
    pub conditions: Vec<ConditionDoc>,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub overlap: f64,
    pub data_bits: f64,
    pub prior_cost_bits: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub algorithm: String,
    pub target: String,
    pub n_rows: usize,
    pub n_cut: usize,
    pub variance_floor: f64,
    pub subgroups: Vec<SubgroupDoc>,
    pub default: StatsDoc,
    pub code_lengths: CodeLengths,
}

impl ModelDocument {
    pub fn from_model(
        model: &SubgroupList,
        encoder: &Encoder<'_>,
        algorithm: impl Into<String>,
    ) -> Self {
        let dataset = encoder.dataset();
        let lengths = model.code_lengths();
        let subgroups = model
            .subgroups()
            .iter()
            .enumerate()
            .map(|(i, s)| SubgroupDoc {
                description: s.description.render(dataset),
                conditions: description_to_doc(&s.description, dataset),
                n: s.stats.n,
                mean: s.stats.mean,
                std: s.stats.std(),
                overlap: s.overlap(),
                data_bits: lengths.per_subgroup_data_bits[i],
                prior_cost_bits: s.prior_cost_bits,
                degenerate: s.degenerate,
            })
            .collect();
        ModelDocument {
            algorithm: algorithm.into(),
            target: dataset.target_name().to_string(),
            n_rows: dataset.n_rows(),
            n_cut: encoder.config().n_cut,
            variance_floor: model.variance_floor(),
            subgroups,
            default: StatsDoc::from(model.default_stats()),
            code_lengths: lengths.clone(),
        }
    }

    /// Rebuilds the list against `encoder`'s dataset, re-estimating all
    /// statistics and code lengths.
    pub fn to_model(&self, encoder: &Encoder<'_>) -> Result<SubgroupList> {
        let dataset = encoder.dataset();
        if dataset.n_rows() != self.n_rows {
            return Err(Error::Model(format!(
                "model was mined on {} rows, dataset has {}",
                self.n_rows,
                dataset.n_rows()
            )));
        }
        let descriptions = self
            .subgroups
            .iter()
            .map(|s| description_from_doc(&s.conditions, dataset))
            .collect::<Result<Vec<_>>>()?;
        SubgroupList::from_descriptions(encoder, descriptions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
