//! Conditions, descriptions, Gaussian statistics and subgroup lists.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Dataset, RowView};
use crate::encoding::{self, CodeLengths, Encoder};
use crate::error::{Error, Result};

/// Set of row indices, one bit per dataset row.
pub type RowSet = FixedBitSet;

#[derive(Debug, Clone, Copy)]
pub enum Operator {
    Equals(u32),
    Geq(f64),
    Leq(f64),
    /// Closed interval `[lo, hi]`.
    Between(f64, f64),
}

impl Operator {
    fn rank(&self) -> u8 {
        match self {
            Operator::Equals(_) => 0,
            Operator::Geq(_) => 1,
            Operator::Leq(_) => 2,
            Operator::Between(..) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Operator::Equals(_) => "equals",
            Operator::Geq(_) => "geq",
            Operator::Leq(_) => "leq",
            Operator::Between(..) => "between",
        }
    }
}

impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Operator {}

impl Ord for Operator {
    fn cmp(&self, other: &Self) -> Ordering {
        use Operator::*;
        match (self, other) {
            (Equals(a), Equals(b)) => a.cmp(b),
            (Geq(a), Geq(b)) | (Leq(a), Leq(b)) => a.total_cmp(b),
            (Between(a, b), Between(c, d)) => a.total_cmp(c).then(b.total_cmp(d)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Operator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Operator {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match *self {
            Operator::Equals(v) => v.hash(state),
            Operator::Geq(t) | Operator::Leq(t) => t.to_bits().hash(state),
            Operator::Between(lo, hi) => {
                lo.to_bits().hash(state);
                hi.to_bits().hash(state);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Condition {
    pub column: usize,
    pub op: Operator,
}

impl Condition {
    pub fn new(column: usize, op: Operator) -> Self {
        Condition { column, op }
    }

    /// Checks operator/kind compatibility against the dataset schema.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.column >= dataset.n_columns() {
            return Err(Error::Model(format!("condition on unknown column {}", self.column)));
        }
        let schema = dataset.column(self.column);
        match (schema.kind, self.op) {
            (ColumnKind::Binary | ColumnKind::Nominal, Operator::Equals(code)) => {
                if (code as usize) >= schema.domain_size.max(schema.categories.len()) {
                    return Err(Error::Model(format!(
                        "category code {code} outside the domain of '{}'",
                        schema.name
                    )));
                }
                Ok(())
            }
            (ColumnKind::Numeric, Operator::Geq(t) | Operator::Leq(t)) if t.is_finite() => Ok(()),
            (ColumnKind::Numeric, Operator::Between(lo, hi)) if lo < hi => Ok(()),
            _ => Err(Error::Model(format!(
                "operator {} is not valid on column '{}'",
                self.op.name(),
                schema.name
            ))),
        }
    }

    /// Literal evaluation; a missing cell never matches.
    pub fn matches(&self, row: &RowView<'_>) -> bool {
        match self.op {
            Operator::Equals(code) => row.category(self.column) == Some(code),
            Operator::Geq(t) => row.numeric(self.column).is_some_and(|v| v >= t),
            Operator::Leq(t) => row.numeric(self.column).is_some_and(|v| v <= t),
            Operator::Between(lo, hi) => row
                .numeric(self.column)
                .is_some_and(|v| v >= lo && v <= hi),
        }
    }

    pub fn render(&self, dataset: &Dataset) -> String {
        let schema = dataset.column(self.column);
        let name = &schema.name;
        match self.op {
            Operator::Equals(code) => {
                let label = schema
                    .categories
                    .get(code as usize)
                    .cloned()
                    .unwrap_or_else(|| code.to_string());
                format!("{name} = {label}")
            }
            Operator::Geq(t) => format!("{name} >= {}", fmt_num(t)),
            Operator::Leq(t) => format!("{name} <= {}", fmt_num(t)),
            Operator::Between(lo, hi) => format!("{} <= {name} <= {}", fmt_num(lo), fmt_num(hi)),
        }
    }
}

pub fn condition_matches(condition: &Condition, row: &RowView<'_>) -> bool {
    condition.matches(row)
}

/// Conjunction of conditions, at most one per column, kept sorted by column.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Description {
    conditions: Vec<Condition>,
}

impl Description {
    pub fn empty() -> Self {
        Description::default()
    }

    /// Canonicalizes the order; rejects two conditions on one column.
    pub fn new(mut conditions: Vec<Condition>) -> Result<Self> {
        conditions.sort();
        if conditions.windows(2).any(|w| w[0].column == w[1].column) {
            return Err(Error::Model("description uses a column more than once".into()));
        }
        Ok(Description { conditions })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    /// Number of variables used, `|a|`.
    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn uses_column(&self, column: usize) -> bool {
        self.conditions.iter().any(|c| c.column == column)
    }

    /// Adds a condition on a column not yet used.
    pub fn refine(&self, condition: Condition) -> Option<Description> {
        let pos = match self
            .conditions
            .binary_search_by(|c| c.column.cmp(&condition.column))
        {
            Ok(_) => return None,
            Err(pos) => pos,
        };
        let mut conditions = Vec::with_capacity(self.conditions.len() + 1);
        conditions.extend_from_slice(&self.conditions[..pos]);
        conditions.push(condition);
        conditions.extend_from_slice(&self.conditions[pos..]);
        Some(Description { conditions })
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        self.conditions.iter().try_for_each(|c| c.validate(dataset))
    }

    pub fn matches(&self, row: &RowView<'_>) -> bool {
        self.conditions.iter().all(|c| c.matches(row))
    }

    /// Full-dataset cover, evaluated row by row.
    pub fn cover(&self, dataset: &Dataset) -> RowSet {
        let mut set = RowSet::with_capacity(dataset.n_rows());
        for row in 0..dataset.n_rows() {
            if self.matches(&dataset.row(row)) {
                set.insert(row);
            }
        }
        set
    }

    pub fn render(&self, dataset: &Dataset) -> String {
        if self.conditions.is_empty() {
            return "(empty)".to_string();
        }
        self.conditions
            .iter()
            .map(|c| c.render(dataset))
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

pub fn description_matches(description: &Description, row: &RowView<'_>) -> bool {
    description.matches(row)
}

/// Maximum-likelihood Gaussian estimates with the biased variance, so that
/// `n * variance` is the residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussianStats {
    /// Two-pass estimate. For `n = 0` mean and variance are 0 and
    /// [`GaussianStats::is_defined`] is false.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return GaussianStats {
                n: 0,
                sum: 0.0,
                sum_sq: 0.0,
                mean: 0.0,
                variance: 0.0,
            };
        }
        let sum = compensated_sum(values.iter().copied());
        let mean = sum / n as f64;
        let mut dev = 0.0;
        let mut dev_sq = 0.0;
        for &y in values {
            let d = y - mean;
            dev += d;
            dev_sq += d * d;
        }
        let variance = ((dev_sq - dev * dev / n as f64) / n as f64).max(0.0);
        GaussianStats {
            n,
            sum,
            sum_sq: compensated_sum(values.iter().map(|y| y * y)),
            mean,
            variance,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.n > 0
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Residual sum of squares about the own mean.
    pub fn rss(&self) -> f64 {
        self.n as f64 * self.variance
    }

    /// Sum of squared deviations about an arbitrary center.
    pub fn rss_about(&self, center: f64) -> f64 {
        let shift = self.mean - center;
        self.n as f64 * (self.variance + shift * shift)
    }

    /// The variance, or `floor` when it is zero.
    pub fn floored_variance(&self, floor: f64) -> f64 {
        if self.variance > 0.0 {
            self.variance
        } else {
            floor
        }
    }
}

pub fn gaussian_stats(values: &[f64]) -> GaussianStats {
    GaussianStats::from_values(values)
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone)]
pub struct Subgroup {
    pub description: Description,
    /// Statistics over the usage (rows not claimed by earlier subgroups).
    pub stats: GaussianStats,
    pub usage: RowSet,
    /// Full-dataset cover of the description.
    pub cover_size: usize,
    /// All usage targets were equal; the variance floor was applied.
    pub degenerate: bool,
    /// Extra bits of encoding the two prior points with the default distribution.
    pub prior_cost_bits: f64,
}

impl Subgroup {
    /// Fraction of the description's cover already claimed earlier in the list.
    pub fn overlap(&self) -> f64 {
        if self.cover_size == 0 {
            0.0
        } else {
            1.0 - self.stats.n as f64 / self.cover_size as f64
        }
    }
}

/// Ordered subgroups with first-match semantics followed by the fixed
/// dataset distribution as default rule.
#[derive(Debug, Clone)]
pub struct SubgroupList {
    subgroups: Vec<Subgroup>,
    default_stats: GaussianStats,
    default_cover: RowSet,
    variance_floor: f64,
    code_lengths: CodeLengths,
}

impl SubgroupList {
    pub fn empty(encoder: &Encoder<'_>) -> Self {
        let dataset = encoder.dataset();
        let mut default_cover = RowSet::with_capacity(dataset.n_rows());
        default_cover.insert_range(..);
        let default_data_bits = encoder.default_fixed_code(dataset.target());
        let model_bits = encoder.subgroup_count_bits(0);
        SubgroupList {
            subgroups: Vec::new(),
            default_stats: *dataset.theta_d(),
            default_cover,
            variance_floor: encoder.config().variance_floor,
            code_lengths: CodeLengths::new(model_bits, Vec::new(), default_data_bits),
        }
    }

    /// Builds a list by appending descriptions in order.
    pub fn from_descriptions(
        encoder: &Encoder<'_>,
        descriptions: impl IntoIterator<Item = Description>,
    ) -> Result<Self> {
        let mut list = SubgroupList::empty(encoder);
        for d in descriptions {
            list.append(d, encoder)?;
        }
        Ok(list)
    }

    pub fn subgroups(&self) -> &[Subgroup] {
        &self.subgroups
    }

    pub fn len(&self) -> usize {
        self.subgroups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgroups.is_empty()
    }

    pub fn default_stats(&self) -> &GaussianStats {
        &self.default_stats
    }

    /// Rows not covered by any subgroup.
    pub fn default_cover(&self) -> &RowSet {
        &self.default_cover
    }

    pub fn variance_floor(&self) -> f64 {
        self.variance_floor
    }

    /// Incrementally maintained code lengths.
    pub fn code_lengths(&self) -> &CodeLengths {
        &self.code_lengths
    }

    pub(crate) fn set_code_lengths(&mut self, lengths: CodeLengths) {
        self.code_lengths = lengths;
    }

    pub fn descriptions(&self) -> impl Iterator<Item = &Description> {
        self.subgroups.iter().map(|s| &s.description)
    }

    /// Appends a subgroup whose usage is its cover within the current default
    /// rows, updating the cached code lengths. Requires usage ≥ 2.
    pub fn append(&mut self, description: Description, encoder: &Encoder<'_>) -> Result<()> {
        let dataset = encoder.dataset();
        description.validate(dataset)?;
        let cover = description.cover(dataset);
        let mut usage = cover.clone();
        usage.intersect_with(&self.default_cover);
        self.push_with_usage(description, cover.count_ones(..), usage, encoder)
    }

    pub(crate) fn push_with_usage(
        &mut self,
        description: Description,
        cover_size: usize,
        usage: RowSet,
        encoder: &Encoder<'_>,
    ) -> Result<()> {
        let dataset = encoder.dataset();
        let values: Vec<f64> = usage.ones().map(|i| dataset.target()[i]).collect();
        if values.len() < 2 {
            return Err(Error::Model(format!(
                "subgroup '{}' has usage {} (< 2)",
                description.render(dataset),
                values.len()
            )));
        }
        let code = encoding::subgroup_data_code(&values, &self.default_stats, encoder.config())?;
        let removed_default_bits = encoder.default_fixed_code(&values);
        let model_delta = encoder.subgroup_count_bits(self.subgroups.len() + 1)
            - encoder.subgroup_count_bits(self.subgroups.len())
            + encoder.description_bits(&description)?;

        self.default_cover.difference_with(&usage);
        let mut lengths = std::mem::take(&mut self.code_lengths);
        lengths.model_bits += model_delta;
        lengths.per_subgroup_data_bits.push(code.bits);
        lengths.default_data_bits -= removed_default_bits;
        lengths.refresh_totals();
        self.code_lengths = lengths;
        self.subgroups.push(Subgroup {
            description,
            stats: code.stats,
            usage,
            cover_size,
            degenerate: code.degenerate,
            prior_cost_bits: code.prior_cost_bits,
        });
        Ok(())
    }

    /// Aligned text table: description, n, mean, std, overlap.
    pub fn render_table(&self, dataset: &Dataset) -> String {
        let mut rows: Vec<[String; 6]> = Vec::with_capacity(self.subgroups.len() + 2);
        rows.push([
            "#".into(),
            "description".into(),
            "n".into(),
            "mean".into(),
            "std".into(),
            "overlap".into(),
        ]);
        for (i, s) in self.subgroups.iter().enumerate() {
            rows.push(subgroup_row(
                &(i + 1).to_string(),
                &s.description.render(dataset),
                &s.stats,
                &format!("{:.0}%", 100.0 * s.overlap()),
            ));
        }
        rows.push(subgroup_row("", "dataset", &self.default_stats, ""));
        let mut widths = [0usize; 6];
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (cell, w))| {
                    if i == 1 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

fn subgroup_row(index: &str, description: &str, stats: &GaussianStats, overlap: &str) -> [String; 6] {
    [
        index.to_string(),
        description.to_string(),
        stats.n.to_string(),
        fmt_num(stats.mean),
        fmt_num(stats.std()),
        overlap.to_string(),
    ]
}

/// Up to four significant decimals, trailing zeros trimmed.
pub(crate) fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Usage covers with first-match semantics: per-subgroup row sets and the
/// default rows.
pub fn list_covers(model: &SubgroupList, dataset: &Dataset) -> (Vec<RowSet>, RowSet) {
    let full: Vec<RowSet> = model
        .descriptions()
        .map(|d| d.cover(dataset))
        .collect();
    ordered_usages(full, dataset.n_rows())
}

/// Sequential subtraction of earlier covers from later ones.
pub fn ordered_usages(covers: Vec<RowSet>, n_rows: usize) -> (Vec<RowSet>, RowSet) {
    let mut remaining = RowSet::with_capacity(n_rows);
    remaining.insert_range(..);
    let usages = covers
        .into_iter()
        .map(|mut c| {
            c.intersect_with(&remaining);
            remaining.difference_with(&c);
            c
        })
        .collect();
    (usages, remaining)
}
