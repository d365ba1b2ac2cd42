//! Code lengths in bits for subgroup lists.
//!
//! The model part encodes the number of subgroups and each description. The
//! data part encodes every subgroup's usage with a Bayesian Gaussian code
//! (unknown mean and variance, made proper by conditioning on two points) and
//! the default rows with the fixed overall distribution.

use std::f64::consts::{E, LOG2_E, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::{equal_frequency_cuts, BinningScheme, ColumnKind, ColumnSchema, Dataset};
use crate::error::{Error, Result};
use crate::model::{list_covers, Description, GaussianStats, SubgroupList};

/// Normalizing constant of the universal code for integers.
pub const K0: f64 = 2.865064;

/// Scale of the normal prior on the effect size.
pub const TAU: f64 = 1.0;

/// Universal prefix code length `log2 k0 + log2* i` for `i >= 1`.
pub fn universal_int_code(i: u64) -> Result<f64> {
    if i == 0 {
        return Err(Error::Encoding("universal code is defined for i >= 1".into()));
    }
    let mut bits = K0.log2();
    let mut term = (i as f64).log2();
    while term > 0.0 {
        bits += term;
        term = term.log2();
    }
    Ok(bits)
}

fn universal(i: usize) -> f64 {
    universal_int_code(i.max(1) as u64).expect("argument is positive")
}

/// `log2 C(n, k)`.
pub fn log2_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).log2() - ((i + 1) as f64).log2())
        .sum()
}

/// Number of expressible numeric conditions with `cuts` cut points:
/// `>=` and `<=` at every cut plus every closed interval between two cuts.
pub fn numeric_condition_count(cuts: usize) -> usize {
    2 * cuts + cuts * cuts.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub n_cut: usize,
    /// Substituted for a zero variance.
    pub variance_floor: f64,
}

impl EncodingConfig {
    /// Floor is the quantization-noise variance `δ²/12` at the target resolution.
    pub fn for_dataset(dataset: &Dataset, n_cut: usize) -> Self {
        let delta = dataset.resolution();
        EncodingConfig {
            n_cut,
            variance_floor: delta * delta / 12.0,
        }
    }

    pub fn tau(&self) -> f64 {
        TAU
    }
}

/// Bits to identify one condition on `column`.
pub fn condition_code(column: &ColumnSchema, cuts_available: usize) -> Result<f64> {
    match column.kind {
        ColumnKind::Binary => Ok(1.0),
        ColumnKind::Nominal => Ok((column.domain_size as f64).log2()),
        ColumnKind::Numeric if cuts_available == 0 => Err(Error::Encoding(format!(
            "no condition is expressible on constant column '{}'",
            column.name
        ))),
        ColumnKind::Numeric => Ok((numeric_condition_count(cuts_available) as f64).log2()),
    }
}

/// Dataset-bound encoding context: binning, per-variable condition codes and
/// the floored default variance.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    dataset: &'a Dataset,
    config: EncodingConfig,
    binning: BinningScheme,
    variable_bits: Vec<Option<f64>>,
    default_variance: f64,
}

impl<'a> Encoder<'a> {
    pub fn new(dataset: &'a Dataset, config: EncodingConfig) -> Self {
        let binning = equal_frequency_cuts(dataset, config.n_cut);
        let variable_bits = dataset
            .columns()
            .iter()
            .enumerate()
            .map(|(i, c)| condition_code(c, binning.cuts(i).len()).ok())
            .collect();
        let default_variance = dataset.theta_d().floored_variance(config.variance_floor);
        Encoder {
            dataset,
            config,
            binning,
            variable_bits,
            default_variance,
        }
    }

    pub fn for_dataset(dataset: &'a Dataset, n_cut: usize) -> Self {
        Encoder::new(dataset, EncodingConfig::for_dataset(dataset, n_cut))
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn config(&self) -> &EncodingConfig {
        &self.config
    }

    pub fn binning(&self) -> &BinningScheme {
        &self.binning
    }

    /// Default-rule variance after flooring.
    pub fn default_variance(&self) -> f64 {
        self.default_variance
    }

    /// `L_N(|S| + 1)`: the count is shifted so the empty list is encodable.
    pub fn subgroup_count_bits(&self, n_subgroups: usize) -> f64 {
        universal(n_subgroups + 1)
    }

    pub fn variable_bits(&self, column: usize) -> Result<f64> {
        self.variable_bits[column].ok_or_else(|| {
            Error::Encoding(format!(
                "no condition is expressible on column '{}'",
                self.dataset.column(column).name
            ))
        })
    }

    /// `L_N(|a|) + log2 C(|V|, |a|) + Σ L(v)`.
    pub fn description_bits(&self, description: &Description) -> Result<f64> {
        let k = self.dataset.n_columns();
        let size = description.len();
        if size > k {
            return Err(Error::Encoding(format!(
                "description has {size} conditions but only {k} variables exist"
            )));
        }
        let mut bits = universal(size) + log2_binomial(k, size);
        for c in description.conditions() {
            bits += self.variable_bits(c.column)?;
        }
        Ok(bits)
    }

    /// Fixed-parameter code of `values` under the dataset distribution.
    pub fn default_fixed_code(&self, values: &[f64]) -> f64 {
        fixed_code_from_stats(
            &GaussianStats::from_values(values),
            self.dataset.theta_d().mean,
            self.default_variance,
        )
    }
}

pub fn model_code(model: &SubgroupList, encoder: &Encoder<'_>) -> Result<f64> {
    let mut bits = encoder.subgroup_count_bits(model.len());
    for d in model.descriptions() {
        bits += encoder.description_bits(d)?;
    }
    Ok(bits)
}

/// Gaussian code with known parameters: `(n/2)log 2π + (n/2)log σ² + RSS/(2σ²) log e`.
pub fn gaussian_fixed_code(values: &[f64], mean: f64, variance: f64) -> Result<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::Encoding(format!(
            "fixed Gaussian code needs a positive variance, got {variance}"
        )));
    }
    let rss: f64 = values.iter().map(|y| (y - mean) * (y - mean)).sum();
    let n = values.len() as f64;
    Ok(0.5 * n * (2.0 * PI).log2() + 0.5 * n * variance.log2() + rss / (2.0 * variance) * LOG2_E)
}

/// [`gaussian_fixed_code`] computed from sufficient statistics.
pub fn fixed_code_from_stats(stats: &GaussianStats, mean: f64, variance: f64) -> f64 {
    if stats.n == 0 {
        return 0.0;
    }
    let n = stats.n as f64;
    0.5 * n * (2.0 * PI).log2()
        + 0.5 * n * variance.log2()
        + stats.rss_about(mean) / (2.0 * variance) * LOG2_E
}

/// `−log2` of the Bayesian marginal likelihood for `n` points with residual
/// sum of squares `rss`, τ = 1.
fn bayes_code_rss(n: usize, rss: f64) -> f64 {
    let nf = n as f64;
    1.0 + 0.5 * (nf + 1.0) * PI.log2() - ln_gamma(0.5 * nf) * LOG2_E
        + 0.5 * (nf + 1.0 / (TAU * TAU)).log2()
        + 0.5 * nf * rss.log2()
        + TAU.log2()
}

/// Bayesian code for a Gaussian with unknown mean and variance.
pub fn bayes_gaussian_code(stats: &GaussianStats, variance_floor: f64) -> Result<f64> {
    if stats.n < 2 {
        return Err(Error::Encoding(format!(
            "Bayesian code needs at least 2 points, got {}",
            stats.n
        )));
    }
    let rss = stats.n as f64 * stats.floored_variance(variance_floor);
    if rss.is_nan() || rss <= 0.0 {
        return Err(Error::Encoding("Bayesian code needs a positive variance".into()));
    }
    Ok(bayes_code_rss(stats.n, rss))
}

/// The two points the Bayesian code is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorPoints {
    pub y1: f64,
    pub y2: f64,
    /// No two distinct values exist; `y1 == y2`.
    pub degenerate: bool,
}

/// Picks the value closest to `mu_d` and the next closest distinct value,
/// ordering by `(|y − mu_d|, y, position)`.
pub fn select_prior_points(values: &[f64], mu_d: f64) -> Result<PriorPoints> {
    if values.len() < 2 {
        return Err(Error::Encoding(format!(
            "need at least 2 values to pick prior points, got {}",
            values.len()
        )));
    }
    let key = |y: f64| ((y - mu_d).abs(), y);
    let better = |a: f64, b: f64| {
        let (ka, kb) = (key(a), key(b));
        ka.0 < kb.0 || (ka.0 == kb.0 && ka.1 < kb.1)
    };
    let mut y1 = values[0];
    for &y in &values[1..] {
        if better(y, y1) {
            y1 = y;
        }
    }
    let mut y2: Option<f64> = None;
    for &y in values {
        if y != y1 && y2.is_none_or(|cur| better(y, cur)) {
            y2 = Some(y);
        }
    }
    Ok(match y2 {
        Some(y2) => PriorPoints {
            y1,
            y2,
            degenerate: false,
        },
        None => PriorPoints {
            y1,
            y2: y1,
            degenerate: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgroupCode {
    pub bits: f64,
    /// Bits of encoding the prior points with the default distribution minus
    /// their Bayesian code.
    pub prior_cost_bits: f64,
    pub degenerate: bool,
    pub stats: GaussianStats,
}

/// `L_Bayes(Y_i) − L_Bayes(Y²_i) + L(Y²_i | θ_d)`.
pub fn subgroup_data_code(
    values: &[f64],
    theta_d: &GaussianStats,
    config: &EncodingConfig,
) -> Result<SubgroupCode> {
    let stats = GaussianStats::from_values(values);
    subgroup_code_with_stats(values, stats, theta_d, config)
}

fn subgroup_code_with_stats(
    values: &[f64],
    stats: GaussianStats,
    theta_d: &GaussianStats,
    config: &EncodingConfig,
) -> Result<SubgroupCode> {
    if values.len() < 2 {
        return Err(Error::Encoding(format!(
            "subgroup code needs usage >= 2, got {}",
            values.len()
        )));
    }
    let floor = config.variance_floor;
    let points = select_prior_points(values, theta_d.mean)?;
    let full = bayes_gaussian_code(&stats, floor)?;
    let half_gap = 0.5 * (points.y1 - points.y2);
    let pair_rss = if points.degenerate {
        2.0 * floor
    } else {
        2.0 * half_gap * half_gap
    };
    let pair_bayes = bayes_code_rss(2, pair_rss);
    let pair_fixed = gaussian_fixed_code(
        &[points.y1, points.y2],
        theta_d.mean,
        theta_d.floored_variance(floor),
    )?;
    let prior_cost_bits = pair_fixed - pair_bayes;
    Ok(SubgroupCode {
        bits: full + prior_cost_bits,
        prior_cost_bits,
        degenerate: stats.variance <= 0.0,
        stats,
    })
}

/// Two-part code lengths of a subgroup list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CodeLengths {
    pub model_bits: f64,
    pub data_bits: f64,
    pub total_bits: f64,
    pub per_subgroup_data_bits: Vec<f64>,
    pub default_data_bits: f64,
}

impl CodeLengths {
    pub fn new(model_bits: f64, per_subgroup_data_bits: Vec<f64>, default_data_bits: f64) -> Self {
        let mut out = CodeLengths {
            model_bits,
            data_bits: 0.0,
            total_bits: 0.0,
            per_subgroup_data_bits,
            default_data_bits,
        };
        out.refresh_totals();
        out
    }

    pub(crate) fn refresh_totals(&mut self) {
        self.data_bits = self.per_subgroup_data_bits.iter().sum::<f64>() + self.default_data_bits;
        self.total_bits = self.model_bits + self.data_bits;
    }
}

/// Recomputes all code lengths from the descriptions and stores them on the model.
pub fn total_code(model: &mut SubgroupList, encoder: &Encoder<'_>) -> Result<CodeLengths> {
    let dataset = encoder.dataset();
    let (usages, default) = list_covers(model, dataset);
    let mut per = Vec::with_capacity(usages.len());
    for usage in &usages {
        let values: Vec<f64> = usage.ones().map(|i| dataset.target()[i]).collect();
        per.push(if values.is_empty() {
            0.0
        } else {
            subgroup_data_code(&values, dataset.theta_d(), encoder.config())?.bits
        });
    }
    let default_values: Vec<f64> = default.ones().map(|i| dataset.target()[i]).collect();
    let lengths = CodeLengths::new(
        model_code(model, encoder)?,
        per,
        encoder.default_fixed_code(&default_values),
    );
    model.set_code_lengths(lengths.clone());
    Ok(lengths)
}

/// Compression gained by appending a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    pub total: f64,
    pub per_row: f64,
    pub usage: usize,
}

/// Gain of appending a subgroup with these usage values and description cost
/// to a list of `n_subgroups` subgroups. `None` below two rows.
pub fn gain_for_values(
    values: &[f64],
    description_bits: f64,
    n_subgroups: usize,
    encoder: &Encoder<'_>,
) -> Option<Gain> {
    if values.len() < 2 {
        return None;
    }
    let stats = GaussianStats::from_values(values);
    let theta_d = encoder.dataset().theta_d();
    let default_bits = fixed_code_from_stats(&stats, theta_d.mean, encoder.default_variance());
    let code = subgroup_code_with_stats(values, stats, theta_d, encoder.config()).ok()?;
    let model_delta = encoder.subgroup_count_bits(n_subgroups + 1)
        - encoder.subgroup_count_bits(n_subgroups)
        + description_bits;
    let total = default_bits - code.bits - model_delta;
    Some(Gain {
        total,
        per_row: total / values.len() as f64,
        usage: values.len(),
    })
}

/// Normalized gain of a candidate over the model's current default rows.
/// Returns `(−∞, usage)` when usage < 2 or the description is not encodable.
pub fn normalized_gain(
    model: &SubgroupList,
    candidate: &Description,
    encoder: &Encoder<'_>,
) -> (f64, usize) {
    let dataset = encoder.dataset();
    let values: Vec<f64> = model
        .default_cover()
        .ones()
        .filter(|&r| candidate.matches(&dataset.row(r)))
        .map(|r| dataset.target()[r])
        .collect();
    let usage = values.len();
    let Ok(bits) = encoder.description_bits(candidate) else {
        return (f64::NEG_INFINITY, usage);
    };
    match gain_for_values(&values, bits, model.len(), encoder) {
        Some(g) => (g.per_row, usage),
        None => (f64::NEG_INFINITY, usage),
    }
}

/// `log2(n / e)`, the asymptotic parameter cost of the Bayesian code.
pub fn bic_penalty_bits(n: usize) -> f64 {
    (n as f64 / E).log2()
}
