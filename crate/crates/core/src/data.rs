//! Tabular datasets with a single numeric target.
//!
//! Explanatory columns are typed as binary, nominal or numeric. Categorical
//! cells are coded as small integers in order of first appearance; missing
//! cells are stored as [`MISSING_CODE`] or `NaN`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianStats;

/// Sentinel code for a missing categorical cell.
pub const MISSING_CODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Nominal,
    Numeric,
}

impl ColumnKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" => Some(ColumnKind::Binary),
            "nominal" => Some(ColumnKind::Nominal),
            "numeric" => Some(ColumnKind::Numeric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// 2 for binary, number of categories for nominal, 0 for numeric.
    pub domain_size: usize,
    /// Category labels indexed by code (empty for numeric columns).
    #[serde(default)]
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            domain_size: 0,
            categories: Vec::new(),
        }
    }

    /// Binary when exactly two labels are given (or fewer), nominal otherwise.
    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        let kind = if categories.len() <= 2 {
            ColumnKind::Binary
        } else {
            ColumnKind::Nominal
        };
        let domain_size = if kind == ColumnKind::Binary {
            2
        } else {
            categories.len()
        };
        ColumnSchema {
            name: name.into(),
            kind,
            domain_size,
            categories,
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind != ColumnKind::Numeric
    }

    pub fn category_code(&self, label: &str) -> Option<u32> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|p| p as u32)
    }
}

/// Cell storage for one explanatory column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// `NaN` marks a missing cell.
    Numeric(Vec<f64>),
    /// [`MISSING_CODE`] marks a missing cell.
    Categorical(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Immutable table of explanatory columns plus the numeric target.
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<ColumnSchema>,
    cells: Vec<ColumnData>,
    target_name: String,
    target: Vec<f64>,
    theta_d: GaussianStats,
    resolution: f64,
}

impl Dataset {
    pub fn new(
        columns: Vec<ColumnSchema>,
        cells: Vec<ColumnData>,
        target_name: impl Into<String>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let n = target.len();
        if n < 2 {
            return Err(Error::Data(format!("dataset needs at least 2 rows, got {n}")));
        }
        if columns.len() != cells.len() {
            return Err(Error::Data(format!(
                "{} column schemas for {} data columns",
                columns.len(),
                cells.len()
            )));
        }
        let target_name = target_name.into();
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) || c.name == target_name {
                return Err(Error::Data(format!("duplicate column name '{}'", c.name)));
            }
        }
        if let Some(i) = target.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!("target value at row {i} is not a finite number")));
        }
        for (schema, data) in columns.iter().zip(&cells) {
            if data.len() != n {
                return Err(Error::Data(format!(
                    "column '{}' has {} cells, expected {n}",
                    schema.name,
                    data.len()
                )));
            }
            match (schema.kind, data) {
                (ColumnKind::Numeric, ColumnData::Numeric(_)) => {}
                (ColumnKind::Binary | ColumnKind::Nominal, ColumnData::Categorical(codes)) => {
                    if schema.kind == ColumnKind::Binary && schema.domain_size != 2 {
                        return Err(Error::Data(format!(
                            "binary column '{}' must have domain size 2",
                            schema.name
                        )));
                    }
                    if schema.kind == ColumnKind::Nominal && schema.domain_size < 3 {
                        return Err(Error::Data(format!(
                            "nominal column '{}' must have at least 3 values",
                            schema.name
                        )));
                    }
                    let limit = schema.categories.len().max(schema.domain_size) as u32;
                    if codes.iter().any(|&c| c != MISSING_CODE && c >= limit) {
                        return Err(Error::Data(format!(
                            "column '{}' has a category code outside its domain",
                            schema.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column '{}' storage does not match its kind",
                        schema.name
                    )))
                }
            }
        }
        let theta_d = GaussianStats::from_values(&target);
        let resolution = target_resolution_of(&target);
        Ok(Dataset {
            columns,
            cells,
            target_name,
            target,
            theta_d,
            resolution,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &ColumnSchema {
        &self.columns[index]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn cells(&self, index: usize) -> &ColumnData {
        &self.cells[index]
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Overall target statistics, the fixed default distribution.
    pub fn theta_d(&self) -> &GaussianStats {
        &self.theta_d
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn row(&self, row: usize) -> RowView<'_> {
        RowView { dataset: self, row }
    }

    /// Copy of this dataset with the target replaced, all else unchanged.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        Dataset::new(
            self.columns.clone(),
            self.cells.clone(),
            self.target_name.clone(),
            target,
        )
    }

    /// Writes the dataset as CSV with the target as last column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.target_name);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.n_rows() {
            record.clear();
            for (schema, data) in self.columns.iter().zip(&self.cells) {
                record.push(match data {
                    ColumnData::Numeric(v) if v[row].is_nan() => String::new(),
                    ColumnData::Numeric(v) => v[row].to_string(),
                    ColumnData::Categorical(v) if v[row] == MISSING_CODE => String::new(),
                    ColumnData::Categorical(v) => schema.categories[v[row] as usize].clone(),
                });
            }
            record.push(self.target[row].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Borrowed view on a single row.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    dataset: &'a Dataset,
    row: usize,
}

impl<'a> RowView<'a> {
    pub fn index(&self) -> usize {
        self.row
    }

    /// `None` for a missing numeric cell or a categorical column.
    pub fn numeric(&self, column: usize) -> Option<f64> {
        match &self.dataset.cells[column] {
            ColumnData::Numeric(v) if !v[self.row].is_nan() => Some(v[self.row]),
            _ => None,
        }
    }

    /// `None` for a missing categorical cell or a numeric column.
    pub fn category(&self, column: usize) -> Option<u32> {
        match &self.dataset.cells[column] {
            ColumnData::Categorical(v) if v[self.row] != MISSING_CODE => Some(v[self.row]),
            _ => None,
        }
    }

    pub fn target(&self) -> f64 {
        self.dataset.target[self.row]
    }
}

/// Which column holds the target.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum TargetColumn {
    #[default]
    Last,
    Named(String),
}

/// Per-column kind overrides, usually read from a sidecar file.
pub type SchemaOverride = BTreeMap<String, ColumnKind>;

/// Parses `column=binary|nominal|numeric` lines. Blank lines and `#` comments
/// are skipped.
pub fn parse_schema_override(text: &str) -> Result<SchemaOverride> {
    let mut out = SchemaOverride::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once('=').ok_or_else(|| {
            Error::Data(format!("schema line {}: expected column=kind", lineno + 1))
        })?;
        let kind = ColumnKind::parse(kind).ok_or_else(|| {
            Error::Data(format!("schema line {}: unknown kind '{}'", lineno + 1, kind.trim()))
        })?;
        out.insert(name.trim().to_string(), kind);
    }
    Ok(out)
}

pub fn load_csv(
    path: impl AsRef<Path>,
    target: &TargetColumn,
    schema_override: Option<&SchemaOverride>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    load_csv_bytes(&bytes, target, schema_override)
}

/// Same as [`load_csv`] on in-memory bytes.
pub fn load_csv_bytes(
    bytes: &[u8],
    target: &TargetColumn,
    schema_override: Option<&SchemaOverride>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Data("missing header row".into()));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::Data(format!("duplicate column name '{h}'")));
        }
    }
    let target_idx = match target {
        TargetColumn::Last => header.len() - 1,
        TargetColumn::Named(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("target column '{name}' not found")))?,
    };
    if let Some(ov) = schema_override {
        for name in ov.keys() {
            if !header.iter().any(|h| h == name) {
                return Err(Error::Data(format!("schema override names unknown column '{name}'")));
            }
        }
    }

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record?;
        for (col, cell) in record.iter().enumerate() {
            raw[col].push(cell.trim().to_string());
        }
    }
    let n = raw[0].len();
    if n < 2 {
        return Err(Error::Data(format!("dataset needs at least 2 rows, got {n}")));
    }

    let target_name = header[target_idx].clone();
    let mut target_values = Vec::with_capacity(n);
    for (row, cell) in raw[target_idx].iter().enumerate() {
        let value = parse_real(cell).ok_or_else(|| {
            Error::Data(format!(
                "target column '{target_name}' row {}: '{cell}' is not numeric",
                row + 1
            ))
        })?;
        target_values.push(value);
    }

    let mut columns = Vec::new();
    let mut cells = Vec::new();
    for (col, name) in header.iter().enumerate() {
        if col == target_idx {
            continue;
        }
        let forced = schema_override.and_then(|ov| ov.get(name)).copied();
        let (schema, data) = type_column(name, &raw[col], forced)?;
        columns.push(schema);
        cells.push(data);
    }
    Dataset::new(columns, cells, target_name, target_values)
}

fn parse_real(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn type_column(
    name: &str,
    cells: &[String],
    forced: Option<ColumnKind>,
) -> Result<(ColumnSchema, ColumnData)> {
    let all_numeric = cells
        .iter()
        .all(|c| c.is_empty() || parse_real(c).is_some());
    let mut labels: Vec<String> = Vec::new();
    let mut codes_of: HashMap<&str, u32> = HashMap::new();
    for c in cells.iter().filter(|c| !c.is_empty()) {
        if !codes_of.contains_key(c.as_str()) {
            codes_of.insert(c, labels.len() as u32);
            labels.push(c.clone());
        }
    }
    let kind = match forced {
        Some(k) => k,
        None if all_numeric => ColumnKind::Numeric,
        None if labels.len() <= 2 => ColumnKind::Binary,
        None => ColumnKind::Nominal,
    };
    match kind {
        ColumnKind::Numeric => {
            if !all_numeric {
                return Err(Error::Data(format!(
                    "column '{name}' declared numeric but has non-numeric cells"
                )));
            }
            let values = cells
                .iter()
                .map(|c| parse_real(c).unwrap_or(f64::NAN))
                .collect();
            Ok((ColumnSchema::numeric(name), ColumnData::Numeric(values)))
        }
        ColumnKind::Binary | ColumnKind::Nominal => {
            if kind == ColumnKind::Binary && labels.len() > 2 {
                return Err(Error::Data(format!(
                    "column '{name}' declared binary but has {} distinct values",
                    labels.len()
                )));
            }
            if kind == ColumnKind::Nominal && labels.len() < 3 {
                return Err(Error::Data(format!(
                    "column '{name}' declared nominal but has only {} distinct values",
                    labels.len()
                )));
            }
            let codes = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        MISSING_CODE
                    } else {
                        codes_of[c.as_str()]
                    }
                })
                .collect();
            Ok((
                ColumnSchema::categorical(name, labels),
                ColumnData::Categorical(codes),
            ))
        }
    }
}

/// Smallest positive gap between consecutive distinct target values, 1 when
/// the target is constant.
pub fn target_resolution(dataset: &Dataset) -> f64 {
    dataset.resolution
}

fn target_resolution_of(target: &[f64]) -> f64 {
    let mut sorted = target.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
        .unwrap_or(1.0)
}

/// Cut points per column; empty for categorical and constant numeric columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinningScheme {
    cuts: Vec<Vec<f64>>,
}

impl BinningScheme {
    pub fn cuts(&self, column: usize) -> &[f64] {
        &self.cuts[column]
    }

    pub fn n_columns(&self) -> usize {
        self.cuts.len()
    }
}

/// Equal-frequency cut points at ranks `i/(n_cut+1)`, midpoint interpolation
/// between order statistics. Ties collapse, and cuts equal to the column
/// minimum or maximum are dropped.
pub fn equal_frequency_cuts(dataset: &Dataset, n_cut: usize) -> BinningScheme {
    let cuts = (0..dataset.n_columns())
        .map(|col| match dataset.cells(col) {
            ColumnData::Numeric(values) => column_cuts(values, n_cut),
            ColumnData::Categorical(_) => Vec::new(),
        })
        .collect();
    BinningScheme { cuts }
}

fn column_cuts(values: &[f64], n_cut: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.len() < 2 {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let last = (sorted.len() - 1) as f64;
    let mut cuts: Vec<f64> = Vec::with_capacity(n_cut);
    for i in 1..=n_cut {
        let pos = last * i as f64 / (n_cut + 1) as f64;
        let lo = sorted[pos.floor() as usize];
        let hi = sorted[pos.ceil() as usize];
        let cut = 0.5 * (lo + hi);
        if cut > min && cut < max && cuts.last().is_none_or(|&prev| cut > prev) {
            cuts.push(cut);
        }
    }
    cuts
}
