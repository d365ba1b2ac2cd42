//! Subgroup-list discovery for numeric targets with the minimum description
//! length principle.
//!
//! A [`SubgroupList`] is an ordered set of descriptions, each describing a
//! region where the target deviates from the overall distribution, followed by
//! a default rule fixed to that overall distribution. [`ssd_plus_plus`] grows
//! such a list greedily while the two-part code length keeps decreasing.
//!
//! ```no_run
//! use ssdpp::{load_csv, ssd_plus_plus, SearchConfig, TargetColumn};
//!
//! let data = load_csv("data.csv", &TargetColumn::Last, None)?;
//! let list = ssd_plus_plus(&data, &SearchConfig::default())?;
//! print!("{}", list.render_table(&data));
//! # Ok::<(), ssdpp::Error>(())
//! ```

pub mod baselines;
pub mod data;
pub mod encoding;
mod error;
pub mod metrics;
pub mod model;
pub mod search;
pub mod serialize;
pub mod synth;

pub use baselines::{seq_cover_miner, topk_miner, BaselineConfig};
pub use data::{load_csv, BinningScheme, ColumnKind, ColumnSchema, Dataset, TargetColumn};
pub use encoding::{CodeLengths, Encoder, EncodingConfig};
pub use error::{Error, Result};
pub use metrics::{summarize, EvaluationReport};
pub use model::{Condition, Description, GaussianStats, Operator, SubgroupList};
pub use search::{ssd_plus_plus, Execution, GainMode, SearchConfig};
pub use serialize::ModelDocument;
