//! The multi-table operation algebra.
//!
//! Every function here is pure: it borrows its input tables and returns new
//! ones. Operations are grouped by class (create, delete, transform,
//! separate, combine) and by the kind of object they act on (table, column,
//! row); see [`catalog`] for the full map.

pub mod catalog;
mod combine;
mod create;
mod delete;
mod separate;
mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::expr::{Expr, ExprError};
use crate::table::{ModelError, RowSelector, Table};
use crate::value::{DataKind, Value};

pub use combine::{combine_columns, extend, interpolate, match_join, summarize, supplement};
pub use create::{create_column, create_row, create_table};
pub use delete::{delete_column, delete_row};
pub use separate::{decompose, separate_column, separate_row, split, subset, NULL_LABEL};
pub use transform::{rearrange, reshape_fold, reshape_unfold, transform_column, transform_row};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("column order must be a permutation of the table's columns")]
    NotAPermutation,
    #[error("folded columns must share one type: {0:?}")]
    MixedDtypes(Vec<String>),
    #[error("name `{0}` collides with an existing column")]
    NameCollision(String),
    #[error("column `{0}` must be text")]
    NotText(String),
    #[error("column `{0}` must be numeric")]
    NotNumeric(String),
    #[error("duplicate (id, level) pair for level `{level}` at ids {ids:?}")]
    DuplicateKeyPair { ids: Vec<Value>, level: String },
    #[error("key column `{0}` contains null")]
    NullKey(String),
    #[error("selector matched no rows")]
    NoRowSelected,
    #[error("numeric column `{0}` needs a bin specification")]
    MissingBinSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("key column `{0}` is also listed among the right-hand columns")]
    KeyInRightSet(String),
    #[error("table {table} does not match the first table's schema: {detail}")]
    SchemaMismatch { table: usize, detail: String },
    #[error("need at least {needed} tables, got {got}")]
    TooFewTables { needed: usize, got: usize },
    #[error("right-hand key values are not unique: {0:?}")]
    DuplicateRightKey(Vec<Value>),
    #[error("columns present on both sides: {0:?}")]
    ColumnNameCollision(Vec<String>),
    #[error("key `{key}` is {left} on the left but {right} on the right")]
    KeyTypeMismatch {
        key: String,
        left: DataKind,
        right: DataKind,
    },
    #[error("no non-null values to fill from{}", group.as_ref().map(|g| format!(" in group {g:?}")).unwrap_or_default())]
    AllNullGroup { group: Option<Vec<Value>> },
    #[error("order column `{column}` is null at row {row}")]
    NullOrderValue { column: String, row: usize },
}

impl AlgebraError {
    pub(crate) fn unknown(name: &str) -> Self {
        AlgebraError::Model(ModelError::UnknownColumn(name.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// Labelled output tables plus any findings raised while producing them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpResult {
    pub tables: Vec<(String, Table)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl OpResult {
    pub fn single(label: &str, t: Table) -> Self {
        OpResult {
            tables: vec![(label.to_string(), t)],
            diagnostics: Vec::new(),
        }
    }

    /// The first output table; combine operations produce exactly one.
    pub fn table(&self) -> &Table {
        &self.tables[0].1
    }

    pub fn into_table(self) -> Table {
        self.tables
            .into_iter()
            .next()
            .expect("at least one output")
            .1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaPolicy {
    #[default]
    Strict,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Sum,
    Mean,
    Min,
    Max,
    First,
}

impl AggFunc {
    pub const ALL: [AggFunc; 6] = [
        AggFunc::Count,
        AggFunc::Sum,
        AggFunc::Mean,
        AggFunc::Min,
        AggFunc::Max,
        AggFunc::First,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Mean => "mean",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
            AggFunc::First => "first",
        }
    }

    pub fn from_name(s: &str) -> Option<AggFunc> {
        let s = s.to_ascii_lowercase();
        AggFunc::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// One aggregate output column: `func(target) as output`.
///
/// `count` without a target counts rows; with a target it counts non-null
/// cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub func: AggFunc,
    pub target: Option<String>,
    pub output: String,
}

impl Aggregation {
    pub fn new(func: AggFunc, target: Option<&str>, output: &str) -> Self {
        Aggregation {
            func,
            target: target.map(str::to_string),
            output: output.to_string(),
        }
    }

    pub fn count(output: &str) -> Self {
        Aggregation::new(AggFunc::Count, None, output)
    }
}

/// How a decomposed column is partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// `count` equal-width bins over `[min, max]` of the observed values;
    /// bins are half-open except the last, which is closed.
    Bins { count: usize },
    /// One partition per distinct value, as for categorical columns.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    Delimiter(String),
    /// Character offsets at which to cut; `n` cuts give `n + 1` parts.
    Positions(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Separator(String),
    Expression(Expr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    Expression(Expr),
    /// Old value to new value; unmapped values pass through unchanged.
    Lookup(Vec<(Value, Value)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Constant(Value),
    Expression(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Inner,
    Semi,
    Anti,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMethod {
    Linear,
    ForwardFill,
    GroupMean(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortKey {
    pub column: String,
    #[serde(default)]
    pub descending: bool,
}

impl SortKey {
    pub fn asc(column: &str) -> Self {
        SortKey {
            column: column.to_string(),
            descending: false,
        }
    }

    pub fn desc(column: &str) -> Self {
        SortKey {
            column: column.to_string(),
            descending: true,
        }
    }
}

/// Row mask for a selector; errors on out-of-range indices.
pub(crate) fn selection(t: &Table, sel: &RowSelector) -> Result<Vec<bool>> {
    match sel {
        RowSelector::Indices(idx) => {
            let mut mask = vec![false; t.row_count()];
            for &i in idx {
                if i >= t.row_count() {
                    return Err(ModelError::IndexOutOfRange {
                        index: i,
                        rows: t.row_count(),
                    }
                    .into());
                }
                mask[i] = true;
            }
            Ok(mask)
        }
        RowSelector::Predicate(p) => Ok(p.truth(t)?),
    }
}

pub(crate) fn mask_indices(mask: &[bool], want: bool) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, m)| **m == want)
        .map(|(i, _)| i)
        .collect()
}
