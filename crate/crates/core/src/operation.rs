//! Serializable operation descriptors and their dispatch onto the algebra.
//!
//! An [`Operation`] holds only the non-table parameters of a step; the input
//! tables and output names travel alongside it. The same descriptor is what
//! the pipeline language parses into and what the HTTP service accepts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::catalog::OpKind;
use crate::algebra::{
    self, Aggregation, AlgebraError, BinSpec, Combiner, FillMethod, Generator, Mapping, MatchMode,
    OpResult, SchemaPolicy, SortKey, Splitter,
};
use crate::audit::AuditError;
use crate::expr::Expr;
use crate::io::IoError;
use crate::provenance::ProvError;
use crate::table::{Field, RowSelector, Table};
use crate::value::{DataType, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Provenance(#[from] ProvError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("no table is bound to `{0}`")]
    UnknownHandle(String),
    #[error("{op} takes {expected} input tables, got {found}")]
    InputCount {
        op: String,
        expected: String,
        found: usize,
    },
    #[error("{op} produces {expected} output tables, got {found} names")]
    OutputCount {
        op: String,
        expected: String,
        found: usize,
    },
    #[error("handle `{0}` is already bound")]
    HandleTaken(String),
    #[error("output name `{0}` is listed twice")]
    DuplicateOutput(String),
    #[error("file access is disabled here: {0}")]
    PathDenied(String),
    #[error("session table limit of {0} reached")]
    TableLimit(usize),
}

pub type Result<T> = std::result::Result<T, OpError>;

/// One step of the algebra, or one of the named composites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    CreateTable {
        schema: Vec<Field>,
        #[serde(default)]
        rows: Vec<Vec<Value>>,
    },
    CreateColumn {
        name: String,
        dtype: DataType,
        generator: Generator,
    },
    CreateRow {
        values: Vec<Value>,
    },
    DeleteTable,
    DeleteColumn {
        column: String,
    },
    DeleteRow {
        selector: RowSelector,
    },
    Rearrange {
        #[serde(default)]
        sort: Vec<SortKey>,
        #[serde(default)]
        order: Option<Vec<String>>,
    },
    Fold {
        columns: Vec<String>,
        key: String,
        value: String,
    },
    Unfold {
        key: String,
        value: String,
    },
    #[serde(rename = "transform", alias = "transform_column")]
    TransformColumn {
        column: String,
        mapping: Mapping,
        #[serde(default)]
        rename: Option<String>,
    },
    TransformRow {
        selector: RowSelector,
        edits: Vec<(String, Value)>,
    },
    Subset {
        predicate: Expr,
    },
    Decompose {
        column: String,
        #[serde(default)]
        bins: Option<BinSpec>,
    },
    Split {
        key: String,
        columns: Vec<String>,
    },
    SeparateColumn {
        column: String,
        splitter: Splitter,
        into: Vec<String>,
    },
    SeparateRow {
        column: String,
        delimiter: String,
    },
    Extend {
        #[serde(default)]
        policy: SchemaPolicy,
    },
    Supplement {
        key: String,
    },
    Match {
        key: String,
        #[serde(default)]
        mode: MatchMode,
    },
    #[serde(rename = "combine", alias = "combine_columns")]
    CombineColumns {
        columns: Vec<String>,
        combiner: Combiner,
        name: String,
    },
    Summarize {
        #[serde(default)]
        by: Vec<String>,
        aggs: Vec<Aggregation>,
    },
    Interpolate {
        column: String,
        #[serde(default)]
        order: Option<String>,
        method: FillMethod,
    },
    Filter {
        predicate: Expr,
    },
    GroupAggregate {
        by: String,
        aggs: Vec<Aggregation>,
    },
    #[serde(rename = "lookup", alias = "lookup_transform")]
    LookupTransform {
        key: String,
        value_column: String,
    },
    SplitComputeMerge {
        by: String,
        #[serde(default)]
        bins: Option<BinSpec>,
        edits: Vec<(String, Expr)>,
    },
    #[serde(rename = "divide_conquer", alias = "divide_and_conquer")]
    DivideAndConquer {
        facet: Expr,
        #[serde(default)]
        edits: Vec<(String, Expr)>,
        key: String,
        value: String,
        alternate: String,
    },
}

/// How many tables an operation consumes or produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Exactly(usize),
    AtLeast(usize),
}

impl Count {
    pub fn admits(self, n: usize) -> bool {
        match self {
            Count::Exactly(k) => n == k,
            Count::AtLeast(k) => n >= k,
        }
    }
}

impl std::fmt::Display for Count {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Count::Exactly(k) => write!(f, "{k}"),
            Count::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

impl Operation {
    /// The snake_case name used by the pipeline language and the JSON form.
    pub fn name(&self) -> &'static str {
        use Operation::*;
        match self {
            CreateTable { .. } => "create_table",
            CreateColumn { .. } => "create_column",
            CreateRow { .. } => "create_row",
            DeleteTable => "delete_table",
            DeleteColumn { .. } => "delete_column",
            DeleteRow { .. } => "delete_row",
            Rearrange { .. } => "rearrange",
            Fold { .. } => "fold",
            Unfold { .. } => "unfold",
            TransformColumn { .. } => "transform",
            TransformRow { .. } => "transform_row",
            Subset { .. } => "subset",
            Decompose { .. } => "decompose",
            Split { .. } => "split",
            SeparateColumn { .. } => "separate_column",
            SeparateRow { .. } => "separate_row",
            Extend { .. } => "extend",
            Supplement { .. } => "supplement",
            Match { .. } => "match",
            CombineColumns { .. } => "combine",
            Summarize { .. } => "summarize",
            Interpolate { .. } => "interpolate",
            Filter { .. } => "filter",
            GroupAggregate { .. } => "group_aggregate",
            LookupTransform { .. } => "lookup",
            SplitComputeMerge { .. } => "split_compute_merge",
            DivideAndConquer { .. } => "divide_conquer",
        }
    }

    /// The algebra operation this descriptor runs, or `None` for composites.
    pub fn kind(&self) -> Option<OpKind> {
        use Operation::*;
        Some(match self {
            CreateTable { .. } => OpKind::CreateTable,
            CreateColumn { .. } => OpKind::CreateColumn,
            CreateRow { .. } => OpKind::CreateRow,
            DeleteTable => OpKind::DeleteTable,
            DeleteColumn { .. } => OpKind::DeleteColumn,
            DeleteRow { .. } => OpKind::DeleteRow,
            Rearrange { .. } => OpKind::Rearrange,
            Fold { .. } | Unfold { .. } => OpKind::Reshape,
            TransformColumn { .. } => OpKind::TransformColumn,
            TransformRow { .. } => OpKind::TransformRow,
            Subset { .. } => OpKind::Subset,
            Decompose { .. } => OpKind::Decompose,
            Split { .. } => OpKind::Split,
            SeparateColumn { .. } => OpKind::SeparateColumn,
            SeparateRow { .. } => OpKind::SeparateRow,
            Extend { .. } => OpKind::Extend,
            Supplement { .. } => OpKind::Supplement,
            Match { .. } => OpKind::Match,
            CombineColumns { .. } => OpKind::CombineColumns,
            Summarize { .. } => OpKind::Summarize,
            Interpolate { .. } => OpKind::Interpolate,
            Filter { .. }
            | GroupAggregate { .. }
            | LookupTransform { .. }
            | SplitComputeMerge { .. }
            | DivideAndConquer { .. } => return None,
        })
    }

    pub fn is_composite(&self) -> bool {
        self.kind().is_none()
    }

    pub fn inputs(&self) -> Count {
        use Operation::*;
        match self {
            CreateTable { .. } => Count::Exactly(0),
            Extend { .. } => Count::AtLeast(2),
            Supplement { .. } | Match { .. } | LookupTransform { .. } => Count::Exactly(2),
            _ => Count::Exactly(1),
        }
    }

    /// Output names the caller must supply. A single name for `decompose`
    /// acts as a prefix for every part.
    pub fn outputs(&self) -> Count {
        use Operation::*;
        match self {
            DeleteTable => Count::Exactly(0),
            Subset { .. } | Split { .. } => Count::Exactly(2),
            Decompose { .. } => Count::AtLeast(1),
            _ => Count::Exactly(1),
        }
    }

    /// Checks input and output counts against the operation's signature.
    pub fn check_arity(&self, inputs: usize, outputs: usize) -> Result<()> {
        if !self.inputs().admits(inputs) {
            return Err(OpError::InputCount {
                op: self.name().to_string(),
                expected: self.inputs().to_string(),
                found: inputs,
            });
        }
        if !self.outputs().admits(outputs) {
            return Err(OpError::OutputCount {
                op: self.name().to_string(),
                expected: self.outputs().to_string(),
                found: outputs,
            });
        }
        Ok(())
    }
}

/// Runs a primitive operation. Outputs carry the algebra's own labels
/// (`matching`/`rest`, `left`/`right`, part labels, `result`).
///
/// # Panics
/// If `op` is a composite; those are expanded by [`crate::composite`].
pub fn run_primitive(op: &Operation, inputs: &[&Table]) -> Result<OpResult> {
    use Operation::*;
    op.check_arity(inputs.len(), op.outputs_hint())?;
    let one = || inputs[0];
    let single = |t: Table| OpResult::single("result", t);
    Ok(match op {
        CreateTable { schema, rows } => single(algebra::create_table(schema, rows.clone())?),
        CreateColumn {
            name,
            dtype,
            generator,
        } => single(algebra::create_column(one(), name, *dtype, generator)?),
        CreateRow { values } => single(algebra::create_row(one(), values.clone())?),
        DeleteTable => OpResult::default(),
        DeleteColumn { column } => single(algebra::delete_column(one(), column)?),
        DeleteRow { selector } => single(algebra::delete_row(one(), selector)?),
        Rearrange { sort, order } => single(algebra::rearrange(one(), sort, order.as_deref())?),
        Fold {
            columns,
            key,
            value,
        } => single(algebra::reshape_fold(one(), columns, key, value)?),
        Unfold { key, value } => single(algebra::reshape_unfold(one(), key, value)?),
        TransformColumn {
            column,
            mapping,
            rename,
        } => algebra::transform_column(one(), column, mapping, rename.as_deref())?,
        TransformRow { selector, edits } => single(algebra::transform_row(one(), selector, edits)?),
        Subset { predicate } => {
            let (m, r) = algebra::subset(one(), predicate)?;
            OpResult {
                tables: vec![("matching".into(), m), ("rest".into(), r)],
                diagnostics: Vec::new(),
            }
        }
        Decompose { column, bins } => OpResult {
            tables: algebra::decompose(one(), column, *bins)?,
            diagnostics: Vec::new(),
        },
        Split { key, columns } => {
            let (l, r) = algebra::split(one(), key, columns)?;
            OpResult {
                tables: vec![("left".into(), l), ("right".into(), r)],
                diagnostics: Vec::new(),
            }
        }
        SeparateColumn {
            column,
            splitter,
            into,
        } => algebra::separate_column(one(), column, splitter, into)?,
        SeparateRow { column, delimiter } => {
            single(algebra::separate_row(one(), column, delimiter)?)
        }
        Extend { policy } => {
            let owned: Vec<Table> = inputs.iter().map(|t| (*t).clone()).collect();
            algebra::extend(&owned, *policy)?
        }
        Supplement { key } => algebra::supplement(inputs[0], inputs[1], key)?,
        Match { key, mode } => algebra::match_join(inputs[0], inputs[1], key, *mode)?,
        CombineColumns {
            columns,
            combiner,
            name,
        } => single(algebra::combine_columns(one(), columns, combiner, name)?),
        Summarize { by, aggs } => single(algebra::summarize(one(), by, aggs)?),
        Interpolate {
            column,
            order,
            method,
        } => algebra::interpolate(one(), order.as_deref(), column, method)?,
        Filter { .. }
        | GroupAggregate { .. }
        | LookupTransform { .. }
        | SplitComputeMerge { .. }
        | DivideAndConquer { .. } => {
            panic!("run_primitive called with composite `{}`", op.name())
        }
    })
}

impl Operation {
    /// A representative output count, used only to validate inputs.
    fn outputs_hint(&self) -> usize {
        match self.outputs() {
            Count::Exactly(k) | Count::AtLeast(k) => k,
        }
    }
}
