//! Columns and tables.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::value::{compare_values, DataKind, DataType, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("column name must not be empty")]
    EmptyColumnName,
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` has {found} cells but the table has {expected} rows")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("row has {found} values but the schema has {expected} columns")]
    ArityMismatch { expected: usize, found: usize },
    #[error("column `{column}` expects {expected} but got {found} (row {row})")]
    TypeMismatch {
        column: String,
        expected: DataType,
        found: &'static str,
        row: usize,
    },
    #[error("row index {index} out of range for {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
}

/// A named, typed column description.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: DataKind,
    pub nullable: bool,
}

impl Field {
    pub fn new(name: impl Into<String>, dtype: impl Into<DataType>) -> Self {
        let dtype = dtype.into();
        Field {
            name: name.into(),
            kind: dtype.kind,
            nullable: dtype.nullable,
        }
    }

    pub fn dtype(&self) -> DataType {
        DataType {
            kind: self.kind,
            nullable: self.nullable,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    dtype: DataType,
    cells: Vec<Value>,
}

impl Column {
    /// Builds a column, widening integer cells into a float column.
    pub fn new(
        name: impl Into<String>,
        dtype: impl Into<DataType>,
        cells: Vec<Value>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let dtype = dtype.into();
        if name.is_empty() {
            return Err(ModelError::EmptyColumnName);
        }
        let mut out = Vec::with_capacity(cells.len());
        for (row, v) in cells.into_iter().enumerate() {
            out.push(coerce_cell(&name, dtype, v, row)?);
        }
        Ok(Column {
            name,
            dtype,
            cells: out,
        })
    }

    /// Builds a column whose type is the narrowest that admits every cell.
    /// Integer and float cells mixed together widen to float; an all-null
    /// column becomes nullable text.
    pub fn infer(name: impl Into<String>, cells: Vec<Value>) -> Result<Self, ModelError> {
        let mut kind: Option<DataKind> = None;
        let mut nullable = false;
        for v in &cells {
            match (kind, v.kind()) {
                (_, None) => nullable = true,
                (None, k) => kind = k,
                (Some(DataKind::Integer), Some(DataKind::Float)) => kind = Some(DataKind::Float),
                (Some(DataKind::Float), Some(DataKind::Integer)) => {}
                (Some(a), Some(b)) if a == b => {}
                (Some(a), Some(_)) => kind = Some(a),
            }
        }
        let dtype = DataType {
            kind: kind.unwrap_or(DataKind::Text),
            nullable,
        };
        Column::new(name, dtype, cells)
    }

    pub(crate) fn from_parts_unchecked(name: String, dtype: DataType, cells: Vec<Value>) -> Self {
        debug_assert!(cells.iter().all(|c| dtype.admits(c)));
        Column { name, dtype, cells }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dtype(&self) -> DataType {
        self.dtype
    }

    pub fn kind(&self) -> DataKind {
        self.dtype.kind
    }

    pub fn cells(&self) -> &[Value] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn field(&self) -> Field {
        Field::new(self.name.clone(), self.dtype)
    }

    pub fn null_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_null()).count()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Column {
        Column {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn with_nullable(mut self, nullable: bool) -> Column {
        self.dtype.nullable = nullable || self.cells.iter().any(Value::is_null);
        self
    }

    pub fn take(&self, indices: &[usize]) -> Column {
        Column {
            name: self.name.clone(),
            dtype: self.dtype,
            cells: indices.iter().map(|&i| self.cells[i].clone()).collect(),
        }
    }

    pub fn into_cells(self) -> Vec<Value> {
        self.cells
    }
}

pub(crate) fn coerce_cell(
    column: &str,
    dtype: DataType,
    v: Value,
    row: usize,
) -> Result<Value, ModelError> {
    let tag = v.tag_name();
    match v.widen_to(dtype.kind) {
        Some(Value::Null) if !dtype.nullable => Err(ModelError::TypeMismatch {
            column: column.to_string(),
            expected: dtype,
            found: "null",
            row,
        }),
        Some(v) => Ok(v),
        None => Err(ModelError::TypeMismatch {
            column: column.to_string(),
            expected: dtype,
            found: tag,
            row,
        }),
    }
}

/// Ordered collection of equally long, uniquely named columns.
///
/// The row count is stored separately so a table may have rows but no
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: usize,
    attribution: Option<String>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Self, ModelError> {
        let rows = columns.first().map_or(0, Column::len);
        Table::with_row_count(columns, rows)
    }

    pub fn with_row_count(columns: Vec<Column>, rows: usize) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(ModelError::DuplicateColumn(c.name.clone()));
            }
            if c.len() != rows {
                return Err(ModelError::LengthMismatch {
                    column: c.name.clone(),
                    expected: rows,
                    found: c.len(),
                });
            }
        }
        Ok(Table {
            columns,
            rows,
            attribution: None,
        })
    }

    /// Zero-row table with the given schema.
    pub fn empty(schema: &[Field]) -> Result<Self, ModelError> {
        Table::from_rows(schema, Vec::new())
    }

    /// Row-wise constructor; every tuple must match the schema's arity and
    /// types.
    pub fn from_rows(schema: &[Field], rows: Vec<Vec<Value>>) -> Result<Self, ModelError> {
        let mut cols: Vec<Vec<Value>> = vec![Vec::with_capacity(rows.len()); schema.len()];
        let n = rows.len();
        for row in rows {
            if row.len() != schema.len() {
                return Err(ModelError::ArityMismatch {
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (c, v) in row.into_iter().enumerate() {
                cols[c].push(v);
            }
        }
        let columns = schema
            .iter()
            .zip(cols)
            .map(|(f, cells)| Column::new(f.name.clone(), f.dtype(), cells))
            .collect::<Result<Vec<_>, _>>()?;
        Table::with_row_count(columns, n)
    }

    pub fn with_attribution(mut self, note: impl Into<String>) -> Self {
        self.attribution = Some(note.into());
        self
    }

    pub(crate) fn with_attribution_of(mut self, other: &Table) -> Self {
        self.attribution = other.attribution.clone();
        self
    }

    pub fn attribution(&self) -> Option<&str> {
        self.attribution.as_deref()
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn schema(&self) -> Vec<Field> {
        self.columns.iter().map(Column::field).collect()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    pub fn column(&self, name: &str) -> Result<&Column, ModelError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))
    }

    pub fn row(&self, i: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.cells[i].clone()).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<Value>> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// New table holding the given rows (in the given order).
    pub fn take_rows(&self, indices: &[usize]) -> Table {
        Table {
            columns: self.columns.iter().map(|c| c.take(indices)).collect(),
            rows: indices.len(),
            attribution: self.attribution.clone(),
        }
    }

    /// Column projection in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Table, ModelError> {
        let columns = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Table {
            columns,
            rows: self.rows,
            attribution: self.attribution.clone(),
        })
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.dtype))
            .collect();
        writeln!(f, "{}", header.join(" | "))?;
        for row in self.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|v| {
                    if v.is_null() {
                        "∅".to_string()
                    } else {
                        v.to_string()
                    }
                })
                .collect();
            writeln!(f, "{}", cells.join(" | "))?;
        }
        Ok(())
    }
}

/// Selects rows either by explicit index or by predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSelector {
    Indices(BTreeSet<usize>),
    Predicate(Expr),
}

/// True iff both tables have the same `(name, kind)` columns (in any order)
/// and the same multiset of rows (in any order).
///
/// Nullability is a constraint, not part of a column's identity, so it is
/// not compared.
pub fn row_multiset_equal(a: &Table, b: &Table, float_tol: f64) -> bool {
    if a.column_count() != b.column_count() || a.row_count() != b.row_count() {
        return false;
    }
    let mut mapping = Vec::with_capacity(a.column_count());
    for c in a.columns() {
        match b.column(c.name()) {
            Ok(other) if other.kind() == c.kind() => {
                mapping.push(b.position(c.name()).unwrap_or_default())
            }
            _ => return false,
        }
    }
    let mut rows_a: Vec<Vec<Value>> = a.rows().collect();
    let mut rows_b: Vec<Vec<Value>> = (0..b.row_count())
        .map(|i| {
            mapping
                .iter()
                .map(|&c| b.columns[c].cells[i].clone())
                .collect()
        })
        .collect();
    rows_a.sort();
    rows_b.sort();
    if rows_a == rows_b {
        return true;
    }
    if float_tol == 0.0 {
        return false;
    }
    // Tolerant comparison: greedy matching of rows within tolerance.
    let close = |x: &[Value], y: &[Value]| {
        x.iter()
            .zip(y)
            .all(|(p, q)| compare_values(p, q, float_tol) == Ok(std::cmp::Ordering::Equal))
    };
    let mut used = vec![false; rows_b.len()];
    'outer: for ra in &rows_a {
        for (j, rb) in rows_b.iter().enumerate() {
            if !used[j] && close(ra, rb) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}
