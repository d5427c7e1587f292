//! Pull-based checks over tables. None of them modify their inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{
    CollisionReport, Diagnostic, DriftEntry, DriftReport, DtypeChange, DuplicateKey,
    EqualityReport, Finding, GroupDelta, LevelChange, Side,
};
use crate::table::{Column, ModelError, Table};
use crate::value::{floats_close, DataKind, DataType, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("column `{0}` must be numeric")]
    NotNumeric(String),
}

pub type Result<T> = std::result::Result<T, AuditError>;

/// Relative tolerance applied to float sums when none is given.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-9;

/// Exact integer sum or float sum of one column's non-null cells.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Sum {
    Int(i128),
    Float(f64),
}

impl Sum {
    fn zero(kind: DataKind) -> Sum {
        if kind == DataKind::Integer {
            Sum::Int(0)
        } else {
            Sum::Float(0.0)
        }
    }

    fn add(self, v: &Value) -> Sum {
        match (self, v) {
            (Sum::Int(s), Value::Int(i)) => Sum::Int(s + *i as i128),
            (s, Value::Null) => s,
            (s, v) => Sum::Float(s.as_f64() + v.as_f64().unwrap_or(0.0)),
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Sum::Int(i) => i as f64,
            Sum::Float(f) => f,
        }
    }

    fn value(self) -> Value {
        match self {
            Sum::Int(i) => i64::try_from(i).map_or(Value::Float(i as f64), Value::Int),
            Sum::Float(f) => Value::Float(f),
        }
    }

    fn minus(self, other: Sum) -> Sum {
        match (self, other) {
            (Sum::Int(a), Sum::Int(b)) => Sum::Int(a - b),
            (a, b) => Sum::Float(a.as_f64() - b.as_f64()),
        }
    }

    fn abs(self) -> Sum {
        match self {
            Sum::Int(i) => Sum::Int(i.abs()),
            Sum::Float(f) => Sum::Float(f.abs()),
        }
    }

    /// Whether `a` and `b` agree: within `tol` absolutely when given,
    /// otherwise exactly for integers and relatively for floats.
    fn agrees(a: Sum, b: Sum, tol: Option<f64>) -> bool {
        match (a, b, tol) {
            (Sum::Int(x), Sum::Int(y), None) => x == y,
            (_, _, Some(t)) => (a.as_f64() - b.as_f64()).abs() <= t,
            (_, _, None) => floats_close(a.as_f64(), b.as_f64(), DEFAULT_FLOAT_TOL),
        }
    }
}

fn numeric<'a>(t: &'a Table, column: &str) -> Result<&'a Column> {
    let c = t.column(column)?;
    if !c.kind().is_numeric() {
        return Err(AuditError::NotNumeric(column.to_string()));
    }
    Ok(c)
}

fn column_sum(c: &Column) -> Sum {
    c.cells().iter().fold(Sum::zero(c.kind()), Sum::add)
}

/// Compares the column totals of two tables. `tol` is an absolute bound;
/// without it integers must match exactly and floats to a relative 1e-9.
pub fn test_equality_total(
    a: &Table,
    b: &Table,
    column: &str,
    tol: Option<f64>,
) -> Result<Option<Diagnostic>> {
    let (sa, sb) = (
        column_sum(numeric(a, column)?),
        column_sum(numeric(b, column)?),
    );
    if Sum::agrees(sa, sb, tol) {
        return Ok(None);
    }
    let delta = sa.minus(sb);
    Ok(Some(Diagnostic::new(Finding::EqualityMismatch(
        EqualityReport {
            column: column.to_string(),
            group_column: None,
            total_a: sa.value(),
            total_b: sb.value(),
            delta: delta.value(),
            groups: Vec::new(),
            discrepancy: delta.abs().value(),
        },
    ))))
}

/// Compares per-group totals after aligning the group levels of both
/// tables. A group missing on one side counts as zero there and is flagged.
pub fn test_equality_grouped(
    a: &Table,
    b: &Table,
    group_column: &str,
    value_column: &str,
    tol: Option<f64>,
) -> Result<Option<Diagnostic>> {
    let (va, vb) = (numeric(a, value_column)?, numeric(b, value_column)?);
    let (ga, gb) = (a.column(group_column)?, b.column(group_column)?);
    let group_sums = |g: &Column, v: &Column| {
        let mut sums: BTreeMap<Value, Sum> = BTreeMap::new();
        for (key, x) in g.cells().iter().zip(v.cells()) {
            let s = sums.entry(key.clone()).or_insert(Sum::zero(v.kind()));
            *s = s.add(x);
        }
        sums
    };
    let (sums_a, sums_b) = (group_sums(ga, va), group_sums(gb, vb));
    let keys: BTreeSet<&Value> = sums_a.keys().chain(sums_b.keys()).collect();

    let mut groups = Vec::new();
    let mut discrepancy = Sum::zero(if va.kind() == vb.kind() {
        va.kind()
    } else {
        DataKind::Float
    });
    for key in keys {
        let (x, y) = (sums_a.get(key), sums_b.get(key));
        let zero = Sum::zero(DataKind::Integer);
        let (sa, sb) = (x.copied().unwrap_or(zero), y.copied().unwrap_or(zero));
        let missing_in = match (x, y) {
            (None, _) => Some(Side::A),
            (_, None) => Some(Side::B),
            _ => None,
        };
        if Sum::agrees(sa, sb, tol) && missing_in.is_none() {
            continue;
        }
        let delta = sa.minus(sb);
        discrepancy = match (discrepancy, delta.abs()) {
            (Sum::Int(d), Sum::Int(x)) => Sum::Int(d + x),
            (d, x) => Sum::Float(d.as_f64() + x.as_f64()),
        };
        groups.push(GroupDelta {
            group: key.clone(),
            sum_a: sa.value(),
            sum_b: sb.value(),
            delta: delta.value(),
            missing_in,
        });
    }
    if groups.is_empty() {
        return Ok(None);
    }
    let (ta, tb) = (column_sum(va), column_sum(vb));
    Ok(Some(Diagnostic::new(Finding::EqualityMismatch(
        EqualityReport {
            column: value_column.to_string(),
            group_column: Some(group_column.to_string()),
            total_a: ta.value(),
            total_b: tb.value(),
            delta: ta.minus(tb).value(),
            groups,
            discrepancy: discrepancy.value(),
        },
    ))))
}

/// Distinct non-null values of a column.
pub(crate) fn text_levels(c: &Column) -> BTreeSet<Value> {
    c.cells().iter().filter(|v| !v.is_null()).cloned().collect()
}

/// Differences of `b` relative to `a`: added and removed columns, kind
/// changes on shared columns, and level changes on shared text columns.
pub(crate) fn schema_diff(a: &Table, b: &Table, table: usize) -> DriftEntry {
    let mut entry = DriftEntry {
        table,
        ..DriftEntry::default()
    };
    entry.added_columns = b
        .column_names()
        .into_iter()
        .filter(|n| !a.has_column(n))
        .map(str::to_string)
        .collect();
    entry.removed_columns = a
        .column_names()
        .into_iter()
        .filter(|n| !b.has_column(n))
        .map(str::to_string)
        .collect();
    for ca in a.columns() {
        let Ok(cb) = b.column(ca.name()) else {
            continue;
        };
        if ca.kind() != cb.kind() {
            entry.dtype_changes.push(DtypeChange {
                column: ca.name().to_string(),
                from: ca.kind(),
                to: cb.kind(),
            });
        } else if ca.kind() == DataKind::Text {
            let (la, lb) = (text_levels(ca), text_levels(cb));
            let added: Vec<Value> = lb.difference(&la).cloned().collect();
            let removed: Vec<Value> = la.difference(&lb).cloned().collect();
            if !added.is_empty() || !removed.is_empty() {
                entry.level_changes.push(LevelChange {
                    column: ca.name().to_string(),
                    added,
                    removed,
                });
            }
        }
    }
    entry
}

pub fn detect_schema_drift(a: &Table, b: &Table) -> Option<Diagnostic> {
    let entry = schema_diff(a, b, 1);
    (!entry.is_empty()).then(|| {
        Diagnostic::new(Finding::SchemaDrift(DriftReport {
            entries: vec![entry],
        }))
    })
}

/// Reports key tuples that occur more than once. Nulls compare equal to
/// each other here, so two rows with a null key collide.
pub fn check_key_uniqueness(t: &Table, columns: &[String]) -> Result<Option<Diagnostic>> {
    let cols = columns
        .iter()
        .map(|c| t.column(c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut counts: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
    for r in 0..t.row_count() {
        *counts
            .entry(cols.iter().map(|c| c.cells()[r].clone()).collect())
            .or_default() += 1;
    }
    let duplicates: Vec<DuplicateKey> = counts
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(key, count)| DuplicateKey { key, count })
        .collect();
    if duplicates.is_empty() {
        return Ok(None);
    }
    Ok(Some(Diagnostic::new(Finding::KeyCollision(
        CollisionReport {
            columns: columns.to_vec(),
            duplicates,
        },
    ))))
}

/// A named audit over one or two bound tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "audit", rename_all = "snake_case")]
pub enum AuditSpec {
    Total {
        a: String,
        b: String,
        column: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    Grouped {
        a: String,
        b: String,
        group: String,
        column: String,
        #[serde(default)]
        tol: Option<f64>,
    },
    Drift {
        a: String,
        b: String,
    },
    Keys {
        table: String,
        columns: Vec<String>,
    },
    Profile {
        table: String,
    },
}

impl AuditSpec {
    /// Handles the audit reads, in order.
    pub fn tables(&self) -> Vec<&str> {
        match self {
            AuditSpec::Total { a, b, .. }
            | AuditSpec::Grouped { a, b, .. }
            | AuditSpec::Drift { a, b } => {
                vec![a.as_str(), b.as_str()]
            }
            AuditSpec::Keys { table, .. } | AuditSpec::Profile { table } => vec![table.as_str()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    #[serde(rename = "type")]
    pub dtype: DataType,
    pub nulls: usize,
    /// Distinct non-null values.
    pub distinct: usize,
    pub min: Value,
    pub max: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub rows: usize,
    pub columns: Vec<ColumnProfile>,
}

pub fn profile_summary(t: &Table) -> Profile {
    let columns = t
        .columns()
        .iter()
        .map(|c| {
            let mut distinct: HashMap<&Value, ()> = HashMap::new();
            let mut min: Option<&Value> = None;
            let mut max: Option<&Value> = None;
            for v in c.cells().iter().filter(|v| !v.is_null()) {
                distinct.insert(v, ());
                min = Some(min.map_or(v, |m| m.min(v)));
                max = Some(max.map_or(v, |m| m.max(v)));
            }
            ColumnProfile {
                name: c.name().to_string(),
                dtype: c.dtype(),
                nulls: c.null_count(),
                distinct: distinct.len(),
                min: min.cloned().unwrap_or(Value::Null),
                max: max.cloned().unwrap_or(Value::Null),
            }
        })
        .collect();
    Profile {
        rows: t.row_count(),
        columns,
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} rows × {} columns", self.rows, self.columns.len())?;
        let width = self
            .columns
            .iter()
            .map(|c| c.name.chars().count())
            .max()
            .unwrap_or(0);
        for c in &self.columns {
            write!(
                f,
                "  {:width$}  {:6} nulls={} distinct={}",
                c.name,
                c.dtype.to_string(),
                c.nulls,
                c.distinct
            )?;
            if !c.min.is_null() {
                write!(f, " min={} max={}", c.min, c.max)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
