use std::collections::{BTreeSet, HashMap};

use super::{mask_indices, AlgebraError, BinSpec, OpResult, Result, Splitter};
use crate::diagnostic::{Diagnostic, Finding, SeparationReport};
use crate::expr::Expr;
use crate::table::{Column, Table};
use crate::value::{format_float, DataKind, DataType, Value};

/// Label used for the partition holding null cells.
pub const NULL_LABEL: &str = "∅";

/// Divides rows by predicate: `(matching, rest)`, where rest takes every row
/// whose predicate is false or null.
pub fn subset(t: &Table, p: &Expr) -> Result<(Table, Table)> {
    let mask = p.truth(t)?;
    Ok((
        t.take_rows(&mask_indices(&mask, true)),
        t.take_rows(&mask_indices(&mask, false)),
    ))
}

/// Partitions rows by the levels (or numeric bins) of `column`.
pub fn decompose(t: &Table, column: &str, bins: Option<BinSpec>) -> Result<Vec<(String, Table)>> {
    let col = t.column(column)?;
    if t.row_count() == 0 {
        return Ok(Vec::new());
    }
    let (labels, assignment) = match (col.kind(), bins) {
        (DataKind::Boolean, _) => {
            let mut labels = vec!["true".to_string(), "false".to_string()];
            let mut has_null = false;
            let assign: Vec<usize> = col
                .cells()
                .iter()
                .map(|v| match v {
                    Value::Bool(true) => 0,
                    Value::Bool(false) => 1,
                    _ => {
                        has_null = true;
                        2
                    }
                })
                .collect();
            if has_null {
                labels.push(NULL_LABEL.to_string());
            }
            (labels, assign)
        }
        (k, Some(BinSpec::Bins { count })) if k.is_numeric() => numeric_bins(col, count)?,
        (k, Some(BinSpec::Bins { .. })) => {
            return Err(AlgebraError::InvalidArgument(format!(
                "bins need a numeric column, `{column}` is {k}"
            )))
        }
        (k, None) if k.is_numeric() => {
            return Err(AlgebraError::MissingBinSpec(column.to_string()))
        }
        _ => levels(col),
    };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    for (row, part) in assignment.into_iter().enumerate() {
        members[part].push(row);
    }
    Ok(dedup_labels(labels)
        .into_iter()
        .zip(members)
        .map(|(l, rows)| (l, t.take_rows(&rows)))
        .collect())
}

fn level_label(v: &Value) -> String {
    match v {
        Value::Null => NULL_LABEL.to_string(),
        Value::Float(f) => format_float(*f),
        other => other.to_string(),
    }
}

/// One part per distinct value, in first-appearance order.
fn levels(col: &Column) -> (Vec<String>, Vec<usize>) {
    let mut index: HashMap<&Value, usize> = HashMap::new();
    let mut labels = Vec::new();
    let assign = col
        .cells()
        .iter()
        .map(|v| {
            *index.entry(v).or_insert_with(|| {
                labels.push(level_label(v));
                labels.len() - 1
            })
        })
        .collect();
    (labels, assign)
}

/// Equal-width bins over the observed range. Every bin is produced, even
/// when empty, so the parts always cover `[min, max]`.
fn numeric_bins(col: &Column, count: usize) -> Result<(Vec<String>, Vec<usize>)> {
    if count == 0 {
        return Err(AlgebraError::InvalidArgument(
            "bin count must be at least 1".into(),
        ));
    }
    let vals: Vec<Option<f64>> = col.cells().iter().map(Value::as_f64).collect();
    let finite: Vec<f64> = vals
        .iter()
        .flatten()
        .copied()
        .filter(|f| !f.is_nan())
        .collect();
    if vals.iter().flatten().any(|f| f.is_nan() || f.is_infinite()) {
        return Err(AlgebraError::InvalidArgument(
            "cannot bin non-finite values".into(),
        ));
    }
    let null_part = |labels: &mut Vec<String>| {
        labels.push(NULL_LABEL.to_string());
        labels.len() - 1
    };
    if finite.is_empty() {
        let mut labels = Vec::new();
        let p = null_part(&mut labels);
        return Ok((labels, vec![p; vals.len()]));
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = if min == max { 1 } else { count };
    let width = (max - min) / k as f64;
    let lower: Vec<f64> = (0..k).map(|i| min + width * i as f64).collect();
    let mut labels: Vec<String> = (0..k)
        .map(|i| {
            let hi = if i + 1 == k { max } else { lower[i + 1] };
            let close = if i + 1 == k { ']' } else { ')' };
            format!("[{}, {}{close}", num(lower[i]), num(hi))
        })
        .collect();
    let mut null_idx = None;
    let mut assign = Vec::with_capacity(vals.len());
    for v in &vals {
        let part = match v {
            Some(x) => lower.iter().rposition(|lo| *x >= *lo).unwrap_or(0),
            None => *null_idx.get_or_insert_with(|| null_part(&mut labels)),
        };
        assign.push(part);
    }
    Ok((labels, assign))
}

fn num(f: f64) -> String {
    if f.fract() == 0.0 && f.abs() < 1e15 {
        format!("{}", f as i64)
    } else {
        format_float(f)
    }
}

/// Makes labels distinct by suffixing repeats with `#n`.
fn dedup_labels(labels: Vec<String>) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    labels
        .into_iter()
        .map(|l| {
            let mut candidate = l.clone();
            let mut n = 2;
            while !seen.insert(candidate.clone()) {
                candidate = format!("{l}#{n}");
                n += 1;
            }
            candidate
        })
        .collect()
}

/// Splits columns into two tables that both keep `key`: the left takes the
/// remaining columns, the right takes `right_columns`.
pub fn split(t: &Table, key: &str, right_columns: &[String]) -> Result<(Table, Table)> {
    t.column(key)?;
    let mut right_set = BTreeSet::new();
    for c in right_columns {
        if c == key {
            return Err(AlgebraError::KeyInRightSet(key.to_string()));
        }
        t.column(c)?;
        if !right_set.insert(c.as_str()) {
            return Err(AlgebraError::InvalidArgument(format!(
                "column `{c}` listed twice"
            )));
        }
    }
    let left: Vec<&str> = t
        .column_names()
        .into_iter()
        .filter(|n| !right_set.contains(n))
        .collect();
    let mut right = vec![key];
    right.extend(right_columns.iter().map(String::as_str));
    Ok((
        t.select(&left)?.with_attribution_of(t),
        t.select(&right)?.with_attribution_of(t),
    ))
}

fn cut(s: &str, splitter: &Splitter, n: usize) -> (Vec<Option<String>>, bool, bool) {
    match splitter {
        Splitter::Delimiter(d) => {
            let surplus = s.split(d.as_str()).count() > n;
            let parts: Vec<&str> = s.splitn(n, d.as_str()).collect();
            let missing = parts.len() < n;
            let mut out: Vec<Option<String>> =
                parts.into_iter().map(|p| Some(p.to_string())).collect();
            out.resize(n, None);
            (out, missing, surplus)
        }
        Splitter::Positions(cuts) => {
            let chars: Vec<char> = s.chars().collect();
            let mut bounds = vec![0];
            bounds.extend(cuts.iter().copied());
            bounds.push(usize::MAX);
            let mut missing = false;
            let out = bounds
                .windows(2)
                .map(|w| {
                    if w[0] >= chars.len() && !(w[0] == 0 && chars.is_empty()) {
                        missing = true;
                        None
                    } else {
                        Some(chars[w[0]..w[1].min(chars.len())].iter().collect())
                    }
                })
                .collect();
            (out, missing, false)
        }
    }
}

/// Replaces a text column with one text column per component.
///
/// Rows with too few components get nulls; rows with too many keep the
/// remainder in the last component. Both are reported.
pub fn separate_column(
    t: &Table,
    column: &str,
    splitter: &Splitter,
    new_names: &[String],
) -> Result<OpResult> {
    let pos = t
        .position(column)
        .ok_or_else(|| AlgebraError::unknown(column))?;
    let src = &t.columns()[pos];
    if src.kind() != DataKind::Text {
        return Err(AlgebraError::NotText(column.to_string()));
    }
    let n = new_names.len();
    match splitter {
        Splitter::Delimiter(d) if d.is_empty() => {
            return Err(AlgebraError::InvalidArgument(
                "delimiter must not be empty".into(),
            ))
        }
        Splitter::Positions(cuts) => {
            if cuts.len() + 1 != n {
                return Err(AlgebraError::InvalidArgument(format!(
                    "{} cut positions give {} parts, but {n} names were given",
                    cuts.len(),
                    cuts.len() + 1
                )));
            }
            if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.first() == Some(&0) {
                return Err(AlgebraError::InvalidArgument(
                    "cut positions must be increasing and positive".into(),
                ));
            }
        }
        _ => {}
    }
    if n == 0 {
        return Err(AlgebraError::InvalidArgument(
            "need at least one output column".into(),
        ));
    }
    let mut fresh = BTreeSet::new();
    for name in new_names {
        if (name != column && t.has_column(name)) || !fresh.insert(name.as_str()) {
            return Err(AlgebraError::NameCollision(name.clone()));
        }
    }

    let mut parts: Vec<Vec<Value>> = vec![Vec::with_capacity(t.row_count()); n];
    let (mut irregular, mut missing_rows, mut surplus_rows) = (Vec::new(), 0, 0);
    for (row, cell) in src.cells().iter().enumerate() {
        let Some(s) = cell.as_str() else {
            parts.iter_mut().for_each(|p| p.push(Value::Null));
            continue;
        };
        let (pieces, missing, surplus) = cut(s, splitter, n);
        if missing || surplus {
            irregular.push(row);
            missing_rows += missing as usize;
            surplus_rows += surplus as usize;
        }
        for (p, piece) in parts.iter_mut().zip(pieces) {
            p.push(piece.map_or(Value::Null, Value::Text));
        }
    }

    let new_cols: Vec<Column> = new_names
        .iter()
        .zip(parts)
        .map(|(name, cells)| {
            Column::from_parts_unchecked(name.clone(), DataType::nullable(DataKind::Text), cells)
                .with_nullable(src.dtype().nullable)
        })
        .collect();
    let mut columns = t.columns().to_vec();
    columns.splice(pos..=pos, new_cols);
    let mut diagnostics = Vec::new();
    if !irregular.is_empty() {
        diagnostics.push(Diagnostic::new(Finding::IrregularSeparation(
            SeparationReport {
                column: column.to_string(),
                rows: irregular,
                missing_parts: missing_rows,
                surplus_parts: surplus_rows,
            },
        )));
    }
    Ok(OpResult {
        tables: vec![(
            "result".into(),
            Table::with_row_count(columns, t.row_count())?.with_attribution_of(t),
        )],
        diagnostics,
    })
}

/// Emits one row per delimited element of `column`, repeating the other
/// cells. Empty and null cells yield a single row holding null.
pub fn separate_row(t: &Table, column: &str, delimiter: &str) -> Result<Table> {
    let pos = t
        .position(column)
        .ok_or_else(|| AlgebraError::unknown(column))?;
    let src = &t.columns()[pos];
    if src.kind() != DataKind::Text {
        return Err(AlgebraError::NotText(column.to_string()));
    }
    if delimiter.is_empty() {
        return Err(AlgebraError::InvalidArgument(
            "delimiter must not be empty".into(),
        ));
    }
    let mut origin = Vec::new();
    let mut cells = Vec::new();
    for (row, cell) in src.cells().iter().enumerate() {
        match cell.as_str() {
            Some(s) if !s.is_empty() => {
                for piece in s.split(delimiter) {
                    origin.push(row);
                    cells.push(Value::text(piece));
                }
            }
            _ => {
                origin.push(row);
                cells.push(Value::Null);
            }
        }
    }
    let mut columns: Vec<Column> = t.columns().iter().map(|c| c.take(&origin)).collect();
    columns[pos] = Column::from_parts_unchecked(
        column.to_string(),
        DataType::nullable(DataKind::Text),
        cells,
    )
    .with_nullable(src.dtype().nullable);
    Ok(Table::with_row_count(columns, origin.len())?.with_attribution_of(t))
}
