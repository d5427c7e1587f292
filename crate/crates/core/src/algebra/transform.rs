use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use super::{mask_indices, selection, AlgebraError, Mapping, OpResult, Result, SortKey};
use crate::diagnostic::{sorted_unique, Diagnostic, Finding, ValuesReport};
use crate::table::{coerce_cell, Column, RowSelector, Table};
use crate::value::{DataKind, DataType, Value};

/// Stable sort by `keys` (nulls first in either direction), then optional
/// column reordering. Cell contents are untouched.
pub fn rearrange(t: &Table, keys: &[SortKey], order: Option<&[String]>) -> Result<Table> {
    let key_cols = keys
        .iter()
        .map(|k| Ok((t.column(&k.column)?, k.descending)))
        .collect::<Result<Vec<_>>>()?;
    let mut idx: Vec<usize> = (0..t.row_count()).collect();
    idx.sort_by(|&a, &b| {
        for (col, desc) in &key_cols {
            let (x, y) = (&col.cells()[a], &col.cells()[b]);
            let ord = match (x.is_null(), y.is_null()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                _ if *desc => y.cmp(x),
                _ => x.cmp(y),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
    let sorted = t.take_rows(&idx);
    match order {
        None => Ok(sorted),
        Some(names) => {
            let want: BTreeSet<&str> = names.iter().map(String::as_str).collect();
            let have: BTreeSet<&str> = t.column_names().into_iter().collect();
            if names.len() != t.column_count() || want != have {
                return Err(AlgebraError::NotAPermutation);
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Ok(sorted.select(&refs)?)
        }
    }
}

/// Collapses `value_columns` into key/value pairs: one output row per input
/// row and folded column. The other columns are kept as identifiers.
pub fn reshape_fold(
    t: &Table,
    value_columns: &[String],
    key_name: &str,
    value_name: &str,
) -> Result<Table> {
    if value_columns.is_empty() {
        return Err(AlgebraError::InvalidArgument(
            "fold needs at least one column".into(),
        ));
    }
    let folded = value_columns
        .iter()
        .map(|n| t.column(n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let distinct: BTreeSet<&str> = value_columns.iter().map(String::as_str).collect();
    if distinct.len() != value_columns.len() {
        return Err(AlgebraError::InvalidArgument(
            "fold columns listed twice".into(),
        ));
    }
    let kind = folded[0].kind();
    if folded.iter().any(|c| c.kind() != kind) {
        return Err(AlgebraError::MixedDtypes(value_columns.to_vec()));
    }
    let ids: Vec<&Column> = t
        .columns()
        .iter()
        .filter(|c| !distinct.contains(c.name()))
        .collect();
    for name in [key_name, value_name] {
        if ids.iter().any(|c| c.name() == name) {
            return Err(AlgebraError::NameCollision(name.to_string()));
        }
    }
    if key_name == value_name {
        return Err(AlgebraError::NameCollision(key_name.to_string()));
    }
    let n = t.row_count() * folded.len();
    let mut id_cells: Vec<Vec<Value>> = vec![Vec::with_capacity(n); ids.len()];
    let mut keys = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for r in 0..t.row_count() {
        for c in &folded {
            for (i, id) in ids.iter().enumerate() {
                id_cells[i].push(id.cells()[r].clone());
            }
            keys.push(Value::text(c.name()));
            vals.push(c.cells()[r].clone());
        }
    }
    let nullable = folded.iter().any(|c| c.dtype().nullable);
    let mut columns: Vec<Column> = ids
        .iter()
        .zip(id_cells)
        .map(|(c, cells)| Column::from_parts_unchecked(c.name().to_string(), c.dtype(), cells))
        .collect();
    columns.push(Column::from_parts_unchecked(
        key_name.to_string(),
        DataType::required(DataKind::Text),
        keys,
    ));
    columns.push(
        Column::from_parts_unchecked(value_name.to_string(), DataType { kind, nullable }, vals)
            .with_nullable(nullable),
    );
    Ok(Table::with_row_count(columns, n)?.with_attribution_of(t))
}

/// Casts the levels of `key_column` into columns holding `value_column`.
/// Every other column identifies an output row; absent (id, level) pairs
/// become null.
pub fn reshape_unfold(t: &Table, key_column: &str, value_column: &str) -> Result<Table> {
    let key = t.column(key_column)?;
    let value = t.column(value_column)?;
    if key.kind() != DataKind::Text {
        return Err(AlgebraError::NotText(key_column.to_string()));
    }
    if key_column == value_column {
        return Err(AlgebraError::InvalidArgument(
            "key and value must differ".into(),
        ));
    }
    let ids: Vec<&Column> = t
        .columns()
        .iter()
        .filter(|c| c.name() != key_column && c.name() != value_column)
        .collect();

    let mut levels: Vec<String> = Vec::new();
    let mut level_pos: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<usize> = Vec::new(); // first row of each id tuple
    let mut group_of: HashMap<Vec<Value>, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), Value> = HashMap::new();

    for r in 0..t.row_count() {
        let level = match &key.cells()[r] {
            Value::Text(s) => s.clone(),
            _ => return Err(AlgebraError::NullKey(key_column.to_string())),
        };
        let lp = *level_pos.entry(level.clone()).or_insert_with(|| {
            levels.push(level.clone());
            levels.len() - 1
        });
        let id: Vec<Value> = ids.iter().map(|c| c.cells()[r].clone()).collect();
        let g = *group_of.entry(id.clone()).or_insert_with(|| {
            groups.push(r);
            groups.len() - 1
        });
        if cells.insert((g, lp), value.cells()[r].clone()).is_some() {
            return Err(AlgebraError::DuplicateKeyPair { ids: id, level });
        }
    }
    for l in &levels {
        if ids.iter().any(|c| c.name() == l) {
            return Err(AlgebraError::NameCollision(l.clone()));
        }
    }

    let mut columns: Vec<Column> = ids.iter().map(|c| c.take(&groups)).collect();
    for (lp, level) in levels.iter().enumerate() {
        let col: Vec<Value> = (0..groups.len())
            .map(|g| cells.remove(&(g, lp)).unwrap_or(Value::Null))
            .collect();
        columns.push(Column::from_parts_unchecked(
            level.clone(),
            DataType::nullable(value.kind()),
            col,
        ));
    }
    Ok(Table::with_row_count(columns, groups.len())?.with_attribution_of(t))
}

/// Rewrites one column cell-wise, optionally under a new name.
pub fn transform_column(
    t: &Table,
    column: &str,
    mapping: &Mapping,
    rename: Option<&str>,
) -> Result<OpResult> {
    let pos = t
        .position(column)
        .ok_or_else(|| AlgebraError::unknown(column))?;
    let src = &t.columns()[pos];
    let name = rename.unwrap_or(column);
    if name != column && t.has_column(name) {
        return Err(AlgebraError::NameCollision(name.to_string()));
    }
    let mut diagnostics = Vec::new();
    let new_col = match mapping {
        Mapping::Expression(e) => {
            let kind = e.infer_kind(t)?.unwrap_or(src.kind());
            let cells = e.evaluate(t)?;
            let nullable = src.dtype().nullable || cells.iter().any(Value::is_null);
            Column::new(name, DataType { kind, nullable }, cells)?
        }
        Mapping::Lookup(pairs) => {
            let mut table: HashMap<Value, Value> = HashMap::new();
            for (i, (from, to)) in pairs.iter().enumerate() {
                let to = coerce_cell(name, DataType::nullable(src.kind()), to.clone(), i)?;
                table.insert(from.clone(), to);
            }
            let mut unmapped = Vec::new();
            let cells: Vec<Value> = src
                .cells()
                .iter()
                .map(|v| match table.get(v) {
                    Some(to) => to.clone(),
                    None => {
                        if !v.is_null() {
                            unmapped.push(v.clone());
                        }
                        v.clone()
                    }
                })
                .collect();
            if !unmapped.is_empty() {
                diagnostics.push(Diagnostic::new(Finding::UnmappedLookupValues(
                    ValuesReport {
                        column: column.to_string(),
                        values: sorted_unique(unmapped),
                    },
                )));
            }
            let nullable = src.dtype().nullable || cells.iter().any(Value::is_null);
            Column::new(
                name,
                DataType {
                    kind: src.kind(),
                    nullable,
                },
                cells,
            )?
        }
    };
    let mut columns = t.columns().to_vec();
    columns[pos] = new_col;
    Ok(OpResult {
        tables: vec![(
            "result".into(),
            Table::with_row_count(columns, t.row_count())?.with_attribution_of(t),
        )],
        diagnostics,
    })
}

/// Patches the selected rows with literal values; other cells are untouched.
pub fn transform_row(t: &Table, sel: &RowSelector, edits: &[(String, Value)]) -> Result<Table> {
    let mask = selection(t, sel)?;
    let rows = mask_indices(&mask, true);
    if rows.is_empty() {
        return Err(AlgebraError::NoRowSelected);
    }
    let mut columns = t.columns().to_vec();
    for (name, v) in edits {
        let pos = t
            .position(name)
            .ok_or_else(|| AlgebraError::unknown(name))?;
        let col = &columns[pos];
        let v = coerce_cell(name, col.dtype(), v.clone(), rows[0])?;
        let mut cells = col.cells().to_vec();
        for &r in &rows {
            cells[r] = v.clone();
        }
        columns[pos] = Column::from_parts_unchecked(name.clone(), col.dtype(), cells);
    }
    Ok(Table::with_row_count(columns, t.row_count())?.with_attribution_of(t))
}
