use std::collections::{BTreeSet, HashMap};

use super::{
    AggFunc, Aggregation, AlgebraError, Combiner, FillMethod, MatchMode, OpResult, Result,
    SchemaPolicy,
};
use crate::audit::{schema_diff, text_levels};
use crate::diagnostic::{
    Diagnostic, DriftEntry, DriftReport, Finding, KeyReport, LevelChange, RowsReport,
};
use crate::table::{Column, Table};
use crate::value::{DataKind, DataType, Value};

/// Concatenates rows in argument order.
///
/// Under the strict policy every table must carry the first table's
/// `(name, kind)` columns; later tables are reordered to match. Under the
/// union policy missing columns are null-filled and the drift is reported.
pub fn extend(tables: &[Table], policy: SchemaPolicy) -> Result<OpResult> {
    if tables.len() < 2 {
        return Err(AlgebraError::TooFewTables {
            needed: 2,
            got: tables.len(),
        });
    }
    let first = &tables[0];
    let mut layout: Vec<(String, DataKind, bool)> = first
        .columns()
        .iter()
        .map(|c| (c.name().to_string(), c.kind(), c.dtype().nullable))
        .collect();
    for (i, t) in tables.iter().enumerate().skip(1) {
        for c in t.columns() {
            match layout.iter_mut().find(|(n, _, _)| n == c.name()) {
                Some((_, k, nullable)) if *k == c.kind() => *nullable |= c.dtype().nullable,
                Some((n, k, _)) => {
                    return Err(AlgebraError::SchemaMismatch {
                        table: i,
                        detail: format!(
                            "column `{n}` is {} here but {k} in the first table",
                            c.kind()
                        ),
                    })
                }
                None if policy == SchemaPolicy::Strict => {
                    return Err(AlgebraError::SchemaMismatch {
                        table: i,
                        detail: format!("unexpected column `{}`", c.name()),
                    })
                }
                None => layout.push((c.name().to_string(), c.kind(), true)),
            }
        }
        if policy == SchemaPolicy::Strict {
            if let Some(c) = first.columns().iter().find(|c| !t.has_column(c.name())) {
                return Err(AlgebraError::SchemaMismatch {
                    table: i,
                    detail: format!("missing column `{}`", c.name()),
                });
            }
        }
    }
    let rows: usize = tables.iter().map(Table::row_count).sum();
    let columns: Vec<Column> = layout
        .iter()
        .map(|(name, kind, nullable)| {
            let mut cells = Vec::with_capacity(rows);
            let mut filled = false;
            for t in tables {
                match t.column(name) {
                    Ok(c) => cells.extend_from_slice(c.cells()),
                    Err(_) => {
                        filled |= t.row_count() > 0;
                        cells.extend(std::iter::repeat_n(Value::Null, t.row_count()));
                    }
                }
            }
            Column::from_parts_unchecked(
                name.clone(),
                DataType {
                    kind: *kind,
                    nullable: *nullable || filled,
                },
                cells,
            )
        })
        .collect();
    let out = Table::with_row_count(columns, rows)?.with_attribution_of(first);

    let mut diagnostics = Vec::new();
    if policy == SchemaPolicy::Union {
        let entries = union_drift(tables);
        if !entries.is_empty() {
            diagnostics.push(Diagnostic::new(Finding::SchemaDrift(DriftReport {
                entries,
            })));
        }
    }
    Ok(OpResult {
        tables: vec![("result".into(), out)],
        diagnostics,
    })
}

/// Column differences of each later table against the first, plus text
/// levels that no earlier table contained.
fn union_drift(tables: &[Table]) -> Vec<DriftEntry> {
    let mut seen: HashMap<String, BTreeSet<Value>> = HashMap::new();
    for c in tables[0]
        .columns()
        .iter()
        .filter(|c| c.kind() == DataKind::Text)
    {
        seen.insert(c.name().to_string(), text_levels(c));
    }
    let mut entries = Vec::new();
    for (i, t) in tables.iter().enumerate().skip(1) {
        let mut entry = schema_diff(&tables[0], t, i);
        entry.level_changes.clear();
        for c in t.columns().iter().filter(|c| c.kind() == DataKind::Text) {
            let levels = text_levels(c);
            let known = seen.entry(c.name().to_string()).or_default();
            let added: Vec<Value> = levels.difference(known).cloned().collect();
            // New columns are already reported whole; only shared ones get level detail.
            if !added.is_empty() && i > 0 && tables[..i].iter().any(|p| p.has_column(c.name())) {
                entry.level_changes.push(LevelChange {
                    column: c.name().to_string(),
                    added,
                    removed: Vec::new(),
                });
            }
            known.extend(levels);
        }
        if !entry.is_empty() {
            entries.push(entry);
        }
    }
    entries
}

struct KeyIndex<'a> {
    key: &'a str,
    left: &'a Column,
    right: &'a Column,
    /// Right row for each non-null right key (the first one, if repeated).
    lookup: HashMap<&'a Value, usize>,
    duplicates: Vec<Value>,
}

fn key_index<'a>(left: &'a Table, right: &'a Table, key: &'a str) -> Result<KeyIndex<'a>> {
    let l = left.column(key)?;
    let r = right.column(key)?;
    if l.kind() != r.kind() {
        return Err(AlgebraError::KeyTypeMismatch {
            key: key.to_string(),
            left: l.kind(),
            right: r.kind(),
        });
    }
    let mut lookup = HashMap::new();
    let mut duplicates = Vec::new();
    for (i, v) in r.cells().iter().enumerate() {
        if v.is_null() {
            continue;
        }
        if lookup.contains_key(v) {
            duplicates.push(v.clone());
        } else {
            lookup.insert(v, i);
        }
    }
    duplicates.sort();
    duplicates.dedup();
    Ok(KeyIndex {
        key,
        left: l,
        right: r,
        lookup,
        duplicates,
    })
}

impl KeyIndex<'_> {
    fn right_row(&self, left_row: usize) -> Option<usize> {
        self.lookup.get(&self.left.cells()[left_row]).copied()
    }

    fn require_unique(&self) -> Result<()> {
        if self.duplicates.is_empty() {
            Ok(())
        } else {
            Err(AlgebraError::DuplicateRightKey(self.duplicates.clone()))
        }
    }

    /// Report over the given left rows.
    fn left_report(&self, rows: &[usize]) -> KeyReport {
        let cells = rows.iter().map(|&r| &self.left.cells()[r]);
        let nulls = cells.clone().filter(|v| v.is_null()).count();
        KeyReport::new(
            self.key,
            cells.filter(|v| !v.is_null()).cloned(),
            nulls,
            rows.len(),
        )
    }

    /// Right rows whose key no left row used.
    fn unused_right(&self, used: &[bool]) -> Option<KeyReport> {
        let unused: Vec<&Value> = self
            .right
            .cells()
            .iter()
            .zip(used)
            .filter(|(_, u)| !**u)
            .map(|(v, _)| v)
            .collect();
        if unused.is_empty() {
            return None;
        }
        let nulls = unused.iter().filter(|v| v.is_null()).count();
        Some(KeyReport::new(
            self.key,
            unused.iter().filter(|v| !v.is_null()).map(|v| (*v).clone()),
            nulls,
            unused.len(),
        ))
    }
}

fn right_payload<'a>(left: &Table, right: &'a Table, key: &str) -> Result<Vec<&'a Column>> {
    let shared: Vec<String> = right
        .column_names()
        .into_iter()
        .filter(|n| *n != key && left.has_column(n))
        .map(str::to_string)
        .collect();
    if !shared.is_empty() {
        return Err(AlgebraError::ColumnNameCollision(shared));
    }
    Ok(right.columns().iter().filter(|c| c.name() != key).collect())
}

/// Appends right-hand columns, placing matched rows beside null-filled
/// ones. `picks[i]` is the right row for output row `i`.
fn attach(base: Table, payload: &[&Column], picks: &[Option<usize>]) -> Result<Table> {
    let rows = base.row_count();
    let mut columns = base.columns().to_vec();
    for c in payload {
        let cells: Vec<Value> = picks
            .iter()
            .map(|p| p.map_or(Value::Null, |r| c.cells()[r].clone()))
            .collect();
        let missing = picks.iter().any(Option::is_none);
        columns.push(
            Column::from_parts_unchecked(
                c.name().to_string(),
                c.dtype().with_nullable(true),
                cells,
            )
            .with_nullable(c.dtype().nullable || missing),
        );
    }
    Ok(Table::with_row_count(columns, rows)?.with_attribution_of(&base))
}

/// Left-outer join on a unique right key: every left row survives exactly
/// once. Unmatched left rows and unused right rows are reported.
pub fn supplement(left: &Table, right: &Table, key: &str) -> Result<OpResult> {
    let idx = key_index(left, right, key)?;
    idx.require_unique()?;
    let payload = right_payload(left, right, key)?;
    let picks: Vec<Option<usize>> = (0..left.row_count()).map(|r| idx.right_row(r)).collect();
    let mut used = vec![false; right.row_count()];
    picks.iter().flatten().for_each(|&r| used[r] = true);
    let unmatched: Vec<usize> = (0..left.row_count())
        .filter(|&r| picks[r].is_none())
        .collect();

    let mut diagnostics = Vec::new();
    if !unmatched.is_empty() {
        diagnostics.push(Diagnostic::new(Finding::UnmatchedLeftKeys(
            idx.left_report(&unmatched),
        )));
    }
    if let Some(r) = idx.unused_right(&used) {
        diagnostics.push(Diagnostic::new(Finding::UnusedRightKeys(r)));
    }
    Ok(OpResult {
        tables: vec![("result".into(), attach(left.clone(), &payload, &picks)?)],
        diagnostics,
    })
}

/// Filtering join. Inner keeps matched rows with right columns appended,
/// semi keeps matched left rows, anti keeps unmatched left rows. Left keys
/// left out of the output are always reported.
pub fn match_join(left: &Table, right: &Table, key: &str, mode: MatchMode) -> Result<OpResult> {
    let idx = key_index(left, right, key)?;
    let matched: Vec<bool> = (0..left.row_count())
        .map(|r| idx.right_row(r).is_some())
        .collect();
    let keep_matched = mode != MatchMode::Anti;
    let kept: Vec<usize> = (0..left.row_count())
        .filter(|&r| matched[r] == keep_matched)
        .collect();
    let dropped: Vec<usize> = (0..left.row_count())
        .filter(|&r| matched[r] != keep_matched)
        .collect();

    let mut diagnostics = Vec::new();
    if !dropped.is_empty() {
        diagnostics.push(Diagnostic::new(Finding::LossyJoin(
            idx.left_report(&dropped),
        )));
    }
    let base = left.take_rows(&kept).with_attribution_of(left);
    let out = if mode == MatchMode::Inner {
        idx.require_unique()?;
        let payload = right_payload(left, right, key)?;
        let picks: Vec<Option<usize>> = kept.iter().map(|&r| idx.right_row(r)).collect();
        let mut used = vec![false; right.row_count()];
        picks.iter().flatten().for_each(|&r| used[r] = true);
        if let Some(r) = idx.unused_right(&used) {
            diagnostics.push(Diagnostic::new(Finding::UnusedRightKeys(r)));
        }
        attach(base, &payload, &picks)?
    } else {
        base
    };
    Ok(OpResult {
        tables: vec![("result".into(), out)],
        diagnostics,
    })
}

/// Replaces `columns` with one combined column placed where the first of
/// them stood.
pub fn combine_columns(
    t: &Table,
    columns: &[String],
    combiner: &Combiner,
    new_name: &str,
) -> Result<Table> {
    if columns.len() < 2 {
        return Err(AlgebraError::InvalidArgument(
            "combine needs at least two columns".into(),
        ));
    }
    let inputs = columns
        .iter()
        .map(|c| t.column(c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if BTreeSet::from_iter(columns).len() != columns.len() {
        return Err(AlgebraError::InvalidArgument(
            "combine columns listed twice".into(),
        ));
    }
    if t.has_column(new_name) && !columns.iter().any(|c| c == new_name) {
        return Err(AlgebraError::NameCollision(new_name.to_string()));
    }
    let combined = match combiner {
        Combiner::Separator(sep) => {
            let cells: Vec<Value> = (0..t.row_count())
                .map(|r| {
                    let parts: Option<Vec<String>> = inputs
                        .iter()
                        .map(|c| {
                            let v = &c.cells()[r];
                            (!v.is_null()).then(|| v.to_string())
                        })
                        .collect();
                    parts.map_or(Value::Null, |p| Value::Text(p.join(sep)))
                })
                .collect();
            let nullable = inputs.iter().any(|c| c.dtype().nullable);
            Column::from_parts_unchecked(
                new_name.to_string(),
                DataType::nullable(DataKind::Text),
                cells,
            )
            .with_nullable(nullable)
        }
        Combiner::Expression(e) => {
            let kind = e.infer_kind(t)?.unwrap_or(DataKind::Text);
            let cells = e.evaluate(t)?;
            Column::new(new_name, DataType::nullable(kind), cells)?.with_nullable(false)
        }
    };
    let first = t.position(&columns[0]).expect("checked above");
    let removed_before = columns
        .iter()
        .filter(|c| t.position(c).is_some_and(|p| p < first))
        .count();
    let mut out: Vec<Column> = t
        .columns()
        .iter()
        .filter(|c| !columns.iter().any(|n| n == c.name()))
        .cloned()
        .collect();
    out.insert(first - removed_before, combined);
    Ok(Table::with_row_count(out, t.row_count())?.with_attribution_of(t))
}

/// Groups rows by `group_columns` (nulls group together, first-appearance
/// order) and computes one output column per aggregation.
pub fn summarize(t: &Table, group_columns: &[String], aggs: &[Aggregation]) -> Result<Table> {
    let groups = group_columns
        .iter()
        .map(|g| t.column(g))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut names: BTreeSet<&str> = group_columns.iter().map(String::as_str).collect();
    if names.len() != group_columns.len() {
        return Err(AlgebraError::InvalidArgument(
            "group columns listed twice".into(),
        ));
    }
    for a in aggs {
        if !names.insert(&a.output) {
            return Err(AlgebraError::NameCollision(a.output.clone()));
        }
    }
    let targets = aggs
        .iter()
        .map(|a| match &a.target {
            None if a.func == AggFunc::Count => Ok(None),
            None => Err(AlgebraError::InvalidArgument(format!(
                "{} needs a target column",
                a.func.name()
            ))),
            Some(c) => {
                let col = t.column(c)?;
                if matches!(a.func, AggFunc::Sum | AggFunc::Mean) && !col.kind().is_numeric() {
                    return Err(AlgebraError::NotNumeric(c.clone()));
                }
                Ok(Some(col))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<Vec<&Value>, usize> = HashMap::new();
    for r in 0..t.row_count() {
        let key: Vec<&Value> = groups.iter().map(|c| &c.cells()[r]).collect();
        let g = *index.entry(key).or_insert_with(|| {
            order.push(Vec::new());
            order.len() - 1
        });
        order[g].push(r);
    }

    let mut columns: Vec<Column> = groups
        .iter()
        .map(|c| c.take(&order.iter().map(|rows| rows[0]).collect::<Vec<_>>()))
        .collect();
    for (a, target) in aggs.iter().zip(targets) {
        let cells = order
            .iter()
            .map(|rows| aggregate(a.func, target, rows))
            .collect::<Result<Vec<_>>>()?;
        let kind = match (a.func, target) {
            (AggFunc::Count, _) => DataKind::Integer,
            (AggFunc::Mean, _) => DataKind::Float,
            (_, Some(c)) => c.kind(),
            (_, None) => unreachable!("only count lacks a target"),
        };
        columns.push(
            Column::new(a.output.clone(), DataType::nullable(kind), cells)?.with_nullable(false),
        );
    }
    Ok(Table::with_row_count(columns, order.len())?.with_attribution_of(t))
}

fn aggregate(func: AggFunc, target: Option<&Column>, rows: &[usize]) -> Result<Value> {
    let Some(col) = target else {
        return Ok(Value::Int(rows.len() as i64));
    };
    let vals = rows.iter().map(|&r| &col.cells()[r]);
    let present: Vec<&Value> = vals.clone().filter(|v| !v.is_null()).collect();
    Ok(match func {
        AggFunc::Count => Value::Int(present.len() as i64),
        AggFunc::Sum if col.kind() == DataKind::Integer => {
            let s: i128 = present
                .iter()
                .filter_map(|v| match v {
                    Value::Int(i) => Some(*i as i128),
                    _ => None,
                })
                .sum();
            Value::Int(i64::try_from(s).map_err(|_| {
                AlgebraError::InvalidArgument(format!("sum of `{}` overflows", col.name()))
            })?)
        }
        AggFunc::Sum => Value::Float(compensated_sum(present.iter().filter_map(|v| v.as_f64()))),
        AggFunc::Mean if present.is_empty() => Value::Null,
        AggFunc::Mean if col.kind() == DataKind::Integer => {
            let s: i128 = present
                .iter()
                .filter_map(|v| match v {
                    Value::Int(i) => Some(*i as i128),
                    _ => None,
                })
                .sum();
            Value::Float(s as f64 / present.len() as f64)
        }
        AggFunc::Mean => Value::Float(
            compensated_sum(present.iter().filter_map(|v| v.as_f64())) / present.len() as f64,
        ),
        AggFunc::Min => present.iter().min().map_or(Value::Null, |v| (*v).clone()),
        AggFunc::Max => present.iter().max().map_or(Value::Null, |v| (*v).clone()),
        AggFunc::First => vals.clone().next().cloned().unwrap_or(Value::Null),
    })
}

/// Neumaier summation, so means of long float columns stay accurate.
pub(crate) fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Fills null cells of `target`; rows are never added or removed.
pub fn interpolate(
    t: &Table,
    order_column: Option<&str>,
    target: &str,
    method: &FillMethod,
) -> Result<OpResult> {
    let pos = t
        .position(target)
        .ok_or_else(|| AlgebraError::unknown(target))?;
    let col = &t.columns()[pos];
    let numeric_needed = !matches!(method, FillMethod::ForwardFill);
    if numeric_needed && !col.kind().is_numeric() {
        return Err(AlgebraError::NotNumeric(target.to_string()));
    }
    let mut cells = col.cells().to_vec();
    let mut diagnostics = Vec::new();
    let has_nulls = cells.iter().any(Value::is_null);

    match method {
        FillMethod::GroupMean(groups) => {
            let gcols = groups
                .iter()
                .map(|g| t.column(g))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut members: HashMap<Vec<&Value>, Vec<usize>> = HashMap::new();
            let mut order = Vec::new();
            for r in 0..t.row_count() {
                let key: Vec<&Value> = gcols.iter().map(|c| &c.cells()[r]).collect();
                members
                    .entry(key.clone())
                    .or_insert_with(|| {
                        order.push(key);
                        Vec::new()
                    })
                    .push(r);
            }
            for key in &order {
                let rows = &members[key];
                if rows.iter().all(|&r| !cells[r].is_null()) {
                    continue;
                }
                let present: Vec<f64> = rows.iter().filter_map(|&r| cells[r].as_f64()).collect();
                if present.is_empty() {
                    return Err(AlgebraError::AllNullGroup {
                        group: Some(key.iter().map(|v| (*v).clone()).collect()),
                    });
                }
                let mean = compensated_sum(present.iter().copied()) / present.len() as f64;
                for &r in rows {
                    if cells[r].is_null() {
                        cells[r] = Value::Float(mean);
                    }
                }
            }
        }
        FillMethod::Linear | FillMethod::ForwardFill => {
            let order_name = order_column.ok_or_else(|| {
                AlgebraError::InvalidArgument("linear and forward_fill need an order column".into())
            })?;
            let ocol = t.column(order_name)?;
            if let Some(row) = ocol.cells().iter().position(Value::is_null) {
                return Err(AlgebraError::NullOrderValue {
                    column: order_name.to_string(),
                    row,
                });
            }
            let mut sorted: Vec<usize> = (0..t.row_count()).collect();
            sorted.sort_by(|&a, &b| ocol.cells()[a].cmp(&ocol.cells()[b]));
            if has_nulls {
                if matches!(method, FillMethod::ForwardFill) {
                    let mut last: Option<Value> = None;
                    let mut unfilled = Vec::new();
                    for &r in &sorted {
                        if cells[r].is_null() {
                            match &last {
                                Some(v) => cells[r] = v.clone(),
                                None => unfilled.push(r),
                            }
                        } else {
                            last = Some(cells[r].clone());
                        }
                    }
                    if !unfilled.is_empty() {
                        unfilled.sort_unstable();
                        diagnostics.push(Diagnostic::new(Finding::BoundaryUnfilled(RowsReport {
                            column: target.to_string(),
                            rows: unfilled,
                        })));
                    }
                } else {
                    fill_linear(&mut cells, &sorted, ocol)?;
                }
            }
        }
    }

    let kind = if numeric_needed {
        DataKind::Float
    } else {
        col.kind()
    };
    let filled = Column::new(target, DataType::nullable(kind), cells)?.with_nullable(false);
    let mut columns = t.columns().to_vec();
    columns[pos] = filled;
    Ok(OpResult {
        tables: vec![(
            "result".into(),
            Table::with_row_count(columns, t.row_count())?.with_attribution_of(t),
        )],
        diagnostics,
    })
}

/// Position of a row along the order column: numbers as themselves, dates
/// as day numbers, anything else by rank.
fn coordinates(ocol: &Column, sorted: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; ocol.len()];
    for (rank, &r) in sorted.iter().enumerate() {
        x[r] = match &ocol.cells()[r] {
            Value::Date(d) => f64::from(chrono::Datelike::num_days_from_ce(d)),
            v => v.as_f64().unwrap_or(rank as f64),
        };
    }
    x
}

fn fill_linear(cells: &mut [Value], sorted: &[usize], ocol: &Column) -> Result<()> {
    let x = coordinates(ocol, sorted);
    let known: Vec<(f64, f64)> = sorted
        .iter()
        .filter_map(|&r| cells[r].as_f64().map(|v| (x[r], v)))
        .collect();
    if known.is_empty() {
        return Err(AlgebraError::AllNullGroup { group: None });
    }
    // Neighbours are taken in sorted-row order so ties on the order column
    // behave like a stable sort.
    let positions: Vec<Option<f64>> = sorted.iter().map(|&r| cells[r].as_f64()).collect();
    let mut prev: Vec<Option<usize>> = vec![None; sorted.len()];
    let mut next: Vec<Option<usize>> = vec![None; sorted.len()];
    let mut last = None;
    for i in 0..sorted.len() {
        prev[i] = last;
        if positions[i].is_some() {
            last = Some(i);
        }
    }
    last = None;
    for i in (0..sorted.len()).rev() {
        next[i] = last;
        if positions[i].is_some() {
            last = Some(i);
        }
    }
    for i in 0..sorted.len() {
        if positions[i].is_some() {
            continue;
        }
        let r = sorted[i];
        let value = match (prev[i], next[i]) {
            (Some(p), Some(n)) => {
                let (x0, y0) = (x[sorted[p]], positions[p].unwrap_or_default());
                let (x1, y1) = (x[sorted[n]], positions[n].unwrap_or_default());
                if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (x[r] - x0) / (x1 - x0)
                }
            }
            (Some(p), None) => positions[p].unwrap_or_default(),
            (None, Some(n)) => positions[n].unwrap_or_default(),
            (None, None) => unreachable!("at least one known value"),
        };
        cells[r] = Value::Float(value);
    }
    Ok(())
}
