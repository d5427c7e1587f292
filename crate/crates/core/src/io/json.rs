//! Lossless table interchange.
//!
//! ```json
//! {"format": "tabletide.table", "version": 1, "attribution": null,
//!  "schema": [{"name": "a", "type": "int", "nullable": false}],
//!  "row_count": 1, "rows": [[1]]}
//! ```
//!
//! Dates are `YYYY-MM-DD` strings and non-finite floats are the strings
//! `NaN`, `inf` and `-inf`; the schema decides how each cell is read back.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use super::{IoError, Result};
use crate::table::{Column, Field, Table};
use crate::value::{format_float, parse_iso_date, DataKind, Value};

pub const TABLE_FORMAT: &str = "tabletide.table";

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    #[serde(default)]
    attribution: Option<String>,
    schema: Vec<Field>,
    row_count: usize,
    rows: Vec<Vec<Json>>,
}

/// A cell as plain JSON; the column type tells dates and text apart.
pub fn cell_to_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Bool(b) => json!(b),
        Value::Int(i) => json!(i),
        Value::Float(f) if f.is_finite() => json!(f),
        Value::Float(f) => json!(format_float(*f)),
        Value::Text(s) => json!(s),
        Value::Date(d) => json!(d.format("%Y-%m-%d").to_string()),
    }
}

fn cell_from_json(j: &Json, kind: DataKind) -> Option<Value> {
    Some(match (j, kind) {
        (Json::Null, _) => Value::Null,
        (Json::Bool(b), DataKind::Boolean) => Value::Bool(*b),
        (Json::Number(n), DataKind::Integer) => Value::Int(n.as_i64()?),
        (Json::Number(n), DataKind::Float) => Value::Float(n.as_f64()?),
        (Json::String(s), DataKind::Float) => match s.as_str() {
            "NaN" => Value::Float(f64::NAN),
            "inf" => Value::Float(f64::INFINITY),
            "-inf" => Value::Float(f64::NEG_INFINITY),
            _ => return None,
        },
        (Json::String(s), DataKind::Text) => Value::text(s.as_str()),
        (Json::String(s), DataKind::Date) => Value::Date(parse_iso_date(s)?),
        _ => return None,
    })
}

pub fn write_table_json(t: &Table) -> String {
    let doc = Document {
        format: TABLE_FORMAT.to_string(),
        version: 1,
        attribution: t.attribution().map(str::to_string),
        schema: t.schema(),
        row_count: t.row_count(),
        rows: t
            .rows()
            .map(|r| r.iter().map(cell_to_json).collect())
            .collect(),
    };
    serde_json::to_string(&doc).expect("table documents always serialize")
}

pub fn parse_table_json(text: &str) -> Result<Table> {
    let doc: Document = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    if doc.format != TABLE_FORMAT {
        return Err(IoError::Parse(format!(
            "unexpected format `{}`",
            doc.format
        )));
    }
    if doc.rows.len() != doc.row_count {
        return Err(IoError::Parse(format!(
            "row_count is {} but {} rows are present",
            doc.row_count,
            doc.rows.len()
        )));
    }
    let mut cols: Vec<Vec<Value>> = vec![Vec::with_capacity(doc.row_count); doc.schema.len()];
    for (r, row) in doc.rows.iter().enumerate() {
        if row.len() != doc.schema.len() {
            return Err(IoError::Parse(format!("row {r} has {} cells", row.len())));
        }
        for ((cell, field), col) in row.iter().zip(&doc.schema).zip(cols.iter_mut()) {
            col.push(cell_from_json(cell, field.kind).ok_or_else(|| {
                IoError::Parse(format!(
                    "row {r}: {cell} is not a valid {} for `{}`",
                    field.kind, field.name
                ))
            })?);
        }
    }
    let columns = doc
        .schema
        .iter()
        .zip(cols)
        .map(|(f, cells)| Column::new(f.name.clone(), f.dtype(), cells))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let t = Table::with_row_count(columns, doc.row_count)?;
    Ok(match doc.attribution {
        Some(a) => t.with_attribution(a),
        None => t,
    })
}

pub fn save_table_json(t: &Table, path: &Path) -> Result<()> {
    fs::write(path, write_table_json(t)).map_err(|e| IoError::io(path, e))
}

pub fn load_table_json(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_table_json(&text)
}
