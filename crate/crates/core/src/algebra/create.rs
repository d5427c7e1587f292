use super::{AlgebraError, Generator, Result};
use crate::table::{coerce_cell, Column, Field, Table};
use crate::value::{DataType, Value};

/// Builds a table from a schema and row tuples, preserving row order.
pub fn create_table(schema: &[Field], rows: Vec<Vec<Value>>) -> Result<Table> {
    Ok(Table::from_rows(schema, rows)?)
}

/// Appends a column filled by a constant or by a per-row expression.
pub fn create_column(
    t: &Table,
    name: &str,
    dtype: DataType,
    generator: &Generator,
) -> Result<Table> {
    if t.has_column(name) {
        return Err(AlgebraError::NameCollision(name.to_string()));
    }
    let cells = match generator {
        Generator::Constant(v) => vec![v.clone(); t.row_count()],
        Generator::Expression(e) => e.evaluate(t)?,
    };
    // A constant is checked even when there are no rows to hold it.
    if let Generator::Constant(v) = generator {
        coerce_cell(name, dtype, v.clone(), 0)?;
    }
    let mut columns = t.columns().to_vec();
    columns.push(Column::new(name, dtype, cells)?);
    Ok(Table::with_row_count(columns, t.row_count())?.with_attribution_of(t))
}

/// Appends one row at the end.
pub fn create_row(t: &Table, row: Vec<Value>) -> Result<Table> {
    let schema = t.schema();
    let mut rows: Vec<Vec<Value>> = t.rows().collect();
    if row.len() != schema.len() {
        return Err(crate::table::ModelError::ArityMismatch {
            expected: schema.len(),
            found: row.len(),
        }
        .into());
    }
    rows.push(row);
    if schema.is_empty() {
        return Ok(Table::with_row_count(vec![], t.row_count() + 1)?.with_attribution_of(t));
    }
    Ok(Table::from_rows(&schema, rows)?.with_attribution_of(t))
}
