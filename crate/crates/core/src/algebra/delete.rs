use super::{mask_indices, selection, Result};
use crate::table::{RowSelector, Table};

pub fn delete_column(t: &Table, name: &str) -> Result<Table> {
    t.column(name)?;
    let columns = t
        .columns()
        .iter()
        .filter(|c| c.name() != name)
        .cloned()
        .collect();
    Ok(Table::with_row_count(columns, t.row_count())?.with_attribution_of(t))
}

/// Removes the selected rows; the rest keep their order.
pub fn delete_row(t: &Table, sel: &RowSelector) -> Result<Table> {
    let mask = selection(t, sel)?;
    Ok(t.take_rows(&mask_indices(&mask, false)))
}
