//! Writes the bundled sample tables as CSV files, e.g.
//! `cargo run --example fixtures -- /tmp/data`.

use std::path::PathBuf;

use tabletide::io::{save_csv, CsvOptions};
use tabletide::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let (equal_a, equal_b) = samples::equal_totals_unequal_groups();
    let tables = [
        ("water_usage", samples::water_usage()),
        ("water_suppliers", samples::water_suppliers()),
        ("state_population", samples::state_population()),
        ("refugee_arrivals", samples::refugee_arrivals_by_state()),
        ("arrivals_by_religion", samples::arrivals_by_religion()),
        (
            "arrivals_by_destination",
            samples::arrivals_by_destination(),
        ),
        ("equal_totals_a", equal_a),
        ("equal_totals_b", equal_b),
    ];
    for (name, table) in &tables {
        let path = dir.join(format!("{name}.csv"));
        save_csv(table, &path, &CsvOptions::default())?;
        println!("{} ({} rows)", path.display(), table.row_count());
    }
    Ok(())
}
