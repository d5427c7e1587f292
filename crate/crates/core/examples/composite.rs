//! Composite operations: group_aggregate and the divide-and-conquer tidy
//! recipe, each built from primitive steps.

use tabletide::algebra::{AggFunc, Aggregation};
use tabletide::composite;
use tabletide::dsl::parse_expression;
use tabletide::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suppliers = samples::water_suppliers();
    let by_region = composite::group_aggregate(
        &suppliers,
        "region",
        &[Aggregation::new(AggFunc::Sum, Some("population"), "people")],
    )?;
    println!("group_aggregate by region:\n{by_region}");

    let usage = samples::water_usage();
    let facet = parse_expression("year(date) == 2015")?;
    let edits = vec![("date".to_string(), parse_expression("with_year(date, 2013)")?)];
    let tidy = composite::divide_and_conquer_tidy(&usage, &facet, &edits, "supplier", "amount", "amount_2013")?;
    let t = tidy.table();
    println!(
        "divide and conquer: {} rows x {} columns {:?}",
        t.row_count(),
        t.column_count(),
        t.column_names()
    );
    for d in &tidy.diagnostics {
        println!("  {d}");
    }
    Ok(())
}
