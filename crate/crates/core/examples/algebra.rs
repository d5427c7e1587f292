//! Primitive operations on the water sample: subset, fold, unfold and
//! summarize.

use tabletide::algebra::{self, AggFunc, Aggregation};
use tabletide::dsl::parse_expression;
use tabletide::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let usage = samples::water_usage();

    let (y2015, rest) = algebra::subset(&usage, &parse_expression("year(date) == 2015")?)?;
    println!("subset: {} rows for 2015, {} others\n", y2015.row_count(), rest.row_count());

    let columns = vec!["amount".to_string(), "amount_2013".to_string()];
    let long = algebra::reshape_fold(&y2015, &columns, "measure", "gallons")?;
    println!("fold into key/value rows ({} rows), first five:", long.row_count());
    print!("{}", long.take_rows(&[0, 1, 2, 3, 4]));

    let wide = algebra::reshape_unfold(&long, "measure", "gallons")?;
    println!("\nunfold restores {} columns\n", wide.column_count());

    let totals = algebra::summarize(
        &usage,
        &["supplier".to_string()],
        &[
            Aggregation::new(AggFunc::Sum, Some("amount"), "total"),
            Aggregation::new(AggFunc::Mean, Some("amount"), "mean"),
            Aggregation::count("months"),
        ],
    )?;
    println!("summarize by supplier:\n{totals}");
    Ok(())
}
