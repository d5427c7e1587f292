//! Audits on the refugee samples: a lossy join, a supplement that keeps
//! every state, and total versus grouped equality tests.

use tabletide::algebra::{self, MatchMode};
use tabletide::audit;
use tabletide::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let population = samples::state_population();
    let arrivals = samples::refugee_arrivals_by_state();

    let joined = algebra::match_join(&population, &arrivals, "state", MatchMode::Inner)?;
    println!("match: {} of {} states", joined.table().row_count(), population.row_count());
    for d in &joined.diagnostics {
        println!("  {d}");
    }

    let kept = algebra::supplement(&population, &arrivals, "state")?;
    println!("supplement: {} states", kept.table().row_count());
    for d in &kept.diagnostics {
        println!("  {d}");
    }

    let religion = samples::arrivals_by_religion();
    let destination = samples::arrivals_by_destination();
    match audit::test_equality_total(&religion, &destination, "arrivals", None)? {
        Some(d) => println!("total test: {d}"),
        None => println!("total test: equal"),
    }
    match audit::test_equality_grouped(&destination, &religion, "country", "arrivals", None)? {
        Some(d) => println!("grouped test: {d}"),
        None => println!("grouped test: equal"),
    }

    let (a, b) = samples::equal_totals_unequal_groups();
    let total = audit::test_equality_total(&a, &b, "arrivals", None)?;
    let grouped = audit::test_equality_grouped(&a, &b, "country", "arrivals", None)?;
    println!(
        "equal totals: total test {}, grouped test {}",
        if total.is_none() { "passes" } else { "fails" },
        if grouped.is_none() { "passes" } else { "fails" }
    );
    Ok(())
}
