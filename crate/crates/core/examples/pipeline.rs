//! Parses, checks and runs a `.wr` pipeline. With no argument it runs the
//! built-in water pipeline against the bundled sample tables:
//!
//! ```text
//! cargo run --example pipeline -- tests/fixtures/water_divide_conquer.wr
//! ```

use std::path::Path;

use tabletide::dsl;
use tabletide::samples;
use tabletide::workspace::FileAccess;
use tabletide::Workspace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (source, mut ws) = match std::env::args().nth(1) {
        Some(path) => {
            let dir = Path::new(&path).parent().unwrap_or(Path::new(".")).to_path_buf();
            (std::fs::read_to_string(&path)?, Workspace::new(FileAccess::Relative(dir)))
        }
        None => {
            let mut ws = Workspace::sealed();
            ws.bind("usage", samples::water_usage(), "load \"water_usage.csv\" as usage")?;
            ws.bind("suppliers", samples::water_suppliers(), "load \"suppliers.csv\" as suppliers")?;
            (samples::WATER_SESSION_PIPELINE.to_string(), ws)
        }
    };

    let pipeline = dsl::parse(&source)?;
    let bound: Vec<&str> = ws.handles();
    for issue in dsl::check_with(&pipeline, &bound) {
        println!("check {issue}");
    }
    let report = dsl::execute(&pipeline, &mut ws)?;
    for s in &report.statements {
        println!("{:>3} {}", s.index, s.text);
        for d in &s.diagnostics {
            println!("      {d}");
        }
    }
    println!("\nhandles: {}", ws.handles().join(", "));
    Ok(())
}
