//! Prints the provenance graph of the water sample session as Graphviz DOT,
//! e.g. `cargo run --example provenance | dot -Tsvg > graph.svg`. Pass
//! `--json` for the JSON document instead.

use tabletide::provenance::Role;
use tabletide::samples;

fn main() {
    let ws = samples::water_session();
    let g = ws.graph();
    if std::env::args().any(|a| a == "--json") {
        println!("{}", g.to_json());
        return;
    }
    print!("{}", g.to_dot());
    let sinks: Vec<String> = (0..g.nodes().len())
        .filter(|&n| g.role(n) == Role::Sink)
        .map(|n| g.nodes()[n].label())
        .collect();
    eprintln!("{} tables, {} edges, sinks: {}", g.nodes().len(), g.edges().len(), sinks.join(", "));
}
