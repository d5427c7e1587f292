//! Provenance checks over random multi-step pipelines and the 25-node
//! water fixture.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use tabletide::algebra::{AggFunc, Aggregation, BinSpec, Generator, MatchMode, SchemaPolicy, SortKey};
use tabletide::expr::Expr;
use tabletide::provenance::{ProvenanceGraph, Role};
use tabletide::samples;
use tabletide::table::Table;
use tabletide::value::{DataKind, DataType, Value};
use tabletide::Operation;

use super::{any_kind, check_graph, dot, table_with_first, Recorder};

const MAX_LIVE: usize = 24;

#[derive(Debug, Clone, Copy)]
pub enum Step {
    Subset,
    ExtendLastPair,
    Sort,
    AddColumn,
    Delete,
    Semi,
    Decompose,
    Summarize,
}

fn step() -> impl Strategy<Value = (Step, prop::sample::Index, prop::sample::Index)> {
    let kinds = vec![
        Step::Subset,
        Step::ExtendLastPair,
        Step::Sort,
        Step::AddColumn,
        Step::Delete,
        Step::Semi,
        Step::Decompose,
        Step::Summarize,
    ];
    (prop::sample::select(kinds), any::<prop::sample::Index>(), any::<prop::sample::Index>())
}

/// Applies `steps` to a workspace holding `t`, checking the graph after
/// every step and once more against a replay at the end.
pub fn run_steps(t: &Table, steps: &[(Step, prop::sample::Index, prop::sample::Index)]) -> Recorder {
    let mut r = Recorder::new();
    r.bind("h0", t);
    let mut live = vec!["h0".to_string()];
    let mut pair: Option<(String, String)> = None;
    let numeric = t.column("c0").unwrap().kind().is_numeric();
    for (i, (step, a, b)) in steps.iter().enumerate() {
        if live.is_empty() || live.len() > MAX_LIVE {
            break;
        }
        let h = a.get(&live).clone();
        let fresh = format!("h{}", i + 1);
        match step {
            Step::Subset => {
                let (x, y) = (format!("{fresh}a"), format!("{fresh}b"));
                let predicate = Expr::col("c0").is_null();
                r.apply(Operation::Subset { predicate }, &[&h], &[&x, &y]);
                live.extend([x.clone(), y.clone()]);
                pair = Some((x, y));
            }
            Step::ExtendLastPair => {
                let Some((x, y)) = pair.take() else { continue };
                if !(live.contains(&x) && live.contains(&y)) {
                    continue;
                }
                r.apply(Operation::Extend { policy: SchemaPolicy::Strict }, &[&x, &y], &[&fresh]);
                live.push(fresh);
            }
            Step::Sort => {
                let sort = vec![SortKey { column: "c0".into(), descending: true }];
                r.apply(Operation::Rearrange { sort, order: None }, &[&h], &[&fresh]);
                live.push(fresh);
            }
            Step::AddColumn => {
                let op = Operation::CreateColumn {
                    name: format!("k{i}"),
                    dtype: DataType::nullable(DataKind::Integer),
                    generator: Generator::Constant(Value::Int(i as i64)),
                };
                r.apply(op, &[&h], &[&fresh]);
                live.push(fresh);
            }
            Step::Delete => {
                if live.len() < 2 {
                    continue;
                }
                r.apply(Operation::DeleteTable, &[&h], &[]);
                live.retain(|l| *l != h);
            }
            Step::Semi => {
                let other = b.get(&live).clone();
                let op = Operation::Match { key: "c0".into(), mode: MatchMode::Semi };
                r.apply(op, &[&h, &other], &[&fresh]);
                live.push(fresh);
            }
            Step::Decompose => {
                let bins = numeric.then_some(BinSpec::Distinct);
                let parts = r
                    .apply(Operation::Decompose { column: "c0".into(), bins }, &[&h], &[&fresh])
                    .handles;
                live.extend(parts);
            }
            Step::Summarize => {
                let aggs = vec![Aggregation::new(AggFunc::Count, None, "n")];
                r.apply(Operation::Summarize { by: vec!["c0".into()], aggs }, &[&h], &[&fresh]);
                live.push(fresh);
            }
        }
        check_graph(&r.ws);
    }
    r.check_graph();
    r
}

/// DOT for `g` read back by the independent parser: one declared node per
/// table version plus one point per delete, and one DOT edge per
/// input/output pair.
pub fn check_dot(g: &ProvenanceGraph) -> Result<dot::Dot, String> {
    let text = g.to_dot();
    let d = dot::parse(&text).map_err(|e| format!("{e}\n{text}"))?;
    if !d.directed {
        return Err("provenance DOT is not a digraph".into());
    }
    let deletes = g.edges().iter().filter(|e| e.outputs.is_empty()).count();
    if d.nodes.len() != g.nodes().len() + deletes {
        return Err(format!("{} DOT nodes for {} versions and {deletes} deletes", d.nodes.len(), g.nodes().len()));
    }
    let expected: usize = g.edges().iter().map(|e| e.inputs.len() * e.outputs.len().max(1)).sum();
    if d.edges.len() != expected {
        return Err(format!("{} DOT edges, expected {expected}", d.edges.len()));
    }
    for e in g.edges() {
        for i in &e.inputs {
            let from = format!("n{i}");
            let found = d.edges.iter().filter(|(a, _, attrs)| *a == from && attrs.get("label").map(String::as_str) == Some(e.op.name()));
            if found.count() < e.outputs.len().max(1) {
                return Err(format!("edge {} from {from} is missing", e.id));
            }
        }
    }
    for (rank, role) in [("source", Role::Source), ("sink", Role::Sink)] {
        let mut want: Vec<String> = (0..g.nodes().len()).filter(|&n| g.role(n) == role).map(|n| format!("n{n}")).collect();
        let mut got: Vec<String> = d.rank(rank).iter().map(|s| s.to_string()).collect();
        want.sort();
        got.sort();
        if want != got {
            return Err(format!("rank {rank}: {got:?}, expected {want:?}"));
        }
    }
    Ok(d)
}

pub fn random_pipelines(cases: u32) -> Result<(), String> {
    let strategy = (table_with_first(any_kind()), proptest::collection::vec(step(), 1..12));
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, |(t, steps)| {
            let r = run_steps(&t, &steps);
            check_dot(r.ws.graph()).map_err(TestCaseError::fail)?;
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The water fixture graph: 25 table versions, exactly two sinks, DOT that
/// parses and does not change between runs.
pub fn water_session() -> Result<String, String> {
    let ws = samples::water_session();
    let g = ws.graph();
    if g.nodes().len() != 25 {
        return Err(format!("{} nodes, expected 25", g.nodes().len()));
    }
    check_graph(&ws);
    let d = check_dot(g)?;
    let sinks = d.rank("sink");
    if sinks.len() != 2 {
        return Err(format!("sinks {sinks:?}"));
    }
    for s in &sinks {
        if d.edges.iter().any(|(a, _, _)| a == s) {
            return Err(format!("sink {s} has an outgoing edge"));
        }
    }
    if samples::water_session().graph().to_dot() != g.to_dot() {
        return Err("DOT differs between two runs".into());
    }
    let back = ProvenanceGraph::from_json(&g.to_json()).map_err(|e| e.to_string())?;
    if back.to_dot() != g.to_dot() {
        return Err("DOT changes after a JSON round trip".into());
    }
    Ok(format!(
        "{} table versions, {} DOT edges, sinks {}",
        g.nodes().len(),
        d.edges.len(),
        sinks.join(", ")
    ))
}
