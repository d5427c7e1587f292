#![allow(dead_code)]

pub mod dot;
pub mod graphs;
pub mod laws;
pub mod pipelines;

use proptest::prelude::*;
use tabletide::algebra::catalog::{Arity, ObjectKind, OpKind};
use tabletide::provenance::ProvenanceGraph;
use tabletide::table::{Field, Table};
use tabletide::value::{DataKind, DataType, Value};
use tabletide::{Operation, Workspace};

pub const MAX_COLS: usize = 8;
pub const MAX_ROWS: usize = 64;

pub const KINDS: [DataKind; 5] = [
    DataKind::Boolean,
    DataKind::Integer,
    DataKind::Float,
    DataKind::Text,
    DataKind::Date,
];

pub fn any_kind() -> impl Strategy<Value = DataKind> {
    proptest::sample::select(KINDS.to_vec())
}

pub fn non_numeric_kind() -> impl Strategy<Value = DataKind> {
    proptest::sample::select(vec![DataKind::Boolean, DataKind::Text, DataKind::Date])
}

/// Small value domains so that groups, duplicates and join matches occur.
pub fn present(kind: DataKind) -> BoxedStrategy<Value> {
    match kind {
        DataKind::Boolean => any::<bool>().prop_map(Value::Bool).boxed(),
        DataKind::Integer => (-20i64..20).prop_map(Value::Int).boxed(),
        DataKind::Float => prop_oneof![
            8 => (-40i64..40).prop_map(|k| Value::Float(k as f64 * 0.25)),
            1 => Just(Value::Float(f64::NAN)),
        ]
        .boxed(),
        DataKind::Text => "[a-c]{0,2}".prop_map(Value::Text).boxed(),
        DataKind::Date => (0u32..40)
            .prop_map(|d| Value::date(2020, 1 + d / 28, 1 + d % 28))
            .boxed(),
    }
}

pub fn cell(kind: DataKind) -> BoxedStrategy<Value> {
    prop_oneof![4 => present(kind), 1 => Just(Value::Null)].boxed()
}

pub fn table_of(
    kinds: Vec<DataKind>,
    rows: std::ops::RangeInclusive<usize>,
) -> BoxedStrategy<Table> {
    let row: Vec<BoxedStrategy<Value>> = kinds.iter().map(|k| cell(*k)).collect();
    proptest::collection::vec(row, rows)
        .prop_map(move |rows| {
            let schema: Vec<Field> = kinds
                .iter()
                .enumerate()
                .map(|(i, k)| Field::new(format!("c{i}"), DataType::nullable(*k)))
                .collect();
            Table::from_rows(&schema, rows).expect("cells match their kinds")
        })
        .boxed()
}

/// Up to eight mixed-type nullable columns named `c0..`, at most 64 rows.
pub fn any_table() -> BoxedStrategy<Table> {
    proptest::collection::vec(any_kind(), 1..=MAX_COLS)
        .prop_flat_map(|kinds| table_of(kinds, 0..=MAX_ROWS))
        .boxed()
}

/// Like [`any_table`] but never empty and with `c0` of the given kinds.
pub fn table_with_first(first: impl Strategy<Value = DataKind> + 'static) -> BoxedStrategy<Table> {
    (first, proptest::collection::vec(any_kind(), 0..MAX_COLS))
        .prop_flat_map(|(k, mut rest)| {
            rest.insert(0, k);
            table_of(rest, 1..=MAX_ROWS)
        })
        .boxed()
}

/// Prepends a unique, non-null integer column.
pub fn with_id(t: &Table, name: &str) -> Table {
    let mut schema = vec![Field::new(name, DataType::required(DataKind::Integer))];
    schema.extend(t.schema());
    let rows = t
        .rows()
        .enumerate()
        .map(|(i, mut r)| {
            r.insert(0, Value::Int(i as i64));
            r
        })
        .collect();
    Table::from_rows(&schema, rows).expect("id column is well typed")
}

/// A workspace that remembers every step so the run can be replayed.
pub struct Recorder {
    pub ws: Workspace,
    binds: Vec<(String, Table)>,
    steps: Vec<(Operation, Vec<String>, Vec<String>)>,
}

impl Recorder {
    pub fn new() -> Self {
        Recorder {
            ws: Workspace::sealed(),
            binds: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn bind(&mut self, handle: &str, t: &Table) {
        self.ws
            .bind(
                handle,
                t.clone(),
                &format!("load \"{handle}.csv\" as {handle}"),
            )
            .unwrap();
        self.binds.push((handle.to_string(), t.clone()));
    }

    pub fn apply(
        &mut self,
        op: Operation,
        inputs: &[&str],
        targets: &[&str],
    ) -> tabletide::workspace::Applied {
        let inputs: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
        let targets: Vec<String> = targets.iter().map(|s| s.to_string()).collect();
        let applied = self
            .ws
            .apply(&op, &inputs, &targets)
            .unwrap_or_else(|e| panic!("{op:?} on {inputs:?}: {e}"));
        self.steps.push((op, inputs, targets));
        applied
    }

    pub fn table(&self, handle: &str) -> &Table {
        self.ws
            .table(handle)
            .unwrap_or_else(|| panic!("`{handle}` is not bound"))
    }

    pub fn replay(&self) -> Workspace {
        let mut ws = Workspace::sealed();
        for (h, t) in &self.binds {
            ws.bind(h, t.clone(), &format!("load \"{h}.csv\" as {h}"))
                .unwrap();
        }
        for (op, inputs, targets) in &self.steps {
            ws.apply(op, inputs, targets).unwrap();
        }
        ws
    }

    /// Graph checks that hold after any sequence of steps.
    pub fn check_graph(&self) {
        check_graph(&self.ws);
        let again = self.replay();
        assert_eq!(
            self.ws.graph().to_dot(),
            again.graph().to_dot(),
            "replay changes the DOT output"
        );
        assert_eq!(self.ws.graph().to_json(), again.graph().to_json());
    }
}

/// Node arity expected for one edge. Table-level operations move whole
/// tables, so the class's bins count nodes; many inputs means at least two
/// and many outputs at least one, except that an empty table decomposes into
/// no parts. Column- and row-level operations rewrite one table.
fn arity_holds(g: &ProvenanceGraph, e: &tabletide::provenance::ProvEdge) -> bool {
    let (class, object) = e.op.cell();
    let (ins, outs) = (e.inputs.len(), e.outputs.len());
    if object != ObjectKind::Table {
        return ins == 1 && outs == 1;
    }
    let (bin_in, bin_out) = class.bins();
    let in_ok = match bin_in {
        Arity::Zero => ins == 0,
        Arity::One => ins == 1,
        Arity::Many => ins >= 2,
    };
    let out_ok = match bin_out {
        Arity::Zero => outs == 0,
        Arity::One => outs == 1,
        Arity::Many => outs >= 1 || (e.op == OpKind::Decompose && g.nodes()[e.inputs[0]].rows == 0),
    };
    in_ok && out_ok
}

/// Acyclicity by Kahn's algorithm, per-edge arity bins, the live-node count,
/// and DOT determinism.
pub fn check_graph(ws: &Workspace) {
    let g: &ProvenanceGraph = ws.graph();
    let n = g.nodes().len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in g.edges() {
        for &o in &e.outputs {
            for &i in &e.inputs {
                succ[i].push(o);
            }
            indegree[o] += e.inputs.len();
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(w);
            }
        }
    }
    assert_eq!(seen, n, "provenance graph has a cycle");

    for e in g.edges() {
        assert!(
            arity_holds(g, e),
            "edge {} ({:?}) is {}->{}",
            e.id,
            e.op,
            e.inputs.len(),
            e.outputs.len()
        );
    }

    let produced: usize = g.edges().iter().map(|e| e.outputs.len()).sum();
    let tombstones = g.nodes().iter().filter(|n| n.tombstone).count();
    assert_eq!(produced - tombstones, ws.len(), "live node count");

    assert_eq!(g.to_dot(), g.to_dot());
}
