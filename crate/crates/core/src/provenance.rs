//! Append-only DAG of table versions (nodes) and operations (edges).
//!
//! Nodes keep a schema snapshot and row count, never table contents.
//! Outputs are always fresh nodes, so the graph is acyclic by construction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::catalog::{ObjectKind, OpClass, OpKind};
use crate::diagnostic::Diagnostic;
use crate::table::{Field, Table};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProvError {
    #[error("unknown provenance node {0}")]
    UnknownNode(usize),
    #[error("node {0} is tombstoned and cannot be used as an input")]
    TombstonedInput(usize),
    #[error("{op} cannot take {inputs} input and {outputs} output tables")]
    ArityMismatch {
        op: OpKind,
        inputs: usize,
        outputs: usize,
    },
    #[error("malformed provenance document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ProvError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Interior,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ancestors,
    Descendants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvNode {
    pub id: usize,
    pub handle: String,
    pub version: u32,
    pub schema: Vec<Field>,
    pub rows: usize,
    pub tombstone: bool,
    /// Written out by an export statement.
    #[serde(default)]
    pub exported: bool,
}

impl ProvNode {
    pub fn label(&self) -> String {
        format!(
            "{} v{} ({}×{})",
            self.handle,
            self.version,
            self.rows,
            self.schema.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvEdge {
    pub id: usize,
    pub op: OpKind,
    /// The statement that produced the edge, with large literals hashed.
    pub params: String,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub group: Option<usize>,
    /// Indices into the graph's diagnostic list.
    pub diagnostics: Vec<usize>,
}

/// Steps expanded from one composite statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeGroup {
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProvenanceGraph {
    nodes: Vec<ProvNode>,
    edges: Vec<ProvEdge>,
    groups: Vec<CompositeGroup>,
    diagnostics: Vec<Diagnostic>,
    producer: Vec<Option<usize>>,
    consumers: Vec<Vec<usize>>,
}

impl ProvenanceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[ProvNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[ProvEdge] {
        &self.edges
    }

    pub fn groups(&self) -> &[CompositeGroup] {
        &self.groups
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn node(&self, id: usize) -> Result<&ProvNode> {
        self.nodes.get(id).ok_or(ProvError::UnknownNode(id))
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = &ProvNode> {
        self.nodes.iter().filter(|n| !n.tombstone)
    }

    fn next_version(&self, handle: &str) -> u32 {
        self.nodes.iter().filter(|n| n.handle == handle).count() as u32 + 1
    }

    pub fn begin_group(&mut self, name: &str) -> usize {
        let id = self.groups.len();
        self.groups.push(CompositeGroup {
            id,
            name: name.to_string(),
        });
        id
    }

    /// Appends one edge and its fresh output nodes; returns the node ids.
    pub fn record(
        &mut self,
        op: OpKind,
        params: impl Into<String>,
        inputs: &[usize],
        outputs: &[(&str, &Table)],
        group: Option<usize>,
    ) -> Result<Vec<usize>> {
        if !op.accepts_table_arity(inputs.len(), outputs.len()) {
            return Err(ProvError::ArityMismatch {
                op,
                inputs: inputs.len(),
                outputs: outputs.len(),
            });
        }
        for &i in inputs {
            if self.node(i)?.tombstone {
                return Err(ProvError::TombstonedInput(i));
            }
        }
        let edge = self.edges.len();
        let mut ids = Vec::with_capacity(outputs.len());
        for (handle, t) in outputs {
            let id = self.nodes.len();
            self.nodes.push(ProvNode {
                id,
                handle: handle.to_string(),
                version: self.next_version(handle),
                schema: t.schema(),
                rows: t.row_count(),
                tombstone: false,
                exported: false,
            });
            self.producer.push(Some(edge));
            self.consumers.push(Vec::new());
            ids.push(id);
        }
        for &i in inputs {
            self.consumers[i].push(edge);
        }
        self.edges.push(ProvEdge {
            id: edge,
            op,
            params: params.into(),
            inputs: inputs.to_vec(),
            outputs: ids.clone(),
            group,
            diagnostics: Vec::new(),
        });
        Ok(ids)
    }

    /// Stores diagnostics against an edge, stamping their source; returns
    /// the stamped copies.
    pub fn attach(&mut self, edge: usize, diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
        let mut out = Vec::with_capacity(diags.len());
        for mut d in diags {
            d.source = Some(edge);
            self.edges[edge].diagnostics.push(self.diagnostics.len());
            self.diagnostics.push(d.clone());
            out.push(d);
        }
        out
    }

    pub fn tombstone(&mut self, node: usize) -> Result<()> {
        self.nodes
            .get_mut(node)
            .ok_or(ProvError::UnknownNode(node))?
            .tombstone = true;
        Ok(())
    }

    pub fn mark_exported(&mut self, node: usize) -> Result<()> {
        self.nodes
            .get_mut(node)
            .ok_or(ProvError::UnknownNode(node))?
            .exported = true;
        Ok(())
    }

    pub fn producer(&self, node: usize) -> Option<&ProvEdge> {
        self.producer
            .get(node)
            .copied()
            .flatten()
            .map(|e| &self.edges[e])
    }

    pub fn consumers(&self, node: usize) -> &[usize] {
        self.consumers.get(node).map_or(&[], Vec::as_slice)
    }

    pub fn role(&self, node: usize) -> Role {
        let n = &self.nodes[node];
        if self.producer(node).is_none_or(|e| e.inputs.is_empty()) {
            Role::Source
        } else if n.exported || (self.consumers(node).is_empty() && !n.tombstone) {
            Role::Sink
        } else {
            Role::Interior
        }
    }

    /// Transitive closure of `node` along edges in one direction.
    pub fn lineage(&self, node: usize, direction: Direction) -> Result<BTreeSet<usize>> {
        self.node(node)?;
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([node]);
        while let Some(n) = queue.pop_front() {
            let next: Vec<usize> = match direction {
                Direction::Ancestors => self
                    .producer(n)
                    .map(|e| e.inputs.clone())
                    .unwrap_or_default(),
                Direction::Descendants => self
                    .consumers(n)
                    .iter()
                    .flat_map(|&e| self.edges[e].outputs.clone())
                    .collect(),
            };
            for m in next {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        Ok(seen)
    }

    /// Node ids in dependency order, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = (0..self.nodes.len())
            .map(|n| self.producer(n).map_or(0, |e| e.inputs.len()))
            .collect();
        let mut ready: VecDeque<usize> = (0..self.nodes.len())
            .filter(|&n| indegree[n] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_front() {
            order.push(n);
            for &e in self.consumers(n) {
                for &m in &self.edges[e].outputs {
                    indegree[m] -= 1;
                    if indegree[m] == 0 {
                        ready.push_back(m);
                    }
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Graphviz rendering. Output depends only on the graph, so equal
    /// graphs give identical text.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph provenance {\n  rankdir=LR;\n");
        if self.nodes.is_empty() {
            out.push_str("}\n");
            return out;
        }
        out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
        let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for n in &self.nodes {
            match self.producer(n.id).and_then(|e| e.group) {
                Some(g) => grouped.entry(g).or_default().push(n.id),
                None => writeln!(out, "  {}", dot_node(n)).unwrap(),
            }
        }
        for (g, members) in &grouped {
            writeln!(out, "  subgraph cluster_{g} {{").unwrap();
            writeln!(out, "    label={};", quote(&self.groups[*g].name)).unwrap();
            out.push_str("    style=rounded;\n");
            for &m in members {
                writeln!(out, "    {}", dot_node(&self.nodes[m])).unwrap();
            }
            out.push_str("  }\n");
        }
        for e in self.edges.iter().filter(|e| e.outputs.is_empty()) {
            writeln!(out, "  e{} [shape=point, label=\"\"];", e.id).unwrap();
        }
        for (rank, role) in [("source", Role::Source), ("sink", Role::Sink)] {
            let ids: Vec<String> = (0..self.nodes.len())
                .filter(|&n| self.role(n) == role)
                .map(|n| format!("n{n};"))
                .collect();
            if !ids.is_empty() {
                writeln!(out, "  {{ rank={rank}; {} }}", ids.join(" ")).unwrap();
            }
        }
        for e in &self.edges {
            let targets: Vec<String> = if e.outputs.is_empty() {
                vec![format!("e{}", e.id)]
            } else {
                e.outputs.iter().map(|o| format!("n{o}")).collect()
            };
            for i in &e.inputs {
                for t in &targets {
                    writeln!(out, "  n{i} -> {t} [label={}];", quote(e.op.name())).unwrap();
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_document(&self) -> ProvDocument {
        ProvDocument {
            format: DOC_FORMAT.to_string(),
            version: 1,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    node: n.clone(),
                    role: self.role(n.id),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    class: e.op.class(),
                    object: e.op.object(),
                    edge: e.clone(),
                })
                .collect(),
            groups: self.groups.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("provenance always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProvDocument =
            serde_json::from_str(text).map_err(|e| ProvError::Format(e.to_string()))?;
        Self::from_document(doc)
    }

    /// Rebuilds a graph, validating ids, references and edge arities.
    pub fn from_document(doc: ProvDocument) -> Result<Self> {
        let bad = |m: String| ProvError::Format(m);
        if doc.format != DOC_FORMAT {
            return Err(bad(format!("unexpected format `{}`", doc.format)));
        }
        let n = doc.nodes.len();
        let mut g = ProvenanceGraph {
            nodes: Vec::with_capacity(n),
            edges: Vec::with_capacity(doc.edges.len()),
            groups: doc.groups,
            diagnostics: doc.diagnostics,
            producer: vec![None; n],
            consumers: vec![Vec::new(); n],
        };
        for (i, r) in doc.nodes.into_iter().enumerate() {
            if r.node.id != i {
                return Err(bad(format!("node {} listed at position {i}", r.node.id)));
            }
            g.nodes.push(r.node);
        }
        for (i, group) in g.groups.iter().enumerate() {
            if group.id != i {
                return Err(bad(format!("group {} listed at position {i}", group.id)));
            }
        }
        for (i, r) in doc.edges.into_iter().enumerate() {
            let e = r.edge;
            if e.id != i {
                return Err(bad(format!("edge {} listed at position {i}", e.id)));
            }
            if !e.op.accepts_table_arity(e.inputs.len(), e.outputs.len()) {
                return Err(bad(format!(
                    "edge {i}: {} with {}→{}",
                    e.op,
                    e.inputs.len(),
                    e.outputs.len()
                )));
            }
            for &x in e.inputs.iter().chain(&e.outputs) {
                if x >= n {
                    return Err(ProvError::UnknownNode(x));
                }
            }
            for &o in &e.outputs {
                if g.producer[o].replace(i).is_some() {
                    return Err(bad(format!("node {o} has two producing edges")));
                }
            }
            if e.group.is_some_and(|grp| grp >= g.groups.len()) {
                return Err(bad(format!("edge {i} names an unknown group")));
            }
            if e.diagnostics.iter().any(|&d| d >= g.diagnostics.len()) {
                return Err(bad(format!("edge {i} names an unknown diagnostic")));
            }
            for &x in &e.inputs {
                g.consumers[x].push(i);
            }
            g.edges.push(e);
        }
        if g.topological_order().is_none() {
            return Err(bad("graph contains a cycle".into()));
        }
        Ok(g)
    }
}

const DOC_FORMAT: &str = "tabletide.provenance";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(flatten)]
    pub node: ProvNode,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    #[serde(flatten)]
    pub edge: ProvEdge,
    pub class: OpClass,
    pub object: ObjectKind,
}

/// Serialized graph: nodes, edges, composite groups, and the diagnostics
/// that edges refer to by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvDocument {
    pub format: String,
    pub version: u32,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub groups: Vec<CompositeGroup>,
    pub diagnostics: Vec<Diagnostic>,
}

/// String literals longer than this are replaced by a digest in edge
/// parameters.
pub const MAX_LITERAL: usize = 64;

/// Parameters longer than this keep a prefix plus a digest of the whole.
pub const MAX_PARAMS: usize = 1024;

/// Shortens statement text for storage on an edge: long quoted literals
/// become `"sha256:<hex>"` and an overlong remainder is cut with a digest of
/// the full text.
pub fn elide_params(text: &str) -> String {
    let mut out = String::with_capacity(text.len().min(MAX_PARAMS + 80));
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c != '"' {
            out.push(c);
            continue;
        }
        let mut end = text.len();
        while let Some((i, c)) = chars.next() {
            if c == '\\' {
                chars.next();
            } else if c == '"' {
                end = i + 1;
                break;
            }
        }
        let literal = &text[start..end];
        if literal.chars().count() > MAX_LITERAL + 2 {
            write!(out, "\"sha256:{}\"", digest(literal)).expect("writing to a String cannot fail");
        } else {
            out.push_str(literal);
        }
    }
    if out.len() > MAX_PARAMS {
        let mut cut = MAX_PARAMS;
        while !out.is_char_boundary(cut) {
            cut -= 1;
        }
        let full = digest(&out);
        out.truncate(cut);
        write!(out, " ... sha256:{full}").expect("writing to a String cannot fail");
    }
    out
}

fn digest(s: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn dot_node(n: &ProvNode) -> String {
    let style = if n.tombstone { ", style=dashed" } else { "" };
    format!("n{} [label={}{style}];", n.id, quote(&n.label()))
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
