//! A wrangling session: named tables, their provenance graph and the
//! diagnostics log.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Component, Path, PathBuf};

use serde::Serialize;

use crate::algebra::catalog::OpKind;
use crate::audit::{self, AuditSpec, Profile};
use crate::composite::{expand, output_names, Node, Tracer};
use crate::diagnostic::Diagnostic;
use crate::dsl::{statement_text, Stmt};
use crate::io::{self, CsvOptions};
use crate::operation::{run_primitive, OpError, Operation, Result};
use crate::provenance::{elide_params, ProvenanceGraph};
use crate::table::Table;

/// Where `load` and `export` may touch the filesystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileAccess {
    /// Relative paths resolve against the directory; absolute paths pass.
    Relative(PathBuf),
    /// Only relative paths without `..`, resolved under the directory.
    Confined(PathBuf),
    Denied,
}

#[derive(Debug, Clone)]
struct Binding {
    table: Table,
    node: usize,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    env: BTreeMap<String, Binding>,
    graph: ProvenanceGraph,
    log: Vec<Diagnostic>,
    files: FileAccess,
    network: bool,
    table_limit: Option<usize>,
}

/// Handles bound by an applied operation, with the diagnostics it raised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applied {
    pub handles: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// What an operation would bind, without binding it.
#[derive(Debug, Clone, PartialEq)]
pub struct Preview {
    pub tables: Vec<(String, Table)>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub diagnostic: Option<Diagnostic>,
    pub profile: Option<Profile>,
}

struct GraphTracer<'g> {
    graph: &'g mut ProvenanceGraph,
    group: Option<usize>,
    diagnostics: Vec<Diagnostic>,
}

impl Tracer for GraphTracer<'_> {
    fn step(
        &mut self,
        op: &Operation,
        inputs: &[&Node<'_>],
        outputs: &[String],
    ) -> Result<Vec<Node<'static>>> {
        let kind = op.kind().expect("tracers only see primitive steps");
        let tables: Vec<&Table> = inputs.iter().map(|n| n.table.as_ref()).collect();
        let result = run_primitive(op, &tables)?;
        let labels: Vec<String> = result.tables.iter().map(|(l, _)| l.clone()).collect();
        let names = output_names(op, &labels, outputs)?;
        let input_handles: Vec<String> = inputs.iter().map(|n| n.handle.clone()).collect();
        let input_ids: Vec<usize> = inputs
            .iter()
            .map(|n| n.id.expect("workspace nodes carry provenance ids"))
            .collect();
        let params = elide_params(&statement_text(outputs, op, &input_handles));
        let recorded: Vec<(&str, &Table)> = names
            .iter()
            .zip(&result.tables)
            .map(|(n, (_, t))| (n.as_str(), t))
            .collect();
        let ids = self
            .graph
            .record(kind, params, &input_ids, &recorded, self.group)?;
        let edge = self.graph.edges().len() - 1;
        let stamped = self.graph.attach(edge, result.diagnostics);
        self.diagnostics.extend(stamped);
        Ok(names
            .into_iter()
            .zip(result.tables)
            .zip(ids)
            .map(|((name, (_, t)), id)| Node {
                handle: name,
                table: std::borrow::Cow::Owned(t),
                id: Some(id),
            })
            .collect())
    }

    fn discard(&mut self, _handle: &str, id: Option<usize>) -> Result<()> {
        if let Some(id) = id {
            self.graph.tombstone(id)?;
        }
        Ok(())
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::new(FileAccess::Relative(PathBuf::from(".")))
    }
}

impl Workspace {
    pub fn new(files: FileAccess) -> Self {
        Workspace {
            env: BTreeMap::new(),
            graph: ProvenanceGraph::new(),
            log: Vec::new(),
            files,
            network: true,
            table_limit: None,
        }
    }

    /// A workspace that can only hold tables it is handed.
    pub fn sealed() -> Self {
        let mut w = Workspace::new(FileAccess::Denied);
        w.network = false;
        w
    }

    pub fn with_network(mut self, allowed: bool) -> Self {
        self.network = allowed;
        self
    }

    pub fn with_table_limit(mut self, limit: usize) -> Self {
        self.table_limit = Some(limit);
        self
    }

    pub fn table(&self, handle: &str) -> Option<&Table> {
        self.env.get(handle).map(|b| &b.table)
    }

    pub fn node_of(&self, handle: &str) -> Option<usize> {
        self.env.get(handle).map(|b| b.node)
    }

    /// Bound handles in name order.
    pub fn handles(&self) -> Vec<&str> {
        self.env.keys().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.env.len()
    }

    pub fn is_empty(&self) -> bool {
        self.env.is_empty()
    }

    pub fn graph(&self) -> &ProvenanceGraph {
        &self.graph
    }

    /// Every diagnostic raised so far, in the order raised.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.log
    }

    pub fn resolve_path(&self, path: &str) -> Result<PathBuf> {
        let p = Path::new(path);
        match &self.files {
            FileAccess::Relative(_) if p.is_absolute() => Ok(p.to_path_buf()),
            FileAccess::Relative(base) => Ok(base.join(p)),
            FileAccess::Confined(root) => {
                let plain = p
                    .components()
                    .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
                if !plain || path.is_empty() {
                    return Err(OpError::PathDenied(path.to_string()));
                }
                Ok(root.join(p))
            }
            FileAccess::Denied => Err(OpError::PathDenied(path.to_string())),
        }
    }

    fn binding(&self, handle: &str) -> Result<&Binding> {
        self.env
            .get(handle)
            .ok_or_else(|| OpError::UnknownHandle(handle.to_string()))
    }

    fn check_room(&self, adding: &[String]) -> Result<()> {
        if let Some(limit) = self.table_limit {
            let fresh = adding.iter().filter(|h| !self.env.contains_key(*h)).count();
            if self.env.len() + fresh > limit {
                return Err(OpError::TableLimit(limit));
            }
        }
        Ok(())
    }

    /// Binds a table produced outside any operation, such as an upload,
    /// recording it as a create-table edge with `params`.
    pub fn bind(&mut self, handle: &str, table: Table, params: &str) -> Result<()> {
        let handle = handle.to_string();
        self.check_room(std::slice::from_ref(&handle))?;
        let ids = self.graph.record(
            OpKind::CreateTable,
            elide_params(params),
            &[],
            &[(&handle, &table)],
            None,
        )?;
        if let Some(old) = self.env.insert(
            handle,
            Binding {
                table,
                node: ids[0],
            },
        ) {
            self.graph.tombstone(old.node)?;
        }
        Ok(())
    }

    /// Reads a `.json` table document or a CSV file and binds it.
    pub fn load(&mut self, path: &str, handle: &str, options: &CsvOptions) -> Result<()> {
        let full = self.resolve_path(path)?;
        let table = if is_json(path) {
            io::load_table_json(&full)?
        } else {
            io::load_csv(&full, options)?
        };
        let text = Stmt::Load {
            path: path.to_string(),
            handle: handle.to_string(),
            options: options.clone(),
        }
        .to_string();
        self.bind(handle, table, &text)
    }

    pub fn fetch(&mut self, url: &str, handle: &str, options: &CsvOptions) -> Result<()> {
        if !self.network {
            return Err(OpError::PathDenied(url.to_string()));
        }
        let table = io::fetch(url, options)?;
        let text = Stmt::Fetch {
            url: url.to_string(),
            handle: handle.to_string(),
            options: options.clone(),
        }
        .to_string();
        self.bind(handle, table, &text)
    }

    /// Writes a bound table as a `.json` document or as CSV.
    pub fn export(&mut self, handle: &str, path: &str) -> Result<()> {
        let full = self.resolve_path(path)?;
        let b = self.binding(handle)?;
        if is_json(path) {
            io::save_table_json(&b.table, &full)?;
        } else {
            io::save_csv(&b.table, &full, &CsvOptions::default())?;
        }
        let node = b.node;
        self.graph.mark_exported(node)?;
        Ok(())
    }

    pub fn audit(&mut self, spec: &AuditSpec) -> Result<AuditOutcome> {
        let t = |h: &str| self.binding(h).map(|b| &b.table);
        let (diagnostic, profile) = match spec {
            AuditSpec::Total { a, b, column, tol } => (
                audit::test_equality_total(t(a)?, t(b)?, column, *tol)?,
                None,
            ),
            AuditSpec::Grouped {
                a,
                b,
                group,
                column,
                tol,
            } => (
                audit::test_equality_grouped(t(a)?, t(b)?, group, column, *tol)?,
                None,
            ),
            AuditSpec::Drift { a, b } => (audit::detect_schema_drift(t(a)?, t(b)?), None),
            AuditSpec::Keys { table, columns } => {
                (audit::check_key_uniqueness(t(table)?, columns)?, None)
            }
            AuditSpec::Profile { table } => (None, Some(audit::profile_summary(t(table)?))),
        };
        self.log.extend(diagnostic.iter().cloned());
        Ok(AuditOutcome {
            diagnostic,
            profile,
        })
    }

    /// Runs `op` on the bound `inputs` and binds its outputs to `targets`,
    /// replacing earlier tables of the same names.
    pub fn apply(
        &mut self,
        op: &Operation,
        inputs: &[String],
        targets: &[String],
    ) -> Result<Applied> {
        self.run(op, inputs, targets, true)
    }

    /// As [`Workspace::apply`], but refuses to replace a bound handle.
    pub fn apply_fresh(
        &mut self,
        op: &Operation,
        inputs: &[String],
        targets: &[String],
    ) -> Result<Applied> {
        self.run(op, inputs, targets, false)
    }

    /// Computes what [`Workspace::apply`] would bind and report. The
    /// workspace is left untouched.
    pub fn preview(
        &self,
        op: &Operation,
        inputs: &[String],
        targets: &[String],
    ) -> Result<Preview> {
        let mut graph = self.graph.clone();
        let (nodes, diagnostics) = self.stage(&mut graph, op, inputs, targets)?;
        Ok(Preview {
            tables: nodes
                .into_iter()
                .map(|n| (n.handle.clone(), n.into_table()))
                .collect(),
            diagnostics,
        })
    }

    fn run(
        &mut self,
        op: &Operation,
        inputs: &[String],
        targets: &[String],
        rebind: bool,
    ) -> Result<Applied> {
        if let Operation::DeleteTable = op {
            op.check_arity(inputs.len(), targets.len())?;
            let node = self.binding(&inputs[0])?.node;
            let params = elide_params(&statement_text(targets, op, inputs));
            self.graph
                .record(OpKind::DeleteTable, params, &[node], &[], None)?;
            self.graph.tombstone(node)?;
            self.env.remove(&inputs[0]);
            return Ok(Applied {
                handles: Vec::new(),
                diagnostics: Vec::new(),
            });
        }
        let mut graph = self.graph.clone();
        let (nodes, diagnostics) = self.stage(&mut graph, op, inputs, targets)?;
        let handles: Vec<String> = nodes.iter().map(|n| n.handle.clone()).collect();
        if !rebind {
            if let Some(h) = handles.iter().find(|h| self.env.contains_key(*h)) {
                return Err(OpError::HandleTaken(h.clone()));
            }
        }
        self.check_room(&handles)?;
        for n in nodes {
            let node = n.id.expect("workspace nodes carry provenance ids");
            let handle = n.handle.clone();
            if let Some(old) = self.env.insert(
                handle,
                Binding {
                    table: n.into_table(),
                    node,
                },
            ) {
                graph.tombstone(old.node)?;
            }
        }
        self.graph = graph;
        self.log.extend(diagnostics.iter().cloned());
        Ok(Applied {
            handles,
            diagnostics,
        })
    }

    fn stage(
        &self,
        graph: &mut ProvenanceGraph,
        op: &Operation,
        inputs: &[String],
        targets: &[String],
    ) -> Result<(Vec<Node<'static>>, Vec<Diagnostic>)> {
        let mut seen = BTreeSet::new();
        if let Some(dup) = targets.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(OpError::DuplicateOutput(dup.clone()));
        }
        let prefix = matches!(op, Operation::Decompose { .. }) && targets.len() == 1;
        if !prefix {
            op.check_arity(inputs.len(), targets.len())?;
        } else {
            op.check_arity(inputs.len(), 1)?;
        }
        let bound: Vec<Node<'_>> = inputs
            .iter()
            .map(|h| {
                self.binding(h)
                    .map(|b| Node::borrowed(h.clone(), &b.table, Some(b.node)))
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Node<'_>> = bound.iter().collect();
        let group = op.is_composite().then(|| graph.begin_group(op.name()));
        let mut tracer = GraphTracer {
            graph,
            group,
            diagnostics: Vec::new(),
        };
        let nodes = expand(op, &refs, targets, &mut tracer)?;
        let mut names = BTreeSet::new();
        if let Some(dup) = nodes.iter().find(|n| !names.insert(n.handle.as_str())) {
            return Err(OpError::DuplicateOutput(dup.handle.clone()));
        }
        Ok((nodes, tracer.diagnostics))
    }
}

fn is_json(path: &str) -> bool {
    Path::new(path)
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
