//! Named multi-step strategies built from algebra operations.
//!
//! Composites are expanded into primitive steps and run through a
//! [`Tracer`], so the same expansion either runs purely (the functions in
//! this module) or records every intermediate table in a provenance graph
//! (the workspace).

use std::borrow::Cow;

use crate::algebra::{Aggregation, AlgebraError, BinSpec, Mapping, OpResult, SchemaPolicy};
use crate::diagnostic::Diagnostic;
use crate::expr::Expr;
use crate::operation::{run_primitive, OpError, Operation, Result};
use crate::table::Table;

/// A table flowing through an expansion, with its provenance node when one
/// is being recorded.
#[derive(Debug, Clone)]
pub struct Node<'a> {
    pub handle: String,
    pub table: Cow<'a, Table>,
    pub id: Option<usize>,
}

impl Node<'static> {
    pub fn new(handle: impl Into<String>, table: Table) -> Self {
        Node {
            handle: handle.into(),
            table: Cow::Owned(table),
            id: None,
        }
    }
}

impl<'a> Node<'a> {
    pub fn borrowed(handle: impl Into<String>, table: &'a Table, id: Option<usize>) -> Self {
        Node {
            handle: handle.into(),
            table: Cow::Borrowed(table),
            id,
        }
    }

    pub fn into_table(self) -> Table {
        self.table.into_owned()
    }
}

/// Executes primitive steps on behalf of an expansion.
pub trait Tracer {
    /// Runs one primitive operation, naming its outputs via
    /// [`output_names`].
    fn step(
        &mut self,
        op: &Operation,
        inputs: &[&Node<'_>],
        outputs: &[String],
    ) -> Result<Vec<Node<'static>>>;

    /// Called for intermediates the expansion does not hand back.
    fn discard(&mut self, handle: &str, id: Option<usize>) -> Result<()>;
}

/// Runs steps without recording anything; diagnostics are collected.
#[derive(Debug, Default)]
pub struct PureTracer {
    pub diagnostics: Vec<Diagnostic>,
}

impl Tracer for PureTracer {
    fn step(
        &mut self,
        op: &Operation,
        inputs: &[&Node<'_>],
        outputs: &[String],
    ) -> Result<Vec<Node<'static>>> {
        let tables: Vec<&Table> = inputs.iter().map(|n| n.table.as_ref()).collect();
        let result = run_primitive(op, &tables)?;
        let labels: Vec<String> = result.tables.iter().map(|(l, _)| l.clone()).collect();
        let names = output_names(op, &labels, outputs)?;
        self.diagnostics.extend(result.diagnostics);
        Ok(names
            .into_iter()
            .zip(result.tables)
            .map(|(n, (_, t))| Node::new(n, t))
            .collect())
    }

    fn discard(&mut self, _handle: &str, _id: Option<usize>) -> Result<()> {
        Ok(())
    }
}

/// Output handles for a step. A single name given to `decompose` becomes a
/// prefix: each part binds `name_label`, with the label reduced to
/// identifier characters.
pub fn output_names(
    op: &Operation,
    labels: &[String],
    requested: &[String],
) -> Result<Vec<String>> {
    if matches!(op, Operation::Decompose { .. }) && requested.len() == 1 {
        let mut names: Vec<String> = Vec::with_capacity(labels.len());
        for l in labels {
            let base = format!("{}_{}", requested[0], sanitize_label(l));
            let mut name = base.clone();
            let mut n = 2;
            while names.contains(&name) {
                name = format!("{base}_{n}");
                n += 1;
            }
            names.push(name);
        }
        return Ok(names);
    }
    if requested.len() != labels.len() {
        return Err(OpError::OutputCount {
            op: op.name().to_string(),
            expected: labels.len().to_string(),
            found: requested.len(),
        });
    }
    Ok(requested.to_vec())
}

fn sanitize_label(label: &str) -> String {
    if label == crate::algebra::NULL_LABEL {
        return "null".into();
    }
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "part".into()
    } else {
        trimmed.to_string()
    }
}

/// Runs `op` (primitive or composite) through `tracer`, binding the final
/// outputs to `targets`. Intermediates are named `target.step` and are
/// discarded before returning.
pub fn expand(
    op: &Operation,
    inputs: &[&Node<'_>],
    targets: &[String],
    tracer: &mut dyn Tracer,
) -> Result<Vec<Node<'static>>> {
    op.check_arity(inputs.len(), targets.len())?;
    let mut x = Expansion {
        tracer,
        scratch: Vec::new(),
    };
    let out = match op {
        Operation::Filter { predicate } => x.filter(inputs[0], predicate, &targets[0])?,
        Operation::GroupAggregate { by, aggs } => {
            x.group_aggregate(inputs[0], by, aggs, &targets[0])?
        }
        Operation::LookupTransform { key, value_column } => {
            x.lookup_transform(inputs[0], inputs[1], key, value_column, &targets[0])?
        }
        Operation::SplitComputeMerge { by, bins, edits } => {
            x.split_compute_merge(inputs[0], by, *bins, edits, &targets[0])?
        }
        Operation::DivideAndConquer {
            facet,
            edits,
            key,
            value,
            alternate,
        } => x.divide_and_conquer(inputs[0], facet, edits, key, value, alternate, &targets[0])?,
        primitive => return x.tracer.step(primitive, inputs, targets),
    };
    for (handle, id) in &x.scratch {
        x.tracer.discard(handle, *id)?;
    }
    Ok(vec![out])
}

struct Expansion<'a> {
    tracer: &'a mut dyn Tracer,
    scratch: Vec<(String, Option<usize>)>,
}

impl Expansion<'_> {
    /// Runs a step whose outputs are all intermediates.
    fn scratch_step(
        &mut self,
        op: Operation,
        inputs: &[&Node<'_>],
        names: Vec<String>,
    ) -> Result<Vec<Node<'static>>> {
        let out = self.tracer.step(&op, inputs, &names)?;
        self.scratch
            .extend(out.iter().map(|n| (n.handle.clone(), n.id)));
        Ok(out)
    }

    fn final_step(
        &mut self,
        op: Operation,
        inputs: &[&Node<'_>],
        target: &str,
    ) -> Result<Node<'static>> {
        let mut out = self.tracer.step(&op, inputs, &[target.to_string()])?;
        Ok(out.remove(0))
    }

    /// Applies column edits in order; the last one binds `target` when given.
    fn edits(
        &mut self,
        start: &Node<'_>,
        edits: &[(String, Expr)],
        prefix: &str,
        target: Option<&str>,
    ) -> Result<Node<'static>> {
        let mut cur = Node {
            handle: start.handle.clone(),
            table: Cow::Owned(start.table.as_ref().clone()),
            id: start.id,
        };
        for (i, (column, e)) in edits.iter().enumerate() {
            let op = Operation::TransformColumn {
                column: column.clone(),
                mapping: Mapping::Expression(e.clone()),
                rename: None,
            };
            cur = match target {
                Some(t) if i + 1 == edits.len() => self.final_step(op, &[&cur], t)?,
                _ => self
                    .scratch_step(op, &[&cur], vec![format!("{prefix}_{}", i + 1)])?
                    .remove(0),
            };
        }
        Ok(cur)
    }

    fn filter(&mut self, t: &Node<'_>, predicate: &Expr, target: &str) -> Result<Node<'static>> {
        let mut out = self.tracer.step(
            &Operation::Subset {
                predicate: predicate.clone(),
            },
            &[t],
            &[target.to_string(), format!("{target}.rest")],
        )?;
        let rest = out.remove(1);
        self.scratch.push((rest.handle, rest.id));
        Ok(out.remove(0))
    }

    fn group_aggregate(
        &mut self,
        t: &Node<'_>,
        by: &str,
        aggs: &[Aggregation],
        target: &str,
    ) -> Result<Node<'static>> {
        let summarize = Operation::Summarize {
            by: vec![by.to_string()],
            aggs: aggs.to_vec(),
        };
        let parts = self.scratch_step(
            Operation::Decompose {
                column: by.to_string(),
                bins: Some(BinSpec::Distinct),
            },
            &[t],
            vec![format!("{target}.part")],
        )?;
        match parts.len() {
            0 => self.final_step(summarize, &[t], target),
            1 => self.final_step(summarize, &[&parts[0]], target),
            _ => {
                let mut sums = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    sums.extend(self.scratch_step(
                        summarize.clone(),
                        &[p],
                        vec![format!("{target}.summary_{}", i + 1)],
                    )?);
                }
                let refs: Vec<&Node<'_>> = sums.iter().collect();
                self.final_step(
                    Operation::Extend {
                        policy: SchemaPolicy::Strict,
                    },
                    &refs,
                    target,
                )
            }
        }
    }

    fn lookup_transform(
        &mut self,
        t: &Node<'_>,
        lookup: &Node<'_>,
        key: &str,
        value_column: &str,
        target: &str,
    ) -> Result<Node<'static>> {
        lookup
            .table
            .column(value_column)
            .map_err(AlgebraError::from)?;
        let mut drops = vec![key.to_string()];
        drops.extend(
            lookup
                .table
                .column_names()
                .into_iter()
                .filter(|c| *c != key && *c != value_column)
                .map(str::to_string),
        );
        let mut cur = self
            .scratch_step(
                Operation::Supplement {
                    key: key.to_string(),
                },
                &[t, lookup],
                vec![format!("{target}.joined")],
            )?
            .remove(0);
        for (i, column) in drops.iter().enumerate() {
            let op = Operation::DeleteColumn {
                column: column.clone(),
            };
            cur = if i + 1 == drops.len() {
                self.final_step(op, &[&cur], target)?
            } else {
                self.scratch_step(op, &[&cur], vec![format!("{target}.trimmed_{}", i + 1)])?
                    .remove(0)
            };
        }
        Ok(cur)
    }

    fn split_compute_merge(
        &mut self,
        t: &Node<'_>,
        by: &str,
        bins: Option<BinSpec>,
        edits: &[(String, Expr)],
        target: &str,
    ) -> Result<Node<'static>> {
        if edits.is_empty() {
            return Err(AlgebraError::InvalidArgument(
                "split_compute_merge needs at least one edit".into(),
            )
            .into());
        }
        let parts = self.scratch_step(
            Operation::Decompose {
                column: by.to_string(),
                bins: Some(bins.unwrap_or(BinSpec::Distinct)),
            },
            &[t],
            vec![format!("{target}.part")],
        )?;
        match parts.len() {
            0 => self.edits(t, edits, &format!("{target}.edit"), Some(target)),
            1 => self.edits(&parts[0], edits, &format!("{target}.edit"), Some(target)),
            _ => {
                let mut computed = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    let done =
                        self.edits(p, edits, &format!("{target}.part{}_edit", i + 1), None)?;
                    computed.push(done);
                }
                let refs: Vec<&Node<'_>> = computed.iter().collect();
                self.final_step(
                    Operation::Extend {
                        policy: SchemaPolicy::Strict,
                    },
                    &refs,
                    target,
                )
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn divide_and_conquer(
        &mut self,
        t: &Node<'_>,
        facet: &Expr,
        edits: &[(String, Expr)],
        key: &str,
        value: &str,
        alternate: &str,
        target: &str,
    ) -> Result<Node<'static>> {
        let split_off = |column: &str| Operation::Split {
            key: key.to_string(),
            columns: vec![column.to_string()],
        };
        let parts = self.scratch_step(
            Operation::Subset {
                predicate: facet.clone(),
            },
            &[t],
            vec![format!("{target}.facet"), format!("{target}.rest")],
        )?;
        let (facet_part, rest_part) = (&parts[0], &parts[1]);
        let edited = self.edits(facet_part, edits, &format!("{target}.edited"), None)?;
        let alt = self.scratch_step(
            split_off(value),
            &[&edited],
            vec![
                format!("{target}.alternate"),
                format!("{target}.alternate_dropped"),
            ],
        )?;
        let alt_tidy = self
            .scratch_step(
                Operation::TransformColumn {
                    column: alternate.to_string(),
                    mapping: Mapping::Expression(Expr::col(alternate)),
                    rename: Some(value.to_string()),
                },
                &[&alt[0]],
                vec![format!("{target}.alternate_tidy")],
            )?
            .remove(0);
        let facet_tidy = self.scratch_step(
            split_off(alternate),
            &[facet_part],
            vec![
                format!("{target}.facet_tidy"),
                format!("{target}.facet_dropped"),
            ],
        )?;
        let rest_tidy = self.scratch_step(
            split_off(alternate),
            &[rest_part],
            vec![
                format!("{target}.rest_tidy"),
                format!("{target}.rest_dropped"),
            ],
        )?;
        self.final_step(
            Operation::Extend {
                policy: SchemaPolicy::Strict,
            },
            &[&facet_tidy[0], &rest_tidy[0], &alt_tidy],
            target,
        )
    }
}

/// Runs any operation purely, composites included. Composite outputs are
/// labelled `result`.
pub fn run(op: &Operation, inputs: &[&Table]) -> Result<OpResult> {
    if !op.is_composite() {
        return run_primitive(op, inputs);
    }
    let nodes: Vec<Node<'_>> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| Node::borrowed(format!("input{}", i + 1), t, None))
        .collect();
    let refs: Vec<&Node<'_>> = nodes.iter().collect();
    let mut tracer = PureTracer::default();
    let out = expand(op, &refs, &["result".to_string()], &mut tracer)?;
    Ok(OpResult {
        tables: out
            .into_iter()
            .map(|n| (n.handle.clone(), n.into_table()))
            .collect(),
        diagnostics: tracer.diagnostics,
    })
}

/// The matching part of a subset; the rest is discarded.
pub fn filter(t: &Table, predicate: &Expr) -> Result<Table> {
    run(
        &Operation::Filter {
            predicate: predicate.clone(),
        },
        &[t],
    )
    .map(OpResult::into_table)
}

/// Decomposes by `by`, summarizes every part, and extends the summaries.
pub fn group_aggregate(t: &Table, by: &str, aggs: &[Aggregation]) -> Result<Table> {
    run(
        &Operation::GroupAggregate {
            by: by.to_string(),
            aggs: aggs.to_vec(),
        },
        &[t],
    )
    .map(OpResult::into_table)
}

/// Supplements `t` from `lookup` on `key`, then drops the key and every
/// lookup column other than `value_column`.
pub fn lookup_transform(
    t: &Table,
    lookup: &Table,
    key: &str,
    value_column: &str,
) -> Result<OpResult> {
    run(
        &Operation::LookupTransform {
            key: key.to_string(),
            value_column: value_column.to_string(),
        },
        &[t, lookup],
    )
}

/// Decomposes by `by`, applies the same column edits to every part, and
/// extends the results.
pub fn split_compute_merge(
    t: &Table,
    by: &str,
    bins: Option<BinSpec>,
    edits: &[(String, Expr)],
) -> Result<OpResult> {
    run(
        &Operation::SplitComputeMerge {
            by: by.to_string(),
            bins,
            edits: edits.to_vec(),
        },
        &[t],
    )
}

/// Tidies a table that carries a second measurement of `value` in the
/// `alternate` column for the rows matching `facet`.
///
/// The facet rows are copied and edited (for instance moved to another
/// year), the copy keeps `alternate` renamed to `value`, every other part
/// drops `alternate`, and the parts are extended into one table.
pub fn divide_and_conquer_tidy(
    t: &Table,
    facet: &Expr,
    edits: &[(String, Expr)],
    key: &str,
    value: &str,
    alternate: &str,
) -> Result<OpResult> {
    run(
        &Operation::DivideAndConquer {
            facet: facet.clone(),
            edits: edits.to_vec(),
            key: key.to_string(),
            value: value.to_string(),
            alternate: alternate.to_string(),
        },
        &[t],
    )
}
