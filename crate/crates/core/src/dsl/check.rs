//! Static checks over a parsed pipeline, without running it.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::{Pipeline, Stmt};
use crate::operation::Operation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    UnboundHandle,
    Rebind,
    UnusedTable,
    ArityMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
    /// 1-based statement number.
    pub statement: usize,
    pub line: usize,
    pub column: usize,
    pub handle: Option<String>,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

struct Binding {
    statement: usize,
    line: usize,
    column: usize,
    used: bool,
    /// A decompose with one target binds every `name_*` handle.
    prefix: bool,
}

pub fn check(p: &Pipeline) -> Vec<Issue> {
    check_with(p, &[])
}

/// Checks `p` as if `prebound` handles were already in scope, as in a
/// session that has tables loaded.
pub fn check_with(p: &Pipeline, prebound: &[&str]) -> Vec<Issue> {
    let mut env: BTreeMap<String, Binding> = prebound
        .iter()
        .map(|h| {
            (
                h.to_string(),
                Binding {
                    statement: 0,
                    line: 0,
                    column: 0,
                    used: true,
                    prefix: false,
                },
            )
        })
        .collect();
    let mut issues = Vec::new();
    for (i, s) in p.statements.iter().enumerate() {
        let n = i + 1;
        let (line, column) = (s.span.line, s.span.column);
        let issue = |severity, kind, handle: Option<&str>, message: String| Issue {
            severity,
            kind,
            statement: n,
            line,
            column,
            handle: handle.map(str::to_string),
            message,
        };
        if let Stmt::Apply {
            targets,
            op,
            inputs,
        } = &s.stmt
        {
            let decompose_prefix = matches!(op, Operation::Decompose { .. }) && targets.len() == 1;
            if !decompose_prefix {
                if let Err(e) = op.check_arity(inputs.len(), targets.len()) {
                    issues.push(issue(
                        Severity::Error,
                        IssueKind::ArityMismatch,
                        None,
                        e.to_string(),
                    ));
                }
            }
        }
        for h in s.stmt.reads() {
            match lookup(&mut env, h) {
                Some(b) => b.used = true,
                None => issues.push(issue(
                    Severity::Error,
                    IssueKind::UnboundHandle,
                    Some(h),
                    format!("`{h}` is not bound"),
                )),
            }
        }
        if let Stmt::Apply {
            op: Operation::DeleteTable,
            inputs,
            ..
        } = &s.stmt
        {
            for h in inputs {
                env.remove(h);
            }
        }
        let prefix = matches!(
            &s.stmt,
            Stmt::Apply { op: Operation::Decompose { .. }, targets, .. } if targets.len() == 1
        );
        for h in s.stmt.binds() {
            if let Some(old) = env.get(h) {
                if !old.used {
                    issues.push(unused(h, old));
                }
                issues.push(issue(
                    Severity::Warning,
                    IssueKind::Rebind,
                    Some(h),
                    format!("`{h}` is rebound; the earlier table is dropped"),
                ));
            }
            env.insert(
                h.to_string(),
                Binding {
                    statement: n,
                    line,
                    column,
                    used: false,
                    prefix,
                },
            );
        }
    }
    for (h, b) in &env {
        if !b.used {
            issues.push(unused(h, b));
        }
    }
    issues.sort_by_key(|i| (i.statement, i.severity, i.message.clone()));
    issues
}

fn lookup<'a>(env: &'a mut BTreeMap<String, Binding>, h: &str) -> Option<&'a mut Binding> {
    if env.contains_key(h) {
        return env.get_mut(h);
    }
    env.iter_mut()
        .filter(|(name, b)| b.prefix && h.len() > name.len() + 1 && h.starts_with(name.as_str()))
        .find(|(name, _)| h.as_bytes()[name.len()] == b'_')
        .map(|(_, b)| b)
}

fn unused(h: &str, b: &Binding) -> Issue {
    Issue {
        severity: Severity::Warning,
        kind: IssueKind::UnusedTable,
        statement: b.statement,
        line: b.line,
        column: b.column,
        handle: Some(h.to_string()),
        message: format!("`{h}` is never used"),
    }
}
