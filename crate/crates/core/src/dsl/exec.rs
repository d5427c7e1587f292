use serde::Serialize;
use thiserror::Error;

use super::ast::{Pipeline, Stmt};
use crate::audit::Profile;
use crate::diagnostic::Diagnostic;
use crate::operation::OpError;
use crate::workspace::Workspace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementOutcome {
    /// 1-based statement number.
    pub index: usize,
    pub line: usize,
    pub text: String,
    pub bound: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecReport {
    pub statements: Vec<StatementOutcome>,
}

impl ExecReport {
    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostic> {
        self.statements.iter().flat_map(|s| &s.diagnostics)
    }
}

/// Statement `statement` failed; `completed` holds the statements before it,
/// whose effects stay in the workspace.
#[derive(Debug, Error)]
#[error("statement {statement} (line {line}, column {column}): {error}")]
pub struct ExecError {
    pub statement: usize,
    pub line: usize,
    pub column: usize,
    #[source]
    pub error: OpError,
    pub completed: ExecReport,
}

/// Runs each statement in order against `ws`, stopping at the first failure.
pub fn execute(p: &Pipeline, ws: &mut Workspace) -> Result<ExecReport, ExecError> {
    let mut report = ExecReport::default();
    for (i, s) in p.statements.iter().enumerate() {
        let mut outcome = StatementOutcome {
            index: i + 1,
            line: s.span.line,
            text: s.stmt.to_string(),
            bound: Vec::new(),
            diagnostics: Vec::new(),
            profile: None,
        };
        let result = match &s.stmt {
            Stmt::Load {
                path,
                handle,
                options,
            } => ws.load(path, handle, options).map(|()| {
                outcome.bound.push(handle.clone());
            }),
            Stmt::Fetch {
                url,
                handle,
                options,
            } => ws.fetch(url, handle, options).map(|()| {
                outcome.bound.push(handle.clone());
            }),
            Stmt::Export { handle, path } => ws.export(handle, path),
            Stmt::Audit(spec) => ws.audit(spec).map(|a| {
                outcome.diagnostics.extend(a.diagnostic);
                outcome.profile = a.profile;
            }),
            Stmt::Apply {
                targets,
                op,
                inputs,
            } => ws.apply(op, inputs, targets).map(|a| {
                outcome.bound = a.handles;
                outcome.diagnostics = a.diagnostics;
            }),
        };
        if let Err(error) = result {
            return Err(ExecError {
                statement: i + 1,
                line: s.span.line,
                column: s.span.column,
                error,
                completed: report,
            });
        }
        report.statements.push(outcome);
    }
    Ok(report)
}
