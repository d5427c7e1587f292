//! The `.wr` pipeline language: one operation per statement, keyword-verb
//! syntax, `#` comments.

mod ast;
mod check;
mod exec;
mod lexer;
mod parser;

use serde::Serialize;
use thiserror::Error;

pub use ast::{statement_text, write_name, Pipeline, Span, Statement, Stmt};
pub use check::{check, check_with, Issue, IssueKind, Severity};
pub use exec::{execute, ExecError, ExecReport, StatementOutcome};
pub use parser::{parse, parse_expression};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownOperation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("line {line}, column {column}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Source text of the offending token.
    pub token: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn syntax(line: usize, column: usize, message: String, token: String) -> Self {
        ParseError {
            line,
            column,
            message,
            token,
            kind: ParseErrorKind::Syntax,
        }
    }
}

#[cfg(test)]
mod tests;
