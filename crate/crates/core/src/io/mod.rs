//! Reading and writing tables: CSV files, the JSON table format, and HTTP
//! fetches.

mod csv;
mod fetch;
mod json;

use thiserror::Error;

use crate::table::ModelError;
use crate::value::DataKind;

pub use csv::{load_csv, parse_csv, save_csv, write_csv, CsvOptions};
pub use fetch::{fetch, fetch_with};
pub use json::{
    cell_to_json, load_table_json, parse_table_json, save_table_json, write_table_json,
    TABLE_FORMAT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: malformed quoting")]
    BadQuoting { line: usize },
    #[error("line {line}: `{value}` in column `{column}` is not a valid {kind}")]
    BadValue {
        line: usize,
        column: String,
        kind: DataKind,
        value: String,
    },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("server answered with HTTP status {code}")]
    HttpStatus { code: u16 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IoError {
    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;
