//! Running `.wr` pipelines against copies of the fixture CSV files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use tabletide::dsl::{self, ExecReport};
use tabletide::table::{Field, Table};
use tabletide::value::{DataKind, DataType, Value};
use tabletide::workspace::FileAccess;
use tabletide::Workspace;

use super::present;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// `(file name, source)` for every golden pipeline, sorted by name.
pub fn golden_pipelines() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(fixtures_dir().join("golden"))
        .expect("golden directory exists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "wr"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

pub struct Run {
    pub ws: Workspace,
    pub report: ExecReport,
    /// Bytes of every file the pipeline wrote, keyed by file name.
    pub exports: BTreeMap<String, Vec<u8>>,
}

/// Executes `source` in a scratch directory holding copies of the fixture
/// CSV files, so exports never touch the source tree.
pub fn run_in_scratch(source: &str) -> Result<Run, String> {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut inputs = Vec::new();
    for entry in fs::read_dir(fixtures_dir()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            let name = path.file_name().unwrap().to_owned();
            fs::copy(&path, scratch.path().join(&name)).map_err(|e| e.to_string())?;
            inputs.push(name);
        }
    }
    let pipeline = dsl::parse(source).map_err(|e| e.to_string())?;
    let mut ws = Workspace::new(FileAccess::Relative(scratch.path().to_path_buf()));
    let report = dsl::execute(&pipeline, &mut ws).map_err(|e| e.to_string())?;
    let mut exports = BTreeMap::new();
    for entry in fs::read_dir(scratch.path()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_owned();
        if !inputs.contains(&name) {
            let bytes = fs::read(&path).map_err(|e| e.to_string())?;
            exports.insert(name.to_string_lossy().into_owned(), bytes);
        }
    }
    Ok(Run { ws, report, exports })
}

/// Parse, print and parse again; the two parses must agree and printing
/// must be a fixpoint.
pub fn round_trip(source: &str) -> Result<(), String> {
    let first = dsl::parse(source).map_err(|e| e.to_string())?;
    let printed = first.to_string();
    let second = dsl::parse(&printed).map_err(|e| format!("reparse failed: {e}\n{printed}"))?;
    if first != second {
        return Err(format!("reparse differs:\n{printed}"));
    }
    if second.to_string() != printed {
        return Err(format!("printing is not a fixpoint:\n{printed}"));
    }
    Ok(())
}

fn stable_text() -> BoxedStrategy<Value> {
    "[a-z][a-z0-9 ,;\"\n]{0,6}"
        .prop_filter("reads as another type", |s| !matches!(s.as_str(), "true" | "false" | "inf"))
        .prop_map(Value::Text)
        .boxed()
}

/// A non-null value that pins inference to `kind`: floats with a
/// fractional part, text that starts with a letter.
fn witness(kind: DataKind) -> BoxedStrategy<Value> {
    match kind {
        DataKind::Float => (-400i64..400).prop_map(|k| Value::Float(k as f64 + 0.5)).boxed(),
        DataKind::Text => stable_text(),
        other => present(other),
    }
}

fn stable_cell(kind: DataKind) -> BoxedStrategy<Value> {
    let value = match kind {
        DataKind::Text => stable_text(),
        DataKind::Float => prop_oneof![
            8 => present(DataKind::Float),
            1 => Just(Value::Float(f64::INFINITY)),
            1 => any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(Value::Float),
        ]
        .boxed(),
        DataKind::Integer => prop_oneof![4 => present(kind), 1 => any::<i64>().prop_map(Value::Int)].boxed(),
        other => present(other),
    };
    prop_oneof![4 => value, 1 => Just(Value::Null)].boxed()
}

/// Tables whose CSV text infers back to the same column kinds: at least one
/// row, every column has a value that only its own kind accepts, and text
/// never looks like a number, boolean or date.
pub fn inference_stable_table() -> BoxedStrategy<Table> {
    proptest::collection::vec(super::any_kind(), 1..=super::MAX_COLS)
        .prop_flat_map(|kinds| {
            let first: Vec<BoxedStrategy<Value>> = kinds.iter().map(|k| witness(*k)).collect();
            let row: Vec<BoxedStrategy<Value>> = kinds.iter().map(|k| stable_cell(*k)).collect();
            let rest = proptest::collection::vec(row, 0..super::MAX_ROWS);
            (Just(kinds), first, rest)
        })
        .prop_map(|(kinds, first, mut rest)| {
            rest.insert(0, first);
            let schema: Vec<Field> = kinds
                .iter()
                .enumerate()
                .map(|(i, k)| Field::new(format!("c{i}"), DataType::nullable(*k)))
                .collect();
            Table::from_rows(&schema, rest).expect("cells match their kinds")
        })
        .boxed()
}

/// Same column names, kinds and cells in the same order.
pub fn identical(a: &Table, b: &Table) -> Result<(), String> {
    if a.column_names() != b.column_names() {
        return Err(format!("columns {:?} vs {:?}", a.column_names(), b.column_names()));
    }
    for (x, y) in a.columns().iter().zip(b.columns()) {
        if x.kind() != y.kind() {
            return Err(format!("`{}` is {:?} vs {:?}", x.name(), x.kind(), y.kind()));
        }
        if x.cells() != y.cells() {
            return Err(format!("`{}` cells {:?} vs {:?}", x.name(), x.cells(), y.cells()));
        }
    }
    if a.row_count() != b.row_count() {
        return Err(format!("{} rows vs {}", a.row_count(), b.row_count()));
    }
    Ok(())
}
