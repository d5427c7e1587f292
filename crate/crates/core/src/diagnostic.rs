//! Structured audit findings.
//!
//! Diagnostics never block an operation. They are attached to the provenance
//! edge that produced them and serialize as JSON Lines: one object per
//! finding with `kind`, `severity`, `payload` and `source` (edge id or null).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{DataKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    LossyJoin,
    UnmatchedLeftKeys,
    UnusedRightKeys,
    SchemaDrift,
    EqualityMismatch,
    KeyCollision,
    BoundaryUnfilled,
    IrregularSeparation,
    UnmappedLookupValues,
}

/// Keys of one join side that did not take part in the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyReport {
    pub key: String,
    /// Distinct non-null keys, sorted.
    pub keys: Vec<Value>,
    /// Rows whose key was null (nulls never match).
    pub null_keys: usize,
    /// Total rows covered by this report.
    pub rows: usize,
}

impl KeyReport {
    pub fn new(
        key: impl Into<String>,
        keys: impl IntoIterator<Item = Value>,
        null_keys: usize,
        rows: usize,
    ) -> Self {
        KeyReport {
            key: key.into(),
            keys: sorted_unique(keys),
            null_keys,
            rows,
        }
    }

    pub fn contains(&self, key: &Value) -> bool {
        self.keys.binary_search(key).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtypeChange {
    pub column: String,
    pub from: DataKind,
    pub to: DataKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelChange {
    pub column: String,
    pub added: Vec<Value>,
    pub removed: Vec<Value>,
}

/// Differences between one table and the reference it is compared with.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftEntry {
    /// Position of the drifting table among the compared inputs.
    pub table: usize,
    pub added_columns: Vec<String>,
    pub removed_columns: Vec<String>,
    pub dtype_changes: Vec<DtypeChange>,
    pub level_changes: Vec<LevelChange>,
}

impl DriftEntry {
    pub fn is_empty(&self) -> bool {
        self.added_columns.is_empty()
            && self.removed_columns.is_empty()
            && self.dtype_changes.is_empty()
            && self.level_changes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub entries: Vec<DriftEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDelta {
    pub group: Value,
    pub sum_a: Value,
    pub sum_b: Value,
    /// `sum_a - sum_b`.
    pub delta: Value,
    /// Set when the group has no rows on that side.
    pub missing_in: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub column: String,
    pub group_column: Option<String>,
    pub total_a: Value,
    pub total_b: Value,
    /// `total_a - total_b`.
    pub delta: Value,
    /// Per-group deltas exceeding the tolerance, sorted by group.
    pub groups: Vec<GroupDelta>,
    /// Sum of absolute per-group deltas (equals |delta| for a total test).
    pub discrepancy: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateKey {
    pub key: Vec<Value>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub columns: Vec<String>,
    pub duplicates: Vec<DuplicateKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowsReport {
    pub column: String,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub column: String,
    pub rows: Vec<usize>,
    /// Rows that produced fewer parts than requested.
    pub missing_parts: usize,
    /// Rows whose surplus parts were folded into the last component.
    pub surplus_parts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuesReport {
    pub column: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Finding {
    LossyJoin(KeyReport),
    UnmatchedLeftKeys(KeyReport),
    UnusedRightKeys(KeyReport),
    SchemaDrift(DriftReport),
    EqualityMismatch(EqualityReport),
    KeyCollision(CollisionReport),
    BoundaryUnfilled(RowsReport),
    IrregularSeparation(SeparationReport),
    UnmappedLookupValues(ValuesReport),
}

impl Finding {
    pub fn kind(&self) -> DiagnosticKind {
        match self {
            Finding::LossyJoin(_) => DiagnosticKind::LossyJoin,
            Finding::UnmatchedLeftKeys(_) => DiagnosticKind::UnmatchedLeftKeys,
            Finding::UnusedRightKeys(_) => DiagnosticKind::UnusedRightKeys,
            Finding::SchemaDrift(_) => DiagnosticKind::SchemaDrift,
            Finding::EqualityMismatch(_) => DiagnosticKind::EqualityMismatch,
            Finding::KeyCollision(_) => DiagnosticKind::KeyCollision,
            Finding::BoundaryUnfilled(_) => DiagnosticKind::BoundaryUnfilled,
            Finding::IrregularSeparation(_) => DiagnosticKind::IrregularSeparation,
            Finding::UnmappedLookupValues(_) => DiagnosticKind::UnmappedLookupValues,
        }
    }

    pub fn default_severity(&self) -> Severity {
        match self {
            Finding::UnusedRightKeys(_) | Finding::UnmappedLookupValues(_) => Severity::Info,
            _ => Severity::Warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub finding: Finding,
    /// Provenance edge that produced the finding; `None` for pull audits.
    pub source: Option<usize>,
}

impl Diagnostic {
    pub fn new(finding: Finding) -> Self {
        Diagnostic {
            severity: finding.default_severity(),
            finding,
            source: None,
        }
    }

    pub fn kind(&self) -> DiagnosticKind {
        self.finding.kind()
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {:?}", self.kind())?;
        match &self.finding {
            Finding::LossyJoin(r) | Finding::UnmatchedLeftKeys(r) | Finding::UnusedRightKeys(r) => {
                write!(
                    f,
                    " on `{}`: {} rows, keys [{}]",
                    r.key,
                    r.rows,
                    join(&r.keys)
                )?;
                if r.null_keys > 0 {
                    write!(f, " + {} null", r.null_keys)?;
                }
                Ok(())
            }
            Finding::SchemaDrift(d) => {
                for e in &d.entries {
                    write!(
                        f,
                        " [table {}: +{:?} -{:?}, {} dtype, {} level changes]",
                        e.table,
                        e.added_columns,
                        e.removed_columns,
                        e.dtype_changes.len(),
                        e.level_changes.len()
                    )?;
                }
                Ok(())
            }
            Finding::EqualityMismatch(e) => {
                write!(
                    f,
                    " on `{}`: {} vs {} (delta {})",
                    e.column, e.total_a, e.total_b, e.delta
                )?;
                for g in &e.groups {
                    write!(f, " {}:{}", g.group, g.delta)?;
                }
                Ok(())
            }
            Finding::KeyCollision(c) => write!(
                f,
                " on {:?}: {} duplicated keys",
                c.columns,
                c.duplicates.len()
            ),
            Finding::BoundaryUnfilled(r) => write!(f, " in `{}` rows {:?}", r.column, r.rows),
            Finding::IrregularSeparation(r) => write!(f, " in `{}` rows {:?}", r.column, r.rows),
            Finding::UnmappedLookupValues(v) => {
                write!(f, " in `{}`: [{}]", v.column, join(&v.values))
            }
        }
    }
}

fn join(vals: &[Value]) -> String {
    vals.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn sorted_unique(vals: impl IntoIterator<Item = Value>) -> Vec<Value> {
    let mut v: Vec<Value> = vals.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

/// Renders diagnostics as JSON Lines.
pub fn to_report(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&serde_json::to_string(d).expect("diagnostics always serialize"));
        out.push('\n');
    }
    out
}

pub fn from_report(text: &str) -> Result<Vec<Diagnostic>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
