//! Scalar cell values and their types.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five non-null value kinds a column can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DataKind {
    #[serde(rename = "bool", alias = "boolean")]
    Boolean,
    #[serde(rename = "int", alias = "integer")]
    Integer,
    #[serde(rename = "float")]
    Float,
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "date")]
    Date,
}

impl DataKind {
    pub const ALL: [DataKind; 5] = [
        DataKind::Boolean,
        DataKind::Integer,
        DataKind::Float,
        DataKind::Text,
        DataKind::Date,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DataKind::Boolean => "bool",
            DataKind::Integer => "int",
            DataKind::Float => "float",
            DataKind::Text => "text",
            DataKind::Date => "date",
        }
    }

    pub fn parse(s: &str) -> Option<DataKind> {
        match s.to_ascii_lowercase().as_str() {
            "bool" | "boolean" => Some(DataKind::Boolean),
            "int" | "integer" => Some(DataKind::Integer),
            "float" | "double" => Some(DataKind::Float),
            "text" | "string" => Some(DataKind::Text),
            "date" => Some(DataKind::Date),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, DataKind::Integer | DataKind::Float)
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A column type: a kind plus a nullability constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataType {
    pub kind: DataKind,
    pub nullable: bool,
}

impl DataType {
    pub const fn nullable(kind: DataKind) -> Self {
        DataType {
            kind,
            nullable: true,
        }
    }

    pub const fn required(kind: DataKind) -> Self {
        DataType {
            kind,
            nullable: false,
        }
    }

    pub fn with_nullable(self, nullable: bool) -> Self {
        DataType { nullable, ..self }
    }

    pub fn admits(&self, v: &Value) -> bool {
        match v.kind() {
            None => self.nullable,
            Some(k) => k == self.kind,
        }
    }
}

impl From<DataKind> for DataType {
    fn from(kind: DataKind) -> Self {
        DataType::nullable(kind)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nullable {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}!", self.kind)
        }
    }
}

/// One table cell.
///
/// `PartialEq`/`Eq`/`Hash`/`Ord` are structural: floats compare by their
/// canonical bit pattern (`-0.0 == 0.0`, all NaNs equal), and values of
/// different tags order by tag rank. That ordering is what grouping and
/// sorting use; [`compare_values`] is the checked comparison that rejects
/// mixed tags.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Date(NaiveDate),
}

impl Value {
    pub fn kind(&self) -> Option<DataKind> {
        match self {
            Value::Null => None,
            Value::Bool(_) => Some(DataKind::Boolean),
            Value::Int(_) => Some(DataKind::Integer),
            Value::Float(_) => Some(DataKind::Float),
            Value::Text(_) => Some(DataKind::Text),
            Value::Date(_) => Some(DataKind::Date),
        }
    }

    pub fn tag_name(&self) -> &'static str {
        self.kind().map_or("null", DataKind::name)
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn date(y: i32, m: u32, d: u32) -> Value {
        Value::Date(NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date"))
    }

    /// Converts `self` into a value of `kind` when that is lossless
    /// (identity, or integer widened to float).
    pub fn widen_to(self, kind: DataKind) -> Option<Value> {
        match (self, kind) {
            (Value::Null, _) => Some(Value::Null),
            (Value::Int(i), DataKind::Float) => Some(Value::Float(i as f64)),
            (v, k) if v.kind() == Some(k) => Some(v),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Text(_) => 4,
            Value::Date(_) => 5,
        }
    }
}

fn canonical_bits(f: f64) -> u64 {
    if f.is_nan() {
        f64::NAN.to_bits()
    } else if f == 0.0 {
        0
    } else {
        f.to_bits()
    }
}

fn float_total(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => canonical_bits(*f).hash(state),
            Value::Text(s) => s.hash(state),
            Value::Date(d) => d.hash(state),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => float_total(*a, *b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64` and still reads
/// as a float (`1.0`, not `1`).
pub fn format_float(f: f64) -> String {
    if f.is_nan() {
        "NaN".to_string()
    } else if f.is_infinite() {
        if f > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{f:?}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Text(s) => f.write_str(s),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<NaiveDate> for Value {
    fn from(v: NaiveDate) -> Self {
        Value::Date(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

// JSON form: null, bool, integer, float, string; dates as {"date": "YYYY-MM-DD"}
// and non-finite floats as {"float": "NaN"} so no information is lost.
impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            Value::Null => s.serialize_unit(),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Float(f) if f.is_finite() => s.serialize_f64(*f),
            Value::Float(f) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("float", &format_float(*f))?;
                m.end()
            }
            Value::Text(t) => s.serialize_str(t),
            Value::Date(d) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("date", &d.format("%Y-%m-%d").to_string())?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let json = serde_json::Value::deserialize(d)?;
        value_from_json(&json).map_err(D::Error::custom)
    }
}

pub(crate) fn value_from_json(json: &serde_json::Value) -> Result<Value, String> {
    use serde_json::Value as J;
    Ok(match json {
        J::Null => Value::Null,
        J::Bool(b) => Value::Bool(*b),
        J::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::Int(i)
            } else {
                Value::Float(n.as_f64().ok_or("unrepresentable number")?)
            }
        }
        J::String(s) => Value::Text(s.clone()),
        J::Object(m) if m.len() == 1 => {
            if let Some(J::String(s)) = m.get("date") {
                Value::Date(parse_iso_date(s).ok_or_else(|| format!("bad date `{s}`"))?)
            } else if let Some(J::String(s)) = m.get("float") {
                Value::Float(s.parse().map_err(|_| format!("bad float `{s}`"))?)
            } else {
                return Err("expected {\"date\": ..} or {\"float\": ..}".into());
            }
        }
        other => return Err(format!("unsupported cell value {other}")),
    })
}

/// Strict `YYYY-MM-DD`.
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot compare {left} with {right}")]
pub struct TypeMismatch {
    pub left: &'static str,
    pub right: &'static str,
}

/// Checked comparison of two cells.
///
/// Null sorts before everything. Floats are equal when their relative
/// difference is at most `float_tol`. Comparing different tags is an error.
pub fn compare_values(a: &Value, b: &Value, float_tol: f64) -> Result<Ordering, TypeMismatch> {
    match (a, b) {
        (Value::Null, Value::Null) => Ok(Ordering::Equal),
        (Value::Null, _) => Ok(Ordering::Less),
        (_, Value::Null) => Ok(Ordering::Greater),
        (Value::Float(x), Value::Float(y)) => {
            if floats_close(*x, *y, float_tol) {
                Ok(Ordering::Equal)
            } else {
                Ok(float_total(*x, *y))
            }
        }
        (x, y) if x.rank() == y.rank() => Ok(x.cmp(y)),
        (x, y) => Err(TypeMismatch {
            left: x.tag_name(),
            right: y.tag_name(),
        }),
    }
}

pub(crate) fn floats_close(x: f64, y: f64, tol: f64) -> bool {
    if x == y || (x.is_nan() && y.is_nan()) {
        return true;
    }
    let scale = x.abs().max(y.abs());
    scale.is_finite() && (x - y).abs() <= tol * scale
}
