//! Row-scoped expressions and predicates.
//!
//! Expressions are evaluated column-at-a-time against a table. Null
//! propagates through arithmetic, comparisons, and most functions; the
//! logical connectives use three-valued logic and a predicate only selects
//! rows where it evaluates to `true`.

use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::Table;
use crate::value::{parse_iso_date, DataKind, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("operator `{op}` cannot apply to {left} and {right}")]
    TypeMismatch {
        op: String,
        left: String,
        right: String,
    },
    #[error("function `{func}` expects {expected}")]
    BadArguments {
        func: &'static str,
        expected: String,
    },
    #[error("expression must be boolean, found {0}")]
    NotBoolean(DataKind),
    #[error("evaluation failed at row {row}: {message}")]
    Eval { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl std::ops::Not for Expr {
    type Output = Expr;

    fn not(self) -> Expr {
        Expr::Unary(UnaryOp::Not, Box::new(self))
    }
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }

    fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

/// Built-in scalar functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Concat,
    Upper,
    Lower,
    Trim,
    Length,
    Year,
    Month,
    Day,
    Date,
    WithYear,
    Coalesce,
    ToText,
    ToFloat,
    Abs,
}

impl Func {
    pub const ALL: [Func; 14] = [
        Func::Concat,
        Func::Upper,
        Func::Lower,
        Func::Trim,
        Func::Length,
        Func::Year,
        Func::Month,
        Func::Day,
        Func::Date,
        Func::WithYear,
        Func::Coalesce,
        Func::ToText,
        Func::ToFloat,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Concat => "concat",
            Func::Upper => "upper",
            Func::Lower => "lower",
            Func::Trim => "trim",
            Func::Length => "length",
            Func::Year => "year",
            Func::Month => "month",
            Func::Day => "day",
            Func::Date => "date",
            Func::WithYear => "with_year",
            Func::Coalesce => "coalesce",
            Func::ToText => "text",
            Func::ToFloat => "float",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        let lower = name.to_ascii_lowercase();
        Func::ALL.into_iter().find(|f| f.name() == lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    IsNull { expr: Box<Expr>, negated: bool },
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn col(name: impl Into<String>) -> Expr {
        Expr::Column(name.into())
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Literal(v.into())
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn eq(self, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Eq, self, r)
    }

    pub fn lt(self, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Lt, self, r)
    }

    pub fn gt(self, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Gt, self, r)
    }

    pub fn and(self, r: Expr) -> Expr {
        Expr::binary(BinaryOp::And, self, r)
    }

    pub fn or(self, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Or, self, r)
    }

    pub fn is_null(self) -> Expr {
        Expr::IsNull {
            expr: Box::new(self),
            negated: false,
        }
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Expr {
        Expr::Call(f, args)
    }

    /// Column names referenced anywhere in the expression.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_columns(&mut out);
        out
    }

    fn visit_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Column(c) => out.push(c),
            Expr::Literal(_) => {}
            Expr::Unary(_, e) | Expr::IsNull { expr: e, .. } => e.visit_columns(out),
            Expr::Binary(_, l, r) => {
                l.visit_columns(out);
                r.visit_columns(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_columns(out)),
        }
    }

    /// Static result kind over `table`'s schema; `None` means the expression
    /// is the bare null literal (or only ever null).
    pub fn infer_kind(&self, table: &Table) -> Result<Option<DataKind>, ExprError> {
        use DataKind::*;
        Ok(match self {
            Expr::Column(c) => Some(
                table
                    .column(c)
                    .map_err(|_| ExprError::UnknownColumn(c.clone()))?
                    .kind(),
            ),
            Expr::Literal(v) => v.kind(),
            Expr::Unary(UnaryOp::Neg, e) => match e.infer_kind(table)? {
                None => None,
                Some(k) if k.is_numeric() => Some(k),
                Some(k) => return Err(mismatch("-", Some(k), None)),
            },
            Expr::Unary(UnaryOp::Not, e) => match e.infer_kind(table)? {
                None | Some(Boolean) => Some(Boolean),
                Some(k) => return Err(ExprError::NotBoolean(k)),
            },
            Expr::IsNull { expr, .. } => {
                expr.infer_kind(table)?;
                Some(Boolean)
            }
            Expr::Binary(op, l, r) => {
                let (lk, rk) = (l.infer_kind(table)?, r.infer_kind(table)?);
                match op {
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => match (lk, rk) {
                        (Some(Integer), Some(Integer)) => Some(Integer),
                        (Some(a), Some(b)) if a.is_numeric() && b.is_numeric() => Some(Float),
                        (Some(a), None) | (None, Some(a)) if a.is_numeric() => Some(a),
                        (None, None) => None,
                        _ => return Err(mismatch(op.symbol(), lk, rk)),
                    },
                    BinaryOp::Div => match (lk, rk) {
                        (Some(a), Some(b)) if a.is_numeric() && b.is_numeric() => Some(Float),
                        (Some(a), None) | (None, Some(a)) if a.is_numeric() => Some(Float),
                        (None, None) => None,
                        _ => return Err(mismatch(op.symbol(), lk, rk)),
                    },
                    BinaryOp::And | BinaryOp::Or => match (lk, rk) {
                        (None | Some(Boolean), None | Some(Boolean)) => Some(Boolean),
                        _ => return Err(mismatch(op.symbol(), lk, rk)),
                    },
                    _ => match (lk, rk) {
                        (None, _) | (_, None) => Some(Boolean),
                        (Some(a), Some(b)) if a == b || (a.is_numeric() && b.is_numeric()) => {
                            Some(Boolean)
                        }
                        _ => return Err(mismatch(op.symbol(), lk, rk)),
                    },
                }
            }
            Expr::Call(f, args) => {
                let kinds = args
                    .iter()
                    .map(|a| a.infer_kind(table))
                    .collect::<Result<Vec<_>, _>>()?;
                call_kind(*f, &kinds)?
            }
        })
    }

    /// Evaluates the expression for every row of `table`.
    pub fn evaluate(&self, table: &Table) -> Result<Vec<Value>, ExprError> {
        self.infer_kind(table)?;
        self.eval(table)
    }

    /// Evaluates as a predicate: `true` selects, `false` and null do not.
    pub fn truth(&self, table: &Table) -> Result<Vec<bool>, ExprError> {
        match self.infer_kind(table)? {
            None | Some(DataKind::Boolean) => {}
            Some(k) => return Err(ExprError::NotBoolean(k)),
        }
        Ok(self
            .eval(table)?
            .into_iter()
            .map(|v| matches!(v, Value::Bool(true)))
            .collect())
    }

    fn eval(&self, table: &Table) -> Result<Vec<Value>, ExprError> {
        let n = table.row_count();
        match self {
            Expr::Column(c) => Ok(table
                .column(c)
                .map_err(|_| ExprError::UnknownColumn(c.clone()))?
                .cells()
                .to_vec()),
            Expr::Literal(v) => Ok(vec![v.clone(); n]),
            Expr::Unary(op, e) => {
                let vals = e.eval(table)?;
                vals.into_iter()
                    .enumerate()
                    .map(|(row, v)| eval_unary(*op, v, row))
                    .collect()
            }
            Expr::IsNull { expr, negated } => Ok(expr
                .eval(table)?
                .into_iter()
                .map(|v| Value::Bool(v.is_null() != *negated))
                .collect()),
            Expr::Binary(op, l, r) => {
                let lv = l.eval(table)?;
                let rv = r.eval(table)?;
                lv.into_iter()
                    .zip(rv)
                    .enumerate()
                    .map(|(row, (a, b))| eval_binary(*op, a, b, row))
                    .collect()
            }
            Expr::Call(f, args) => {
                let cols = args
                    .iter()
                    .map(|a| a.eval(table))
                    .collect::<Result<Vec<_>, _>>()?;
                (0..n)
                    .map(|row| {
                        let argv: Vec<&Value> = cols.iter().map(|c| &c[row]).collect();
                        eval_call(*f, &argv, row)
                    })
                    .collect()
            }
        }
    }
}

fn mismatch(op: &str, l: Option<DataKind>, r: Option<DataKind>) -> ExprError {
    let show = |k: Option<DataKind>| k.map_or("null".to_string(), |k| k.to_string());
    ExprError::TypeMismatch {
        op: op.to_string(),
        left: show(l),
        right: show(r),
    }
}

fn call_kind(f: Func, kinds: &[Option<DataKind>]) -> Result<Option<DataKind>, ExprError> {
    use DataKind::*;
    let bad = |expected: &str| ExprError::BadArguments {
        func: f.name(),
        expected: expected.to_string(),
    };
    let one = |want: DataKind| -> Result<(), ExprError> {
        match kinds {
            [None] => Ok(()),
            [Some(k)] if *k == want => Ok(()),
            _ => Err(bad(&format!("one {want} argument"))),
        }
    };
    Ok(match f {
        Func::Concat => {
            if kinds.is_empty() {
                return Err(bad("at least one argument"));
            }
            Some(Text)
        }
        Func::Upper | Func::Lower | Func::Trim => {
            one(Text)?;
            Some(Text)
        }
        Func::Length => {
            one(Text)?;
            Some(Integer)
        }
        Func::Year | Func::Month | Func::Day => {
            one(Date)?;
            Some(Integer)
        }
        Func::Date => {
            one(Text)?;
            Some(Date)
        }
        Func::WithYear => match kinds {
            [None | Some(Date), None | Some(Integer)] => Some(Date),
            _ => return Err(bad("a date and an int")),
        },
        Func::Coalesce => {
            let mut kind = None;
            for k in kinds.iter().flatten() {
                kind = match (kind, *k) {
                    (None, k) => Some(k),
                    (Some(a), b) if a == b => Some(a),
                    (Some(a), b) if a.is_numeric() && b.is_numeric() => Some(Float),
                    _ => return Err(bad("arguments of one type")),
                };
            }
            if kinds.is_empty() {
                return Err(bad("at least one argument"));
            }
            kind
        }
        Func::ToText => {
            if kinds.len() != 1 {
                return Err(bad("one argument"));
            }
            Some(Text)
        }
        Func::ToFloat => match kinds {
            [None] => Some(Float),
            [Some(k)] if k.is_numeric() => Some(Float),
            _ => return Err(bad("one numeric argument")),
        },
        Func::Abs => match kinds {
            [None] => None,
            [Some(k)] if k.is_numeric() => Some(*k),
            _ => return Err(bad("one numeric argument")),
        },
    })
}

fn eval_err(row: usize, message: impl Into<String>) -> ExprError {
    ExprError::Eval {
        row,
        message: message.into(),
    }
}

fn eval_unary(op: UnaryOp, v: Value, row: usize) -> Result<Value, ExprError> {
    Ok(match (op, v) {
        (_, Value::Null) => Value::Null,
        (UnaryOp::Neg, Value::Int(i)) => Value::Int(
            i.checked_neg()
                .ok_or_else(|| eval_err(row, "integer overflow"))?,
        ),
        (UnaryOp::Neg, Value::Float(f)) => Value::Float(-f),
        (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
        (op, v) => {
            return Err(eval_err(
                row,
                format!("cannot apply {op:?} to {}", v.tag_name()),
            ))
        }
    })
}

fn eval_binary(op: BinaryOp, a: Value, b: Value, row: usize) -> Result<Value, ExprError> {
    use std::cmp::Ordering;
    match op {
        BinaryOp::And => {
            return Ok(match (&a, &b) {
                (Value::Bool(false), _) | (_, Value::Bool(false)) => Value::Bool(false),
                (Value::Bool(true), Value::Bool(true)) => Value::Bool(true),
                _ => Value::Null,
            })
        }
        BinaryOp::Or => {
            return Ok(match (&a, &b) {
                (Value::Bool(true), _) | (_, Value::Bool(true)) => Value::Bool(true),
                (Value::Bool(false), Value::Bool(false)) => Value::Bool(false),
                _ => Value::Null,
            })
        }
        _ => {}
    }
    if a.is_null() || b.is_null() {
        return Ok(Value::Null);
    }
    if op.is_comparison() {
        let ord = match (&a, &b) {
            (Value::Int(_), Value::Float(_)) | (Value::Float(_), Value::Int(_)) => {
                let (x, y) = (
                    a.as_f64().unwrap_or_default(),
                    b.as_f64().unwrap_or_default(),
                );
                x.partial_cmp(&y).unwrap_or(Ordering::Equal)
            }
            _ => a.cmp(&b),
        };
        let res = match op {
            BinaryOp::Eq => ord == Ordering::Equal,
            BinaryOp::Ne => ord != Ordering::Equal,
            BinaryOp::Lt => ord == Ordering::Less,
            BinaryOp::Le => ord != Ordering::Greater,
            BinaryOp::Gt => ord == Ordering::Greater,
            _ => ord != Ordering::Less,
        };
        return Ok(Value::Bool(res));
    }
    match (op, &a, &b) {
        (BinaryOp::Div, _, _) => {
            let (x, y) = (a.as_f64(), b.as_f64());
            match (x, y) {
                (Some(_), Some(0.0)) => Err(eval_err(row, "division by zero")),
                (Some(x), Some(y)) => Ok(Value::Float(x / y)),
                _ => Err(eval_err(row, "non-numeric division")),
            }
        }
        (_, Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinaryOp::Add => x.checked_add(*y),
                BinaryOp::Sub => x.checked_sub(*y),
                _ => x.checked_mul(*y),
            };
            r.map(Value::Int)
                .ok_or_else(|| eval_err(row, "integer overflow"))
        }
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => Ok(Value::Float(match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                _ => x * y,
            })),
            _ => Err(eval_err(
                row,
                format!(
                    "cannot apply `{}` to {} and {}",
                    op.symbol(),
                    a.tag_name(),
                    b.tag_name()
                ),
            )),
        },
    }
}

fn eval_call(f: Func, args: &[&Value], row: usize) -> Result<Value, ExprError> {
    if f == Func::Coalesce {
        return Ok(args
            .iter()
            .find(|v| !v.is_null())
            .map_or(Value::Null, |v| (*v).clone()));
    }
    if args.iter().any(|v| v.is_null()) {
        return Ok(Value::Null);
    }
    Ok(match (f, args) {
        (Func::Concat, _) => Value::Text(args.iter().map(|v| v.to_string()).collect()),
        (Func::Upper, [Value::Text(s)]) => Value::Text(s.to_uppercase()),
        (Func::Lower, [Value::Text(s)]) => Value::Text(s.to_lowercase()),
        (Func::Trim, [Value::Text(s)]) => Value::Text(s.trim().to_string()),
        (Func::Length, [Value::Text(s)]) => Value::Int(s.chars().count() as i64),
        (Func::Year, [Value::Date(d)]) => Value::Int(d.year() as i64),
        (Func::Month, [Value::Date(d)]) => Value::Int(d.month() as i64),
        (Func::Day, [Value::Date(d)]) => Value::Int(d.day() as i64),
        (Func::Date, [Value::Text(s)]) => Value::Date(
            parse_iso_date(s)
                .ok_or_else(|| eval_err(row, format!("`{s}` is not a YYYY-MM-DD date")))?,
        ),
        (Func::WithYear, [Value::Date(d), Value::Int(y)]) => {
            let year = i32::try_from(*y).map_err(|_| eval_err(row, "year out of range"))?;
            Value::Date(
                d.with_year(year)
                    .ok_or_else(|| eval_err(row, format!("{d} has no counterpart in {y}")))?,
            )
        }
        (Func::ToText, [v]) => Value::Text(v.to_string()),
        (Func::ToFloat, [v]) => {
            Value::Float(v.as_f64().ok_or_else(|| eval_err(row, "not numeric"))?)
        }
        (Func::Abs, [Value::Int(i)]) => Value::Int(
            i.checked_abs()
                .ok_or_else(|| eval_err(row, "integer overflow"))?,
        ),
        (Func::Abs, [Value::Float(x)]) => Value::Float(x.abs()),
        (f, _) => return Err(eval_err(row, format!("bad arguments to {}", f.name()))),
    })
}

const RESERVED: &[&str] = &["true", "false", "null", "and", "or", "not", "is"];

/// Writes a column or handle name, backtick-quoting it when it is not a
/// plain identifier.
pub fn write_ident(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_plain_ident(name) {
        f.write_str(name)
    } else {
        write!(f, "`{}`", name.replace('`', "``"))
    }
}

pub(crate) fn is_plain_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name.to_ascii_lowercase().as_str())
}

/// Writes a literal in the pipeline language's syntax.
pub fn write_literal(f: &mut impl fmt::Write, v: &Value) -> fmt::Result {
    match v {
        Value::Null => f.write_str("null"),
        Value::Text(s) => write_string(f, s),
        Value::Date(_) => {
            f.write_str("date(")?;
            write_string(f, &v.to_string())?;
            f.write_str(")")
        }
        Value::Float(x) if !x.is_finite() => {
            f.write_str("float(")?;
            write_string(f, &v.to_string())?;
            f.write_str(")")
        }
        other => write!(f, "{other}"),
    }
}

pub fn write_string(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(UnaryOp::Not, _) => 3,
        Expr::IsNull { .. } => 4,
        Expr::Unary(UnaryOp::Neg, _) => 7,
        _ => 8,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => write_ident(f, c),
            Expr::Literal(v) => write_literal(f, v),
            Expr::Unary(UnaryOp::Neg, e) => {
                f.write_str("-")?;
                let numeric_lit = matches!(**e, Expr::Literal(Value::Int(_) | Value::Float(_)));
                write_child(f, e, numeric_lit || precedence(e) < 7)
            }
            Expr::Unary(UnaryOp::Not, e) => {
                f.write_str("not ")?;
                write_child(f, e, precedence(e) < 3)
            }
            Expr::IsNull { expr, negated } => {
                write_child(f, expr, precedence(expr) <= 4)?;
                f.write_str(if *negated { " is not null" } else { " is null" })
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                // Comparisons do not chain, so both sides need parentheses at
                // equal precedence; the other operators are left-associative.
                let left_parens = if op.is_comparison() {
                    precedence(l) <= p
                } else {
                    precedence(l) < p
                };
                write_child(f, l, left_parens)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, precedence(r) <= p)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        crate::dsl::parse_expression(&text).map_err(serde::de::Error::custom)
    }
}
