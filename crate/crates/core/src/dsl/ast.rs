use std::fmt;

use serde::Serialize;

use crate::algebra::{
    BinSpec, Combiner, FillMethod, Generator, Mapping, MatchMode, SchemaPolicy, Splitter,
};
use crate::audit::AuditSpec;
use crate::expr::{is_plain_ident, write_literal, write_string, Expr};
use crate::io::CsvOptions;
use crate::operation::Operation;
use crate::table::RowSelector;
use crate::value::{format_float, Value};

/// A parsed `.wr` script.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub statements: Vec<Statement>,
}

/// 1-based position of a statement's first token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub stmt: Stmt,
    pub span: Span,
}

/// Statements compare by content; spans are ignored.
impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.stmt == other.stmt
    }
}

impl PartialEq for Pipeline {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Load {
        path: String,
        handle: String,
        options: CsvOptions,
    },
    Fetch {
        url: String,
        handle: String,
        options: CsvOptions,
    },
    Export {
        handle: String,
        path: String,
    },
    Audit(AuditSpec),
    /// `delete h` is an apply of `delete_table` with no targets.
    Apply {
        targets: Vec<String>,
        op: Operation,
        inputs: Vec<String>,
    },
}

impl Stmt {
    /// Handles the statement reads.
    pub fn reads(&self) -> Vec<&str> {
        match self {
            Stmt::Load { .. } | Stmt::Fetch { .. } => Vec::new(),
            Stmt::Export { handle, .. } => vec![handle.as_str()],
            Stmt::Audit(a) => a.tables(),
            Stmt::Apply { inputs, .. } => inputs.iter().map(String::as_str).collect(),
        }
    }

    /// Handles the statement binds, as written.
    pub fn binds(&self) -> Vec<&str> {
        match self {
            Stmt::Load { handle, .. } | Stmt::Fetch { handle, .. } => vec![handle.as_str()],
            Stmt::Apply { targets, .. } => targets.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }
}

/// Words with a meaning somewhere in the grammar. Names equal to one of
/// these are printed in backticks.
pub(crate) const KEYWORDS: &[&str] = &[
    "load",
    "fetch",
    "export",
    "delete",
    "audit",
    "as",
    "to",
    "where",
    "with",
    "on",
    "by",
    "agg",
    "cols",
    "col",
    "into",
    "key",
    "value",
    "sort",
    "order",
    "asc",
    "desc",
    "policy",
    "mode",
    "sep",
    "expr",
    "lookup",
    "rows",
    "values",
    "set",
    "bins",
    "distinct",
    "at",
    "method",
    "alternate",
    "total",
    "grouped",
    "drift",
    "keys",
    "profile",
    "tol",
    "delimiter",
    "quote",
    "noheader",
    "noinfer",
    "types",
    "strict",
    "union",
    "inner",
    "semi",
    "anti",
    "linear",
    "forward_fill",
    "group_mean",
    "create_table",
    "create_column",
    "create_row",
    "delete_column",
    "delete_row",
    "rearrange",
    "fold",
    "unfold",
    "transform",
    "transform_row",
    "subset",
    "decompose",
    "split",
    "separate_column",
    "separate_row",
    "extend",
    "supplement",
    "match",
    "combine",
    "summarize",
    "interpolate",
    "filter",
    "group_aggregate",
    "split_compute_merge",
    "divide_conquer",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    KEYWORDS.contains(&lower.as_str())
}

/// Writes a handle or column name outside an expression.
pub fn write_name(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_plain_ident(name) && !is_keyword(name) {
        f.write_str(name)
    } else {
        write!(f, "`{}`", name.replace('`', "``"))
    }
}

fn names(f: &mut impl fmt::Write, list: &[String]) -> fmt::Result {
    for (i, n) in list.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_name(f, n)?;
    }
    Ok(())
}

fn bracketed(f: &mut impl fmt::Write, list: &[String]) -> fmt::Result {
    f.write_char('[')?;
    names(f, list)?;
    f.write_char(']')
}

fn literals(f: &mut impl fmt::Write, list: &[Value]) -> fmt::Result {
    f.write_char('(')?;
    for (i, v) in list.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_literal(f, v)?;
    }
    f.write_char(')')
}

fn char_option(f: &mut impl fmt::Write, word: &str, c: char) -> fmt::Result {
    write!(f, " {word} ")?;
    write_string(f, &c.to_string())
}

fn csv_options(f: &mut impl fmt::Write, o: &CsvOptions) -> fmt::Result {
    let d = CsvOptions::default();
    if o.delimiter != d.delimiter {
        char_option(f, "delimiter", o.delimiter)?;
    }
    if o.quote != d.quote {
        char_option(f, "quote", o.quote)?;
    }
    if !o.header {
        f.write_str(" noheader")?;
    }
    if !o.infer {
        f.write_str(" noinfer")?;
    }
    if o.null != d.null {
        f.write_str(" null ")?;
        write_string(f, &o.null)?;
    }
    if !o.types.is_empty() {
        f.write_str(" types (")?;
        for (i, (c, k)) in o.types.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_name(f, c)?;
            write!(f, " {k}")?;
        }
        f.write_char(')')?;
    }
    Ok(())
}

fn selector(f: &mut impl fmt::Write, s: &RowSelector) -> fmt::Result {
    match s {
        RowSelector::Predicate(p) => write!(f, " where {p}"),
        RowSelector::Indices(idx) => {
            f.write_str(" rows [")?;
            for (i, r) in idx.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{r}")?;
            }
            f.write_char(']')
        }
    }
}

fn expr_edits(f: &mut impl fmt::Write, edits: &[(String, Expr)]) -> fmt::Result {
    for (i, (c, e)) in edits.iter().enumerate() {
        f.write_str(if i == 0 { " set " } else { ", " })?;
        write_name(f, c)?;
        write!(f, " = {e}")?;
    }
    Ok(())
}

fn bins(f: &mut impl fmt::Write, b: &Option<BinSpec>) -> fmt::Result {
    match b {
        None => Ok(()),
        Some(BinSpec::Distinct) => f.write_str(" distinct"),
        Some(BinSpec::Bins { count }) => write!(f, " bins {count}"),
    }
}

fn aggs(f: &mut impl fmt::Write, list: &[crate::algebra::Aggregation]) -> fmt::Result {
    f.write_str(" agg ")?;
    for (i, a) in list.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}(", a.func.name())?;
        if let Some(t) = &a.target {
            write_name(f, t)?;
        }
        f.write_str(") as ")?;
        write_name(f, &a.output)?;
    }
    Ok(())
}

fn tol(f: &mut impl fmt::Write, t: Option<f64>) -> fmt::Result {
    match t {
        Some(t) => write!(f, " tol {}", format_float(t)),
        None => Ok(()),
    }
}

fn audit(f: &mut impl fmt::Write, a: &AuditSpec) -> fmt::Result {
    f.write_str("audit ")?;
    match a {
        AuditSpec::Total {
            a,
            b,
            column,
            tol: t,
        } => {
            f.write_str("total ")?;
            names(f, &[a.clone(), b.clone()])?;
            f.write_str(" on ")?;
            write_name(f, column)?;
            tol(f, *t)
        }
        AuditSpec::Grouped {
            a,
            b,
            group,
            column,
            tol: t,
        } => {
            f.write_str("grouped ")?;
            names(f, &[a.clone(), b.clone()])?;
            f.write_str(" by ")?;
            write_name(f, group)?;
            f.write_str(" on ")?;
            write_name(f, column)?;
            tol(f, *t)
        }
        AuditSpec::Drift { a, b } => {
            f.write_str("drift ")?;
            names(f, &[a.clone(), b.clone()])
        }
        AuditSpec::Keys { table, columns } => {
            f.write_str("keys ")?;
            write_name(f, table)?;
            f.write_str(" cols ")?;
            bracketed(f, columns)
        }
        AuditSpec::Profile { table } => {
            f.write_str("profile ")?;
            write_name(f, table)
        }
    }
}

fn apply<W: fmt::Write>(
    f: &mut W,
    targets: &[String],
    op: &Operation,
    inputs: &[String],
) -> fmt::Result {
    use Operation::*;
    if let DeleteTable = op {
        f.write_str("delete ")?;
        return names(f, inputs);
    }
    match targets {
        [one] => write_name(f, one)?,
        many => {
            f.write_char('(')?;
            names(f, many)?;
            f.write_char(')')?;
        }
    }
    write!(f, " = {}", op.name())?;
    let first = |f: &mut W| -> fmt::Result {
        if let Some(h) = inputs.first() {
            f.write_char(' ')?;
            write_name(f, h)?;
        }
        Ok(())
    };
    match op {
        CreateTable { schema, rows } => {
            f.write_str(" (")?;
            for (i, field) in schema.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_name(f, &field.name)?;
                write!(f, " {}", field.dtype())?;
            }
            f.write_char(')')?;
            for (i, r) in rows.iter().enumerate() {
                f.write_str(if i == 0 { " rows " } else { ", " })?;
                literals(f, r)?;
            }
        }
        CreateColumn {
            name,
            dtype,
            generator,
        } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, name)?;
            write!(f, " {dtype} = ")?;
            match generator {
                Generator::Constant(v) => write_literal(f, v)?,
                Generator::Expression(e) => write!(f, "{e}")?,
            }
        }
        CreateRow { values } => {
            first(f)?;
            f.write_str(" values ")?;
            literals(f, values)?;
        }
        DeleteTable => unreachable!(),
        DeleteColumn { column } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, column)?;
        }
        DeleteRow { selector: s } => {
            first(f)?;
            selector(f, s)?;
        }
        Rearrange { sort, order } => {
            first(f)?;
            for (i, k) in sort.iter().enumerate() {
                f.write_str(if i == 0 { " sort " } else { ", " })?;
                write_name(f, &k.column)?;
                if k.descending {
                    f.write_str(" desc")?;
                }
            }
            if let Some(o) = order {
                f.write_str(" order ")?;
                bracketed(f, o)?;
            }
        }
        Fold {
            columns,
            key,
            value,
        } => {
            first(f)?;
            f.write_str(" cols ")?;
            bracketed(f, columns)?;
            f.write_str(" into (")?;
            names(f, &[key.clone(), value.clone()])?;
            f.write_char(')')?;
        }
        Unfold { key, value } => {
            first(f)?;
            f.write_str(" key ")?;
            write_name(f, key)?;
            f.write_str(" value ")?;
            write_name(f, value)?;
        }
        TransformColumn {
            column,
            mapping,
            rename,
        } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, column)?;
            match mapping {
                Mapping::Expression(e) => write!(f, " = {e}")?,
                Mapping::Lookup(pairs) => {
                    f.write_str(" lookup {")?;
                    for (i, (k, v)) in pairs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_literal(f, k)?;
                        f.write_str(" -> ")?;
                        write_literal(f, v)?;
                    }
                    f.write_char('}')?;
                }
            }
            if let Some(r) = rename {
                f.write_str(" as ")?;
                write_name(f, r)?;
            }
        }
        TransformRow { selector: s, edits } => {
            first(f)?;
            selector(f, s)?;
            for (i, (c, v)) in edits.iter().enumerate() {
                f.write_str(if i == 0 { " set " } else { ", " })?;
                write_name(f, c)?;
                f.write_str(" = ")?;
                write_literal(f, v)?;
            }
        }
        Subset { predicate } | Filter { predicate } => {
            first(f)?;
            write!(f, " where {predicate}")?;
        }
        Decompose { column, bins: b } => {
            first(f)?;
            f.write_str(" by ")?;
            write_name(f, column)?;
            bins(f, b)?;
        }
        Split { key, columns } => {
            first(f)?;
            f.write_str(" on ")?;
            write_name(f, key)?;
            f.write_str(" cols ")?;
            bracketed(f, columns)?;
        }
        SeparateColumn {
            column,
            splitter,
            into,
        } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, column)?;
            match splitter {
                Splitter::Delimiter(d) => {
                    f.write_str(" by ")?;
                    write_string(f, d)?;
                }
                Splitter::Positions(p) => {
                    f.write_str(" at [")?;
                    for (i, x) in p.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{x}")?;
                    }
                    f.write_char(']')?;
                }
            }
            f.write_str(" into ")?;
            bracketed(f, into)?;
        }
        SeparateRow { column, delimiter } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, column)?;
            f.write_str(" by ")?;
            write_string(f, delimiter)?;
        }
        Extend { policy } => {
            f.write_char(' ')?;
            names(f, inputs)?;
            if *policy == SchemaPolicy::Union {
                f.write_str(" policy union")?;
            }
        }
        Supplement { key } | Match { key, .. } | LookupTransform { key, .. } => {
            first(f)?;
            f.write_str(" with ")?;
            if let Some(r) = inputs.get(1) {
                write_name(f, r)?;
            }
            f.write_str(" on ")?;
            write_name(f, key)?;
            match op {
                Match {
                    mode: MatchMode::Semi,
                    ..
                } => f.write_str(" mode semi")?,
                Match {
                    mode: MatchMode::Anti,
                    ..
                } => f.write_str(" mode anti")?,
                LookupTransform { value_column, .. } => {
                    f.write_str(" value ")?;
                    write_name(f, value_column)?;
                }
                _ => {}
            }
        }
        CombineColumns {
            columns,
            combiner,
            name,
        } => {
            first(f)?;
            f.write_str(" cols ")?;
            bracketed(f, columns)?;
            match combiner {
                Combiner::Separator(s) => {
                    f.write_str(" sep ")?;
                    write_string(f, s)?;
                }
                Combiner::Expression(e) => write!(f, " expr {e}")?,
            }
            f.write_str(" as ")?;
            write_name(f, name)?;
        }
        Summarize { by, aggs: a } => {
            first(f)?;
            if !by.is_empty() {
                f.write_str(" by ")?;
                names(f, by)?;
            }
            aggs(f, a)?;
        }
        GroupAggregate { by, aggs: a } => {
            first(f)?;
            f.write_str(" by ")?;
            write_name(f, by)?;
            aggs(f, a)?;
        }
        Interpolate {
            column,
            order,
            method,
        } => {
            first(f)?;
            f.write_str(" col ")?;
            write_name(f, column)?;
            if let Some(o) = order {
                f.write_str(" order ")?;
                write_name(f, o)?;
            }
            match method {
                FillMethod::Linear => f.write_str(" method linear")?,
                FillMethod::ForwardFill => f.write_str(" method forward_fill")?,
                FillMethod::GroupMean(g) => {
                    f.write_str(" method group_mean by ")?;
                    bracketed(f, g)?;
                }
            }
        }
        SplitComputeMerge { by, bins: b, edits } => {
            first(f)?;
            f.write_str(" by ")?;
            write_name(f, by)?;
            bins(f, b)?;
            expr_edits(f, edits)?;
        }
        DivideAndConquer {
            facet,
            edits,
            key,
            value,
            alternate,
        } => {
            first(f)?;
            write!(f, " where {facet} key ")?;
            write_name(f, key)?;
            f.write_str(" value ")?;
            write_name(f, value)?;
            f.write_str(" alternate ")?;
            write_name(f, alternate)?;
            expr_edits(f, edits)?;
        }
    }
    Ok(())
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Load {
                path,
                handle,
                options,
            }
            | Stmt::Fetch {
                url: path,
                handle,
                options,
            } => {
                f.write_str(if matches!(self, Stmt::Load { .. }) {
                    "load "
                } else {
                    "fetch "
                })?;
                write_string(f, path)?;
                f.write_str(" as ")?;
                write_name(f, handle)?;
                csv_options(f, options)
            }
            Stmt::Export { handle, path } => {
                f.write_str("export ")?;
                write_name(f, handle)?;
                f.write_str(" to ")?;
                write_string(f, path)
            }
            Stmt::Audit(a) => audit(f, a),
            Stmt::Apply {
                targets,
                op,
                inputs,
            } => apply(f, targets, op, inputs),
        }
    }
}

/// Canonical source text: one statement per line.
impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{}", s.stmt)?;
        }
        Ok(())
    }
}

/// The statement that would bind `targets` by running `op` on `inputs`.
pub fn statement_text(targets: &[String], op: &Operation, inputs: &[String]) -> String {
    let mut s = String::new();
    apply(&mut s, targets, op, inputs).expect("writing to a String cannot fail");
    s
}
