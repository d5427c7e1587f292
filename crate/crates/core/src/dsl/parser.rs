use std::collections::BTreeSet;

use super::ast::{Pipeline, Span, Statement, Stmt};
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::algebra::{
    AggFunc, Aggregation, BinSpec, Combiner, FillMethod, Generator, Mapping, MatchMode,
    SchemaPolicy, SortKey, Splitter,
};
use crate::audit::AuditSpec;
use crate::expr::{BinaryOp, Expr, Func, UnaryOp};
use crate::io::CsvOptions;
use crate::operation::Operation;
use crate::table::{Field, RowSelector};
use crate::value::{parse_iso_date, DataKind, DataType, Value};

type Result<T> = std::result::Result<T, ParseError>;

const EXPR_RESERVED: &[&str] = &["true", "false", "null", "and", "or", "not", "is"];

pub fn parse(src: &str) -> Result<Pipeline> {
    let mut p = Parser::new(src)?;
    let mut statements = Vec::new();
    loop {
        while p.is_sym(";") || p.peek().tok == Tok::Newline {
            p.bump();
        }
        if p.peek().tok == Tok::Eof {
            break;
        }
        let span = Span {
            line: p.peek().line,
            column: p.peek().column,
        };
        let stmt = p.statement()?;
        match &p.peek().tok {
            Tok::Newline | Tok::Eof | Tok::Sym(";") => {}
            _ => return Err(p.error("expected end of statement")),
        }
        statements.push(Statement { stmt, span });
    }
    Ok(Pipeline { statements })
}

pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    while p.peek().tok == Tok::Newline {
        p.bump();
    }
    let e = p.expr()?;
    while p.peek().tok == Tok::Newline {
        p.bump();
    }
    if p.peek().tok != Tok::Eof {
        return Err(p.error("unexpected input after expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::syntax(t.line, t.column, message.into(), t.text.clone())
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        self.peek().tok == Tok::Sym(sym(s))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        match &self.peek().tok {
            Tok::Ident(s) | Tok::Quoted(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn string(&mut self, what: &str) -> Result<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what} as a quoted string"))),
        }
    }

    fn single_char(&mut self, what: &str) -> Result<char> {
        let s = self.string(what)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(self.error_prev(format!("{what} must be one character"))),
        }
    }

    fn error_prev(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos.saturating_sub(1)];
        ParseError::syntax(t.line, t.column, message, t.text.clone())
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        match self.peek().tok {
            Tok::Int(i) if i >= 0 && i <= usize::MAX as i128 => {
                self.bump();
                Ok(i as usize)
            }
            _ => Err(self.error(format!("expected {what} as a non-negative integer"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let neg = self.eat_sym("-");
        let x = match self.peek().tok {
            Tok::Int(i) => i as f64,
            Tok::Float(f) => f,
            _ => return Err(self.error(format!("expected {what}"))),
        };
        self.bump();
        Ok(if neg { -x } else { x })
    }

    /// `a, b, c`: one or more names.
    fn names(&mut self, what: &str) -> Result<Vec<String>> {
        let mut out = vec![self.name(what)?];
        while self.eat_sym(",") {
            out.push(self.name(what)?);
        }
        Ok(out)
    }

    /// `[a, b]`, possibly empty.
    fn bracketed_names(&mut self, what: &str) -> Result<Vec<String>> {
        self.expect_sym("[")?;
        if self.eat_sym("]") {
            return Ok(Vec::new());
        }
        let out = self.names(what)?;
        self.expect_sym("]")?;
        Ok(out)
    }

    fn bracketed_counts(&mut self, what: &str) -> Result<Vec<usize>> {
        self.expect_sym("[")?;
        let mut out = Vec::new();
        if !self.eat_sym("]") {
            loop {
                out.push(self.count(what)?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("]")?;
        }
        Ok(out)
    }

    fn literal(&mut self) -> Result<Value> {
        let start = self.peek().clone();
        match self.unary()? {
            Expr::Literal(v) => Ok(v),
            _ => Err(ParseError::syntax(
                start.line,
                start.column,
                "expected a literal value".into(),
                start.text,
            )),
        }
    }

    fn tuple(&mut self) -> Result<Vec<Value>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.eat_sym(")") {
            loop {
                out.push(self.literal()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        Ok(out)
    }

    fn data_type(&mut self) -> Result<DataType> {
        let t = self.peek().clone();
        let word = self.name("a type")?;
        let kind = DataKind::parse(&word).ok_or_else(|| {
            ParseError::syntax(t.line, t.column, format!("unknown type `{word}`"), t.text)
        })?;
        Ok(DataType::nullable(kind).with_nullable(!self.eat_sym("!")))
    }

    fn kind(&mut self) -> Result<DataKind> {
        let t = self.peek().clone();
        let dt = self.data_type()?;
        if !dt.nullable {
            return Err(ParseError::syntax(
                t.line,
                t.column,
                "a non-null marker is not allowed here".into(),
                t.text,
            ));
        }
        Ok(dt.kind)
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Stmt> {
        let assignment = matches!(self.peek_at(1).tok, Tok::Sym("=")) || self.is_sym("(");
        if !assignment {
            if self.eat_kw("load") || self.is_kw("fetch") {
                let fetch = self.eat_kw("fetch");
                let path = self.string(if fetch { "a URL" } else { "a file path" })?;
                self.expect_kw("as")?;
                let handle = self.name("a table name")?;
                let options = self.csv_options()?;
                return Ok(if fetch {
                    Stmt::Fetch {
                        url: path,
                        handle,
                        options,
                    }
                } else {
                    Stmt::Load {
                        path,
                        handle,
                        options,
                    }
                });
            }
            if self.eat_kw("export") {
                let handle = self.name("a table name")?;
                self.expect_kw("to")?;
                let path = self.string("a file path")?;
                return Ok(Stmt::Export { handle, path });
            }
            if self.eat_kw("delete") {
                let handle = self.name("a table name")?;
                return Ok(Stmt::Apply {
                    targets: Vec::new(),
                    op: Operation::DeleteTable,
                    inputs: vec![handle],
                });
            }
            if self.eat_kw("audit") {
                return self.audit().map(Stmt::Audit);
            }
            if matches!(self.peek().tok, Tok::Ident(_) | Tok::Quoted(_)) {
                return Err(self.error_at_next("expected `=` after the target name"));
            }
            return Err(self.error("expected a statement"));
        }
        let targets = if self.eat_sym("(") {
            let t = self.names("a target name")?;
            self.expect_sym(")")?;
            t
        } else {
            vec![self.name("a target name")?]
        };
        self.expect_sym("=")?;
        let (op, inputs) = self.opcall()?;
        Ok(Stmt::Apply {
            targets,
            op,
            inputs,
        })
    }

    fn error_at_next(&self, message: &str) -> ParseError {
        let t = self.peek_at(1);
        ParseError::syntax(t.line, t.column, message.into(), t.text.clone())
    }

    fn csv_options(&mut self) -> Result<CsvOptions> {
        let mut o = CsvOptions::default();
        loop {
            if self.eat_kw("delimiter") {
                o.delimiter = self.single_char("delimiter")?;
            } else if self.eat_kw("quote") {
                o.quote = self.single_char("quote character")?;
            } else if self.eat_kw("noheader") {
                o.header = false;
            } else if self.eat_kw("noinfer") {
                o.infer = false;
            } else if self.eat_kw("null") {
                o.null = self.string("null literal")?;
            } else if self.eat_kw("types") {
                self.expect_sym("(")?;
                loop {
                    let c = self.name("a column name")?;
                    let k = self.kind()?;
                    o.types.push((c, k));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
            } else {
                return Ok(o);
            }
        }
    }

    fn tolerance(&mut self) -> Result<Option<f64>> {
        if self.eat_kw("tol") {
            Ok(Some(self.number("a tolerance")?))
        } else {
            Ok(None)
        }
    }

    fn audit(&mut self) -> Result<AuditSpec> {
        let pair = |p: &mut Parser| -> Result<(String, String)> {
            let a = p.name("a table name")?;
            p.expect_sym(",")?;
            Ok((a, p.name("a table name")?))
        };
        if self.eat_kw("total") {
            let (a, b) = pair(self)?;
            self.expect_kw("on")?;
            let column = self.name("a column name")?;
            let tol = self.tolerance()?;
            Ok(AuditSpec::Total { a, b, column, tol })
        } else if self.eat_kw("grouped") {
            let (a, b) = pair(self)?;
            self.expect_kw("by")?;
            let group = self.name("a column name")?;
            self.expect_kw("on")?;
            let column = self.name("a column name")?;
            let tol = self.tolerance()?;
            Ok(AuditSpec::Grouped {
                a,
                b,
                group,
                column,
                tol,
            })
        } else if self.eat_kw("drift") {
            let (a, b) = pair(self)?;
            Ok(AuditSpec::Drift { a, b })
        } else if self.eat_kw("keys") {
            let table = self.name("a table name")?;
            self.expect_kw("cols")?;
            let columns = self.bracketed_names("a column name")?;
            Ok(AuditSpec::Keys { table, columns })
        } else if self.eat_kw("profile") {
            Ok(AuditSpec::Profile {
                table: self.name("a table name")?,
            })
        } else {
            Err(self.error("expected total, grouped, drift, keys or profile"))
        }
    }

    fn selector(&mut self) -> Result<RowSelector> {
        if self.eat_kw("where") {
            Ok(RowSelector::Predicate(self.expr()?))
        } else if self.eat_kw("rows") {
            Ok(RowSelector::Indices(
                self.bracketed_counts("a row index")?
                    .into_iter()
                    .collect::<BTreeSet<_>>(),
            ))
        } else {
            Err(self.error("expected `where` or `rows`"))
        }
    }

    fn expr_edits(&mut self) -> Result<Vec<(String, Expr)>> {
        let mut out = Vec::new();
        if self.eat_kw("set") {
            loop {
                let c = self.name("a column name")?;
                self.expect_sym("=")?;
                out.push((c, self.expr()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        Ok(out)
    }

    fn bins(&mut self) -> Result<Option<BinSpec>> {
        if self.eat_kw("bins") {
            Ok(Some(BinSpec::Bins {
                count: self.count("a bin count")?,
            }))
        } else if self.eat_kw("distinct") {
            Ok(Some(BinSpec::Distinct))
        } else {
            Ok(None)
        }
    }

    fn aggs(&mut self) -> Result<Vec<Aggregation>> {
        self.expect_kw("agg")?;
        let mut out = Vec::new();
        loop {
            let t = self.peek().clone();
            let fname = self.name("an aggregate function")?;
            let func = AggFunc::from_name(&fname).ok_or_else(|| {
                ParseError::syntax(
                    t.line,
                    t.column,
                    format!("unknown aggregate `{fname}`"),
                    t.text,
                )
            })?;
            self.expect_sym("(")?;
            let target = if self.is_sym(")") {
                None
            } else {
                Some(self.name("a column name")?)
            };
            self.expect_sym(")")?;
            self.expect_kw("as")?;
            let output = self.name("an output column name")?;
            out.push(Aggregation {
                func,
                target,
                output,
            });
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    fn opcall(&mut self) -> Result<(Operation, Vec<String>)> {
        let t = self.peek().clone();
        let verb = match &t.tok {
            Tok::Ident(s) => s.to_ascii_lowercase(),
            _ => return Err(self.error("expected an operation name")),
        };
        self.bump();
        let table = |p: &mut Parser| p.name("a table name");
        let col = |p: &mut Parser| -> Result<String> {
            p.expect_kw("col")?;
            p.name("a column name")
        };
        let op = match verb.as_str() {
            "create_table" => {
                self.expect_sym("(")?;
                let mut schema = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        let name = self.name("a column name")?;
                        schema.push(Field::new(name, self.data_type()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                let mut rows = Vec::new();
                if self.eat_kw("rows") {
                    loop {
                        rows.push(self.tuple()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                return Ok((Operation::CreateTable { schema, rows }, Vec::new()));
            }
            "create_column" => {
                let t = table(self)?;
                let name = col(self)?;
                let dtype = self.data_type()?;
                self.expect_sym("=")?;
                let generator = match self.expr()? {
                    Expr::Literal(v) => Generator::Constant(v),
                    e => Generator::Expression(e),
                };
                (
                    Operation::CreateColumn {
                        name,
                        dtype,
                        generator,
                    },
                    vec![t],
                )
            }
            "create_row" => {
                let t = table(self)?;
                self.expect_kw("values")?;
                (
                    Operation::CreateRow {
                        values: self.tuple()?,
                    },
                    vec![t],
                )
            }
            "delete_column" => {
                let t = table(self)?;
                (Operation::DeleteColumn { column: col(self)? }, vec![t])
            }
            "delete_row" => {
                let t = table(self)?;
                (
                    Operation::DeleteRow {
                        selector: self.selector()?,
                    },
                    vec![t],
                )
            }
            "rearrange" => {
                let t = table(self)?;
                let mut sort = Vec::new();
                if self.eat_kw("sort") {
                    loop {
                        let column = self.name("a column name")?;
                        let descending = if self.eat_kw("desc") {
                            true
                        } else {
                            self.eat_kw("asc");
                            false
                        };
                        sort.push(SortKey { column, descending });
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                let order = if self.eat_kw("order") {
                    Some(self.bracketed_names("a column name")?)
                } else {
                    None
                };
                (Operation::Rearrange { sort, order }, vec![t])
            }
            "fold" => {
                let t = table(self)?;
                self.expect_kw("cols")?;
                let columns = self.bracketed_names("a column name")?;
                self.expect_kw("into")?;
                self.expect_sym("(")?;
                let key = self.name("the key column name")?;
                self.expect_sym(",")?;
                let value = self.name("the value column name")?;
                self.expect_sym(")")?;
                (
                    Operation::Fold {
                        columns,
                        key,
                        value,
                    },
                    vec![t],
                )
            }
            "unfold" => {
                let t = table(self)?;
                self.expect_kw("key")?;
                let key = self.name("the key column")?;
                self.expect_kw("value")?;
                let value = self.name("the value column")?;
                (Operation::Unfold { key, value }, vec![t])
            }
            "transform" => {
                let t = table(self)?;
                let column = col(self)?;
                let mapping = if self.eat_sym("=") {
                    Mapping::Expression(self.expr()?)
                } else if self.eat_kw("lookup") {
                    self.expect_sym("{")?;
                    let mut pairs = Vec::new();
                    if !self.eat_sym("}") {
                        loop {
                            let k = self.literal()?;
                            self.expect_sym("->")?;
                            pairs.push((k, self.literal()?));
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                        self.expect_sym("}")?;
                    }
                    Mapping::Lookup(pairs)
                } else {
                    return Err(self.error("expected `=` or `lookup`"));
                };
                let rename = if self.eat_kw("as") {
                    Some(self.name("a column name")?)
                } else {
                    None
                };
                (
                    Operation::TransformColumn {
                        column,
                        mapping,
                        rename,
                    },
                    vec![t],
                )
            }
            "transform_row" => {
                let t = table(self)?;
                let selector = self.selector()?;
                self.expect_kw("set")?;
                let mut edits = Vec::new();
                loop {
                    let c = self.name("a column name")?;
                    self.expect_sym("=")?;
                    edits.push((c, self.literal()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                (Operation::TransformRow { selector, edits }, vec![t])
            }
            "subset" | "filter" => {
                let t = table(self)?;
                self.expect_kw("where")?;
                let predicate = self.expr()?;
                let op = if verb == "subset" {
                    Operation::Subset { predicate }
                } else {
                    Operation::Filter { predicate }
                };
                (op, vec![t])
            }
            "decompose" => {
                let t = table(self)?;
                self.expect_kw("by")?;
                let column = self.name("a column name")?;
                let bins = self.bins()?;
                (Operation::Decompose { column, bins }, vec![t])
            }
            "split" => {
                let t = table(self)?;
                self.expect_kw("on")?;
                let key = self.name("the key column")?;
                self.expect_kw("cols")?;
                let columns = self.bracketed_names("a column name")?;
                (Operation::Split { key, columns }, vec![t])
            }
            "separate_column" => {
                let t = table(self)?;
                let column = col(self)?;
                let splitter = if self.eat_kw("by") {
                    Splitter::Delimiter(self.string("a delimiter")?)
                } else if self.eat_kw("at") {
                    Splitter::Positions(self.bracketed_counts("a character position")?)
                } else {
                    return Err(self.error("expected `by` or `at`"));
                };
                self.expect_kw("into")?;
                let into = self.bracketed_names("a column name")?;
                (
                    Operation::SeparateColumn {
                        column,
                        splitter,
                        into,
                    },
                    vec![t],
                )
            }
            "separate_row" => {
                let t = table(self)?;
                let column = col(self)?;
                self.expect_kw("by")?;
                let delimiter = self.string("a delimiter")?;
                (Operation::SeparateRow { column, delimiter }, vec![t])
            }
            "extend" => {
                let inputs = self.names("a table name")?;
                let policy = if self.eat_kw("policy") {
                    if self.eat_kw("union") {
                        SchemaPolicy::Union
                    } else if self.eat_kw("strict") {
                        SchemaPolicy::Strict
                    } else {
                        return Err(self.error("expected `strict` or `union`"));
                    }
                } else {
                    SchemaPolicy::Strict
                };
                (Operation::Extend { policy }, inputs)
            }
            "supplement" | "match" | "lookup" => {
                let l = table(self)?;
                self.expect_kw("with")?;
                let r = table(self)?;
                self.expect_kw("on")?;
                let key = self.name("the key column")?;
                let op = match verb.as_str() {
                    "supplement" => Operation::Supplement { key },
                    "match" => {
                        let mode = if self.eat_kw("mode") {
                            if self.eat_kw("inner") {
                                MatchMode::Inner
                            } else if self.eat_kw("semi") {
                                MatchMode::Semi
                            } else if self.eat_kw("anti") {
                                MatchMode::Anti
                            } else {
                                return Err(self.error("expected `inner`, `semi` or `anti`"));
                            }
                        } else {
                            MatchMode::Inner
                        };
                        Operation::Match { key, mode }
                    }
                    _ => {
                        self.expect_kw("value")?;
                        Operation::LookupTransform {
                            key,
                            value_column: self.name("the value column")?,
                        }
                    }
                };
                (op, vec![l, r])
            }
            "combine" => {
                let t = table(self)?;
                self.expect_kw("cols")?;
                let columns = self.bracketed_names("a column name")?;
                let combiner = if self.eat_kw("sep") {
                    Combiner::Separator(self.string("a separator")?)
                } else if self.eat_kw("expr") {
                    Combiner::Expression(self.expr()?)
                } else {
                    return Err(self.error("expected `sep` or `expr`"));
                };
                self.expect_kw("as")?;
                let name = self.name("the new column name")?;
                (
                    Operation::CombineColumns {
                        columns,
                        combiner,
                        name,
                    },
                    vec![t],
                )
            }
            "summarize" => {
                let t = table(self)?;
                let by = if self.eat_kw("by") {
                    self.names("a column name")?
                } else {
                    Vec::new()
                };
                (
                    Operation::Summarize {
                        by,
                        aggs: self.aggs()?,
                    },
                    vec![t],
                )
            }
            "group_aggregate" => {
                let t = table(self)?;
                self.expect_kw("by")?;
                let by = self.name("a column name")?;
                (
                    Operation::GroupAggregate {
                        by,
                        aggs: self.aggs()?,
                    },
                    vec![t],
                )
            }
            "interpolate" => {
                let t = table(self)?;
                let column = col(self)?;
                let order = if self.eat_kw("order") {
                    Some(self.name("the order column")?)
                } else {
                    None
                };
                self.expect_kw("method")?;
                let method = if self.eat_kw("linear") {
                    FillMethod::Linear
                } else if self.eat_kw("forward_fill") {
                    FillMethod::ForwardFill
                } else if self.eat_kw("group_mean") {
                    self.expect_kw("by")?;
                    FillMethod::GroupMean(self.bracketed_names("a column name")?)
                } else {
                    return Err(self.error("expected `linear`, `forward_fill` or `group_mean`"));
                };
                (
                    Operation::Interpolate {
                        column,
                        order,
                        method,
                    },
                    vec![t],
                )
            }
            "split_compute_merge" => {
                let t = table(self)?;
                self.expect_kw("by")?;
                let by = self.name("a column name")?;
                let bins = self.bins()?;
                if !self.is_kw("set") {
                    return Err(self.error("expected `set`"));
                }
                let edits = self.expr_edits()?;
                (Operation::SplitComputeMerge { by, bins, edits }, vec![t])
            }
            "divide_conquer" => {
                let t = table(self)?;
                self.expect_kw("where")?;
                let facet = self.expr()?;
                self.expect_kw("key")?;
                let key = self.name("the key column")?;
                self.expect_kw("value")?;
                let value = self.name("the value column")?;
                self.expect_kw("alternate")?;
                let alternate = self.name("the alternate column")?;
                let edits = self.expr_edits()?;
                (
                    Operation::DivideAndConquer {
                        facet,
                        edits,
                        key,
                        value,
                        alternate,
                    },
                    vec![t],
                )
            }
            _ => {
                return Err(ParseError {
                    line: t.line,
                    column: t.column,
                    message: format!("unknown operation `{}`", t.text),
                    token: t.text,
                    kind: ParseErrorKind::UnknownOperation,
                })
            }
        };
        Ok(op)
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> Result<Expr> {
        let mut l = self.and_expr()?;
        while self.eat_kw("or") {
            l = Expr::binary(BinaryOp::Or, l, self.and_expr()?);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut l = self.not_expr()?;
        while self.eat_kw("and") {
            l = Expr::binary(BinaryOp::And, l, self.not_expr()?);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_kw("not") {
            Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_expr()?)))
        } else {
            self.comparison()
        }
    }

    fn comparison(&mut self) -> Result<Expr> {
        let l = self.additive()?;
        if self.eat_kw("is") {
            let negated = self.eat_kw("not");
            self.expect_kw("null")?;
            return Ok(Expr::IsNull {
                expr: Box::new(l),
                negated,
            });
        }
        let op = match &self.peek().tok {
            Tok::Sym("==") => BinaryOp::Eq,
            Tok::Sym("!=") => BinaryOp::Ne,
            Tok::Sym("<") => BinaryOp::Lt,
            Tok::Sym("<=") => BinaryOp::Le,
            Tok::Sym(">") => BinaryOp::Gt,
            Tok::Sym(">=") => BinaryOp::Ge,
            Tok::Sym("=") => return Err(self.error("use `==` to compare")),
            _ => return Ok(l),
        };
        self.bump();
        let r = self.additive()?;
        if matches!(
            &self.peek().tok,
            Tok::Sym("==" | "!=" | "<" | "<=" | ">" | ">=")
        ) || self.is_kw("is")
        {
            return Err(self.error("comparisons do not chain; add parentheses"));
        }
        Ok(Expr::binary(op, l, r))
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut l = self.multiplicative()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("+") => BinaryOp::Add,
                Tok::Sym("-") => BinaryOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            l = Expr::binary(op, l, self.multiplicative()?);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut l = self.unary()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("*") => BinaryOp::Mul,
                Tok::Sym("/") => BinaryOp::Div,
                _ => return Ok(l),
            };
            self.bump();
            l = Expr::binary(op, l, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_sym("-") {
            let minus = self.bump();
            match self.peek().tok {
                Tok::Int(i) => {
                    let t = self.bump();
                    let v = i64::try_from(-i).map_err(|_| {
                        ParseError::syntax(
                            minus.line,
                            minus.column,
                            "integer literal out of range".into(),
                            t.text,
                        )
                    })?;
                    return Ok(Expr::Literal(Value::Int(v)));
                }
                Tok::Float(f) => {
                    self.bump();
                    return Ok(Expr::Literal(Value::Float(-f)));
                }
                _ => return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?))),
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        let lit = |v: Value| Ok(Expr::Literal(v));
        match &t.tok {
            Tok::Int(i) => {
                self.bump();
                let v = i64::try_from(*i).map_err(|_| {
                    ParseError::syntax(
                        t.line,
                        t.column,
                        "integer literal out of range".into(),
                        t.text.clone(),
                    )
                })?;
                lit(Value::Int(v))
            }
            Tok::Float(f) => {
                self.bump();
                lit(Value::Float(*f))
            }
            Tok::Str(s) => {
                self.bump();
                lit(Value::Text(s.clone()))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Quoted(name) => {
                self.bump();
                Ok(Expr::Column(name.clone()))
            }
            Tok::Ident(name) => {
                let lower = name.to_ascii_lowercase();
                match lower.as_str() {
                    "true" => {
                        self.bump();
                        return lit(Value::Bool(true));
                    }
                    "false" => {
                        self.bump();
                        return lit(Value::Bool(false));
                    }
                    "null" => {
                        self.bump();
                        return lit(Value::Null);
                    }
                    _ if EXPR_RESERVED.contains(&lower.as_str()) => {
                        return Err(self.error("expected an expression"));
                    }
                    _ => {}
                }
                self.bump();
                if !self.is_sym("(") {
                    return Ok(Expr::Column(name.clone()));
                }
                let func = Func::from_name(name).ok_or_else(|| {
                    ParseError::syntax(
                        t.line,
                        t.column,
                        format!("unknown function `{name}`"),
                        t.text.clone(),
                    )
                })?;
                self.bump();
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(fold_call(func, args))
            }
            _ => Err(self.error("expected an expression")),
        }
    }
}

/// `date("..")` and `float("NaN")`-style calls on a string literal are
/// literals.
fn fold_call(func: Func, args: Vec<Expr>) -> Expr {
    if let [Expr::Literal(Value::Text(s))] = args.as_slice() {
        match func {
            Func::Date => {
                if let Some(d) = parse_iso_date(s) {
                    return Expr::Literal(Value::Date(d));
                }
            }
            Func::ToFloat => {
                let f = match s.as_str() {
                    "NaN" => Some(f64::NAN),
                    "inf" => Some(f64::INFINITY),
                    "-inf" => Some(f64::NEG_INFINITY),
                    _ => None,
                };
                if let Some(f) = f {
                    return Expr::Literal(Value::Float(f));
                }
            }
            _ => {}
        }
    }
    Expr::Call(func, args)
}

fn sym(s: &str) -> &'static str {
    match s {
        "==" => "==",
        "!=" => "!=",
        "<=" => "<=",
        ">=" => ">=",
        "->" => "->",
        "(" => "(",
        ")" => ")",
        "[" => "[",
        "]" => "]",
        "{" => "{",
        "}" => "}",
        "," => ",",
        ";" => ";",
        "=" => "=",
        "<" => "<",
        ">" => ">",
        "+" => "+",
        "-" => "-",
        "*" => "*",
        "/" => "/",
        "!" => "!",
        other => panic!("unknown symbol {other}"),
    }
}
