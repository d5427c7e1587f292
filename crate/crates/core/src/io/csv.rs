use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{IoError, Result};
use crate::table::{Column, Table};
use crate::value::{format_float, parse_iso_date, DataKind, DataType, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub delimiter: char,
    pub header: bool,
    pub quote: char,
    /// Unquoted fields equal to this literal read as null, and nulls are
    /// written as it.
    pub null: String,
    /// When off, every column without an override is text.
    pub infer: bool,
    /// Per-column type overrides.
    pub types: Vec<(String, DataKind)>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: ',',
            header: true,
            quote: '"',
            null: String::new(),
            infer: true,
            types: Vec::new(),
        }
    }
}

impl CsvOptions {
    fn validate(&self) -> Result<()> {
        if self.delimiter == self.quote {
            return Err(IoError::InvalidOptions(
                "delimiter and quote must differ".into(),
            ));
        }
        for c in [self.delimiter, self.quote] {
            if c == '\n' || c == '\r' {
                return Err(IoError::InvalidOptions(
                    "delimiter and quote cannot be line breaks".into(),
                ));
            }
        }
        Ok(())
    }
}

struct Field {
    text: String,
    quoted: bool,
}

struct Record {
    line: usize,
    fields: Vec<Field>,
}

/// Splits text into records, honouring quoted fields that span lines.
fn records(text: &str, opts: &CsvOptions) -> Result<Vec<Record>> {
    let (delim, quote) = (opts.delimiter, opts.quote);
    let mut out = Vec::new();
    let mut chars = text
        .strip_prefix('\u{feff}')
        .unwrap_or(text)
        .chars()
        .peekable();
    let mut line = 1;
    while chars.peek().is_some() {
        let start = line;
        let mut fields = Vec::new();
        loop {
            let mut field = Field {
                text: String::new(),
                quoted: false,
            };
            if chars.peek() == Some(&quote) {
                chars.next();
                field.quoted = true;
                loop {
                    match chars.next() {
                        None => return Err(IoError::BadQuoting { line: start }),
                        Some(c) if c == quote => {
                            if chars.peek() == Some(&quote) {
                                chars.next();
                                field.text.push(quote);
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            field.text.push(c);
                        }
                    }
                }
                match chars.peek() {
                    None | Some('\n') | Some('\r') => {}
                    Some(c) if *c == delim => {}
                    Some(_) => return Err(IoError::BadQuoting { line }),
                }
            } else {
                while let Some(&c) = chars.peek() {
                    if c == delim || c == '\n' || c == '\r' {
                        break;
                    }
                    if c == quote {
                        return Err(IoError::BadQuoting { line });
                    }
                    field.text.push(c);
                    chars.next();
                }
            }
            fields.push(field);
            match chars.next() {
                Some(c) if c == delim => continue,
                Some('\r') => {
                    if chars.peek() == Some(&'\n') {
                        chars.next();
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("fields stop only at delimiters and line breaks"),
            }
        }
        out.push(Record {
            line: start,
            fields,
        });
    }
    Ok(out)
}

fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty()
        && digits.bytes().all(|b| b.is_ascii_digit())
        && (digits == "0" || !digits.starts_with('0'))
        && s.parse::<i64>().is_ok()
}

fn is_float(s: &str) -> bool {
    if matches!(s, "NaN" | "inf" | "-inf") {
        return true;
    }
    let unsigned = s.strip_prefix('-').unwrap_or(s);
    let whole = unsigned.split(['.', 'e', 'E']).next().unwrap_or("");
    if whole.len() > 1 && whole.starts_with('0') {
        return false;
    }
    s.bytes().any(|b| b.is_ascii_digit())
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        && s.parse::<f64>().is_ok_and(f64::is_finite)
}

fn parse_as(s: &str, kind: DataKind) -> Option<Value> {
    match kind {
        DataKind::Integer => s.trim().parse::<i64>().ok().map(Value::Int),
        DataKind::Float => match s.trim() {
            "NaN" => Some(Value::Float(f64::NAN)),
            "inf" => Some(Value::Float(f64::INFINITY)),
            "-inf" => Some(Value::Float(f64::NEG_INFINITY)),
            t => t.parse::<f64>().ok().map(Value::Float),
        },
        DataKind::Boolean => match s.trim() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        DataKind::Date => parse_iso_date(s.trim()).map(Value::Date),
        DataKind::Text => Some(Value::text(s)),
    }
}

/// Narrowest kind admitting every non-null cell: integer, then float, then
/// boolean, then date, with text as the fallback. A column with no
/// non-null cells is text.
fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> DataKind {
    if cells.clone().next().is_none() {
        return DataKind::Text;
    }
    if cells.clone().all(is_integer) {
        DataKind::Integer
    } else if cells.clone().all(|s| is_integer(s) || is_float(s)) {
        DataKind::Float
    } else if cells.clone().all(|s| s == "true" || s == "false") {
        DataKind::Boolean
    } else if cells.clone().all(|s| parse_iso_date(s).is_some()) {
        DataKind::Date
    } else {
        DataKind::Text
    }
}

fn header_names(raw: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    raw.into_iter()
        .enumerate()
        .map(|(i, name)| {
            let base = if name.is_empty() {
                format!("column_{}", i + 1)
            } else {
                name
            };
            let mut candidate = base.clone();
            let mut n = 2;
            while !seen.insert(candidate.clone()) {
                candidate = format!("{base}_{n}");
                n += 1;
            }
            candidate
        })
        .collect()
}

/// Parses CSV text into a table.
pub fn parse_csv(text: &str, opts: &CsvOptions) -> Result<Table> {
    opts.validate()?;
    let mut recs = records(text, opts)?.into_iter();
    let (names, body): (Vec<String>, Vec<Record>) = if opts.header {
        let Some(head) = recs.next() else {
            return Ok(Table::new(Vec::new())?);
        };
        (
            header_names(head.fields.into_iter().map(|f| f.text).collect()),
            recs.collect(),
        )
    } else {
        let body: Vec<Record> = recs.collect();
        let width = body.first().map_or(0, |r| r.fields.len());
        ((1..=width).map(|i| format!("column_{i}")).collect(), body)
    };
    for r in &body {
        if r.fields.len() != names.len() {
            return Err(IoError::RaggedRow {
                line: r.line,
                expected: names.len(),
                found: r.fields.len(),
            });
        }
    }
    for (name, _) in &opts.types {
        if !names.contains(name) {
            return Err(IoError::InvalidOptions(format!(
                "type override for unknown column `{name}`"
            )));
        }
    }

    let is_null = |f: &Field| !f.quoted && f.text == opts.null;
    let mut columns = Vec::with_capacity(names.len());
    for (c, name) in names.iter().enumerate() {
        let present = body
            .iter()
            .map(|r| &r.fields[c])
            .filter(|f| !is_null(f))
            .map(|f| f.text.as_str());
        let kind = match opts.types.iter().find(|(n, _)| n == name) {
            Some((_, k)) => *k,
            None if opts.infer => infer_kind(present),
            None => DataKind::Text,
        };
        let mut cells = Vec::with_capacity(body.len());
        for r in &body {
            let f = &r.fields[c];
            if is_null(f) {
                cells.push(Value::Null);
                continue;
            }
            cells.push(parse_as(&f.text, kind).ok_or_else(|| IoError::BadValue {
                line: r.line,
                column: name.clone(),
                kind,
                value: f.text.clone(),
            })?);
        }
        columns
            .push(Column::new(name.clone(), DataType::nullable(kind), cells)?.with_nullable(false));
    }
    Ok(Table::with_row_count(columns, body.len())?)
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    Ok(parse_csv(&text, opts)?.with_attribution(path.display().to_string()))
}

fn push_field(out: &mut String, s: &str, opts: &CsvOptions, force_quote: bool) {
    let needs = force_quote
        || s.chars()
            .any(|c| c == opts.delimiter || c == opts.quote || c == '\n' || c == '\r');
    if needs {
        out.push(opts.quote);
        for c in s.chars() {
            if c == opts.quote {
                out.push(opts.quote);
            }
            out.push(c);
        }
        out.push(opts.quote);
    } else {
        out.push_str(s);
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Float(f) => format_float(*f),
        other => other.to_string(),
    }
}

/// Renders a table as CSV with a header line and LF line endings. Nulls
/// are written as the null literal; text that would read back as null is
/// quoted.
pub fn write_csv(t: &Table, opts: &CsvOptions) -> Result<String> {
    opts.validate()?;
    let mut out = String::new();
    let line = |out: &mut String, cells: Vec<(String, bool)>| {
        for (i, (s, force)) in cells.iter().enumerate() {
            if i > 0 {
                out.push(opts.delimiter);
            }
            push_field(out, s, opts, *force);
        }
        out.push('\n');
    };
    if opts.header {
        // A lone empty header would read back as a null-looking blank line.
        let lone_empty = t.column_count() == 1 && t.columns()[0].name().is_empty();
        line(
            &mut out,
            t.column_names()
                .iter()
                .map(|n| (n.to_string(), lone_empty))
                .collect(),
        );
    }
    for r in 0..t.row_count() {
        let cells = t
            .columns()
            .iter()
            .map(|c| match &c.cells()[r] {
                Value::Null => (opts.null.clone(), false),
                Value::Text(s) => (s.clone(), *s == opts.null),
                v => (render(v), false),
            })
            .collect();
        line(&mut out, cells);
    }
    Ok(out)
}

pub fn save_csv(t: &Table, path: &Path, opts: &CsvOptions) -> Result<()> {
    fs::write(path, write_csv(t, opts)?).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Table> {
        parse_csv(s, &CsvOptions::default())
    }

    #[test]
    fn header_and_inference() {
        let t = parse("a,b\n1,x\n").unwrap();
        assert_eq!(t.column("a").unwrap().kind(), DataKind::Integer);
        assert_eq!(t.row(0), vec![Value::Int(1), Value::text("x")]);
        assert_eq!(
            parse("a\n1\n1.5\n").unwrap().column("a").unwrap().kind(),
            DataKind::Float
        );
        assert_eq!(
            parse("a\n2016-07-01\n")
                .unwrap()
                .column("a")
                .unwrap()
                .kind(),
            DataKind::Date
        );
        assert_eq!(
            parse("a\ntrue\nfalse\n")
                .unwrap()
                .column("a")
                .unwrap()
                .kind(),
            DataKind::Boolean
        );
        let special = parse("a\n1\nNaN\n-inf\n").unwrap();
        assert_eq!(special.column("a").unwrap().kind(), DataKind::Float);
        assert!(matches!(special.row(1)[0], Value::Float(f) if f.is_nan()));
        assert_eq!(
            parse("a\n007\n").unwrap().column("a").unwrap().kind(),
            DataKind::Text
        );
        assert_eq!(
            parse("a\n1\nx\n").unwrap().column("a").unwrap().kind(),
            DataKind::Text
        );
    }

    #[test]
    fn ragged_and_quoting_errors() {
        assert_eq!(
            parse("a,b\n1\n"),
            Err(IoError::RaggedRow {
                line: 2,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(parse("a\n\"x\n"), Err(IoError::BadQuoting { line: 2 }));
        assert_eq!(parse("a\nx\"y\n"), Err(IoError::BadQuoting { line: 2 }));
        assert_eq!(parse("a\n\"x\"y\n"), Err(IoError::BadQuoting { line: 2 }));
    }

    #[test]
    fn nulls_and_quotes() {
        let t = parse("a,b\n,\"\"\n\"x,\"\"y\"\"\",z\n").unwrap();
        assert_eq!(t.row(0), vec![Value::Null, Value::text("")]);
        assert_eq!(t.row(1), vec![Value::text("x,\"y\""), Value::text("z")]);
        let multi = parse("a,b\n\"l1\nl2\",1\nq,2\n").unwrap();
        assert_eq!(multi.row(0)[0], Value::text("l1\nl2"));
        assert_eq!(
            parse("a,b\n\"l1\nl2\",1\nq\n"),
            Err(IoError::RaggedRow {
                line: 4,
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn header_dedup_and_crlf() {
        let t = parse("a,a,\r\n1,2,3\r\n").unwrap();
        assert_eq!(t.column_names(), vec!["a", "a_2", "column_3"]);
        assert_eq!(t.row_count(), 1);
    }

    #[test]
    fn writer_rules() {
        let t = parse("a,b,c\n1,\"a,b\",\n2.5,\"\",x\n").unwrap();
        let out = write_csv(&t, &CsvOptions::default()).unwrap();
        assert_eq!(out, "a,b,c\n1.0,\"a,b\",\n2.5,\"\",x\n");
        assert_eq!(parse(&out).unwrap(), t);
    }

    #[test]
    fn options() {
        let opts = CsvOptions {
            delimiter: ';',
            header: false,
            null: "NA".into(),
            infer: false,
            types: vec![("column_2".into(), DataKind::Integer)],
            ..CsvOptions::default()
        };
        let t = parse_csv("x;1\nNA;NA\n", &opts).unwrap();
        assert_eq!(t.column_names(), vec!["column_1", "column_2"]);
        assert_eq!(t.row(0), vec![Value::text("x"), Value::Int(1)]);
        assert_eq!(t.row(1), vec![Value::Null, Value::Null]);
        assert!(matches!(
            parse_csv("x;y\n", &opts),
            Err(IoError::BadValue { line: 1, .. })
        ));
        let bad = CsvOptions {
            quote: ',',
            ..CsvOptions::default()
        };
        assert!(matches!(
            parse_csv("a\n", &bad),
            Err(IoError::InvalidOptions(_))
        ));
    }

    #[test]
    fn single_column_nulls_survive() {
        let t = parse("a\n1\n\n").unwrap();
        assert_eq!(
            t.column("a").unwrap().cells(),
            &[Value::Int(1), Value::Null]
        );
        let out = write_csv(&t, &CsvOptions::default()).unwrap();
        assert_eq!(parse(&out).unwrap(), t);
    }
}
