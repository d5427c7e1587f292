use super::*;
use crate::algebra::{MatchMode, SchemaPolicy};
use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::operation::Operation;
use crate::value::Value;
use crate::workspace::Workspace;

fn one(src: &str) -> Stmt {
    let p = parse(src).unwrap();
    assert_eq!(p.statements.len(), 1, "{src}");
    p.statements.into_iter().next().unwrap().stmt
}

fn roundtrip(src: &str) {
    let p = parse(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    let printed = p.to_string();
    let q = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
    assert_eq!(p, q, "{printed}");
    assert_eq!(printed, q.to_string());
}

#[test]
fn load_binds_one_statement() {
    match one(r#"load "a.csv" as t"#) {
        Stmt::Load { path, handle, .. } => {
            assert_eq!((path.as_str(), handle.as_str()), ("a.csv", "t"))
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn two_target_subset() {
    match one("(m, r) = subset t where a == 1") {
        Stmt::Apply {
            targets,
            op,
            inputs,
        } => {
            assert_eq!(targets, vec!["m", "r"]);
            assert_eq!(inputs, vec!["t"]);
            assert_eq!(
                op,
                Operation::Subset {
                    predicate: Expr::col("a").eq(Expr::lit(1))
                }
            );
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn misspelled_keyword_points_at_the_token() {
    let e = parse("x = subset t wear a == 1").unwrap_err();
    assert_eq!(e.token, "wear");
    assert_eq!((e.line, e.column), (1, 14));
    let e = parse("subset t wear a == 1").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Syntax);
    assert_eq!((e.line, e.column, e.token.as_str()), (1, 8, "t"));
}

#[test]
fn unknown_operation_is_its_own_kind() {
    let e = parse("\nx = frobnicate t").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::UnknownOperation);
    assert_eq!((e.line, e.column, e.token.as_str()), (2, 5, "frobnicate"));
}

#[test]
fn keywords_are_case_insensitive() {
    assert_eq!(
        one("X = EXTEND a, b POLICY Union"),
        one("X = extend a, b policy union")
    );
    match one("x = extend a, b, c policy union") {
        Stmt::Apply { op, inputs, .. } => {
            assert_eq!(
                op,
                Operation::Extend {
                    policy: SchemaPolicy::Union
                }
            );
            assert_eq!(inputs.len(), 3);
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn expression_precedence() {
    let e = parse_expression("a + b * 2 > 3 and not c is null or d == \"x\"").unwrap();
    let expected = Expr::binary(
        BinaryOp::Add,
        Expr::col("a"),
        Expr::binary(BinaryOp::Mul, Expr::col("b"), Expr::lit(2)),
    )
    .gt(Expr::lit(3))
    .and(!Expr::col("c").is_null())
    .or(Expr::col("d").eq(Expr::lit("x")));
    assert_eq!(e, expected);
    assert_eq!(parse_expression("-3").unwrap(), Expr::lit(-3));
    assert_eq!(
        parse_expression("-(3)").unwrap(),
        Expr::Unary(UnaryOp::Neg, Box::new(Expr::lit(3)))
    );
    assert_eq!(
        parse_expression("a is not null").unwrap(),
        Expr::IsNull {
            expr: Box::new(Expr::col("a")),
            negated: true
        }
    );
}

#[test]
fn expression_errors() {
    assert!(parse_expression("a == b == c").is_err());
    assert!(parse_expression("a = 1").is_err());
    assert!(parse_expression("nosuchfn(a)").is_err());
    assert!(parse_expression("9223372036854775808").is_err());
    assert_eq!(
        parse_expression("-9223372036854775808").unwrap(),
        Expr::lit(i64::MIN)
    );
    assert!(parse_expression("(a").is_err());
}

#[test]
fn special_literals_fold() {
    assert_eq!(
        parse_expression(r#"date("2016-06-01")"#).unwrap(),
        Expr::Literal(Value::date(2016, 6, 1))
    );
    match parse_expression(r#"float("NaN")"#).unwrap() {
        Expr::Literal(Value::Float(f)) => assert!(f.is_nan()),
        e => panic!("{e:?}"),
    }
}

#[test]
fn match_modes_and_lookup() {
    match one("x = match a with b on k mode anti") {
        Stmt::Apply { op, .. } => assert_eq!(
            op,
            Operation::Match {
                key: "k".into(),
                mode: MatchMode::Anti
            }
        ),
        s => panic!("{s:?}"),
    }
}

#[test]
fn statements_split_on_newlines_and_semicolons() {
    let p =
        parse("load \"a.csv\" as a; load \"b.csv\" as b\n# note\n\nx = extend a,\n  b\n").unwrap();
    assert_eq!(p.statements.len(), 3);
    assert_eq!(p.statements[2].span, Span { line: 4, column: 1 });
    assert!(parse("load \"a.csv\" as a load \"b.csv\" as b").is_err());
}

#[test]
fn every_statement_form_round_trips() {
    for src in [
        r#"load "a b.csv" as `my table` delimiter ";" quote "'" noheader noinfer null "NA" types (a int, `b c` text)"#,
        r#"fetch "https://example.org/x.csv" as t"#,
        r#"export t to "out/t.csv""#,
        "delete t",
        "audit total a, b on n tol 0.5",
        "audit grouped a, b by country on n",
        "audit drift a, b",
        "audit keys t cols [a, b]",
        "audit profile t",
        r#"t = create_table (a int!, b text, c date) rows (1, "x", date("2020-01-02")), (-2, null, null)"#,
        "t = create_table ()",
        "u = create_column t col n float = a * 2.5",
        r#"u = create_column t col n text = "k""#,
        r#"u = create_row t values (1, "x", true)"#,
        "u = delete_column t col `select`",
        "u = delete_row t where a > 1",
        "u = delete_row t rows [0, 3]",
        "u = rearrange t sort a, b desc order [b, a]",
        "u = rearrange t order [b, a]",
        "u = fold t cols [y2015, y2016] into (year, amount)",
        "u = unfold t key year value amount",
        "u = transform t col a = year(a) + 1 as b",
        r#"u = transform t col a lookup {"x" -> "y", 1 -> null}"#,
        r#"u = transform_row t where a is null set a = 0, b = "z""#,
        "(m, r) = subset t where a >= 1 and not (b != 2 or c < 3)",
        "p = decompose t by a bins 4",
        "(p, q) = decompose t by a distinct",
        "(l, r) = split t on id cols [a, b]",
        r#"u = separate_column t col name by ", " into [first, last]"#,
        "u = separate_column t col code at [2, 4] into [a, b, c]",
        r#"u = separate_row t col tags by ";""#,
        "u = extend a, b, c policy union",
        "u = supplement a with b on state",
        "u = match a with b on state",
        "u = match a with b on state mode semi",
        r#"u = combine t cols [first, last] sep " " as name"#,
        "u = combine t cols [a, b] expr a + b as s",
        "u = summarize t by g, h agg count() as n, sum(v) as s, first(w) as f",
        "u = summarize t agg mean(v) as m",
        "u = interpolate t col v order d method linear",
        "u = interpolate t col v method forward_fill",
        "u = interpolate t col v method group_mean by [g]",
        "u = filter t where v > 1",
        "u = group_aggregate t by g agg max(v) as m",
        "u = lookup t with codes on code value label",
        "u = split_compute_merge t by g set v = v * 2, w = -(v)",
        "u = divide_conquer t where month == \"Jun\" key supplier value amount alternate amount_2013 set amount = amount * 1.0",
    ] {
        roundtrip(src);
    }
}

#[test]
fn keyword_names_are_backticked_when_printed() {
    let s = one("`where` = filter `key` where `and` > 1");
    let printed = s.to_string();
    assert_eq!(printed, "`where` = filter `key` where `and` > 1");
    roundtrip(&printed);
}

#[test]
fn check_reports_unbound_unused_rebind_and_arity() {
    let p = parse("x = filter t where a > 1\nload \"a.csv\" as a\nload \"b.csv\" as a\n(m, r, z) = subset a where v > 1").unwrap();
    let issues = check(&p);
    let kinds: Vec<(IssueKind, usize)> = issues.iter().map(|i| (i.kind, i.statement)).collect();
    assert!(kinds.contains(&(IssueKind::UnboundHandle, 1)));
    assert!(kinds.contains(&(IssueKind::UnusedTable, 2)));
    assert!(kinds.contains(&(IssueKind::Rebind, 3)));
    assert!(kinds.contains(&(IssueKind::ArityMismatch, 4)));
    let unbound = issues
        .iter()
        .find(|i| i.kind == IssueKind::UnboundHandle)
        .unwrap();
    assert_eq!(unbound.severity, Severity::Error);
    assert_eq!(unbound.handle.as_deref(), Some("t"));
}

#[test]
fn clean_pipeline_has_no_issues() {
    let p = parse(
        "load \"a.csv\" as a\np = decompose a by g\nx = extend p_a, p_b\nexport x to \"x.csv\"",
    )
    .unwrap();
    assert_eq!(check(&p), vec![]);
    let p = parse("x = filter t where a > 1\nexport x to \"x.csv\"").unwrap();
    assert_eq!(check_with(&p, &["t"]), vec![]);
}

#[test]
fn execute_stops_at_the_failing_statement() {
    use crate::table::{Field, Table};
    use crate::value::{DataKind, DataType};
    let mut ws = Workspace::sealed();
    let t = Table::from_rows(
        &[Field::new("v", DataType::nullable(DataKind::Integer))],
        vec![vec![Value::Int(1)], vec![Value::Int(5)]],
    )
    .unwrap();
    ws.bind("t", t, "t").unwrap();
    let p = parse("a = filter t where v > 1\nb = delete_column a col v\nc = filter a where nope > 1\nd = filter t where v > 0").unwrap();
    let e = execute(&p, &mut ws).unwrap_err();
    assert_eq!((e.statement, e.line), (3, 3));
    assert_eq!(e.completed.statements.len(), 2);
    assert_eq!(ws.handles(), vec!["a", "b", "t"]);
    assert!(ws.table("d").is_none());
}
