//! Algebraic laws over random tables, each run through a workspace so the
//! provenance graph is checked after every pipeline. Shared by the `laws`
//! test target and the acceptance runner.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use tabletide::algebra::{self, AggFunc, Aggregation, BinSpec, Generator, MatchMode, SchemaPolicy};
use tabletide::diagnostic::Finding;
use tabletide::expr::Expr;
use tabletide::table::{row_multiset_equal, Table};
use tabletide::value::{DataKind, DataType, Value};
use tabletide::Operation;

use super::*;

pub const CASES: u32 = 256;

pub type Law = (&'static str, fn(u32) -> Result<(), String>);

pub const LAWS: [Law; 9] = [
    ("subset partition", subset_partitions_rows),
    (
        "decompose/extend round trip",
        decompose_then_extend_restores_the_table,
    ),
    (
        "split/supplement round trip",
        split_then_supplement_restores_the_table,
    ),
    ("fold/unfold inversion", fold_then_unfold_restores_the_table),
    (
        "group_aggregate equals summarize",
        group_aggregate_is_decompose_summarize_extend,
    ),
    (
        "semi and anti partition the left table",
        semi_and_anti_partition_the_left_table,
    ),
    ("extend cardinality", extend_adds_cardinalities),
    (
        "joins never drop rows silently",
        joins_never_drop_rows_silently,
    ),
    (
        "supplement keeps every left row",
        supplement_keeps_every_left_row,
    ),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn same(a: &Table, b: &Table) -> bool {
    row_multiset_equal(a, b, 0.0)
}

fn ids(t: &Table) -> BTreeSet<i64> {
    t.column("id")
        .unwrap()
        .cells()
        .iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("id {other:?}"),
        })
        .collect()
}

/// A predicate over one column: a comparison against one of its own values,
/// or a null test.
fn predicate_for(t: &Table) -> BoxedStrategy<Expr> {
    let names: Vec<String> = t.column_names().iter().map(|s| s.to_string()).collect();
    let cells: Vec<Vec<Value>> = t.columns().iter().map(|c| c.cells().to_vec()).collect();
    (0..names.len(), any::<prop::sample::Index>(), 0..3u8)
        .prop_map(move |(c, pick, shape)| {
            let col = Expr::col(names[c].clone());
            let v = if cells[c].is_empty() {
                Value::Null
            } else {
                pick.get(&cells[c]).clone()
            };
            match (shape, v) {
                (_, Value::Null) | (0, _) => col.is_null(),
                (1, v) => col.gt(Expr::lit(v)),
                (_, v) => !col.eq(Expr::lit(v)),
            }
        })
        .boxed()
}

fn aggregations(t: &Table) -> BoxedStrategy<Vec<Aggregation>> {
    let cols: Vec<(String, DataKind)> = t
        .columns()
        .iter()
        .map(|c| (c.name().to_string(), c.kind()))
        .collect();
    let one = (any::<prop::sample::Index>(), 0..6usize).prop_map(move |(pick, f)| {
        let (name, kind) = pick.get(&cols).clone();
        let func = match AggFunc::ALL[f] {
            AggFunc::Sum | AggFunc::Mean if !kind.is_numeric() => AggFunc::Count,
            other => other,
        };
        let target = if func == AggFunc::Count && f == 0 {
            None
        } else {
            Some(name)
        };
        (func, target)
    });
    proptest::collection::vec(one, 1..4)
        .prop_map(|specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (func, target))| {
                    Aggregation::new(func, target.as_deref(), &format!("agg{i}"))
                })
                .collect()
        })
        .boxed()
}

fn bins_for(t: &Table, column: &str) -> Option<BinSpec> {
    t.column(column)
        .unwrap()
        .kind()
        .is_numeric()
        .then_some(BinSpec::Distinct)
}

pub fn subset_partitions_rows(cases: u32) -> Result<(), String> {
    let strategy = any_table().prop_flat_map(|t| {
        let p = predicate_for(&t);
        (Just(t), p)
    });
    run(cases, strategy, |(t, p)| {
        let t = with_id(&t, "id");
        let mut r = Recorder::new();
        r.bind("t", &t);
        r.apply(Operation::Subset { predicate: p }, &["t"], &["m", "rest"]);
        let (m, rest) = (r.table("m"), r.table("rest"));
        prop_assert_eq!(m.row_count() + rest.row_count(), t.row_count());
        prop_assert!(ids(m).is_disjoint(&ids(rest)));
        let both = algebra::extend(&[m.clone(), rest.clone()], SchemaPolicy::Strict)
            .unwrap()
            .into_table();
        prop_assert!(same(&both, &t));
        r.check_graph();
        Ok(())
    })
}

pub fn decompose_then_extend_restores_the_table(cases: u32) -> Result<(), String> {
    let strategy = table_with_first(non_numeric_kind());
    run(cases, strategy, |t| {
        let mut r = Recorder::new();
        r.bind("t", &t);
        let parts = r
            .apply(
                Operation::Decompose {
                    column: "c0".into(),
                    bins: None,
                },
                &["t"],
                &["part"],
            )
            .handles;
        prop_assert!(parts.iter().all(|h| h.starts_with("part_")));
        let back = match parts.as_slice() {
            [only] => only.clone(),
            _ => {
                let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
                r.apply(
                    Operation::Extend {
                        policy: SchemaPolicy::Strict,
                    },
                    &refs,
                    &["back"],
                );
                "back".to_string()
            }
        };
        prop_assert!(same(r.table(&back), &t));
        r.check_graph();
        Ok(())
    })
}

pub fn split_then_supplement_restores_the_table(cases: u32) -> Result<(), String> {
    let strategy = any_table().prop_flat_map(|t| {
        let n = t.column_count();
        (Just(t), proptest::collection::vec(any::<bool>(), n))
    });
    run(cases, strategy, |(t, mask)| {
        let t = with_id(&t, "id");
        let right: Vec<String> = t.column_names()[1..]
            .iter()
            .zip(&mask)
            .filter(|(_, keep)| **keep)
            .map(|(n, _)| n.to_string())
            .collect();
        let mut r = Recorder::new();
        r.bind("t", &t);
        r.apply(
            Operation::Split {
                key: "id".into(),
                columns: right,
            },
            &["t"],
            &["l", "r"],
        );
        let applied = r.apply(
            Operation::Supplement { key: "id".into() },
            &["l", "r"],
            &["back"],
        );
        prop_assert!(applied.diagnostics.is_empty(), "{:?}", applied.diagnostics);
        prop_assert!(same(r.table("back"), &t));
        r.check_graph();
        Ok(())
    })
}

pub fn fold_then_unfold_restores_the_table(cases: u32) -> Result<(), String> {
    let strategy =
        (table_with_first(any_kind()), any_kind(), 1..4usize).prop_flat_map(|(ids_t, kind, k)| {
            let n = ids_t.row_count();
            let cols = proptest::collection::vec(proptest::collection::vec(present(kind), n), k);
            (Just(ids_t), cols.prop_map(move |cols| (kind, cols)))
        });
    run(cases, strategy, |(ids_t, values)| {
        let (kind, cols) = values;
        let base = with_id(&ids_t, "id");
        let mut schema = base.schema();
        let names: Vec<String> = (0..cols.len()).map(|i| format!("v{i}")).collect();
        for n in &names {
            schema.push(tabletide::table::Field::new(n, DataType::required(kind)));
        }
        let rows = base
            .rows()
            .enumerate()
            .map(|(r, mut row)| {
                row.extend(cols.iter().map(|c| c[r].clone()));
                row
            })
            .collect();
        let t = Table::from_rows(&schema, rows).unwrap();

        let mut r = Recorder::new();
        r.bind("t", &t);
        r.apply(
            Operation::Fold {
                columns: names,
                key: "key".into(),
                value: "value".into(),
            },
            &["t"],
            &["long"],
        );
        prop_assert_eq!(r.table("long").row_count(), t.row_count() * cols.len());
        r.apply(
            Operation::Unfold {
                key: "key".into(),
                value: "value".into(),
            },
            &["long"],
            &["wide"],
        );
        prop_assert!(same(r.table("wide"), &t));
        r.check_graph();
        Ok(())
    })
}

pub fn group_aggregate_is_decompose_summarize_extend(cases: u32) -> Result<(), String> {
    let strategy = table_with_first(any_kind()).prop_flat_map(|t| {
        let a = aggregations(&t);
        (Just(t), a)
    });
    run(cases, strategy, |(t, aggs)| {
        let by = "c0".to_string();
        let mut r = Recorder::new();
        r.bind("t", &t);
        r.apply(
            Operation::Summarize {
                by: vec![by.clone()],
                aggs: aggs.clone(),
            },
            &["t"],
            &["direct"],
        );
        r.apply(
            Operation::GroupAggregate {
                by: by.clone(),
                aggs: aggs.clone(),
            },
            &["t"],
            &["composite"],
        );
        prop_assert!(row_multiset_equal(
            r.table("direct"),
            r.table("composite"),
            1e-9
        ));

        // The same law spelled out step by step.
        let dtype = t.column(&by).unwrap().dtype();
        let parts = r
            .apply(
                Operation::Decompose {
                    column: by.clone(),
                    bins: bins_for(&t, &by),
                },
                &["t"],
                &["g"],
            )
            .handles;
        let mut pieces = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            let level = r
                .table(part)
                .column(&by)
                .unwrap()
                .cells()
                .first()
                .cloned()
                .unwrap_or(Value::Null);
            let s = format!("s{i}");
            let piece = format!("piece{i}");
            r.apply(
                Operation::Summarize {
                    by: vec![],
                    aggs: aggs.clone(),
                },
                &[part],
                &[&s],
            );
            r.apply(
                Operation::CreateColumn {
                    name: by.clone(),
                    dtype: DataType {
                        nullable: true,
                        ..dtype
                    },
                    generator: Generator::Constant(level),
                },
                &[&s],
                &[&piece],
            );
            pieces.push(piece);
        }
        let manual = match pieces.as_slice() {
            [only] => only.clone(),
            _ => {
                let refs: Vec<&str> = pieces.iter().map(String::as_str).collect();
                r.apply(
                    Operation::Extend {
                        policy: SchemaPolicy::Strict,
                    },
                    &refs,
                    &["manual"],
                );
                "manual".to_string()
            }
        };
        prop_assert!(row_multiset_equal(
            r.table("direct"),
            r.table(&manual),
            1e-9
        ));
        r.check_graph();
        Ok(())
    })
}

pub fn semi_and_anti_partition_the_left_table(cases: u32) -> Result<(), String> {
    let strategy = table_with_first(any_kind()).prop_flat_map(|t| {
        let n = t.row_count();
        (Just(t), proptest::collection::vec(0..n, 0..n + 2))
    });
    run(cases, strategy, |(t, picks)| {
        let right = t.take_rows(&picks).select(&["c0"]).unwrap();
        let mut r = Recorder::new();
        r.bind("left", &t);
        r.bind("right", &right);
        r.apply(
            Operation::Match {
                key: "c0".into(),
                mode: MatchMode::Semi,
            },
            &["left", "right"],
            &["semi"],
        );
        r.apply(
            Operation::Match {
                key: "c0".into(),
                mode: MatchMode::Anti,
            },
            &["left", "right"],
            &["anti"],
        );
        let (semi, anti) = (r.table("semi"), r.table("anti"));
        prop_assert_eq!(semi.row_count() + anti.row_count(), t.row_count());
        let both = algebra::extend(&[semi.clone(), anti.clone()], SchemaPolicy::Strict)
            .unwrap()
            .into_table();
        prop_assert!(same(&both, &t));
        r.check_graph();
        Ok(())
    })
}

pub fn extend_adds_cardinalities(cases: u32) -> Result<(), String> {
    let strategy = any_table().prop_flat_map(|t| {
        let n = t.row_count();
        (Just(t), proptest::collection::vec(0..=n, 1..4))
    });
    run(cases, strategy, |(t, cuts)| {
        let mut cuts = cuts;
        cuts.push(0);
        cuts.push(t.row_count());
        cuts.sort();
        let mut r = Recorder::new();
        let mut handles = Vec::new();
        for (i, w) in cuts.windows(2).enumerate() {
            let h = format!("t{i}");
            r.bind(&h, &t.take_rows(&(w[0]..w[1]).collect::<Vec<_>>()));
            handles.push(h);
        }
        let refs: Vec<&str> = handles.iter().map(String::as_str).collect();
        r.apply(
            Operation::Extend {
                policy: SchemaPolicy::Strict,
            },
            &refs,
            &["all"],
        );
        let total: usize = handles.iter().map(|h| r.table(h).row_count()).sum();
        prop_assert_eq!(r.table("all").row_count(), total);
        prop_assert!(same(r.table("all"), &t));
        r.check_graph();
        Ok(())
    })
}

/// Every left row is either in the join output or accounted for by the
/// LossyJoin report: its key is listed, or it is counted as a null key.
pub fn joins_never_drop_rows_silently(cases: u32) -> Result<(), String> {
    let strategy = table_with_first(any_kind()).prop_flat_map(|t| {
        let n = t.row_count();
        (
            Just(t),
            proptest::collection::vec(0..n, 0..n + 2),
            prop::sample::select(vec![MatchMode::Inner, MatchMode::Semi, MatchMode::Anti]),
        )
    });
    run(cases, strategy, |(t, picks, mode)| {
        let mut seen = BTreeSet::new();
        let unique: Vec<usize> = picks
            .into_iter()
            .filter(|&i| seen.insert(t.row(i)[0].clone()))
            .collect();
        let mut right = t.take_rows(&unique).select(&["c0"]).unwrap();
        right = algebra::create_column(
            &right,
            "extra",
            DataType::nullable(DataKind::Integer),
            &Generator::Constant(Value::Int(1)),
        )
        .unwrap();

        let mut r = Recorder::new();
        r.bind("left", &t);
        r.bind("right", &right);
        let applied = r.apply(
            Operation::Match {
                key: "c0".into(),
                mode,
            },
            &["left", "right"],
            &["out"],
        );
        let out = r.table("out");
        let mut kept = out.clone();
        if out.has_column("extra") {
            kept = algebra::delete_column(out, "extra").unwrap();
        }
        let report = applied.diagnostics.iter().find_map(|d| match &d.finding {
            Finding::LossyJoin(k) => Some(k.clone()),
            _ => None,
        });
        let reported: Vec<usize> = (0..t.row_count())
            .filter(|&i| {
                let key = &t.row(i)[0];
                report.as_ref().is_some_and(|k| {
                    if key.is_null() {
                        k.null_keys > 0
                    } else {
                        k.contains(key)
                    }
                })
            })
            .collect();
        let accounted = algebra::extend(&[kept, t.take_rows(&reported)], SchemaPolicy::Strict)
            .unwrap()
            .into_table();
        prop_assert!(same(&accounted, &t), "rows lost without a diagnostic");
        if let Some(k) = &report {
            prop_assert_eq!(k.rows, reported.len());
            prop_assert_eq!(
                k.null_keys,
                reported.iter().filter(|&&i| t.row(i)[0].is_null()).count()
            );
        }
        if mode == MatchMode::Inner {
            prop_assert!(out.row_count() <= t.row_count());
        }
        r.check_graph();
        Ok(())
    })
}

pub fn supplement_keeps_every_left_row(cases: u32) -> Result<(), String> {
    let strategy = table_with_first(any_kind()).prop_flat_map(|t| {
        let n = t.row_count();
        (Just(t), proptest::collection::vec(0..n, 0..n + 2))
    });
    run(cases, strategy, |(t, picks)| {
        let mut seen = BTreeSet::new();
        let unique: Vec<usize> = picks
            .into_iter()
            .filter(|&i| seen.insert(t.row(i)[0].clone()))
            .collect();
        let right = t.take_rows(&unique).select(&["c0"]).unwrap();
        let right = algebra::create_column(
            &right,
            "extra",
            DataType::nullable(DataKind::Integer),
            &Generator::Constant(Value::Int(1)),
        )
        .unwrap();
        let mut r = Recorder::new();
        r.bind("left", &t);
        r.bind("right", &right);
        r.apply(
            Operation::Supplement { key: "c0".into() },
            &["left", "right"],
            &["out"],
        );
        let out = r.table("out");
        prop_assert_eq!(out.row_count(), t.row_count());
        prop_assert!(same(&algebra::delete_column(out, "extra").unwrap(), &t));
        r.check_graph();
        Ok(())
    })
}
