//! The golden pipeline corpus, CSV and JSON round trips, and repeatable
//! pipeline output.

mod common;

use common::pipelines::{golden_pipelines, identical, inference_stable_table, round_trip, run_in_scratch};
use common::{any_table, MAX_ROWS};
use proptest::prelude::*;
use tabletide::dsl::{self, Severity};
use tabletide::io::{parse_csv, parse_table_json, write_csv, write_table_json, CsvOptions};
use tabletide::table::row_multiset_equal;

#[test]
fn golden_corpus_is_large_enough() {
    assert!(golden_pipelines().len() >= 20);
}

#[test]
fn golden_pipelines_print_and_reparse() {
    for (name, source) in golden_pipelines() {
        if let Err(e) = round_trip(&source) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn golden_pipelines_check_clean_and_run() {
    for (name, source) in golden_pipelines() {
        let p = dsl::parse(&source).unwrap();
        let errors: Vec<String> = dsl::check(&p)
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.to_string())
            .collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        let run = run_in_scratch(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
        let exports = p.statements.iter().filter(|s| matches!(s.stmt, dsl::Stmt::Export { .. })).count();
        assert_eq!(run.exports.len(), exports, "{name}");
    }
}

#[test]
fn golden_exports_are_byte_identical_across_runs() {
    for (name, source) in golden_pipelines() {
        let a = run_in_scratch(&source).unwrap();
        let b = run_in_scratch(&source).unwrap();
        assert_eq!(a.exports, b.exports, "{name}");
        assert_eq!(a.ws.graph().to_json(), b.ws.graph().to_json(), "{name}");
        assert_eq!(a.ws.graph().to_dot(), b.ws.graph().to_dot(), "{name}");
    }
}

#[test]
fn audit_pipeline_reports_the_refugee_discrepancy() {
    let source = golden_pipelines().into_iter().find(|(n, _)| n == "07_audit_totals.wr").unwrap().1;
    let run = run_in_scratch(&source).unwrap();
    let found: Vec<String> = run.report.diagnostics().map(|d| d.to_string()).collect();
    assert_eq!(found.len(), 2, "{found:?}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn csv_save_then_load_is_identity(t in inference_stable_table()) {
        let text = write_csv(&t, &CsvOptions::default()).unwrap();
        let back = parse_csv(&text, &CsvOptions::default()).unwrap();
        if let Err(e) = identical(&t, &back) {
            return Err(TestCaseError::fail(format!("{e}\n{text}")));
        }
        prop_assert_eq!(write_csv(&back, &CsvOptions::default()).unwrap(), text);
    }

    #[test]
    fn csv_round_trip_with_other_dialects(t in inference_stable_table(), semicolon in any::<bool>()) {
        let opts = CsvOptions {
            delimiter: if semicolon { ';' } else { '\t' },
            quote: '\'',
            ..CsvOptions::default()
        };
        let back = parse_csv(&write_csv(&t, &opts).unwrap(), &opts).unwrap();
        prop_assert!(identical(&t, &back).is_ok());
    }

    #[test]
    fn json_save_then_load_is_identity(t in any_table()) {
        let back = parse_table_json(&write_table_json(&t)).unwrap();
        prop_assert!(identical(&t, &back).is_ok(), "{:?}", identical(&t, &back));
        prop_assert!(t.row_count() <= MAX_ROWS);
        prop_assert!(row_multiset_equal(&t, &back, 0.0));
    }
}
