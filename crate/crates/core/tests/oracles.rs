//! Engine answers against the generator's ledger of full versions.

mod common;

use common::*;

fn check(result: Check) {
    match result {
        Ok(summary) => eprintln!("{summary}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn materialize_at_equals_ledger_versions() {
    check(materialization_oracle(seed42(), 200, 1));
}

#[test]
fn full_history_takes_n_minus_one_applications() {
    check(chain_application_count(seed42(), 50));
}

#[test]
fn classification_matches_path_search() {
    check(classification_oracle());
}

#[test]
fn cross_version_answers_equal_ledger_evaluation() {
    let g = small(11, 300);
    check(cv_oracle(&g, &cv_corpus(&g), true));
}

#[test]
fn change_reports_equal_consecutive_diffs() {
    let g = small(12, 300);
    check(delta_oracle(&g, &delta_corpus(&g)));
}

#[test]
fn cache_is_transparent() {
    let g = small(7, 200);
    let dir = tempfile::tempdir().unwrap();
    check(cache_oracle(&g, &cv_corpus(&g), dir.path()));
}

#[test]
fn text_index_is_transparent() {
    let g = small(8, 200);
    check(index_oracle(&g, &cv_corpus(&g)));
}
