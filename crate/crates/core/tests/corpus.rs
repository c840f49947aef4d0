mod common;

use common::{fixture_indexes, targets};
use crossfile_core::context::CompletionPoint;
use crossfile_core::refine::lint_completion;

#[test]
fn fixtures_index_without_errors() {
    for idx in fixture_indexes() {
        assert!(idx.errors().is_empty(), "{:?}", idx.errors());
    }
}

#[test]
fn corpus_has_enough_functions() {
    let n: usize = fixture_indexes().iter().map(|i| targets(i).len()).sum();
    assert!(n >= 50, "{n}");
}

#[test]
fn gold_bodies_lint_clean() {
    for idx in fixture_indexes() {
        for t in targets(&idx) {
            let p = CompletionPoint::new(&idx, &t.module, &t.function).unwrap();
            let bad: Vec<_> = lint_completion(&t.body, &p, &idx);
            assert!(bad.is_empty(), "{}.{}: {:?}", t.module, t.function, bad);
        }
    }
}
