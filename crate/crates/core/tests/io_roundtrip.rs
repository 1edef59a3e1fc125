use std::fs;

use ample_core::fixtures;
use ample_core::io::{load_corpus, parse_graph, serialize_graph, IoError};
use ample_core::random::random_graph;
use ample_core::simplify::{gs, MergeRuleTable};
use proptest::prelude::*;

#[test]
fn fig4_round_trip_and_byte_stability() {
    let g = fixtures::fig4();
    let bytes = serialize_graph(&g);
    assert_eq!(parse_graph(&bytes).unwrap(), g);
    assert_eq!(serialize_graph(&g), bytes);
}

#[test]
fn simplified_graphs_round_trip() {
    // leaves with several AST parents must survive serialization
    let (s, _) = gs(&fixtures::fig4(), &MergeRuleTable::default());
    assert_eq!(parse_graph(&serialize_graph(&s)).unwrap(), s);
}

#[test]
fn load_corpus_collects_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), fixtures::FIG3).unwrap();
    fs::write(dir.path().join("b.json"), fixtures::FIG4).unwrap();
    fs::write(dir.path().join("c.json"), "{ broken").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let corpus = load_corpus(dir.path()).unwrap();
    assert_eq!(corpus.len(), 2);
    assert_eq!(corpus.names, ["a", "b"]);
    assert_eq!(corpus.errors.len(), 1);
    assert!(corpus.errors[0].0.ends_with("c.json"));
    assert!(corpus.summary().contains("1 files rejected"));

    fs::write(dir.path().join("c.json"), fixtures::FIG3).unwrap();
    assert_eq!(load_corpus(dir.path()).unwrap().len(), 3);
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(IoError::EmptyCorpus(_))));
}

proptest! {
    #[test]
    fn round_trip_random_graphs(seed in any::<u64>()) {
        let g = random_graph(seed, 60);
        let bytes = serialize_graph(&g);
        prop_assert_eq!(parse_graph(&bytes).unwrap(), g);
    }
}
