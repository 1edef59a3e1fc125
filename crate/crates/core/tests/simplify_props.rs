use ample_core::fixtures;
use ample_core::graph::{EdgeKind, NodeId};
use ample_core::metrics::all_pairs_distances;
use ample_core::random::random_graph;
use ample_core::simplify::{gs, tgs, vgs, MergeRuleTable, Phase};
use proptest::prelude::*;

#[test]
fn fig3_tgs_matches_reference() {
    let (out, trace) = tgs(&fixtures::fig3(), &MergeRuleTable::default());
    assert_eq!(out, fixtures::fig3_simplified());
    assert_eq!(trace.events.len(), 1);
    assert_eq!(trace.events[0].removed, NodeId(2));
    assert_eq!(trace.events[0].kept, NodeId(1));
    assert_eq!(trace.events[0].rule_index, Some(1));
    let stmt = out.ast_children(NodeId(1)).unwrap();
    let codes: Vec<&str> = stmt.iter().map(|c| out.nodes()[c.0].code.as_str()).collect();
    assert_eq!(codes, ["char *", "first", "first = malloc ( 10 )"]);
}

#[test]
fn fig4_vgs_merges_str() {
    let g = fixtures::fig4();
    let leaves = g.ast_leaf_nodes();
    let strs: Vec<_> = leaves.iter().filter(|l| g.nodes()[l.0].code == "str").collect();
    assert_eq!(strs.len(), 2);

    let (out, trace) = vgs(&g);
    assert_eq!(out.num_nodes(), g.num_nodes() - 1);
    assert_eq!(trace.events.len(), 1);
    assert_eq!((trace.events[0].kept, trace.events[0].removed), (NodeId(3), NodeId(8)));
    let str_node = out.nodes().iter().position(|n| n.code == "str").unwrap();
    let parents: Vec<&str> = out
        .ast_parents(NodeId(str_node))
        .unwrap()
        .iter()
        .map(|p| out.nodes()[p.0].code.as_str())
        .collect();
    assert_eq!(parents, ["char str [ 15 ] ;", "scanf ( \"%s\" , str ) ;"]);
    // the NCS edge into the second "str" now ends at the first one
    assert!(out
        .edges()
        .iter()
        .any(|e| e.kind == EdgeKind::Ncs && e.dst.0 == str_node && out.nodes()[e.src.0].code == "\"%s\""));
}

#[test]
fn gs_reaches_a_fixpoint_on_fixtures() {
    let table = MergeRuleTable::default();
    for g in [fixtures::fig3(), fixtures::fig4()] {
        let (once, _) = gs(&g, &table);
        let (twice, trace) = gs(&once, &table);
        assert_eq!(twice, once);
        assert!(trace.is_empty());
    }
}

#[test]
fn corpus_counts_never_increase() {
    let table = MergeRuleTable::default();
    for seed in 0..20 {
        let g = random_graph(1000 + seed, 60);
        let (s, _) = gs(&g, &table);
        assert!(s.num_nodes() <= g.num_nodes());
        assert!(s.num_edges() <= g.num_edges());
    }
}

#[test]
fn gs_trace_uses_original_ids() {
    let g = random_graph(77, 80);
    let (s, trace) = gs(&g, &MergeRuleTable::default());
    let map = trace.node_map();
    for (i, node) in g.nodes().iter().enumerate() {
        let target = &s.nodes()[map[i].0];
        if trace.events.iter().all(|e| e.removed.0 != i) {
            assert_eq!(target.orig_id, node.orig_id);
        }
    }
    let tgs_then_vgs = trace
        .events
        .windows(2)
        .all(|w| !(w[0].phase == Phase::Vgs && w[1].phase == Phase::Tgs));
    assert!(tgs_then_vgs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn idempotent_and_monotone(seed in any::<u64>()) {
        let table = MergeRuleTable::default();
        let g = random_graph(seed, 120);
        let (once, trace) = gs(&g, &table);
        let (twice, _) = gs(&once, &table);
        prop_assert_eq!(&twice, &once);
        prop_assert!(once.num_nodes() <= g.num_nodes());
        prop_assert!(once.num_edges() <= g.num_edges());
        // kept + removed partition the input
        prop_assert_eq!(once.num_nodes() + trace.removed_count(), g.num_nodes());
        let mut removed: Vec<usize> = trace.events.iter().map(|e| e.removed.0).collect();
        removed.sort_unstable();
        removed.dedup();
        prop_assert_eq!(removed.len(), trace.removed_count());
    }

    #[test]
    fn distances_contract_and_reachability_survives(seed in any::<u64>()) {
        let g = random_graph(seed, 50);
        let (s, trace) = gs(&g, &MergeRuleTable::default());
        let before = all_pairs_distances(&g);
        let after = all_pairs_distances(&s);
        let map = trace.node_map();
        let reps = trace.representatives();
        let survivors: Vec<usize> = (0..g.num_nodes()).filter(|&i| reps[i].0 == i).collect();
        for &a in &survivors {
            for &b in &survivors {
                let (da, db) = (map[a].0, map[b].0);
                prop_assert!(after[da][db] <= before[a][b]);
            }
        }
    }
}
