mod common;

use proptest::prelude::*;

use xlinker::abbrev::{detect_abbreviations, expand_mention};
use xlinker::eval::top_k_accuracy;
use xlinker::kos::{Concept, KnowledgeBase};
use xlinker::pipeline::{route_candidates, Branch};
use xlinker::ppr::{candidate, coherence_scores, personalized_pagerank, rank_mention, DisambiguationGraph, GraphNode, PprConfig};
use xlinker::strmatch::{build_name_index, edit_distance, match_exhaustive, match_mention, similarity, CandidateSource};

fn short_string() -> impl Strategy<Value = String> {
    "[abcdé]{0,7}"
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in short_string(), b in short_string(), c in short_string()) {
        let ab = edit_distance(&a, &b);
        prop_assert_eq!(ab, edit_distance(&b, &a));
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(edit_distance(&a, &c) <= ab + edit_distance(&b, &c));
        prop_assert!(ab <= a.chars().count().max(b.chars().count()));
    }

    #[test]
    fn similarity_is_bounded(a in short_string(), b in short_string()) {
        let s = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, a == b);
    }

    #[test]
    fn pruned_matching_equals_exhaustive(
        names in prop::collection::vec("[a-e]{1,9}( [a-e]{1,5})?", 1..200),
        query in "[a-e]{0,10}",
        top_n in 1usize..6,
    ) {
        let concepts: Vec<Concept> = names
            .chunks(3)
            .enumerate()
            .map(|(i, chunk)| Concept::new(format!("X{i}"), chunk[0].clone()).with_synonyms(chunk[1..].to_vec()))
            .collect();
        let kb = KnowledgeBase::from_concepts(concepts).unwrap();
        let index = build_name_index(&kb);
        prop_assert_eq!(match_mention(&query, &index, top_n), match_exhaustive(&query, &index, top_n));
    }

    #[test]
    fn ppr_is_a_distribution(n in 1usize..15, edge_bits in prop::collection::vec(any::<bool>(), 105), source in 0usize..15) {
        let source = source % n;
        let nodes = (0..n)
            .map(|i| GraphNode { mention: i, candidate: candidate(i as u32, 0.5, CandidateSource::Xmr) })
            .collect();
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if edge_bits[k] {
                    edges.push((i, j));
                }
                k += 1;
            }
        }
        let g = DisambiguationGraph::from_parts(nodes, &edges).unwrap();
        let pi = personalized_pagerank(&g, source, &PprConfig::default()).unwrap();
        prop_assert!(pi.iter().all(|&p| p >= 0.0));
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        // the source always keeps at least the teleport mass
        prop_assert!(pi[source] >= 0.15 - 1e-12);
    }

    #[test]
    fn top_k_is_order_free_and_monotone(
        rows in prop::collection::vec((prop::collection::vec(0u8..6, 0..6), prop::collection::vec(0u8..6, 1..3)), 1..30),
        shift in 0usize..30,
    ) {
        let to_ids = |v: &[u8]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let preds: Vec<Vec<String>> = rows.iter().map(|(p, _)| to_ids(p)).collect();
        let gold: Vec<Vec<String>> = rows.iter().map(|(_, g)| to_ids(g)).collect();
        let mut rp = preds.clone();
        let mut rg = gold.clone();
        let s = shift % rows.len();
        rp.rotate_left(s);
        rg.rotate_left(s);
        let mut prev = 0.0;
        for k in 1..8 {
            let a = top_k_accuracy(&preds, &gold, k).unwrap();
            prop_assert_eq!(a, top_k_accuracy(&rp, &rg, k).unwrap());
            prop_assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn routing_never_loses_a_top_candidate(
        string_score in prop::option::of(0.0f64..=1.0),
        xmr_score in prop::option::of(0.0f64..=1.0),
        threshold in 0.0f64..=1.0,
    ) {
        let strings: Vec<_> = string_score.map(|s| candidate(1, s, CandidateSource::StringMatch)).into_iter().collect();
        let xmr: Vec<_> = xmr_score.map(|s| candidate(2, s, CandidateSource::Xmr)).into_iter().collect();
        let trace = route_candidates(&strings, &xmr, threshold);
        if string_score.is_none() && xmr_score.is_none() {
            prop_assert_eq!(trace.branch, Branch::NilCandidate);
            prop_assert!(trace.candidates.is_empty());
        } else {
            prop_assert!(!trace.candidates.is_empty());
        }
        if xmr_score.is_some() {
            prop_assert!(trace.candidates.iter().any(|c| c.concept_index == 2));
        }
        if string_score == Some(1.0) || (xmr_score.is_some_and(|s| s < threshold) && string_score.is_some()) {
            prop_assert!(trace.candidates.iter().any(|c| c.concept_index == 1));
        }
    }

    #[test]
    fn expansion_leaves_unknown_mentions_alone(text in "[A-Za-z ]{0,40}", mention in "[a-z]{1,8}") {
        let map = detect_abbreviations(&text);
        prop_assert_eq!(expand_mention(&mention, &map), mention);
    }
}

#[test]
fn coherence_only_counts_other_mentions() {
    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("A", "a"),
        Concept::new("B", "b").with_parents(["A"]),
        Concept::new("C", "c").with_parents(["A"]),
    ])
    .unwrap();
    // both candidates of mention 0 are adjacent to each other only
    let nodes = vec![
        GraphNode { mention: 0, candidate: candidate(1, 0.4, CandidateSource::Xmr) },
        GraphNode { mention: 0, candidate: candidate(0, 0.6, CandidateSource::Xmr) },
    ];
    let g = DisambiguationGraph::from_parts(nodes, &[(0, 1)]).unwrap();
    let scores = coherence_scores(&g, &kb, &PprConfig::default()).unwrap();
    assert_eq!(scores.0, vec![0.0, 0.0]);
    // no coherence at all: the incoming score decides
    assert_eq!(rank_mention(&g, &scores, 0), vec![1, 0]);
}
