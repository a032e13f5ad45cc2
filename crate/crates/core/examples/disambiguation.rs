//! Collective disambiguation: candidate graph over is-a relations,
//! personalized PageRank per source and IC-weighted coherence.

use xlinker::kos::{Concept, KnowledgeBase};
use xlinker::ppr::{build_graph, candidate, coherence_scores, select, PprConfig};
use xlinker::strmatch::CandidateSource::{StringMatch, Xmr};

fn main() -> xlinker::Result<()> {
    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("D002318", "Cardiovascular Diseases"),
        Concept::new("D014652", "Vascular Diseases").with_parents(["D002318"]),
        Concept::new("D014657", "Vasculitis").with_parents(["D014652"]),
        Concept::new("D001167", "Arteritis").with_parents(["D014657"]),
        Concept::new("D056647", "Systemic Vasculitis").with_parents(["D014657"]),
        Concept::new("D009358", "Congenital Disorder"),
        Concept::new("D001172", "Rheumatoid Arthritis"),
    ])?;
    let i = |id: &str| kb.index_of(id).unwrap();

    // "arteritis" is ambiguous between a vascular and a joint reading;
    // the other mentions of the abstract pull it towards the vascular one
    let lists = vec![
        vec![candidate(i("D001172"), 0.55, Xmr), candidate(i("D001167"), 0.45, StringMatch)],
        vec![candidate(i("D014657"), 1.0, Xmr)],
        vec![candidate(i("D009358"), 0.1, Xmr), candidate(i("D056647"), 0.9, StringMatch)],
    ];
    let graph = build_graph(&lists, &kb);
    graph.write_debug(&kb, std::io::stdout().lock())?;
    let coherence = coherence_scores(&graph, &kb, &PprConfig::default())?;
    for (n, node) in graph.nodes().iter().enumerate() {
        println!(
            "mention {} {:<8} incoming {:.2} coherence {:.4}",
            node.mention,
            kb.id_of(node.concept()),
            node.candidate.score,
            coherence.get(n)
        );
    }
    for (m, choice) in select(&graph, &coherence).iter().enumerate() {
        println!("mention {m} -> {}", choice.as_ref().map_or("NIL", |c| kb.id_of(c.concept_index)));
    }
    Ok(())
}
