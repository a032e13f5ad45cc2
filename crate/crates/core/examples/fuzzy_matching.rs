//! Edit-distance candidate retrieval over names and synonyms.

use xlinker::kos::{Concept, KnowledgeBase};
use xlinker::strmatch::{build_name_index, match_mention};

fn main() -> xlinker::Result<()> {
    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("D014657", "Vasculitis").with_synonyms(["Angiitis", "Vasculitides"]),
        Concept::new("D001167", "Arteritis"),
        Concept::new("D007674", "Kidney Diseases").with_synonyms(["Renal Diseases", "Nephropathy"]),
        Concept::new("D003920", "Diabetes Mellitus"),
    ])?;
    let index = build_name_index(&kb);
    println!("{} surface forms indexed", index.len());

    for query in ["vasculitic", "arteritis", "nephropathies", "renal disease", "diabetes"] {
        let hits = match_mention(query, &index, 3);
        let shown: Vec<String> = hits
            .iter()
            .map(|h| format!("{} via {:?} ({:.3})", kb.id_of(h.concept_index), h.matched_surface, h.score))
            .collect();
        println!("{query:<14} -> {}", shown.join("; "));
    }
    Ok(())
}
