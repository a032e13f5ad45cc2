//! The whole pipeline on one abstract: "vasculitic" gets a weak ranker
//! score, so its string-matched candidate joins the graph and wins through
//! the second mention "vasculitis".

use xlinker::corpus::{Document, EntityType, Mention};
use xlinker::kos::{Concept, KnowledgeBase};
use xlinker::pipeline::{link_document, PipelineConfig};
use xlinker::strmatch::build_name_index;
use xlinker::xmr::StaticRanker;

fn main() -> xlinker::Result<()> {
    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("D002318", "Cardiovascular Diseases"),
        Concept::new("D014652", "Vascular Diseases").with_parents(["D002318"]),
        Concept::new("D014657", "Vasculitis").with_synonyms(["Angiitis"]).with_parents(["D014652"]),
        Concept::new("D056647", "Systemic Vasculitis").with_parents(["D014657"]),
        Concept::new("D009358", "Congenital Disorder"),
    ])?;
    let index = build_name_index(&kb);
    // replayed ranker output; a trained XmrModel plugs in the same way
    let ranker = StaticRanker::new()
        .with("vasculitic", kb.index_of("D009358").unwrap(), 0.0964)
        .with("vasculitis", kb.index_of("D014657").unwrap(), 1.0);

    let title = "Renal involvement in childhood vasculitic syndromes";
    let abstract_text = "Biopsies of twelve children with systemic vasculitis were reviewed.";
    let mut doc = Document::new("19263707", title, abstract_text);
    let text = doc.text();
    for surface in ["vasculitic", "vasculitis"] {
        let start = text.find(surface).unwrap();
        doc.mentions.push(
            Mention::new("19263707", surface, EntityType::Disease).with_span(start, start + surface.len()),
        );
    }

    for linked in link_document(&doc, &ranker, &kb, &index, &PipelineConfig::default())? {
        let t = &linked.trace;
        println!("{}", linked.mention.text);
        println!("  branch        {}", t.branch);
        if let Some(s) = &t.string_top {
            println!("  string top    {} ({:.2})", kb.id_of(s.concept_index), s.score);
        }
        if let Some(x) = &t.xmr_top {
            println!("  ranker top    {} ({:.4})", kb.id_of(x.concept_index), x.score);
        }
        let ranked: Vec<&str> = linked.prediction.iter().map(|p| p.id.as_str()).collect();
        println!("  prediction    {}", ranked.join(" > "));
    }
    Ok(())
}
