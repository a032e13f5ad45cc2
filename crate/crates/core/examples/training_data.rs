//! Distant-supervision training data: PubTator annotations plus KOS names,
//! with document exclusion, deduplication and a per-label cap.

use std::collections::HashSet;

use xlinker::corpus::{annotations_from_documents, generate_training_set, kos_training_instances, parse_pubtator};
use xlinker::kos::{Concept, KnowledgeBase};

const PUBTATOR: &str = "\
11|t|Vasculitis and angiitis in vasculitis patients
11|a|Renal vasculitis was seen.
11\t0\t10\tVasculitis\tDisease\tMESH:D014657
11\t15\t23\tangiitis\tDisease\tMESH:D014657
11\t27\t37\tvasculitis\tDisease\tMESH:D014657
11\t47\t63\tRenal vasculitis\tDisease\tMESH:D014657

12|t|Held-out test abstract on arteritis
12|a|
12\t26\t35\tarteritis\tDisease\tMESH:D001167

13|t|An obsolete heading
13|a|
13\t12\t19\tobsolete\tDisease\tMESH:D999999
";

fn main() -> xlinker::Result<()> {
    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("D014657", "Vasculitis").with_synonyms(["Angiitis"]),
        Concept::new("D001167", "Arteritis"),
    ])?;
    let docs = parse_pubtator(PUBTATOR.as_bytes(), "inline")?;
    let annotations = annotations_from_documents(&docs, None);
    // document 12 belongs to an evaluation split and must not leak into training
    let excluded: HashSet<String> = ["12".to_string()].into();
    let (corpus_set, stats) = generate_training_set(&annotations, &kb, &excluded, Some(2));
    println!("{stats:?}");
    let merged = corpus_set.merge(&kos_training_instances(&kb));
    for inst in &merged.instances {
        println!("{}\t{}\t{}", inst.label, kb.id_of(inst.label), inst.text);
    }
    Ok(())
}
