//! Trains the hierarchical label ranker on a generated vocabulary, predicts,
//! and checks that a saved model reloads to identical predictions.

use xlinker::corpus::kos_training_instances;
use xlinker::kos::{Concept, KnowledgeBase};
use xlinker::xmr::{XmrConfig, XmrModel};

fn main() -> xlinker::Result<()> {
    let organs = ["kidney", "liver", "lung", "heart", "skin", "bone", "brain", "eye"];
    let kinds = ["cancer", "failure", "inflammation", "injury", "infection"];
    let mut concepts = Vec::new();
    for (i, organ) in organs.iter().enumerate() {
        for (j, kind) in kinds.iter().enumerate() {
            concepts.push(
                Concept::new(format!("X{:03}", i * kinds.len() + j), format!("{organ} {kind}"))
                    .with_synonyms([format!("{kind} of the {organ}"), format!("{organ}-{kind}")]),
            );
        }
    }
    let kb = KnowledgeBase::from_concepts(concepts)?;
    let train = kos_training_instances(&kb);
    let cfg = XmrConfig {
        max_leaf_size: 8,
        ..Default::default()
    };
    let (model, report) = XmrModel::fit(&train, &kb, &cfg)?;
    println!(
        "{} labels, {} leaves, tree depth {}, {} binary models ({} not converged)",
        report.labels_trained,
        model.leaf_count(),
        model.tree().depth(),
        report.binary_models,
        report.non_converged.len()
    );

    for query in ["kidney failure", "renal failure", "lung infections", "cancer of the liver", "brain"] {
        let top: Vec<String> = model
            .predict(query, 10, 3)
            .iter()
            .map(|c| format!("{} {} {:.4}", kb.concept(c.concept_index).canonical_name, c.source, c.score))
            .collect();
        println!("{query:<20} -> {}", top.join(" | "));
    }

    let dir = tempfile::tempdir()?;
    model.save(dir.path())?;
    let reloaded = XmrModel::load(dir.path())?;
    assert_eq!(reloaded.predict("renal failure", 10, 3), model.predict("renal failure", 10, 3));
    println!("reloaded model from {} predicts identically", dir.path().display());
    Ok(())
}
