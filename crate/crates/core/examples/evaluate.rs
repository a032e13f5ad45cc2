//! Top-k accuracy with composite gold ids, and the per-dataset table.

use std::collections::HashMap;

use xlinker::corpus::{filter_eval_documents, parse_pubtator};
use xlinker::eval::{evaluate, top_k_accuracy, write_table};
use xlinker::kos::{Concept, KnowledgeBase};

const GOLD: &str = "\
7|t|hemorrhagic strokes and vasculitis
7|a|
7\t0\t19\themorrhagic strokes\tDisease\tMESH:D020300|MESH:D020521
7\t24\t34\tvasculitis\tDisease\tMESH:D014657
8|t|unmapped lesion and arteritis
8|a|
8\t0\t15\tunmapped lesion\tDisease\t-1
8\t20\t29\tarteritis\tDisease\tMESH:D001167
";

fn main() -> xlinker::Result<()> {
    let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let gold = vec![ids(&["D020300", "D020521"]), ids(&["D014657"]), ids(&["D001167"])];
    let predictions = vec![ids(&["D020300"]), ids(&["D001167", "D014657"]), ids(&[])];
    for k in [1, 2, 5] {
        println!("top-{k}: {:.4}", top_k_accuracy(&predictions, &gold, k)?);
    }

    let kb = KnowledgeBase::from_concepts(vec![
        Concept::new("D020300", "Intracranial Hemorrhages"),
        Concept::new("D020521", "Stroke"),
        Concept::new("D014657", "Vasculitis"),
        Concept::new("D001167", "Arteritis"),
    ])?;
    let dataset = filter_eval_documents(parse_pubtator(GOLD.as_bytes(), "gold")?, &kb, "toy");
    let mut linked = HashMap::new();
    linked.insert(("7".to_string(), 0, 19), ids(&["D020521"]));
    linked.insert(("7".to_string(), 24, 34), ids(&["D014657"]));
    linked.insert(("8".to_string(), 20, 29), ids(&["D014657", "D001167"]));
    let report = evaluate(&dataset, &linked, None, &[1, 5])?;
    write_table(&[report], std::io::stdout().lock())?;
    Ok(())
}
