//! Loads a tiny CTD-style vocabulary and prints information content and
//! is-a neighbours per concept.

use xlinker::kos::parse_ctd_tsv;

const KOS: &str = "\
# Name\tID\tAltIDs\tDefinition\tParentIDs\tTreeNumbers\tParentTreeNumbers\tSynonyms
Cardiovascular Diseases\tMESH:D002318\t\t\t\t\t\t
Vascular Diseases\tMESH:D014652\t\t\tMESH:D002318\t\t\t
Heart Diseases\tMESH:D006331\t\t\tMESH:D002318\t\t\tCardiac Diseases
Vasculitis\tMESH:D014657\t\t\tMESH:D014652\t\t\tAngiitis|Vasculitides
Systemic Vasculitis\tMESH:D056647\t\t\tMESH:D014657\t\t\t
Arteritis\tMESH:D001167\t\t\tMESH:D014657\t\t\t
";

fn main() -> xlinker::Result<()> {
    let kb = parse_ctd_tsv(KOS.as_bytes(), "inline")?;
    println!("{:<10} {:<24} {:>8} {:>6}  neighbours", "id", "name", "children", "IC");
    for c in kb.concepts() {
        let i = kb.index_of(&c.id).unwrap();
        let neighbours: Vec<String> = kb.neighbors(&c.id)?.into_iter().collect();
        println!(
            "{:<10} {:<24} {:>8} {:>6.3}  {}",
            c.id,
            c.canonical_name,
            kb.children_count(i),
            kb.information_content(&c.id)?,
            neighbours.join(",")
        );
    }
    Ok(())
}
