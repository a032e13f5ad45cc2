//! Short-form/long-form detection in an abstract and mention expansion.

use xlinker::abbrev::{detect_abbreviations, expand_mention};

fn main() {
    let text = "Giant cell arteritis (GCA) is a large-vessel vasculitis. Patients with GCA and \
                chronic kidney disease (CKD) were enrolled; antineutrophil cytoplasmic \
                antibody (ANCA) titres were measured at baseline.";
    let map = detect_abbreviations(text);
    for (short, long) in map.iter() {
        println!("{short:<6} = {long}");
    }
    for mention in ["GCA", "CKD", "ANCA", "vasculitis"] {
        println!("{mention:<12} -> {}", expand_mention(mention, &map));
    }
}
