#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use xlinker::corpus::{Document, EntityType, Mention};
use xlinker::kos::{Concept, KnowledgeBase};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SYLLABLES: &[&str] = &[
    "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "re", "si", "to", "vu", "xa", "ze", "ry",
];

pub fn word<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// `n` words, all distinct.
pub fn distinct_words<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = word(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Flat KOS whose every name and synonym is a globally unique phrase.
pub fn unique_name_kb<R: Rng>(rng: &mut R, n: usize, synonyms: usize) -> KnowledgeBase {
    let words = distinct_words(rng, n * (synonyms + 1) * 2);
    let mut it = words.chunks(2).map(|c| c.join(" "));
    let concepts = (0..n)
        .map(|i| {
            let name = it.next().unwrap();
            let syns: Vec<String> = (0..synonyms).map(|_| it.next().unwrap()).collect();
            Concept::new(format!("D{i:06}"), name).with_synonyms(syns)
        })
        .collect();
    KnowledgeBase::from_concepts(concepts).unwrap()
}

/// KOS over a small shared vocabulary, so names overlap in words and a
/// few surface strings are ambiguous. Concept `i > 0` gets a parent below `i`.
pub fn overlapping_kb<R: Rng>(rng: &mut R, n: usize, vocab_size: usize) -> KnowledgeBase {
    let vocab = distinct_words(rng, vocab_size);
    let phrase = |rng: &mut R| {
        let k = rng.gen_range(1..=3);
        (0..k).map(|_| vocab.choose(rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
    };
    let concepts = (0..n)
        .map(|i| {
            let name = phrase(rng);
            let syns: Vec<String> = (0..2).map(|_| phrase(rng)).collect();
            let mut c = Concept::new(format!("C{i:04}"), name).with_synonyms(syns);
            if i > 0 && rng.gen_bool(0.7) {
                c = c.with_parents([format!("C{:04}", rng.gen_range(0..i))]);
            }
            c
        })
        .collect();
    KnowledgeBase::from_concepts(concepts).unwrap()
}

pub fn random_query<R: Rng>(rng: &mut R, kb: &KnowledgeBase) -> String {
    let words: Vec<&str> = kb
        .concepts()
        .iter()
        .flat_map(|c| c.surface_forms())
        .flat_map(|s| s.split_whitespace())
        .collect();
    match rng.gen_range(0..3) {
        // a training string verbatim
        0 => {
            let c = &kb.concepts()[rng.gen_range(0..kb.len())];
            c.surface_forms().collect::<Vec<_>>().choose(rng).unwrap().to_string()
        }
        // a shuffled bag of known words
        1 => (0..rng.gen_range(1..=3))
            .map(|_| *words.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" "),
        // a misspelling
        _ => {
            let mut w: Vec<char> = words.choose(rng).unwrap().chars().collect();
            let i = rng.gen_range(0..w.len());
            w[i] = 'q';
            w.into_iter().collect()
        }
    }
}

/// Small fragment of the MEDIC disease vocabulary around vasculitis.
pub fn vasculitis_kb() -> KnowledgeBase {
    KnowledgeBase::from_concepts(vec![
        Concept::new("D002318", "Cardiovascular Diseases"),
        Concept::new("D014652", "Vascular Diseases").with_parents(["D002318"]),
        Concept::new("D014657", "Vasculitis")
            .with_synonyms(["Vasculitides", "Angiitis"])
            .with_parents(["D014652"]),
        Concept::new("D056647", "Systemic Vasculitis").with_parents(["D014657"]),
        Concept::new("D009358", "Congenital Disorder")
            .with_synonyms(["Congenital, Hereditary, and Neonatal Diseases and Abnormalities"]),
    ])
    .unwrap()
}

/// Document with the mentions "vasculitic" and "vasculitis", in that order.
pub fn vasculitis_document() -> Document {
    let title = "Renal involvement in childhood vasculitic syndromes";
    let abstract_text = "We review the kidney biopsy findings in twelve children with systemic vasculitis.";
    let mut doc = Document::new("19263707", title, abstract_text);
    let text = doc.text();
    for (surface, id) in [("vasculitic", "D014657"), ("vasculitis", "D014657")] {
        let byte = text.find(surface).unwrap();
        let start = text[..byte].chars().count();
        doc.mentions.push(
            Mention::new("19263707", surface, EntityType::Disease)
                .with_span(start, start + surface.chars().count())
                .with_gold(&format!("MESH:{id}")),
        );
    }
    doc
}

/// Builds a PubTator document whose title is the mention texts joined by spaces.
pub fn synthetic_document(doc_id: &str, mentions: &[(&str, &str)]) -> Document {
    let title = mentions.iter().map(|(t, _)| *t).collect::<Vec<_>>().join(" ");
    let mut doc = Document::new(doc_id, &title, "");
    let mut pos = 0;
    for (text, id) in mentions {
        let len = text.chars().count();
        doc.mentions.push(
            Mention::new(doc_id, text, EntityType::Disease)
                .with_span(pos, pos + len)
                .with_gold(id),
        );
        pos += len + 1;
    }
    doc
}
