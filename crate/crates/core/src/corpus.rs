//! PubTator corpora, evaluation datasets and distantly supervised training sets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::kos::{normalize_id, KnowledgeBase, LabelIndex};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Disease,
    Chemical,
    /// Any other PubTator type (Gene, Species, ...); parsed but never linked.
    Other(String),
}

impl FromStr for EntityType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            "Disease" | "DiseaseOrPhenotypicFeature" | "SpecificDisease" | "DiseaseClass"
            | "Modifier" | "CompositeMention" => EntityType::Disease,
            "Chemical" | "ChemicalEntity" => EntityType::Chemical,
            other => EntityType::Other(other.to_string()),
        })
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityType::Disease => f.write_str("Disease"),
            EntityType::Chemical => f.write_str("Chemical"),
            EntityType::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub doc_id: String,
    pub span: Option<(usize, usize)>,
    pub text: String,
    pub entity_type: EntityType,
    /// Identifier column exactly as it appeared in the file.
    pub raw_id: String,
    /// Bare identifiers (prefixes stripped, composite ids split on `|`).
    pub gold_ids: Vec<String>,
}

impl Mention {
    pub fn new(doc_id: &str, text: &str, entity_type: EntityType) -> Self {
        Mention {
            doc_id: doc_id.to_string(),
            span: None,
            text: text.to_string(),
            entity_type,
            raw_id: String::new(),
            gold_ids: Vec::new(),
        }
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.span = Some((start, end));
        self
    }

    pub fn with_gold(mut self, raw_id: &str) -> Self {
        self.raw_id = raw_id.to_string();
        self.gold_ids = split_ids(raw_id);
        self
    }

    /// `-1`, `-` or no identifier at all.
    pub fn is_nil(&self) -> bool {
        self.gold_ids.is_empty() || self.gold_ids.iter().any(|id| is_nil_id(id))
    }
}

pub fn is_nil_id(id: &str) -> bool {
    matches!(id.trim(), "-1" | "-" | "")
}

fn split_ids(raw: &str) -> Vec<String> {
    raw.split('|')
        .map(normalize_id)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub abstract_text: String,
    pub mentions: Vec<Mention>,
}

impl Document {
    pub fn new(doc_id: &str, title: &str, abstract_text: &str) -> Self {
        Document {
            doc_id: doc_id.to_string(),
            title: title.to_string(),
            abstract_text: abstract_text.to_string(),
            mentions: Vec::new(),
        }
    }

    /// Title and abstract joined the way PubTator offsets address them.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }

    fn text_len(&self) -> usize {
        let t = self.title.chars().count();
        if self.abstract_text.is_empty() {
            t
        } else {
            t + 1 + self.abstract_text.chars().count()
        }
    }
}

/// Parses PubTator text (`PMID|t|`, `PMID|a|`, tab-separated annotation lines).
pub fn parse_pubtator<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Document>> {
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    parse_numbered(lines.iter().enumerate().map(|(n, l)| (n + 1, l.as_str())), source_name)
}

/// Lenient variant: documents are blank-line separated blocks and a malformed
/// block yields an error in its slot without affecting the others.
pub fn parse_pubtator_blocks<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Result<Document>>> {
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    let mut blocks: Vec<Vec<(usize, &str)>> = Vec::new();
    let mut current = Vec::new();
    for (n, l) in lines.iter().enumerate() {
        if l.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push((n + 1, l.as_str()));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    let mut out = Vec::new();
    for block in blocks {
        match parse_numbered(block.into_iter(), source_name) {
            Ok(docs) => out.extend(docs.into_iter().map(Ok)),
            Err(e) => out.push(Err(e)),
        }
    }
    Ok(out)
}

fn parse_numbered<'a>(lines: impl Iterator<Item = (usize, &'a str)>, source_name: &str) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();

    for (lineno, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }

        if !line.contains('\t') {
            let mut parts = line.splitn(3, '|');
            let (Some(pmid), Some(kind), Some(body)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(source_name, lineno, "expected `PMID|t|...` or `PMID|a|...`"));
            };
            let pmid = pmid.trim();
            if pmid.is_empty() {
                return Err(Error::parse(source_name, lineno, "empty document id"));
            }
            let idx = *by_id.entry(pmid.to_string()).or_insert_with(|| {
                docs.push(Document::new(pmid, "", ""));
                docs.len() - 1
            });
            match kind {
                "t" => docs[idx].title = body.to_string(),
                "a" => docs[idx].abstract_text = body.to_string(),
                other => {
                    return Err(Error::parse(source_name, lineno, format!("unknown text section `{other}`")))
                }
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        // relation lines (`PMID<TAB>CID<TAB>D1<TAB>D2`) are not annotations
        if cols.len() == 4 && cols[1].parse::<usize>().is_err() {
            continue;
        }
        if !(5..=7).contains(&cols.len()) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("annotation line has {} columns, expected 6", cols.len()),
            ));
        }
        let doc_id = cols[0].trim();
        let Some(&idx) = by_id.get(doc_id) else {
            return Err(Error::parse(source_name, lineno, format!("annotation for unseen document `{doc_id}`")));
        };
        let parse_off = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(source_name, lineno, format!("bad offset `{s}`")))
        };
        let (start, end) = (parse_off(cols[1])?, parse_off(cols[2])?);
        if start >= end || end > docs[idx].text_len() {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("span {start}..{end} outside document text"),
            ));
        }
        let text = cols[3];
        if text.is_empty() {
            return Err(Error::parse(source_name, lineno, "empty mention text"));
        }
        let raw_id = cols.get(5).copied().unwrap_or("");
        let mention = Mention::new(doc_id, text, cols[4].parse().unwrap())
            .with_span(start, end)
            .with_gold(raw_id);
        docs[idx].mentions.push(mention);
    }
    Ok(docs)
}

pub fn load_pubtator(path: &Path) -> Result<Vec<Document>> {
    parse_pubtator(BufReader::new(File::open(path)?), &path.display().to_string())
}

pub fn write_pubtator<W: Write>(docs: &[Document], mut out: W) -> Result<()> {
    for doc in docs {
        writeln!(out, "{}|t|{}", doc.doc_id, doc.title)?;
        writeln!(out, "{}|a|{}", doc.doc_id, doc.abstract_text)?;
        for m in &doc.mentions {
            let (s, e) = m.span.unwrap_or((0, 0));
            writeln!(out, "{}\t{s}\t{e}\t{}\t{}\t{}", doc.doc_id, m.text, m.entity_type, m.raw_id)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One `(document, surface string, identifier)` triple of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub doc_id: String,
    pub text: String,
    pub id: String,
}

impl Annotation {
    pub fn new(doc_id: &str, text: &str, id: &str) -> Self {
        Annotation {
            doc_id: doc_id.to_string(),
            text: text.to_string(),
            id: id.to_string(),
        }
    }
}

/// Flattens mentions into annotations, one per gold id (composite ids expand).
pub fn annotations_from_documents(docs: &[Document], entity_type: Option<&EntityType>) -> Vec<Annotation> {
    docs.iter()
        .flat_map(|d| d.mentions.iter())
        .filter(|m| entity_type.is_none_or(|t| &m.entity_type == t))
        .flat_map(|m| {
            m.gold_ids
                .iter()
                .map(move |id| Annotation::new(&m.doc_id, &m.text, id))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    KosOnly,
    KosAndPubtator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub text: String,
    pub label: LabelIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub instances: Vec<Instance>,
    pub provenance: Provenance,
    pub cap: Option<usize>,
}

/// Counters from one [`generate_training_set`] run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationStats {
    pub input: usize,
    pub excluded_doc: usize,
    pub obsolete: usize,
    pub duplicates: usize,
    pub truncated: usize,
}

/// Builds a corpus-derived training set:
/// document exclusion, lowercasing, deduplication with frequency counting,
/// obsolete-id removal with dense indexing, then per-label frequency ordering and cap.
pub fn generate_training_set(
    annotations: &[Annotation],
    kb: &KnowledgeBase,
    excluded_docs: &HashSet<String>,
    cap: Option<usize>,
) -> (TrainingSet, GenerationStats) {
    let mut stats = GenerationStats {
        input: annotations.len(),
        ..Default::default()
    };
    let mut freq: BTreeMap<LabelIndex, HashMap<String, usize>> = BTreeMap::new();
    let mut raw_pairs: HashSet<(String, &str)> = HashSet::new();

    for ann in annotations {
        if excluded_docs.contains(&ann.doc_id) {
            stats.excluded_doc += 1;
            continue;
        }
        let text = ann.text.trim().to_lowercase();
        if text.is_empty() {
            continue;
        }
        let fresh = raw_pairs.insert((text.clone(), ann.id.as_str()));
        let Some(label) = kb.resolve(&ann.id) else {
            stats.obsolete += 1;
            continue;
        };
        if !fresh {
            stats.duplicates += 1;
        }
        *freq.entry(label).or_default().entry(text).or_insert(0) += 1;
    }

    let mut instances = Vec::new();
    for (label, texts) in freq {
        let mut ranked: Vec<(String, usize)> = texts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(cap) = cap {
            stats.truncated += ranked.len().saturating_sub(cap);
            ranked.truncate(cap);
        }
        instances.extend(ranked.into_iter().map(|(text, _)| Instance { text, label }));
    }
    if instances.is_empty() {
        warn!("training set is empty after filtering {} annotations", stats.input);
    }
    (
        TrainingSet {
            instances,
            provenance: Provenance::KosAndPubtator,
            cap,
        },
        stats,
    )
}

/// Lowercased canonical names and synonyms of every concept.
pub fn kos_training_instances(kb: &KnowledgeBase) -> TrainingSet {
    let mut instances = Vec::new();
    for (i, c) in kb.concepts().iter().enumerate() {
        let mut seen = HashSet::new();
        for s in c.surface_forms() {
            let text = s.trim().to_lowercase();
            if !text.is_empty() && seen.insert(text.clone()) {
                instances.push(Instance {
                    text,
                    label: i as LabelIndex,
                });
            }
        }
    }
    TrainingSet {
        instances,
        provenance: Provenance::KosOnly,
        cap: None,
    }
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Union of two sets; the result is uncapped since the cap only bounds corpus instances.
    pub fn merge(&self, other: &TrainingSet) -> TrainingSet {
        let mut seen: HashSet<&Instance> = HashSet::new();
        let mut instances = Vec::with_capacity(self.len() + other.len());
        for inst in self.instances.iter().chain(&other.instances) {
            if seen.insert(inst) {
                instances.push(inst.clone());
            }
        }
        instances.sort_by_key(|i| i.label);
        let provenance = if self.provenance == Provenance::KosOnly && other.provenance == Provenance::KosOnly {
            Provenance::KosOnly
        } else {
            Provenance::KosAndPubtator
        };
        TrainingSet {
            instances,
            provenance,
            cap: None,
        }
    }

    /// Number of distinct labels present.
    pub fn label_count(&self) -> usize {
        self.instances.iter().map(|i| i.label).collect::<HashSet<_>>().len()
    }

    /// Writes `label_index<TAB>text`, one instance per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for inst in &self.instances {
            writeln!(out, "{}\t{}", inst.label, inst.text)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_tsv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Reads a training file, checking every label against `kb` and the set invariants.
    pub fn read_tsv<R: BufRead>(reader: R, kb: &KnowledgeBase, source_name: &str) -> Result<Self> {
        let mut instances = Vec::new();
        let mut seen = HashSet::new();
        let mut kos_only = true;
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (label, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, n + 1, "expected `label<TAB>text`"))?;
            let label: LabelIndex = label
                .trim()
                .parse()
                .map_err(|_| Error::parse(source_name, n + 1, format!("bad label index `{label}`")))?;
            if label as usize >= kb.len() {
                return Err(Error::parse(
                    source_name,
                    n + 1,
                    format!("label {label} out of range for {} concepts", kb.len()),
                ));
            }
            let text = text.to_lowercase();
            if text.is_empty() {
                continue;
            }
            let inst = Instance { text, label };
            if seen.insert(inst.clone()) {
                if kos_only
                    && !kb
                        .concept(label)
                        .surface_forms()
                        .any(|s| s.to_lowercase() == inst.text)
                {
                    kos_only = false;
                }
                instances.push(inst);
            }
        }
        Ok(TrainingSet {
            instances,
            provenance: if kos_only {
                Provenance::KosOnly
            } else {
                Provenance::KosAndPubtator
            },
            cap: None,
        })
    }

    pub fn load(path: &Path, kb: &KnowledgeBase) -> Result<Self> {
        Self::read_tsv(BufReader::new(File::open(path)?), kb, &path.display().to_string())
    }
}

/// Evaluation documents after NIL and obsolete-id filtering.
#[derive(Debug, Clone, Default)]
pub struct EvalDataset {
    pub name: String,
    pub documents: Vec<Document>,
    pub removed_nil: usize,
    pub removed_obsolete: usize,
}

impl EvalDataset {
    pub fn mention_count(&self) -> usize {
        self.documents.iter().map(|d| d.mentions.len()).sum()
    }
}

/// Drops NIL mentions and mentions whose ids are all unknown to `kb`;
/// surviving gold ids are rewritten to primary ids.
pub fn filter_eval_documents(docs: Vec<Document>, kb: &KnowledgeBase, name: &str) -> EvalDataset {
    let mut out = EvalDataset {
        name: name.to_string(),
        ..Default::default()
    };
    for mut doc in docs {
        doc.mentions.retain_mut(|m| {
            if m.is_nil() {
                out.removed_nil += 1;
                return false;
            }
            let mut resolved: Vec<String> = Vec::new();
            for id in &m.gold_ids {
                if let Some(i) = kb.resolve(id) {
                    let primary = kb.id_of(i).to_string();
                    if !resolved.contains(&primary) {
                        resolved.push(primary);
                    }
                }
            }
            if resolved.is_empty() {
                out.removed_obsolete += 1;
                return false;
            }
            m.gold_ids = resolved;
            true
        });
        out.documents.push(doc);
    }
    out
}

pub fn load_eval_dataset(path: &Path, kb: &KnowledgeBase) -> Result<EvalDataset> {
    let docs = load_pubtator(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(filter_eval_documents(docs, kb, &name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kos::Concept;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_concepts(vec![
            Concept::new("D1", "Influenza").with_synonyms(["flu", "grippe"]),
            Concept::new("D2", "Common cold").with_synonyms(["cold"]).with_alt_ids(["OMIM:999"]),
            Concept::new("D3", "Chill").with_synonyms(["cold"]),
        ])
        .unwrap()
    }

    #[test]
    fn single_document_with_one_annotation() {
        let text = "123|t|Flu season\n123|a|Many cases.\n123\t0\t3\tFlu\tDisease\tMESH:D1\n\n";
        let docs = parse_pubtator(text.as_bytes(), "t").unwrap();
        assert_eq!(docs.len(), 1);
        let m = &docs[0].mentions[0];
        assert_eq!(m.gold_ids, vec!["D1"]);
        assert_eq!(m.raw_id, "MESH:D1");
        assert_eq!(m.span, Some((0, 3)));
        assert_eq!(m.entity_type, EntityType::Disease);
    }

    #[test]
    fn composite_and_nil_ids() {
        let text = "1|t|hemorrhagic strokes and x\n1|a|\n\
1\t0\t19\themorrhagic strokes\tDisease\tD020300|D020521\n\
1\t24\t25\tx\tDisease\t-1\n";
        let docs = parse_pubtator(text.as_bytes(), "t").unwrap();
        assert_eq!(docs[0].mentions[0].gold_ids, vec!["D020300", "D020521"]);
        assert!(docs[0].mentions[1].is_nil());
        assert_eq!(docs[0].mentions[1].raw_id, "-1");
    }

    #[test]
    fn malformed_annotation_lines() {
        let bad_cols = "1|t|abc\n1\t0\t1\n";
        assert!(matches!(
            parse_pubtator(bad_cols.as_bytes(), "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        let unseen = "1|t|abc\n2\t0\t1\ta\tDisease\tD1\n";
        assert!(matches!(
            parse_pubtator(unseen.as_bytes(), "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        let outside = "1|t|abc\n1\t0\t9\ta\tDisease\tD1\n";
        assert!(parse_pubtator(outside.as_bytes(), "t").is_err());
    }

    #[test]
    fn relation_lines_are_skipped() {
        let text = "1|t|abc\n1|a|def\n1\tCID\tD1\tD2\n";
        let docs = parse_pubtator(text.as_bytes(), "t").unwrap();
        assert!(docs[0].mentions.is_empty());
    }

    #[test]
    fn excluded_documents_are_dropped_first() {
        let anns = vec![
            Annotation::new("a", "flu", "D1"),
            Annotation::new("a", "grippe", "D1"),
            Annotation::new("b", "cold", "D2"),
            Annotation::new("x", "chill", "D3"),
            Annotation::new("x", "influenza", "D1"),
        ];
        let excluded: HashSet<String> = ["x".to_string()].into();
        let (set, stats) = generate_training_set(&anns, &kb(), &excluded, None);
        assert_eq!(stats.excluded_doc, 2);
        assert_eq!(set.len(), 3);
    }

    #[test]
    fn case_variants_collapse() {
        let anns = vec![Annotation::new("a", "Flu", "D1"), Annotation::new("b", "flu", "D1")];
        let (set, stats) = generate_training_set(&anns, &kb(), &HashSet::new(), None);
        assert_eq!(set.instances, vec![Instance { text: "flu".into(), label: 0 }]);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn cap_keeps_most_frequent_with_lexicographic_ties() {
        // frequencies: a=9, c=5, b=5, d=3, e=2, f=1
        let mut anns = Vec::new();
        for (text, n) in [("a", 9), ("c", 5), ("b", 5), ("d", 3), ("e", 2), ("f", 1)] {
            for k in 0..n {
                anns.push(Annotation::new(&format!("doc{k}"), text, "D1"));
            }
        }
        let (set, stats) = generate_training_set(&anns, &kb(), &HashSet::new(), Some(4));
        let texts: Vec<_> = set.instances.iter().map(|i| i.text.as_str()).collect();
        assert_eq!(texts, vec!["a", "b", "c", "d"]);
        assert_eq!(stats.truncated, 2);
    }

    #[test]
    fn alt_ids_are_remapped_and_obsolete_dropped() {
        let anns = vec![
            Annotation::new("a", "cold", "OMIM:999"),
            Annotation::new("a", "cold", "D2"),
            Annotation::new("a", "ghost", "D404"),
        ];
        let (set, stats) = generate_training_set(&anns, &kb(), &HashSet::new(), None);
        assert_eq!(set.instances, vec![Instance { text: "cold".into(), label: 1 }]);
        assert_eq!(stats.obsolete, 1);
    }

    #[test]
    fn empty_result_is_not_an_error() {
        let anns = vec![Annotation::new("a", "ghost", "D404")];
        let (set, _) = generate_training_set(&anns, &kb(), &HashSet::new(), Some(10));
        assert!(set.is_empty());
    }

    #[test]
    fn kos_instances() {
        let set = kos_training_instances(&kb());
        assert_eq!(set.provenance, Provenance::KosOnly);
        // 3 + 2 + 2
        assert_eq!(set.len(), 7);
        let colds: Vec<_> = set.instances.iter().filter(|i| i.text == "cold").map(|i| i.label).collect();
        assert_eq!(colds, vec![1, 2]);
    }

    #[test]
    fn eval_filtering() {
        let text = "1|t|a b c d\n1|a|\n\
1\t0\t1\ta\tDisease\t-1\n\
1\t2\t3\tb\tDisease\tD404\n\
1\t4\t5\tc\tDisease\tMESH:D1\n\
1\t6\t7\td\tDisease\tOMIM:999\n";
        let docs = parse_pubtator(text.as_bytes(), "t").unwrap();
        let ds = filter_eval_documents(docs, &kb(), "toy");
        assert_eq!(ds.removed_nil, 1);
        assert_eq!(ds.removed_obsolete, 1);
        assert_eq!(ds.mention_count(), 2);
        assert_eq!(ds.documents[0].mentions[1].gold_ids, vec!["D2"]);
    }

    #[test]
    fn training_file_round_trip() {
        let set = kos_training_instances(&kb());
        let mut buf = Vec::new();
        set.write_tsv(&mut buf).unwrap();
        let back = TrainingSet::read_tsv(buf.as_slice(), &kb(), "t").unwrap();
        assert_eq!(back.instances, set.instances);
        assert_eq!(back.provenance, Provenance::KosOnly);
        assert!(TrainingSet::read_tsv("7\tflu\n".as_bytes(), &kb(), "t").is_err());
    }
}
