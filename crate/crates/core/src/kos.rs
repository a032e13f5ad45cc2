//! Target vocabulary (KOS) loading and hierarchy queries.
//!
//! Concepts are read from CTD-style vocabulary dumps (MEDIC, CTD-Chemical)
//! and assigned dense label indexes in file order. The hierarchy is a DAG
//! over `is-a` parent links; cycles and dangling parents are rejected.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense label index of a concept inside a [`KnowledgeBase`].
pub type LabelIndex = u32;

/// File name of the vocabulary copy inside a knowledge-base directory.
pub const KB_TSV_FILE: &str = "kos.tsv";
/// File name of the label-index table inside a knowledge-base directory.
pub const KB_LABELS_FILE: &str = "labels.tsv";

const CTD_COLUMNS: usize = 8;

/// Strips the namespace prefixes used by CTD and PubTator (`MESH:`, `OMIM:`).
pub fn normalize_id(raw: &str) -> &str {
    let raw = raw.trim();
    raw.strip_prefix("MESH:")
        .or_else(|| raw.strip_prefix("OMIM:"))
        .unwrap_or(raw)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: String,
    pub canonical_name: String,
    pub synonyms: Vec<String>,
    pub parent_ids: Vec<String>,
    pub alt_ids: Vec<String>,
}

impl Concept {
    pub fn new(id: impl Into<String>, canonical_name: impl Into<String>) -> Self {
        Concept {
            id: id.into(),
            canonical_name: canonical_name.into(),
            synonyms: Vec::new(),
            parent_ids: Vec::new(),
            alt_ids: Vec::new(),
        }
    }

    pub fn with_synonyms<S: Into<String>>(mut self, synonyms: impl IntoIterator<Item = S>) -> Self {
        self.synonyms.extend(synonyms.into_iter().map(Into::into));
        self
    }

    pub fn with_parents<S: Into<String>>(mut self, parents: impl IntoIterator<Item = S>) -> Self {
        self.parent_ids.extend(parents.into_iter().map(Into::into));
        self
    }

    pub fn with_alt_ids<S: Into<String>>(mut self, alt_ids: impl IntoIterator<Item = S>) -> Self {
        self.alt_ids.extend(alt_ids.into_iter().map(Into::into));
        self
    }

    /// Canonical name followed by the synonyms.
    pub fn surface_forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_name.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KosFormat {
    CtdTsv,
}

/// An immutable, validated vocabulary.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    concepts: Vec<Concept>,
    index_by_id: HashMap<String, LabelIndex>,
    alt_index: HashMap<String, LabelIndex>,
    parents: Vec<Vec<LabelIndex>>,
    children: Vec<Vec<LabelIndex>>,
}

impl KnowledgeBase {
    /// Validates and indexes a list of concepts. Label indexes follow input order.
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self> {
        let mut concepts = concepts;
        let mut index_by_id = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter_mut().enumerate() {
            c.id = normalize_id(&c.id).to_string();
            if c.id.is_empty() {
                return Err(Error::Integrity(format!("concept #{i} has an empty id")));
            }
            if c.canonical_name.trim().is_empty() {
                return Err(Error::Integrity(format!("concept {} has an empty name", c.id)));
            }
            let mut seen = HashSet::new();
            c.synonyms.retain(|s| !s.trim().is_empty() && seen.insert(s.to_lowercase()));
            for p in c.parent_ids.iter_mut() {
                *p = normalize_id(p).to_string();
            }
            c.parent_ids.retain(|p| !p.is_empty());
            c.parent_ids.dedup();
            for a in c.alt_ids.iter_mut() {
                *a = normalize_id(a).to_string();
            }
            c.alt_ids.retain(|a| !a.is_empty());
            if index_by_id.insert(c.id.clone(), i as LabelIndex).is_some() {
                return Err(Error::Integrity(format!("duplicate concept id {}", c.id)));
            }
        }

        let mut dangling = BTreeSet::new();
        let mut parents = vec![Vec::new(); concepts.len()];
        let mut children = vec![Vec::new(); concepts.len()];
        for (i, c) in concepts.iter().enumerate() {
            for p in &c.parent_ids {
                match index_by_id.get(p) {
                    Some(&pi) => {
                        if !parents[i].contains(&pi) {
                            parents[i].push(pi);
                            children[pi as usize].push(i as LabelIndex);
                        }
                    }
                    None => {
                        dangling.insert(p.clone());
                    }
                }
            }
        }
        if !dangling.is_empty() {
            let ids: Vec<_> = dangling.into_iter().collect();
            return Err(Error::Integrity(format!("dangling parent ids: {}", ids.join(", "))));
        }
        check_acyclic(&concepts, &children)?;

        let mut alt_index = HashMap::new();
        for (i, c) in concepts.iter().enumerate() {
            for a in &c.alt_ids {
                if !index_by_id.contains_key(a) {
                    alt_index.entry(a.clone()).or_insert(i as LabelIndex);
                }
            }
        }

        Ok(KnowledgeBase {
            concepts,
            index_by_id,
            alt_index,
            parents,
            children,
        })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concept(&self, index: LabelIndex) -> &Concept {
        &self.concepts[index as usize]
    }

    pub fn get(&self, id: &str) -> Option<&Concept> {
        self.index_of(id).map(|i| self.concept(i))
    }

    /// Label index of a primary id.
    pub fn index_of(&self, id: &str) -> Option<LabelIndex> {
        self.index_by_id.get(normalize_id(id)).copied()
    }

    pub fn id_of(&self, index: LabelIndex) -> &str {
        &self.concepts[index as usize].id
    }

    /// Label index of a primary id, or of the concept owning it as an alternate id.
    /// `None` means the id is obsolete for this vocabulary.
    pub fn resolve(&self, id: &str) -> Option<LabelIndex> {
        let id = normalize_id(id);
        self.index_by_id
            .get(id)
            .or_else(|| self.alt_index.get(id))
            .copied()
    }

    fn require(&self, id: &str) -> Result<LabelIndex> {
        self.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn children_count(&self, index: LabelIndex) -> usize {
        self.children[index as usize].len()
    }

    pub fn parents_of(&self, index: LabelIndex) -> &[LabelIndex] {
        &self.parents[index as usize]
    }

    pub fn children_of(&self, index: LabelIndex) -> &[LabelIndex] {
        &self.children[index as usize]
    }

    /// Intrinsic information content `-ln((children + 1) / |E|)`.
    pub fn information_content(&self, id: &str) -> Result<f64> {
        Ok(self.information_content_at(self.require(id)?))
    }

    pub fn information_content_at(&self, index: LabelIndex) -> f64 {
        let p = (self.children_count(index) + 1) as f64 / self.len() as f64;
        // p == 1 must give exactly 0, not -0.0
        let ic = -p.ln();
        if ic <= 0.0 {
            0.0
        } else {
            ic
        }
    }

    /// Parents and direct children of `id`, i.e. undirected is-a adjacency.
    pub fn neighbors(&self, id: &str) -> Result<BTreeSet<String>> {
        let i = self.require(id)?;
        Ok(self
            .neighbor_indexes(i)
            .map(|n| self.id_of(n).to_string())
            .collect())
    }

    pub fn neighbor_indexes(&self, index: LabelIndex) -> impl Iterator<Item = LabelIndex> + '_ {
        self.parents[index as usize]
            .iter()
            .chain(self.children[index as usize].iter())
            .copied()
    }

    pub fn are_adjacent(&self, a: LabelIndex, b: LabelIndex) -> bool {
        self.parents[a as usize].contains(&b) || self.parents[b as usize].contains(&a)
    }

    /// Writes the vocabulary back out in CTD column layout.
    pub fn write_ctd_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# Name\tID\tAltIDs\tDefinition\tParentIDs\tTreeNumbers\tParentTreeNumbers\tSynonyms"
        )?;
        for c in &self.concepts {
            writeln!(
                out,
                "{}\t{}\t{}\t\t{}\t\t\t{}",
                c.canonical_name,
                c.id,
                c.alt_ids.join("|"),
                c.parent_ids.join("|"),
                c.synonyms.join("|")
            )?;
        }
        Ok(())
    }

    /// Persists the vocabulary and its label-index table into `dir`.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_ctd_tsv(BufWriter::new(File::create(dir.join(KB_TSV_FILE))?))?;
        let mut labels = BufWriter::new(File::create(dir.join(KB_LABELS_FILE))?);
        for (i, c) in self.concepts.iter().enumerate() {
            writeln!(labels, "{i}\t{}", c.id)?;
        }
        labels.flush()?;
        Ok(())
    }

    /// Loads a directory written by [`KnowledgeBase::save_dir`] and checks the label table.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let kb = load_kos(&dir.join(KB_TSV_FILE), KosFormat::CtdTsv)?;
        let labels_path = dir.join(KB_LABELS_FILE);
        let name = labels_path.display().to_string();
        let reader = BufReader::new(File::open(&labels_path)?);
        let mut count = 0;
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (idx, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&name, n + 1, "expected `index<TAB>id`"))?;
            let idx: LabelIndex = idx
                .parse()
                .map_err(|_| Error::parse(&name, n + 1, format!("bad label index `{idx}`")))?;
            if kb.index_of(id) != Some(idx) {
                return Err(Error::Integrity(format!(
                    "label table maps {idx} to {id}, vocabulary disagrees"
                )));
            }
            count += 1;
        }
        if count != kb.len() {
            return Err(Error::Integrity(format!(
                "label table has {count} rows for {} concepts",
                kb.len()
            )));
        }
        Ok(kb)
    }
}

fn check_acyclic(concepts: &[Concept], children: &[Vec<LabelIndex>]) -> Result<()> {
    let n = concepts.len();
    let mut indegree = vec![0usize; n];
    for ch in children {
        for &c in ch {
            indegree[c as usize] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = stack.pop() {
        visited += 1;
        for &c in &children[i] {
            indegree[c as usize] -= 1;
            if indegree[c as usize] == 0 {
                stack.push(c as usize);
            }
        }
    }
    if visited == n {
        return Ok(());
    }
    let on_cycle: Vec<_> = (0..n)
        .filter(|&i| indegree[i] > 0)
        .map(|i| concepts[i].id.as_str())
        .collect();
    Err(Error::Integrity(format!(
        "is-a cycle through: {}",
        on_cycle.join(", ")
    )))
}

fn split_pipe(field: &str) -> Vec<String> {
    field
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses a CTD vocabulary dump from any reader.
pub fn parse_ctd_tsv<R: BufRead>(reader: R, source_name: &str) -> Result<KnowledgeBase> {
    let mut concepts = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < CTD_COLUMNS {
            return Err(Error::parse(
                source_name,
                n + 1,
                format!("expected at least {CTD_COLUMNS} tab-separated columns, found {}", cols.len()),
            ));
        }
        let name = cols[0].trim();
        let id = normalize_id(cols[1]);
        if name.is_empty() || id.is_empty() {
            return Err(Error::parse(source_name, n + 1, "empty name or id"));
        }
        concepts.push(Concept {
            id: id.to_string(),
            canonical_name: name.to_string(),
            synonyms: split_pipe(cols[7]),
            parent_ids: split_pipe(cols[4]),
            alt_ids: split_pipe(cols[2]),
        });
    }
    KnowledgeBase::from_concepts(concepts)
}

pub fn load_kos(path: &Path, format: KosFormat) -> Result<KnowledgeBase> {
    match format {
        KosFormat::CtdTsv => {
            let file = File::open(path)?;
            parse_ctd_tsv(BufReader::new(file), &path.display().to_string())
        }
    }
}
