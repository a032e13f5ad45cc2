//! The linking pipeline: abbreviation expansion, string matching and XMR
//! candidate generation, threshold routing into a per-mention candidate list,
//! then graph disambiguation over all mentions of a document.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::abbrev::{detect_abbreviations, expand_mention};
use crate::corpus::{Document, EntityType, Mention};
use crate::error::{Error, Result};
use crate::kos::KnowledgeBase;
use crate::ppr::{build_graph, coherence_scores, rank_mention, PprConfig};
use crate::strmatch::{match_mention, NameIndex, ScoredCandidate};
use crate::xmr::{CandidateRanker, DEFAULT_BEAM, DEFAULT_TOP_K};

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_STRING_TOP_N: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub beam: usize,
    pub top_k: usize,
    pub string_top_n: usize,
    pub ppr: PprConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: DEFAULT_THRESHOLD,
            beam: DEFAULT_BEAM,
            top_k: DEFAULT_TOP_K,
            string_top_n: DEFAULT_STRING_TOP_N,
            ppr: PprConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.beam == 0 || self.top_k == 0 || self.string_top_n == 0 {
            return Err(Error::InvalidArgument("beam, top_k and string_top_n must be at least 1".into()));
        }
        self.ppr.validate()
    }
}

/// Which routing rule filled a mention's candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The XMR top candidate scored exactly 1.0 (or XMR returned nothing and the
    /// string top candidate did). Every list entry has score 1.0.
    Exact,
    /// XMR top candidate at or above the threshold.
    AboveThreshold,
    /// XMR top candidate below the threshold; the string top candidate joins it.
    LowScore,
    /// Neither generator produced a candidate.
    NilCandidate,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Exact => "exact",
            Branch::AboveThreshold => "above-threshold",
            Branch::LowScore => "low-score",
            Branch::NilCandidate => "nil-candidate",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => Branch::Exact,
            "above-threshold" => Branch::AboveThreshold,
            "low-score" => Branch::LowScore,
            "nil-candidate" => Branch::NilCandidate,
            other => return Err(Error::InvalidArgument(format!("unknown branch `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTrace {
    pub branch: Branch,
    pub string_perfect: bool,
    pub string_top: Option<ScoredCandidate>,
    pub xmr_top: Option<ScoredCandidate>,
    /// The candidate list handed to disambiguation.
    pub candidates: Vec<ScoredCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedMention {
    pub mention: Mention,
    pub expanded_text: String,
    /// Disambiguated candidates first, then the remaining XMR and string
    /// candidates; empty for NIL-candidate mentions.
    pub prediction: Vec<Prediction>,
    pub trace: DecisionTrace,
}

impl LinkedMention {
    pub fn top_id(&self) -> Option<&str> {
        self.prediction.first().map(|p| p.id.as_str())
    }
}

/// Candidate list construction for one mention from the two generators' outputs.
pub fn route_candidates(
    string_matches: &[ScoredCandidate],
    xmr_matches: &[ScoredCandidate],
    threshold: f64,
) -> DecisionTrace {
    let string_top = string_matches.first().cloned();
    let xmr_top = xmr_matches.first().cloned();
    let string_perfect = string_top.as_ref().is_some_and(|c| c.score == 1.0);

    let mut candidates = Vec::new();
    if string_perfect {
        candidates.extend(string_top.clone());
    }
    let branch = match &xmr_top {
        Some(top) if top.score == 1.0 => {
            candidates.push(top.clone());
            Branch::Exact
        }
        Some(top) if top.score >= threshold => {
            candidates.push(top.clone());
            Branch::AboveThreshold
        }
        Some(top) => {
            candidates.push(top.clone());
            candidates.extend(string_top.clone());
            Branch::LowScore
        }
        None if string_perfect => Branch::Exact,
        None => match &string_top {
            Some(top) => {
                candidates.push(top.clone());
                Branch::LowScore
            }
            None => Branch::NilCandidate,
        },
    };

    // one entry per concept, keeping the best score
    let mut deduped: Vec<ScoredCandidate> = Vec::new();
    for c in candidates {
        match deduped.iter_mut().find(|d| d.concept_index == c.concept_index) {
            Some(d) if c.score > d.score => *d = c,
            Some(_) => {}
            None => deduped.push(c),
        }
    }

    DecisionTrace {
        branch,
        string_perfect,
        string_top,
        xmr_top,
        candidates: deduped,
    }
}

/// Everything needed to link mentions against one vocabulary.
#[derive(Clone, Copy)]
pub struct KosResources<'a> {
    pub kb: &'a KnowledgeBase,
    pub index: &'a NameIndex,
    pub ranker: &'a dyn CandidateRanker,
}

/// Links documents, choosing the vocabulary by mention entity type.
pub struct Linker<'a> {
    config: PipelineConfig,
    by_type: BTreeMap<EntityType, KosResources<'a>>,
    fallback: Option<KosResources<'a>>,
}

impl<'a> Linker<'a> {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Linker {
            config,
            by_type: BTreeMap::new(),
            fallback: None,
        })
    }

    /// Resources for mentions of `entity_type`.
    pub fn with_kos(mut self, entity_type: EntityType, resources: KosResources<'a>) -> Self {
        self.by_type.insert(entity_type, resources);
        self
    }

    /// Resources for every entity type without a dedicated vocabulary.
    pub fn with_default_kos(mut self, resources: KosResources<'a>) -> Self {
        self.fallback = Some(resources);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn resources_for(&self, t: &EntityType) -> Option<&KosResources<'a>> {
        self.by_type.get(t).or(self.fallback.as_ref())
    }

    /// Links every mention of `doc`; output order follows `doc.mentions`.
    pub fn link_document(&self, doc: &Document) -> Result<Vec<LinkedMention>> {
        let cfg = &self.config;
        let abbreviations = detect_abbreviations(&doc.text());

        let mut out: Vec<Option<LinkedMention>> = vec![None; doc.mentions.len()];
        let mut groups: BTreeMap<Option<&EntityType>, Vec<usize>> = BTreeMap::new();
        for (i, m) in doc.mentions.iter().enumerate() {
            let key = if self.by_type.contains_key(&m.entity_type) {
                Some(&m.entity_type)
            } else {
                None
            };
            groups.entry(key).or_default().push(i);
        }

        for (key, members) in groups {
            let res = match key {
                Some(t) => self.resources_for(t),
                None => self.fallback.as_ref(),
            };
            let Some(res) = res else {
                for &i in &members {
                    let m = &doc.mentions[i];
                    out[i] = Some(nil_mention(m.clone(), m.text.clone(), route_candidates(&[], &[], cfg.threshold)));
                }
                continue;
            };

            let mut traces = Vec::with_capacity(members.len());
            let mut pools = Vec::with_capacity(members.len());
            for &i in &members {
                let m = &doc.mentions[i];
                let expanded = expand_mention(&m.text, &abbreviations);
                let string_matches = match_mention(&expanded, res.index, cfg.string_top_n);
                let xmr_matches = res.ranker.rank(&expanded, cfg.beam, cfg.top_k);
                let trace = route_candidates(&string_matches, &xmr_matches, cfg.threshold);
                traces.push((expanded, trace));
                pools.push((xmr_matches, string_matches));
            }

            // NIL-candidate mentions stay out of the graph
            let in_graph: Vec<usize> = (0..members.len())
                .filter(|&k| !traces[k].1.candidates.is_empty())
                .collect();
            let lists: Vec<Vec<ScoredCandidate>> = in_graph.iter().map(|&k| traces[k].1.candidates.clone()).collect();
            let graph = build_graph(&lists, res.kb);
            let coherence = coherence_scores(&graph, res.kb, &cfg.ppr)?;

            let mut ranked_by_member: HashMap<usize, Vec<ScoredCandidate>> = HashMap::new();
            for (g, &k) in in_graph.iter().enumerate() {
                let order = rank_mention(&graph, &coherence, g);
                ranked_by_member.insert(k, order.into_iter().map(|n| graph.nodes()[n].candidate.clone()).collect());
            }

            for (k, ((expanded, trace), (xmr_matches, string_matches))) in
                traces.into_iter().zip(pools).enumerate()
            {
                let m = doc.mentions[members[k]].clone();
                let Some(ranked) = ranked_by_member.remove(&k) else {
                    out[members[k]] = Some(nil_mention(m, expanded, trace));
                    continue;
                };
                let mut prediction: Vec<Prediction> = Vec::new();
                for c in ranked.iter().chain(&xmr_matches).chain(&string_matches) {
                    let id = res.kb.id_of(c.concept_index);
                    if !prediction.iter().any(|p| p.id == id) {
                        prediction.push(Prediction {
                            id: id.to_string(),
                            score: c.score,
                        });
                    }
                }
                out[members[k]] = Some(LinkedMention {
                    mention: m,
                    expanded_text: expanded,
                    prediction,
                    trace,
                });
            }
        }
        Ok(out.into_iter().map(|m| m.expect("every mention is linked")).collect())
    }

    /// Links documents independently, preserving order. Documents that failed
    /// upstream (or fail here) are reported in `errors` without stopping the rest.
    pub fn link_corpus(&self, docs: Vec<Result<Document>>, jobs: usize) -> CorpusLinks {
        let run = |(pos, doc): (usize, Result<Document>)| -> (usize, std::result::Result<(Document, Vec<LinkedMention>), String>) {
            match doc {
                Ok(d) => match self.link_document(&d) {
                    Ok(links) => (pos, Ok((d, links))),
                    Err(e) => (pos, Err(format!("document {}: {e}", d.doc_id))),
                },
                Err(e) => (pos, Err(e.to_string())),
            }
        };
        let indexed: Vec<(usize, Result<Document>)> = docs.into_iter().enumerate().collect();
        let results: Vec<_> = if jobs <= 1 {
            indexed.into_iter().map(run).collect()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(pool) => pool.install(|| indexed.into_par_iter().map(run).collect()),
                Err(e) => {
                    warn!("could not start {jobs} workers ({e}); linking sequentially");
                    indexed.into_iter().map(run).collect()
                }
            }
        };

        let mut out = CorpusLinks::default();
        for (pos, r) in results {
            match r {
                Ok((doc, links)) => out.documents.push((doc, links)),
                Err(e) => out.errors.push((pos, e)),
            }
        }
        out
    }
}

fn nil_mention(mention: Mention, expanded_text: String, trace: DecisionTrace) -> LinkedMention {
    LinkedMention {
        mention,
        expanded_text,
        prediction: Vec::new(),
        trace: DecisionTrace {
            branch: Branch::NilCandidate,
            ..trace
        },
    }
}

/// Links one document against a single vocabulary, whatever the mention types.
pub fn link_document(
    doc: &Document,
    ranker: &dyn CandidateRanker,
    kb: &KnowledgeBase,
    index: &NameIndex,
    cfg: &PipelineConfig,
) -> Result<Vec<LinkedMention>> {
    Linker::new(*cfg)?
        .with_default_kos(KosResources { kb, index, ranker })
        .link_document(doc)
}

#[derive(Debug, Default)]
pub struct CorpusLinks {
    pub documents: Vec<(Document, Vec<LinkedMention>)>,
    /// Input position and message of every document that could not be linked.
    pub errors: Vec<(usize, String)>,
}

impl CorpusLinks {
    pub fn mentions(&self) -> impl Iterator<Item = &LinkedMention> {
        self.documents.iter().flat_map(|(_, l)| l.iter())
    }
}

/// Joins ranked ids as the seventh annotation column (`-` when empty).
fn prediction_column(prediction: &[Prediction]) -> String {
    if prediction.is_empty() {
        "-".to_string()
    } else {
        prediction.iter().map(|p| p.id.as_str()).collect::<Vec<_>>().join("|")
    }
}

/// PubTator output with the ranked predicted ids appended to every annotation line.
pub fn write_predictions<W: Write>(links: &CorpusLinks, mut out: W) -> Result<()> {
    for (doc, linked) in &links.documents {
        writeln!(out, "{}|t|{}", doc.doc_id, doc.title)?;
        writeln!(out, "{}|a|{}", doc.doc_id, doc.abstract_text)?;
        for lm in linked {
            let m = &lm.mention;
            let (s, e) = m.span.unwrap_or((0, 0));
            let raw = if m.raw_id.is_empty() { "-" } else { m.raw_id.as_str() };
            writeln!(
                out,
                "{}\t{s}\t{e}\t{}\t{}\t{raw}\t{}",
                m.doc_id,
                m.text,
                m.entity_type,
                prediction_column(&lm.prediction)
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportRecord<'a> {
    doc_id: &'a str,
    start: Option<usize>,
    end: Option<usize>,
    text: &'a str,
    expanded_text: &'a str,
    entity_type: String,
    branch: Branch,
    predictions: &'a [Prediction],
}

/// One JSON object per mention.
pub fn write_report<W: Write>(links: &CorpusLinks, mut out: W) -> Result<()> {
    for lm in links.mentions() {
        let rec = ReportRecord {
            doc_id: &lm.mention.doc_id,
            start: lm.mention.span.map(|s| s.0),
            end: lm.mention.span.map(|s| s.1),
            text: &lm.mention.text,
            expanded_text: &lm.expanded_text,
            entity_type: lm.mention.entity_type.to_string(),
            branch: lm.trace.branch,
            predictions: &lm.prediction,
        };
        serde_json::to_writer(&mut out, &rec)?;
        writeln!(out)?;
    }
    Ok(())
}

/// `(doc id, start, end)` of an annotation.
pub type MentionKey = (String, usize, usize);

/// Reads the output of [`write_predictions`]: ranked ids per annotation.
pub fn read_predictions<R: BufRead>(reader: R, source_name: &str) -> Result<HashMap<MentionKey, Vec<String>>> {
    let mut out = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.contains('\t') {
            continue;
        }
        let cols: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if cols.len() != 7 {
            return Err(Error::parse(source_name, n + 1, format!("prediction line has {} columns, expected 7", cols.len())));
        }
        let off = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(source_name, n + 1, format!("bad offset `{s}`")))
        };
        let ids: Vec<String> = if cols[6] == "-" {
            Vec::new()
        } else {
            cols[6].split('|').map(str::to_string).collect()
        };
        out.insert((cols[0].to_string(), off(cols[1])?, off(cols[2])?), ids);
    }
    Ok(out)
}

/// Reads the branch of every mention from a [`write_report`] file.
pub fn read_report_branches<R: BufRead>(reader: R, source_name: &str) -> Result<HashMap<MentionKey, Branch>> {
    #[derive(serde::Deserialize)]
    struct Rec {
        doc_id: String,
        start: Option<usize>,
        end: Option<usize>,
        branch: String,
    }
    let mut out = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Rec = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, n + 1, e.to_string()))?;
        out.insert(
            (rec.doc_id, rec.start.unwrap_or(0), rec.end.unwrap_or(0)),
            rec.branch.parse()?,
        );
    }
    Ok(out)
}
