//! Hybrid biomedical entity linking.
//!
//! Mentions are linked to concepts of a knowledge organization system (KOS)
//! in three steps: fuzzy dictionary matching and an extreme multi-label
//! ranker ([`xmr`]) propose candidates, a threshold decides which of them
//! enter a per-document graph, and personalized PageRank weighted by
//! information content picks the most coherent candidate per mention
//! ([`ppr`]).
//!
//! ```no_run
//! use xlinker::{build_name_index, link_document, load_kos, KosFormat, PipelineConfig, XmrModel};
//! # fn main() -> xlinker::Result<()> {
//! let kb = load_kos("medic.tsv".as_ref(), KosFormat::CtdTsv)?;
//! let model = XmrModel::load("model".as_ref())?;
//! let index = build_name_index(&kb);
//! let docs = xlinker::load_pubtator("abstracts.pubtator".as_ref())?;
//! for doc in &docs {
//!     for m in link_document(doc, &model, &kb, &index, &PipelineConfig::default())? {
//!         println!("{}\t{:?}", m.mention.text, m.top_id());
//!     }
//! }
//! # Ok(())
//! # }
//! ```

pub mod abbrev;
pub mod cli;
pub mod corpus;
mod error;
pub mod eval;
pub mod kos;
pub mod pipeline;
pub mod ppr;
pub mod sparse;
pub mod strmatch;
pub mod xmr;

pub use abbrev::{detect_abbreviations, expand_mention, AbbreviationMap};
pub use corpus::{
    generate_training_set, kos_training_instances, load_eval_dataset, load_pubtator, parse_pubtator, Annotation,
    Document, EntityType, EvalDataset, Instance, Mention, TrainingSet,
};
pub use error::{Error, Result};
pub use eval::{top_k_accuracy, EvalReport};
pub use kos::{load_kos, Concept, KnowledgeBase, KosFormat, LabelIndex};
pub use pipeline::{link_document, Branch, DecisionTrace, LinkedMention, Linker, PipelineConfig};
pub use ppr::{personalized_pagerank, PprConfig};
pub use strmatch::{build_name_index, edit_distance, match_mention, similarity, CandidateSource, NameIndex, ScoredCandidate};
pub use xmr::{CandidateRanker, StaticRanker, XmrConfig, XmrModel};
