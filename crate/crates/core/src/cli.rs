//! Command-line verbs. `main.rs` only forwards `std::env::args` to [`run`].

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use log::{info, warn};

use crate::corpus::{
    annotations_from_documents, generate_training_set, kos_training_instances, load_eval_dataset, load_pubtator,
    parse_pubtator_blocks, EntityType, EvalDataset, TrainingSet,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, parse_ks, write_table};
use crate::kos::{load_kos, KnowledgeBase, KosFormat};
use crate::pipeline::{
    read_predictions, read_report_branches, write_predictions, write_report, KosResources, Linker, PipelineConfig,
    DEFAULT_STRING_TOP_N, DEFAULT_THRESHOLD,
};
use crate::strmatch::build_name_index;
use crate::xmr::{XmrConfig, XmrModel, DEFAULT_BEAM, DEFAULT_MAX_LEAF_SIZE, DEFAULT_SEED, DEFAULT_TOP_K};

/// Environment variable overriding the training seed (below `--seed`).
pub const SEED_ENV: &str = "XLINKER_SEED";

#[derive(Debug, Parser)]
#[command(name = "xlinker", version, about = "Biomedical entity linking against a KOS", subcommand_required = true, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a CTD-style TSV vocabulary, validate it and store it as a KB directory.
    BuildKb(BuildKbArgs),
    /// Generate a training set from PubTator annotations (plus KOS names and synonyms).
    GenTrain(GenTrainArgs),
    /// Train an XMR model directory from a training set.
    Train(TrainArgs),
    /// Link the mentions of a PubTator file.
    Link(LinkArgs),
    /// Score linked predictions against gold annotations.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct BuildKbArgs {
    #[arg(long)]
    kos: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenTrainArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    kb: PathBuf,
    /// File with one document id per line whose annotations are dropped.
    #[arg(long)]
    exclude_docs: Option<PathBuf>,
    /// Maximum instances per label; unlimited when absent.
    #[arg(long)]
    cap: Option<usize>,
    /// Keep only annotations of this entity type (e.g. Disease, Chemical).
    #[arg(long)]
    entity_type: Option<String>,
    /// Do not add the KOS names and synonyms as instances.
    #[arg(long)]
    pubtator_only: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEAF_SIZE)]
    max_leaf: usize,
    /// `key = value` file; keys: seed, max_leaf.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_BEAM)]
    beam: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_STRING_TOP_N)]
    string_top_n: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Link only mentions of this type; others are written as NIL.
    #[arg(long)]
    entity_type: Option<String>,
    /// JSON-lines decision report, one record per mention.
    #[arg(long)]
    report: Option<PathBuf>,
    /// `key = value` file; keys: threshold, beam, top_k, string_top_n, jobs.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "1,5")]
    k: String,
    /// KB directory; gold ids are resolved and obsolete ones removed.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Decision report from `link --report`, for the per-branch rows.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Runs one invocation; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m.clone()).unwrap_or_default();
    match execute(cli.command, &sub) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

fn execute(command: Command, matches: &ArgMatches) -> Result<()> {
    match command {
        Command::BuildKb(a) => build_kb(a),
        Command::GenTrain(a) => gen_train(a),
        Command::Train(a) => train(a, matches),
        Command::Link(a) => link(a, matches),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

/// Parses a line-oriented `key = value` file (`#` starts a comment).
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let name = path.display().to_string();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(&name, n + 1, "expected `key = value`"))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

/// Fills `slot` from the config file unless the flag came from the command
/// line or the environment.
fn overlay<T: std::str::FromStr>(
    matches: &ArgMatches,
    config: &BTreeMap<String, String>,
    key: &str,
    slot: &mut T,
) -> Result<()> {
    let Some(raw) = config.get(key) else {
        return Ok(());
    };
    if matches!(matches.value_source(key), Some(ValueSource::CommandLine | ValueSource::EnvVariable)) {
        return Ok(());
    }
    *slot = raw
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("config key `{key}`: bad value `{raw}`")))?;
    Ok(())
}

fn load_config(path: Option<&Path>, allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let Some(path) = path else {
        return Ok(BTreeMap::new());
    };
    let config = read_config_file(path)?;
    if let Some(bad) = config.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "unknown config key `{bad}` (allowed: {})",
            allowed.join(", ")
        )));
    }
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn build_kb(a: BuildKbArgs) -> Result<()> {
    let kb = load_kos(&a.kos, KosFormat::CtdTsv)?;
    kb.save_dir(&a.out)?;
    println!("{} concepts written to {}", kb.len(), a.out.display());
    Ok(())
}

fn read_id_list(path: &Path) -> Result<HashSet<String>> {
    let mut out = HashSet::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            out.insert(id.to_string());
        }
    }
    Ok(out)
}

fn gen_train(a: GenTrainArgs) -> Result<()> {
    let kb = KnowledgeBase::load_dir(&a.kb)?;
    let docs = load_pubtator(&a.annotations)?;
    let excluded = match &a.exclude_docs {
        Some(p) => read_id_list(p)?,
        None => HashSet::new(),
    };
    let entity_type: Option<EntityType> = a.entity_type.as_deref().map(|s| s.parse().unwrap());
    let annotations = annotations_from_documents(&docs, entity_type.as_ref());
    let (generated, stats) = generate_training_set(&annotations, &kb, &excluded, a.cap);
    info!("{stats:?}");
    let set = if a.pubtator_only {
        generated
    } else {
        generated.merge(&kos_training_instances(&kb))
    };
    set.save(&a.out)?;
    println!(
        "{} instances over {} labels written to {} ({} annotations in, {} excluded-document, {} obsolete, {} duplicate, {} over cap)",
        set.len(),
        set.label_count(),
        a.out.display(),
        stats.input,
        stats.excluded_doc,
        stats.obsolete,
        stats.duplicates,
        stats.truncated
    );
    Ok(())
}

fn train(mut a: TrainArgs, matches: &ArgMatches) -> Result<()> {
    let config = load_config(a.config.as_deref(), &["seed", "max_leaf"])?;
    overlay(matches, &config, "seed", &mut a.seed)?;
    overlay(matches, &config, "max_leaf", &mut a.max_leaf)?;
    if a.max_leaf == 0 {
        return Err(Error::InvalidArgument("--max-leaf must be at least 1".into()));
    }

    let kb = KnowledgeBase::load_dir(&a.kb)?;
    let train_set = TrainingSet::load(&a.train, &kb)?;
    let cfg = XmrConfig {
        seed: a.seed,
        max_leaf_size: a.max_leaf,
        ..Default::default()
    };
    let (model, report) = XmrModel::fit(&train_set, &kb, &cfg)?;
    for nc in &report.non_converged {
        warn!(
            "node {} target {}: solver stopped at gradient norm {:.3e}",
            nc.node, nc.target, nc.grad_norm
        );
    }
    model.save(&a.out)?;
    println!(
        "trained {} labels ({} without instances) in {} leaves, {} binary models, {} not converged; seed {}",
        report.labels_trained,
        report.labels_excluded.len(),
        model.leaf_count(),
        report.binary_models,
        report.non_converged.len(),
        a.seed
    );
    Ok(())
}

fn link(mut a: LinkArgs, matches: &ArgMatches) -> Result<()> {
    let config = load_config(
        a.config.as_deref(),
        &["threshold", "beam", "top_k", "string_top_n", "jobs"],
    )?;
    overlay(matches, &config, "threshold", &mut a.threshold)?;
    overlay(matches, &config, "beam", &mut a.beam)?;
    overlay(matches, &config, "top_k", &mut a.top_k)?;
    overlay(matches, &config, "string_top_n", &mut a.string_top_n)?;
    overlay(matches, &config, "jobs", &mut a.jobs)?;
    let cfg = PipelineConfig {
        threshold: a.threshold,
        beam: a.beam,
        top_k: a.top_k,
        string_top_n: a.string_top_n,
        ..Default::default()
    };
    cfg.validate()?;

    let kb = KnowledgeBase::load_dir(&a.kb)?;
    let model = XmrModel::load(&a.model)?;
    let kb_ids = kb.concepts().iter().map(|c| c.id.as_str());
    if model.label_ids().len() != kb.len() || !model.label_ids().iter().map(String::as_str).eq(kb_ids) {
        return Err(Error::InvalidArgument(format!(
            "model {} was not trained on KB {}",
            a.model.display(),
            a.kb.display()
        )));
    }
    let index = build_name_index(&kb);
    let resources = KosResources {
        kb: &kb,
        index: &index,
        ranker: &model,
    };
    let linker = match &a.entity_type {
        Some(t) => Linker::new(cfg)?.with_kos(t.parse().unwrap(), resources),
        None => Linker::new(cfg)?.with_default_kos(resources),
    };

    let source = a.input.display().to_string();
    let docs = parse_pubtator_blocks(BufReader::new(File::open(&a.input)?), &source)?;
    let links = linker.link_corpus(docs, a.jobs);

    let mut out = create(&a.out)?;
    write_predictions(&links, &mut out)?;
    out.flush()?;
    if let Some(path) = &a.report {
        let mut rep = create(path)?;
        write_report(&links, &mut rep)?;
        rep.flush()?;
    }
    let linked = links.mentions().filter(|m| !m.prediction.is_empty()).count();
    println!(
        "{} documents, {} mentions ({} with a prediction) written to {}",
        links.documents.len(),
        links.mentions().count(),
        linked,
        a.out.display()
    );
    if !links.errors.is_empty() {
        for (_, e) in &links.errors {
            eprintln!("skipped: {e}");
        }
        return Err(Error::Integrity(format!("{} documents could not be linked", links.errors.len())));
    }
    Ok(())
}

/// Gold set without a KB: only NIL mentions are removed, ids are taken verbatim.
fn gold_without_kb(path: &Path) -> Result<EvalDataset> {
    let mut ds = EvalDataset {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        ..Default::default()
    };
    for mut doc in load_pubtator(path)? {
        let before = doc.mentions.len();
        doc.mentions.retain(|m| !m.is_nil());
        ds.removed_nil += before - doc.mentions.len();
        ds.documents.push(doc);
    }
    Ok(ds)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let ks = parse_ks(&a.k)?;
    let dataset = match &a.kb {
        Some(kb) => load_eval_dataset(&a.gold, &KnowledgeBase::load_dir(kb)?)?,
        None => gold_without_kb(&a.gold)?,
    };
    let pred_name = a.pred.display().to_string();
    let predictions = read_predictions(BufReader::new(File::open(&a.pred)?), &pred_name)?;
    let branches = match &a.report {
        Some(p) => Some(read_report_branches(
            BufReader::new(File::open(p)?),
            &p.display().to_string(),
        )?),
        None => None,
    };
    let report = evaluate(&dataset, &predictions, branches.as_ref(), &ks)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write_table(&[report], &mut lock)?;
    lock.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_lists_defaults() {
        let mut cmd = Cli::command();
        let help = cmd
            .find_subcommand_mut("link")
            .unwrap()
            .render_long_help()
            .to_string();
        for needle in ["[default: 0.1]", "[default: 10]", "[default: 5]", "[default: 1]"] {
            assert!(help.contains(needle), "{needle} missing from\n{help}");
        }
        let help = Cli::command()
            .find_subcommand_mut("train")
            .unwrap()
            .render_long_help()
            .to_string();
        assert!(help.contains("[default: 42]") && help.contains("[default: 100]"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["xlinker", "frobnicate"]), 2);
        assert_eq!(run(["xlinker", "build-kb", "--out", "x"]), 2);
        assert_eq!(run(["xlinker"]), 2);
    }

    #[test]
    fn io_failure_exits_1() {
        assert_eq!(
            run(["xlinker", "build-kb", "--kos", "/nonexistent/kos.tsv", "--out", "/nonexistent/out"]),
            1
        );
    }

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.conf");
        std::fs::write(&p, "# comment\nthreshold = 0.3\ntop-k=7\n\n").unwrap();
        let c = read_config_file(&p).unwrap();
        assert_eq!(c["threshold"], "0.3");
        assert_eq!(c["top_k"], "7");
        assert!(load_config(Some(&p), &["threshold"]).is_err());
    }
}
