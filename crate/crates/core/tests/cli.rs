mod common;

use std::path::Path;
use std::process::{Command, Output};

use xlinker::corpus::write_pubtator;
use xlinker::kos::{Concept, KnowledgeBase};

fn xlinker(args: &[&str]) -> Output {
    xlinker_env(args, &[])
}

fn xlinker_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xlinker"));
    cmd.args(args).env_remove("XLINKER_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture_kb() -> KnowledgeBase {
    let mut concepts: Vec<Concept> = common::vasculitis_kb().concepts().to_vec();
    concepts.push(Concept::new("D003920", "Diabetes Mellitus").with_synonyms(["diabetes"]));
    concepts.push(Concept::new("D006973", "Hypertension").with_synonyms(["high blood pressure"]));
    KnowledgeBase::from_concepts(concepts).unwrap()
}

/// KOS file, gold corpus and an exclusion list in `dir`.
fn write_inputs(dir: &Path) {
    let kb = fixture_kb();
    let mut tsv = Vec::new();
    kb.write_ctd_tsv(&mut tsv).unwrap();
    std::fs::write(dir.join("kos.tsv"), tsv).unwrap();

    let docs = vec![
        common::synthetic_document("1", &[("vasculitis", "MESH:D014657"), ("diabetes", "MESH:D003920")]),
        common::synthetic_document("2", &[("Hypertension", "MESH:D006973"), ("angiitis", "MESH:D014657")]),
        common::synthetic_document("3", &[("high blood pressure", "MESH:D006973"), ("unknown", "-1")]),
        common::synthetic_document("4", &[("sugar disease", "MESH:D003920")]),
    ];
    let mut buf = Vec::new();
    write_pubtator(&docs, &mut buf).unwrap();
    std::fs::write(dir.join("corpus.pubtator"), buf).unwrap();
    std::fs::write(dir.join("exclude.txt"), "4\n").unwrap();
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_inputs(d);
    let (kos, corpus, kb, train) = (d.join("kos.tsv"), d.join("corpus.pubtator"), d.join("kb"), d.join("train.tsv"));

    let out = ok(&xlinker(&["build-kb", "--kos", p(&kos), "--out", p(&kb)]));
    assert!(out.starts_with("7 concepts"), "{out}");

    ok(&xlinker(&[
        "gen-train",
        "--annotations",
        p(&corpus),
        "--kb",
        p(&kb),
        "--exclude-docs",
        p(&d.join("exclude.txt")),
        "--cap",
        "3",
        "--out",
        p(&train),
    ]));
    let train_text = std::fs::read_to_string(&train).unwrap();
    assert!(train_text.contains("\tangiitis\n"));
    assert!(!train_text.contains("sugar disease"), "excluded document leaked");

    let model = d.join("model");
    let out = ok(&xlinker(&["train", "--train", p(&train), "--kb", p(&kb), "--out", p(&model)]));
    assert!(out.contains("seed 42"), "{out}");

    let pred = d.join("pred.pubtator");
    let report = d.join("report.jsonl");
    ok(&xlinker(&[
        "link",
        "--model",
        p(&model),
        "--kb",
        p(&kb),
        "--input",
        p(&corpus),
        "--threshold",
        "0.1",
        "--out",
        p(&pred),
        "--report",
        p(&report),
        "--jobs",
        "2",
    ]));
    let pred_text = std::fs::read_to_string(&pred).unwrap();
    assert!(pred_text.contains("1\t0\t10\tvasculitis\tDisease\tMESH:D014657\tD014657"), "{pred_text}");

    let out = ok(&xlinker(&[
        "evaluate",
        "--pred",
        p(&pred),
        "--gold",
        p(&corpus),
        "--k",
        "1,5",
        "--kb",
        p(&kb),
        "--report",
        p(&report),
    ]));
    // "sugar disease" is not a KOS string, the rest are
    assert!(out.contains("top-1\t0.8333"), "{out}");
    assert!(out.contains("removed nil\t1"), "{out}");
    assert!(out.contains("exact top-1\t1.0000"), "{out}");
}

#[test]
fn perfect_predictions_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_inputs(d);
    // a gold file is its own perfect prediction once the ids move to the seventh column
    let gold = std::fs::read_to_string(d.join("corpus.pubtator")).unwrap();
    let pred: String = gold
        .lines()
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() == 6 {
                format!("{l}\t{}\n", cols[5].trim_start_matches("MESH:"))
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    std::fs::write(d.join("pred.pubtator"), pred).unwrap();
    let out = ok(&xlinker(&[
        "evaluate",
        "--pred",
        p(&d.join("pred.pubtator")),
        "--gold",
        p(&d.join("corpus.pubtator")),
    ]));
    assert!(out.contains("top-1\t1.0000"), "{out}");
    assert!(out.contains("top-5\t1.0000"), "{out}");
}

#[test]
fn seeds_follow_flag_env_config_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_inputs(d);
    let kb = d.join("kb");
    ok(&xlinker(&["build-kb", "--kos", p(&d.join("kos.tsv")), "--out", p(&kb)]));
    ok(&xlinker(&[
        "gen-train",
        "--annotations",
        p(&d.join("corpus.pubtator")),
        "--kb",
        p(&kb),
        "--out",
        p(&d.join("train.tsv")),
    ]));
    std::fs::write(d.join("train.conf"), "seed = 7\nmax_leaf = 3\n").unwrap();

    let train = d.join("train.tsv");
    let seed_of = |name: &str, extra: &[&str], env: &[(&str, &str)]| {
        let out_dir = d.join(name);
        let mut args = vec!["train", "--train", p(&train), "--kb", p(&kb), "--out", p(&out_dir)];
        args.extend_from_slice(extra);
        ok(&xlinker_env(&args, env));
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        (manifest["seed"].as_u64().unwrap(), manifest["max_leaf_size"].as_u64().unwrap())
    };
    let conf = d.join("train.conf");
    let conf = p(&conf);
    assert_eq!(seed_of("m1", &[], &[]), (42, 100));
    assert_eq!(seed_of("m2", &["--config", conf], &[]), (7, 3));
    assert_eq!(seed_of("m3", &["--config", conf], &[("XLINKER_SEED", "11")]), (11, 3));
    assert_eq!(seed_of("m4", &["--config", conf, "--seed", "9"], &[("XLINKER_SEED", "11")]), (9, 3));

    // same seed in two processes: identical model directories
    seed_of("m5", &[], &[]);
    for entry in std::fs::read_dir(d.join("m1")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(d.join("m1").join(&name)).unwrap(),
            std::fs::read(d.join("m5").join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn failures_map_to_exit_codes() {
    let out = xlinker(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = xlinker(&["link", "--kb", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let out = xlinker(&["build-kb", "--kos", "/nonexistent/kos.tsv", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");

    let out = xlinker(&["link", "--help"]);
    let help = String::from_utf8_lossy(&out.stdout);
    assert!(help.contains("[default: 0.1]"), "{help}");
}
