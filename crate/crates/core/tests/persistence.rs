mod common;

use proptest::prelude::*;

use xlinker::corpus::{kos_training_instances, TrainingSet};
use xlinker::kos::KnowledgeBase;
use xlinker::xmr::{XmrConfig, XmrModel, MANIFEST_FILE};
use xlinker::Error;

fn trained(seed: u64) -> (KnowledgeBase, XmrModel) {
    let mut rng = common::rng(seed);
    let kb = common::overlapping_kb(&mut rng, 30, 15);
    let cfg = XmrConfig {
        max_leaf_size: 4,
        ..Default::default()
    };
    let (model, _) = XmrModel::fit(&kos_training_instances(&kb), &kb, &cfg).unwrap();
    (kb, model)
}

#[test]
fn knowledge_base_directory_round_trip() {
    let kb = common::vasculitis_kb();
    let tmp = tempfile::tempdir().unwrap();
    kb.save_dir(tmp.path()).unwrap();
    let back = KnowledgeBase::load_dir(tmp.path()).unwrap();
    assert_eq!(kb.concepts(), back.concepts());
    assert_eq!(back.information_content("D014657").unwrap(), kb.information_content("D014657").unwrap());
}

#[test]
fn label_table_must_match_the_vocabulary() {
    let kb = common::vasculitis_kb();
    let tmp = tempfile::tempdir().unwrap();
    kb.save_dir(tmp.path()).unwrap();
    let labels = tmp.path().join("labels.tsv");
    let text = std::fs::read_to_string(&labels).unwrap().replace("D014657", "D000000");
    std::fs::write(&labels, text).unwrap();
    assert!(KnowledgeBase::load_dir(tmp.path()).is_err());
}

#[test]
fn training_set_round_trip() {
    let kb = common::vasculitis_kb();
    let set = kos_training_instances(&kb);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("train.tsv");
    set.save(&path).unwrap();
    let back = TrainingSet::load(&path, &kb).unwrap();
    assert_eq!(back.instances, set.instances);
    assert_eq!(back.provenance, set.provenance);

    std::fs::write(&path, "99\tnowhere\n").unwrap();
    assert!(matches!(TrainingSet::load(&path, &kb), Err(Error::Parse { .. })));
}

#[test]
fn model_round_trip_is_exact() {
    let (kb, model) = trained(21);
    let tmp = tempfile::tempdir().unwrap();
    model.save(tmp.path()).unwrap();
    let back = XmrModel::load(tmp.path()).unwrap();
    assert_eq!(back, model);
    let mut rng = common::rng(22);
    for _ in 0..50 {
        let q = common::random_query(&mut rng, &kb);
        assert_eq!(back.predict(&q, 3, 5), model.predict(&q, 3, 5));
    }
}

#[test]
fn corrupt_model_files_are_rejected() {
    let (_, model) = trained(23);
    let tmp = tempfile::tempdir().unwrap();
    model.save(tmp.path()).unwrap();

    let bad = |file: &str, edit: &dyn Fn(Vec<u8>) -> Vec<u8>| {
        let dir = tempfile::tempdir().unwrap();
        for entry in std::fs::read_dir(tmp.path()).unwrap() {
            let entry = entry.unwrap();
            std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
        let path = dir.path().join(file);
        std::fs::write(&path, edit(std::fs::read(&path).unwrap())).unwrap();
        XmrModel::load(dir.path())
    };

    let truncated = bad("ranker.csr", &|mut b| {
        b.truncate(b.len() - 3);
        b
    });
    assert!(truncated.is_err());
    let trailing = bad("matcher.csr", &|mut b| {
        b.push(0);
        b
    });
    assert!(matches!(trailing, Err(Error::Format { .. })));
    let magic = bad("idf.csr", &|mut b| {
        b[0] = b'Y';
        b
    });
    assert!(magic.is_err());
    let version = bad(MANIFEST_FILE, &|b| {
        String::from_utf8(b)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99")
            .into_bytes()
    });
    assert!(matches!(version, Err(Error::Format { .. })));
    let tree = bad("tree.tsv", &|b| {
        let text = String::from_utf8(b).unwrap();
        text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>().into_bytes()
    });
    assert!(tree.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csr_files_round_trip(rows in prop::collection::vec(prop::collection::vec((0u32..50, -5.0f64..5.0), 0..8), 0..12)) {
        use xlinker::sparse::{CsrMatrix, SparseVec};
        let rows: Vec<SparseVec> = rows.into_iter().map(SparseVec::from_pairs).collect();
        let m = CsrMatrix::from_rows(&rows, 50);
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = CsrMatrix::read_from(buf.as_slice(), "mem").unwrap();
        prop_assert_eq!(back, m);
    }
}
