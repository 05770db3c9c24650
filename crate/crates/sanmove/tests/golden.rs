use std::path::PathBuf;

use sanmove::workflow::{preprocess_file, DATASET_FILE, REJECTS_FILE, STATS_FILE};

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden")
}

#[test]
fn preprocessing_reproduces_checked_in_outputs() {
    let out = tempfile::tempdir().unwrap();
    let done = preprocess_file(&golden().join("input.tsv"), out.path()).unwrap();
    for (produced, expected) in [
        (DATASET_FILE, "expected_dataset.txt"),
        (STATS_FILE, "expected_stats.csv"),
        (REJECTS_FILE, "expected_rejects.txt"),
    ] {
        let a = std::fs::read_to_string(out.path().join(produced)).unwrap();
        let b = std::fs::read_to_string(golden().join(expected)).unwrap();
        assert_eq!(a, b, "{produced}");
    }
    assert_eq!(std::fs::read_to_string(golden().join("input.tsv")).unwrap().lines().count(), 14);
    assert_eq!(done.rejects.len(), 1);
}

#[test]
fn stage_counts_follow_each_rule() {
    let out = tempfile::tempdir().unwrap();
    let stats = preprocess_file(&golden().join("input.tsv"), out.path()).unwrap().stats;
    let sessions = |stage: &str| stats.stage(stage).unwrap().sessions;
    // 13 parsed records over two users; the 9 minute duplicate merges away
    assert_eq!(stats.stage("raw").unwrap().records, 13);
    assert_eq!(stats.stage("sessionized").unwrap().records, 12);
    assert_eq!(sessions("sessionized"), 4);
    assert_eq!(stats.stage("user_record_filter").unwrap().users, 1);
    assert_eq!(sessions("session_length_filter"), 1);
    assert_eq!(stats.stage("session_count_filter").unwrap().users, 0);
}
