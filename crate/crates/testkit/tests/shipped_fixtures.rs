use std::fs;
use std::path::Path;

use annogold::corpus_io::{load_corpus, save_corpus, CorpusFormat};
use annogold_testkit::fixtures::*;

fn regen() -> bool {
    std::env::var_os("ANNOGOLD_REGEN_FIXTURES").is_some()
}

fn check(path: &Path, contents: &str) {
    if regen() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, contents).unwrap();
    }
    let shipped = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}; regenerate the fixtures", path.display()));
    assert_eq!(shipped, contents, "{} is stale; regenerate the fixtures", path.display());
}

#[test]
fn synthetic_corpus_matches_generator() {
    let (docs, sets) = synthetic_corpus();
    let dir = synthetic_dir();
    if regen() {
        let _ = fs::remove_dir_all(&dir);
        save_corpus(&dir, &docs, &sets).unwrap();
    }
    let loaded = load_corpus(&dir, CorpusFormat::Native).unwrap();
    assert_eq!(loaded.docs, docs);
    assert_eq!(loaded.sets, sets);
    check(&synthetic_expected_path(), &fixture_json(&synthetic_expected(&docs, &sets)));
}

#[test]
fn metric_fixtures_match_generator() {
    for f in all_metric_fixtures() {
        check(&metric_dir().join(format!("{}.json", f.name)), &fixture_json(&f));
    }
}
