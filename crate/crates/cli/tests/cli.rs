use std::path::Path;
use std::process::{Command, Output};

use annogold::adjudication::{adjudicate_corpus, AdjudicationConfig, GoldStandard};
use annogold::corpus_io::{load_corpus, save_corpus, save_gold, to_canonical_json, CorpusFormat};
use annogold::metric_validation::{align_metric_errors, summarize_validation, AlignConfig, ReportFormat};
use annogold::stats::{error_profile, fleiss_kappa, render_agreement, render_profiles_text, ErrorCounts, KappaMode};
use annogold::text_model::{tokenize, AnnotationSet, Document, ErrorCategory};
use annogold_service::{spawn, ServiceConfig};
use annogold_testkit::fixtures::{hand_metric_fixture, synthetic_corpus, synthetic_dir};
use annogold_testkit::service::{candidate_set, write_empty_corpus, write_service_corpus, REFERENCE_DOC};
use tempfile::TempDir;

fn annogold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annogold")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn library_gold() -> (Vec<Document>, Vec<GoldStandard>) {
    let (docs, sets) = synthetic_corpus();
    let gold = adjudicate_corpus(&docs, &sets, &AdjudicationConfig::default())
        .unwrap()
        .into_iter()
        .map(|r| r.gold)
        .collect();
    (docs, gold)
}

#[test]
fn adjudicate_then_profile_matches_the_library() {
    let out = TempDir::new().unwrap();
    let corpus = synthetic_dir();
    let run = annogold(&["adjudicate", "--in", s(&corpus), "--out", s(out.path())]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let (docs, gold) = library_gold();
    assert_eq!(stdout(&run), ErrorCounts::from_gold(&gold).render_breakdown());

    let lib_file = out.path().join("lib.json");
    save_gold(&gold, &lib_file).unwrap();
    let written = std::fs::read(out.path().join("gold.json")).unwrap();
    assert_eq!(written, std::fs::read(&lib_file).unwrap());

    let run = annogold(&["profile", "--in", s(&corpus), "--gold", s(out.path())]);
    assert_eq!(code(&run), 0);
    assert_eq!(stdout(&run), render_profiles_text(&error_profile(&gold, &docs).unwrap()));
}

#[test]
fn adjudicate_output_is_byte_stable() {
    let out = TempDir::new().unwrap();
    let corpus = synthetic_dir();
    let a = out.path().join("a.json");
    let b = out.path().join("b.json");
    assert_eq!(code(&annogold(&["adjudicate", "--in", s(&corpus), "--out", s(&a)])), 0);
    assert_eq!(code(&annogold(&["adjudicate", "--in", s(&corpus), "--out", s(&b)])), 0);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn kappa_matches_the_library() {
    let corpus = synthetic_dir();
    let loaded = load_corpus(&corpus, CorpusFormat::Native).unwrap();
    let clusters: Vec<_> = adjudicate_corpus(&loaded.docs, &loaded.sets, &AdjudicationConfig::default())
        .unwrap()
        .into_iter()
        .flat_map(|r| r.clusters)
        .collect();
    let reports: Vec<_> = KappaMode::ALL.iter().map(|&m| fleiss_kappa(&clusters, m).unwrap()).collect();
    let run = annogold(&["kappa", "--in", s(&corpus)]);
    assert_eq!(stdout(&run), render_agreement(&reports));

    let run = annogold(&["kappa", "--in", s(&corpus), "--mode", "exclude-misses", "--csv"]);
    let lines: Vec<String> = stdout(&run).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with(&format!("exclude-misses,{:.4},", reports[1].kappa)));
}

#[test]
fn confusion_csv_rows_add_up() {
    let run = annogold(&["confusion", "--in", s(&synthetic_dir()), "--csv"]);
    assert_eq!(code(&run), 0);
    let text = stdout(&run);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[1], "total");
    let (_, gold) = library_gold();
    let counts = ErrorCounts::from_gold(&gold);
    let totals: usize = lines.map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    // every gold error keys exactly one row
    assert_eq!(totals, counts.total);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&annogold(&["adjudicate", "--nope"])), 2);
    assert_eq!(code(&annogold(&["adjudicate"])), 2);
    assert_eq!(code(&annogold(&["frobnicate"])), 2);
    assert_eq!(code(&annogold(&["kappa", "--in", "x", "--format", "docx"])), 2);
}

#[test]
fn invalid_corpus_exits_1() {
    let dir = TempDir::new().unwrap();
    let (docs, mut sets) = synthetic_corpus();
    sets[0].annotations[0].span.surface = "tampered".into();
    save_corpus(dir.path(), &docs, &sets).unwrap();
    let run = annogold(&["adjudicate", "--in", s(dir.path())]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("surface mismatch"));
    assert_eq!(code(&annogold(&["kappa", "--in", s(&dir.path().join("missing"))])), 1);
}

#[test]
fn lint_strict_fails_on_warnings() {
    assert_eq!(code(&annogold(&["lint", "--in", s(&synthetic_dir())])), 0);
    assert_eq!(code(&annogold(&["lint", "--in", s(&synthetic_dir()), "--strict"])), 1);

    let dir = TempDir::new().unwrap();
    let (docs, _) = synthetic_corpus();
    let doc = &docs[0];
    let sets: Vec<AnnotationSet> = ["a1", "a2"]
        .iter()
        .map(|a| {
            let mut set = AnnotationSet::new(doc.doc_id.clone(), *a);
            set.mark(doc, 1, 2, Some(ErrorCategory::Word)).unwrap().correction = Some("fix".into());
            set
        })
        .collect();
    save_corpus(dir.path(), &docs[..1], &sets).unwrap();
    let run = annogold(&["lint", "--in", s(dir.path()), "--strict"]);
    assert_eq!(code(&run), 0, "{}", stdout(&run));
}

#[test]
fn tokenize_lists_and_writes_documents() {
    let dir = TempDir::new().unwrap();
    let text = "The Suns (3-2) lost 102-91 on Friday.";
    let file = dir.path().join("story.txt");
    std::fs::write(&file, format!("{text}\n")).unwrap();

    let run = annogold(&["tokenize", "--in", s(&file)]);
    let expected: String = tokenize(text)
        .iter()
        .map(|t| format!("{}\t{}\t{}\t{}\n", t.index, t.char_start, t.char_end, t.surface))
        .collect();
    assert_eq!(stdout(&run), expected);

    let corpus = dir.path().join("corpus");
    let run = annogold(&["tokenize", "--in", s(&file), "--out", s(&corpus), "--doc-id", "s1", "--system", "sys"]);
    assert_eq!(code(&run), 0);
    let loaded = load_corpus(&corpus, CorpusFormat::Native).unwrap();
    assert_eq!(loaded.docs, vec![Document::new("s1", "sys", text).unwrap()]);
}

#[test]
fn qualify_locally_at_the_boundary() {
    let dir = TempDir::new().unwrap();
    write_service_corpus(dir.path(), true);
    for (found, expected) in [(7, 0), (6, 1), (10, 0)] {
        let file = dir.path().join(format!("cand{found}.json"));
        std::fs::write(&file, to_canonical_json(&candidate_set("cand", found, 1))).unwrap();
        let run = annogold(&["qualify", "--in", s(dir.path()), "--candidate", s(&file)]);
        assert_eq!(code(&run), expected, "{found}: {}", stdout(&run));
        assert!(stdout(&run).starts_with(&format!("cand: found {found}/10")));
    }
    let file = dir.path().join("cand7.json");
    let run = annogold(&["qualify", "--in", s(dir.path()), "--candidate", s(&file), "--threshold", "0.71"]);
    assert_eq!(code(&run), 1);
    assert_eq!(code(&annogold(&["qualify", "--candidate", s(&file)])), 2);
}

#[test]
fn validate_metric_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let fx = hand_metric_fixture();
    save_corpus(dir.path(), &fx.docs, &[]).unwrap();
    let gold = dir.path().join("gold.json");
    save_gold(&fx.gold, &gold).unwrap();
    let metric = dir.path().join("metric.json");
    std::fs::write(&metric, to_canonical_json(&fx.report)).unwrap();

    let config = AlignConfig {
        window: fx.window,
        ..Default::default()
    };
    let result = align_metric_errors(&fx.report, &fx.gold, &fx.docs, &config).unwrap();
    let window = fx.window.to_string();
    for (flag, format) in [(None, ReportFormat::Text), (Some("--csv"), ReportFormat::Csv), (Some("--json"), ReportFormat::Json)] {
        let mut args = vec!["validate-metric", "--in", s(dir.path()), "--gold", s(&gold), "--metric", s(&metric), "--window", &window];
        args.extend(flag);
        let run = annogold(&args);
        assert_eq!(code(&run), 0);
        assert_eq!(stdout(&run), summarize_validation(&result, format));
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn submit_and_status_go_through_the_service() {
    let dir = TempDir::new().unwrap();
    write_empty_corpus(dir.path(), true);
    let svc = spawn(ServiceConfig {
        corpus: dir.path().to_path_buf(),
        port: 0,
        reference_doc: Some(REFERENCE_DOC.into()),
        ..Default::default()
    })
    .await
    .unwrap();
    let url = svc.url();
    let root = dir.path().to_path_buf();

    let (first, again, status, qualified) = tokio::task::spawn_blocking(move || {
        let (docs, _) = synthetic_corpus();
        let mut set = AnnotationSet::new("doc01", "a9");
        set.mark(&docs[1], 0, 1, Some(ErrorCategory::Name)).unwrap();
        set.version = 1;
        let file = root.join("set.json");
        std::fs::write(&file, to_canonical_json(&set)).unwrap();
        let first = annogold(&["submit", "--server", &url, "--in", s(&file)]);
        let again = annogold(&["submit", "--server", &url, "--in", s(&file)]);
        let status = annogold(&["status", "--server", &url]);
        let cand = root.join("cand.json");
        std::fs::write(&cand, to_canonical_json(&candidate_set("a9", 7, 0))).unwrap();
        let qualified = annogold(&["qualify", "--server", &url, "--candidate", s(&cand)]);
        (first, again, status, qualified)
    })
    .await
    .unwrap();

    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), "stored doc01/a9 version 1\n");
    assert_eq!(code(&again), 1);
    assert!(String::from_utf8_lossy(&again.stderr).contains("409"));
    let line = stdout(&status).lines().find(|l| l.starts_with("doc01")).unwrap().to_string();
    assert!(line.ends_with(" a9"), "{line}");
    assert_eq!(code(&qualified), 0);
    assert!(stdout(&qualified).starts_with("a9: found 7/10 (0.700), threshold 0.70: PASS"));
    svc.shutdown().await.unwrap();
}
