use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annogold::adjudication::{
    adjudicate_corpus, AdjudicationConfig, DocumentAdjudication, ErrorCluster, GoldStandard, RuleKind,
};
use annogold::corpus_io::{document_path, load_corpus, load_gold, save_document, save_gold, LoadedCorpus};
use annogold::metric_validation::{align_metric_errors, summarize_validation, AlignConfig, MetricReport, ReportFormat};
use annogold::qualification::{score_qualification, QualificationConfig, QualificationResult};
use annogold::stats::{confusion_matrix, error_profile, fleiss_kappa, render_agreement, render_profiles_csv, render_profiles_text, ErrorCounts};
use annogold::text_model::{tokenize, AnnotationSet, Document, ErrorCategory};
use annogold_client::Client;
use annogold_service::ServiceConfig;
use anyhow::{bail, Context, Result};

use crate::*;

pub const GOLD_FILE: &str = "gold.json";

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Tokenize(a) => tokenize_cmd(a),
        Command::Lint(a) => lint(a),
        Command::Adjudicate(a) => adjudicate(a),
        Command::Kappa(a) => kappa(a),
        Command::Confusion(a) => confusion(a),
        Command::Profile(a) => profile(a),
        Command::ValidateMetric(a) => validate_metric(a),
        Command::Qualify(a) => qualify(a),
        Command::Serve(a) => serve(a),
        Command::Submit(a) => submit(a),
        Command::Status(a) => status(a),
    }
}

fn success() -> Result<ExitCode> {
    Ok(ExitCode::SUCCESS)
}

fn load(corpus: &CorpusArgs) -> Result<LoadedCorpus> {
    let loaded = load_corpus(&corpus.input, corpus.format.into())
        .with_context(|| format!("loading corpus {}", corpus.input.display()))?;
    if !loaded.lint.is_empty() {
        eprintln!("{} lint warning(s); run `annogold lint` for details", loaded.lint.len());
    }
    Ok(loaded)
}

fn adjudicated(corpus: &LoadedCorpus, strict: bool) -> Result<Vec<DocumentAdjudication>> {
    let config = AdjudicationConfig {
        strict,
        ..Default::default()
    };
    Ok(adjudicate_corpus(&corpus.docs, &corpus.sets, &config)?)
}

fn all_clusters(results: Vec<DocumentAdjudication>) -> Vec<ErrorCluster> {
    results.into_iter().flat_map(|r| r.clusters).collect()
}

/// `--out gold/` and `--out gold.json` both work.
pub fn gold_file(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        path.join(GOLD_FILE)
    }
}

fn read_set(path: &Path) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn tokenize_cmd(a: TokenizeArgs) -> Result<ExitCode> {
    let mut text = String::new();
    if a.input.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    }
    let text = text.trim_end_matches(['\n', '\r']);
    match (a.out, a.doc_id) {
        (Some(root), Some(doc_id)) => {
            let doc = Document::new(doc_id, a.system, text)?;
            save_document(&root, &doc)?;
            println!("{} ({} tokens)", document_path(&root, &doc.doc_id).display(), doc.len());
        }
        _ => {
            for t in tokenize(text) {
                println!("{}\t{}\t{}\t{}", t.index, t.char_start, t.char_end, t.surface);
            }
        }
    }
    success()
}

fn lint(a: LintArgs) -> Result<ExitCode> {
    let corpus = load_corpus(&a.corpus.input, a.corpus.format.into())
        .with_context(|| format!("loading corpus {}", a.corpus.input.display()))?;
    print!("{}", corpus.lint.render());
    println!(
        "{} documents, {} annotation sets, {} warning(s)",
        corpus.docs.len(),
        corpus.sets.len(),
        corpus.lint.len()
    );
    Ok(if a.strict && !corpus.lint.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

pub fn render_breakdown_csv(counts: &ErrorCounts) -> String {
    let mut out = String::from("category,errors\n");
    for c in ErrorCategory::ALL {
        out.push_str(&format!("{},{}\n", c.as_str(), counts.category(c)));
    }
    out.push_str(&format!("NO_MAJORITY,{}\n", counts.no_majority));
    out.push_str(&format!("NO_LABEL,{}\n", counts.no_label));
    out.push_str(&format!("TOTAL,{}\n", counts.total));
    out
}

fn adjudicate(a: AdjudicateArgs) -> Result<ExitCode> {
    let corpus = load(&a.corpus)?;
    let results = adjudicated(&corpus, a.strict)?;
    let gold: Vec<GoldStandard> = results.into_iter().map(|r| r.gold).collect();
    let review = [RuleKind::ScorePairSkipped, RuleKind::CoLocatedReview, RuleKind::AlternativeMarkups];
    for note in gold.iter().flat_map(|g| &g.rule_log).filter(|r| review.contains(&r.rule)) {
        eprintln!("note [{}] {:?}: {}", note.doc_id, note.rule, note.note.as_deref().unwrap_or(""));
    }
    if let Some(out) = &a.out {
        let path = gold_file(out);
        save_gold(&gold, &path)?;
        eprintln!("wrote {}", path.display());
    }
    let counts = ErrorCounts::from_gold(&gold);
    if a.csv {
        print!("{}", render_breakdown_csv(&counts));
    } else {
        print!("{}", counts.render_breakdown());
    }
    success()
}

fn kappa(a: KappaArgs) -> Result<ExitCode> {
    let corpus = load(&a.corpus)?;
    let clusters = all_clusters(adjudicated(&corpus, false)?);
    let reports = a
        .mode
        .modes()
        .into_iter()
        .map(|m| fleiss_kappa(&clusters, m))
        .collect::<annogold::Result<Vec<_>>>()?;
    if a.csv {
        println!("mode,kappa,items,raters,observed,expected");
        for r in &reports {
            println!(
                "{},{:.4},{},{},{:.4},{:.4}",
                r.mode.as_str(),
                r.kappa,
                r.n_items,
                r.n_raters,
                r.observed_agreement,
                r.expected_agreement
            );
        }
    } else {
        print!("{}", render_agreement(&reports));
    }
    success()
}

fn confusion(a: ConfusionArgs) -> Result<ExitCode> {
    let corpus = load(&a.corpus)?;
    let matrix = confusion_matrix(&all_clusters(adjudicated(&corpus, false)?));
    print!("{}", if a.csv { matrix.render_csv() } else { matrix.render_text() });
    success()
}

fn profile(a: ProfileArgs) -> Result<ExitCode> {
    let corpus = load(&a.corpus)?;
    let gold = match &a.gold {
        Some(path) => load_gold(&gold_file(path))?,
        None => adjudicated(&corpus, false)?.into_iter().map(|r| r.gold).collect(),
    };
    let profiles = error_profile(&gold, &corpus.docs)?;
    print!("{}", if a.csv { render_profiles_csv(&profiles) } else { render_profiles_text(&profiles) });
    success()
}

fn validate_metric(a: ValidateMetricArgs) -> Result<ExitCode> {
    let corpus = load(&a.corpus)?;
    let gold = load_gold(&gold_file(&a.gold))?;
    let text = std::fs::read_to_string(&a.metric).with_context(|| format!("reading {}", a.metric.display()))?;
    let (report, rejected) = MetricReport::parse_lenient(&text).with_context(|| format!("parsing {}", a.metric.display()))?;
    for r in &rejected {
        eprintln!("rejected metric record {}: {}", r.index, r.reason);
    }
    let config = AlignConfig {
        window: a.window,
        ..Default::default()
    };
    let result = align_metric_errors(&report, &gold, &corpus.docs, &config)?;
    for note in &result.log {
        eprintln!("note [{}] {:?}: {}", note.doc_id, note.kind, note.message);
    }
    let format = if a.json {
        ReportFormat::Json
    } else if a.csv {
        ReportFormat::Csv
    } else {
        ReportFormat::Text
    };
    print!("{}", summarize_validation(&result, format));
    success()
}

fn print_qualification(r: &QualificationResult) -> ExitCode {
    println!(
        "{}: found {}/{} ({:.3}), threshold {:.2}: {}",
        r.candidate_id,
        r.found,
        r.reference_total,
        r.fraction,
        r.threshold,
        if r.passed { "PASS" } else { "FAIL" }
    );
    for d in &r.details {
        println!(
            "  {:<12} {:<24} {}",
            d.cluster_id,
            d.surface,
            d.matched_by.as_deref().unwrap_or("-")
        );
    }
    if r.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn qualify(a: QualifyArgs) -> Result<ExitCode> {
    let candidate = read_set(&a.candidate)?;
    if let Some(server) = a.server {
        let mut client = Client::new(server);
        if let Some(t) = a.token {
            client = client.with_token(t);
        }
        let result = runtime()?.block_on(client.qualify(&candidate))?;
        return Ok(print_qualification(&result));
    }

    let input = a.input.expect("clap requires --in without --server");
    let corpus = load_corpus(&input, a.format.into()).with_context(|| format!("loading corpus {}", input.display()))?;
    let doc_id = a.reference_doc.unwrap_or_else(|| candidate.doc_id.clone());
    let doc = corpus
        .docs
        .iter()
        .find(|d| d.doc_id == doc_id)
        .with_context(|| format!("reference document `{doc_id}` is not in the corpus"))?;
    let reference = match &a.gold {
        Some(path) => load_gold(&gold_file(path))?
            .into_iter()
            .find(|g| g.doc_id == doc_id)
            .with_context(|| format!("no gold for `{doc_id}` in {}", path.display()))?,
        None => {
            let mine: Vec<AnnotationSet> = corpus.sets.iter().filter(|s| s.doc_id == doc_id).cloned().collect();
            annogold::adjudication::adjudicate_document(doc, &mine, &AdjudicationConfig::default())?.gold
        }
    };
    let config = QualificationConfig {
        threshold: a.threshold,
        span_only: a.span_only,
        ..Default::default()
    };
    candidate.validate(doc)?;
    let result = score_qualification(&candidate, &reference, doc, &config)?;
    Ok(print_qualification(&result))
}

fn serve(a: ServeArgs) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let mut config = match &a.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    if let Some(dir) = a.input {
        config.corpus = dir;
    }
    if let Some(k) = a.k {
        config.k = k;
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    if let Some(p) = a.port {
        config.port = p;
    }
    if let Some(h) = a.host {
        config.host = h;
    }
    runtime()?.block_on(annogold_service::run(config))?;
    success()
}

fn submit(a: SubmitArgs) -> Result<ExitCode> {
    let set = read_set(&a.input)?;
    let mut client = Client::new(a.server);
    if let Some(t) = a.token {
        client = client.with_token(t);
    }
    match runtime()?.block_on(client.put_annotations(&set)) {
        Ok(ack) => {
            println!("stored {}/{} version {}", ack.doc_id, ack.annotator_id, ack.version);
            success()
        }
        Err(annogold_client::ClientError::Api { status, body }) => {
            eprintln!("rejected ({status}): {}", body.message);
            for p in &body.problems {
                match p.annotation {
                    Some(i) => eprintln!("  annotation {i}: {}", p.message),
                    None => eprintln!("  {}", p.message),
                }
            }
            Ok(ExitCode::from(1))
        }
        Err(e) => bail!(e),
    }
}

fn status(a: StatusArgs) -> Result<ExitCode> {
    let docs = runtime()?.block_on(Client::new(a.server).list_docs())?;
    for d in docs {
        println!(
            "{:<16} {:<12} {:>4} tokens  {:<8} {}",
            d.doc_id,
            d.system_id,
            d.tokens,
            if d.complete { "complete" } else { "open" },
            d.annotators.join(",")
        );
    }
    success()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_paths() {
        assert_eq!(gold_file(Path::new("out")), Path::new("out/gold.json"));
        assert_eq!(gold_file(Path::new("out/")), Path::new("out/gold.json"));
        assert_eq!(gold_file(Path::new("g/x.json")), Path::new("g/x.json"));
    }

    #[test]
    fn breakdown_csv_totals() {
        let counts = ErrorCounts {
            stories: 1,
            total: 4,
            number: 2,
            word: 1,
            no_majority: 1,
            ..Default::default()
        };
        let csv = render_breakdown_csv(&counts);
        assert!(csv.starts_with("category,errors\nNUMBER,2\n"), "{csv}");
        assert!(csv.ends_with("NO_MAJORITY,1\nNO_LABEL,0\nTOTAL,4\n"));
    }
}
