//! Shipped fixture files: what they contain and how they are produced.

use std::path::PathBuf;

use annogold::adjudication::{adjudicate_document, AdjudicationConfig, GoldStandard};
use annogold::corpus_io::to_canonical_json;
use annogold::metric_validation::{Locator, MetricError, MetricReport};
use annogold::text_model::{AnnotationSet, Document, ErrorCategory, Lexicon};
use serde::{Deserialize, Serialize};

use crate::gen::{random_corpus, random_metric_report, CorpusShape};
use crate::oracle::{self, ExpectedError};

pub const SYNTHETIC_SEED: u64 = 20_201_215;
pub const METRIC_FIXTURES: usize = 24;

/// `crates/cli/tests/fixtures`.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures")
}

pub fn synthetic_dir() -> PathBuf {
    fixtures_dir().join("synthetic")
}

pub fn synthetic_expected_path() -> PathBuf {
    fixtures_dir().join("synthetic-expected-gold.json")
}

pub fn metric_dir() -> PathBuf {
    fixtures_dir().join("metric")
}

/// Three annotators, five documents.
pub fn synthetic_corpus() -> (Vec<Document>, Vec<AnnotationSet>) {
    let shape = CorpusShape {
        docs: 5,
        annotators: 3,
        words: (30, 45),
        sites: (4, 7),
        recall: 0.75,
        agreement: 0.7,
        noise: (0, 2),
    };
    random_corpus(SYNTHETIC_SEED, &shape)
}

/// Oracle gold for the synthetic corpus, in document order.
pub fn synthetic_expected(docs: &[Document], sets: &[AnnotationSet]) -> Vec<ExpectedError> {
    let lexicon = Lexicon::default();
    docs.iter()
        .flat_map(|d| {
            let mine: Vec<AnnotationSet> = sets.iter().filter(|s| s.doc_id == d.doc_id).cloned().collect();
            oracle::gold(d, &mine, &lexicon)
        })
        .collect()
}

/// A document with its gold standard and a metric report over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFixture {
    pub name: String,
    pub window: usize,
    pub docs: Vec<Document>,
    pub gold: Vec<GoldStandard>,
    pub report: MetricReport,
    /// Hand-computed (category, recall, precision), where worked out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<(ErrorCategory, Option<f64>, Option<f64>)>,
}

/// Three gold NUMBER errors, a metric that finds one and adds one spurious
/// claim: NUMBER recall 1/3 and precision 1/2.
pub fn hand_metric_fixture() -> MetricFixture {
    let doc = Document::new("hand", "sys", "Lou Williams scored 30 points and had 6 rebounds. The Raptors won 102-91 on Monday.").unwrap();
    let gold_spans = [(3, 4), (7, 8), (13, 14)];
    let gold = GoldStandard {
        doc_id: "hand".into(),
        errors: gold_spans
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| annogold::adjudication::GoldError {
                cluster_id: format!("hand#{i}"),
                canonical_span: doc.span(s, e).unwrap(),
                part: None,
                category: annogold::adjudication::GoldCategory::Category(ErrorCategory::Number),
                agreement: annogold::adjudication::Agreement::AllAgree,
                corrections: Vec::new(),
                miss_count: 0,
                provenance: Vec::new(),
            })
            .collect(),
        rule_log: Vec::new(),
    };
    let claim = |s: usize, e: usize| MetricError {
        doc_id: "hand".into(),
        category: ErrorCategory::Number,
        locator: Locator::Span(doc.span(s, e).unwrap()),
        expected_value: None,
    };
    MetricFixture {
        name: "hand".into(),
        window: 10,
        report: MetricReport {
            metric_name: "hand".into(),
            errors: vec![claim(3, 4), claim(11, 12)],
            coverage: Default::default(),
        },
        docs: vec![doc],
        gold: vec![gold],
        expected: vec![(ErrorCategory::Number, Some(1.0 / 3.0), Some(0.5))],
    }
}

/// Seeded fixtures with at most 8 gold and 8 metric errors per document.
pub fn generated_metric_fixtures() -> Vec<MetricFixture> {
    let config = AdjudicationConfig::default();
    (0..METRIC_FIXTURES as u64)
        .map(|i| {
            let shape = CorpusShape {
                docs: 2,
                words: (14, 30),
                sites: (2, 6),
                ..CorpusShape::default()
            };
            let (docs, sets) = random_corpus(1000 + i, &shape);
            let mut gold: Vec<GoldStandard> = docs
                .iter()
                .map(|d| {
                    let mine: Vec<AnnotationSet> = sets.iter().filter(|s| s.doc_id == d.doc_id).cloned().collect();
                    let mut g = adjudicate_document(d, &mine, &config).unwrap().gold;
                    g.errors.truncate(8);
                    g.rule_log.clear();
                    g
                })
                .collect();
            gold.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
            let report = random_metric_report(2000 + i, &gold, &docs, 8);
            MetricFixture {
                name: format!("generated-{i:02}"),
                window: [3, 10][i as usize % 2],
                docs,
                gold,
                report,
                expected: Vec::new(),
            }
        })
        .collect()
}

pub fn all_metric_fixtures() -> Vec<MetricFixture> {
    let mut v = vec![hand_metric_fixture()];
    v.extend(generated_metric_fixtures());
    v
}

pub fn fixture_json<T: Serialize>(value: &T) -> String {
    to_canonical_json(value)
}
