//! Scoring an automated accuracy metric against the gold standard.
//!
//! A metric is consumed as a [`MetricReport`] file: a list of claimed errors,
//! each located either by a token span or by an `(entity, attribute, value)`
//! tuple as produced by information-extraction metrics. Claimed errors are
//! aligned to gold errors per document, then recall and precision are
//! reported per category.
//!
//! Alignment runs in two passes:
//!
//! 1. Direct matches, greedy over gold errors in document order. A claimed
//!    error is a candidate when its category agrees and its span corefers
//!    with the gold span, or its entity occurs within `window` tokens of it.
//!    The closest candidate wins; equal distances go to the one whose claimed
//!    value equals the highlighted text, then to the earlier record.
//! 2. Equivalence groups. Two or more NUMBER tuples whose entity is exactly
//!    the surface of a still-unmatched gold NAME error count as one match for
//!    that error: the metric flagged the numbers where annotators flagged the
//!    name.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adjudication::{GoldCategory, GoldError, GoldStandard};
use crate::error::{Error, Result};
use crate::text_model::{normalize_range, tokenize, Document, ErrorCategory, Lexicon, Span};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleLocator {
    pub entity: String,
    pub attribute: String,
    pub claimed_value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locator {
    Span(Span),
    Tuple(TupleLocator),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricError {
    pub doc_id: String,
    pub category: ErrorCategory,
    pub locator: Locator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric_name: String,
    pub errors: Vec<MetricError>,
    /// Documents the metric processed; `false` marks a document it skipped.
    #[serde(default)]
    pub coverage: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub reason: String,
}

impl MetricReport {
    /// Parses a report, setting aside records that do not deserialize
    /// instead of failing the whole file.
    pub fn parse_lenient(json: &str) -> std::result::Result<(MetricReport, Vec<Rejection>), serde_json::Error> {
        #[derive(Deserialize)]
        struct Raw {
            metric_name: String,
            errors: Vec<serde_json::Value>,
            #[serde(default)]
            coverage: BTreeMap<String, bool>,
        }
        let raw: Raw = serde_json::from_str(json)?;
        let mut errors = Vec::new();
        let mut rejections = Vec::new();
        for (index, value) in raw.errors.into_iter().enumerate() {
            match serde_json::from_value::<MetricError>(value) {
                Ok(e) => errors.push(e),
                Err(e) => rejections.push(Rejection {
                    index,
                    reason: e.to_string(),
                }),
            }
        }
        Ok((
            MetricReport {
                metric_name: raw.metric_name,
                errors,
                coverage: raw.coverage,
            },
            rejections,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    /// How far (in tokens) a tuple's entity may sit from the gold span.
    pub window: usize,
    pub lexicon: Lexicon,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            window: 10,
            lexicon: Lexicon::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Direct,
    Equivalence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub doc_id: String,
    pub cluster_id: String,
    pub gold_category: GoldCategory,
    /// Indices into the report's `errors`.
    pub metric: Vec<usize>,
    pub kind: MatchKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRef {
    pub doc_id: String,
    pub cluster_id: String,
    pub category: GoldCategory,
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteKind {
    Equivalence,
    CategoryMismatch,
    OracleDiscrepancy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignNote {
    pub kind: NoteKind,
    pub doc_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: ErrorCategory,
    pub gold_total: usize,
    pub matched_gold: usize,
    pub metric_total: usize,
    pub matched_metric: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    /// False when the metric reported nothing of this category.
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub metric_name: String,
    pub categories: Vec<CategoryScore>,
    pub matches: Vec<MatchRecord>,
    pub unmatched_gold: Vec<GoldRef>,
    /// Report indices of claimed errors that matched nothing.
    pub spurious: Vec<usize>,
    pub log: Vec<AlignNote>,
    pub rejections: Vec<Rejection>,
}

impl ValidationResult {
    pub fn score(&self, category: ErrorCategory) -> &CategoryScore {
        &self.categories[category.index()]
    }

    /// Number of gold errors matched, summed over documents.
    pub fn matched_gold_count(&self) -> usize {
        self.matches.len()
    }
}

enum Resolved {
    Span((usize, usize)),
    /// Token ranges where the entity string occurs.
    Tuple(Vec<(usize, usize)>),
}

struct Claim<'a> {
    index: usize,
    error: &'a MetricError,
    resolved: Resolved,
}

fn squash(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn occurrences(doc: &Document, entity: &str) -> Vec<(usize, usize)> {
    let words: Vec<String> = tokenize(entity).into_iter().map(|t| t.surface.to_lowercase()).collect();
    if words.is_empty() || words.len() > doc.len() {
        return Vec::new();
    }
    (0..=doc.len() - words.len())
        .filter(|&s| (0..words.len()).all(|k| doc.token(s + k).to_lowercase() == words[k]))
        .map(|s| (s, s + words.len()))
        .collect()
}

fn gap(a: (usize, usize), b: (usize, usize)) -> usize {
    if a.0.max(b.0) < a.1.min(b.1) {
        0
    } else if a.1 <= b.0 {
        b.0 - a.1
    } else {
        a.0 - b.1
    }
}

fn highlighted(gold: &GoldError) -> &str {
    match (gold.part, crate::text_model::score_pair(&gold.canonical_span.surface)) {
        (Some(crate::text_model::ScorePart::Left), Some((l, _))) => l,
        (Some(crate::text_model::ScorePart::Right), Some((_, r))) => r,
        _ => &gold.canonical_span.surface,
    }
}

/// Token distance when the claim's locator points at the gold error,
/// ignoring category.
fn locate(claim: &Claim, gold: &GoldError, window: usize) -> Option<usize> {
    let g = (gold.canonical_span.start, gold.canonical_span.end);
    match &claim.resolved {
        Resolved::Span(m) => (m.0.max(g.0) < m.1.min(g.1)).then(|| m.0.abs_diff(g.0) + m.1.abs_diff(g.1)),
        Resolved::Tuple(occ) => occ.iter().map(|&o| gap(o, g)).filter(|&d| d <= window).min(),
    }
}

fn categories_agree(claim: &Claim, gold: &GoldError) -> bool {
    gold.category == GoldCategory::Category(claim.error.category)
}

fn claimed_value<'a>(claim: &'a Claim<'_>) -> Option<&'a str> {
    match &claim.error.locator {
        Locator::Tuple(t) => Some(&t.claimed_value),
        Locator::Span(s) => Some(&s.surface),
    }
}

fn equivalence_eligible(claim: &Claim, gold: &GoldError) -> bool {
    gold.category == GoldCategory::Category(ErrorCategory::Name)
        && claim.error.category == ErrorCategory::Number
        && matches!(&claim.error.locator, Locator::Tuple(t) if squash(&t.entity) == squash(&gold.canonical_span.surface))
}

/// Greedy alignment for one document: `(gold index, claim positions, kind)`.
fn align_document(golds: &[&GoldError], claims: &[Claim], window: usize) -> Vec<(usize, Vec<usize>, MatchKind)> {
    let mut used = vec![false; claims.len()];
    let mut gold_done = vec![false; golds.len()];
    let mut out = Vec::new();

    for (gi, gold) in golds.iter().enumerate() {
        let best = claims
            .iter()
            .enumerate()
            .filter(|(ci, c)| !used[*ci] && categories_agree(c, gold))
            .filter_map(|(ci, c)| {
                let d = locate(c, gold, window)?;
                let value_differs = claimed_value(c).map(squash) != Some(squash(highlighted(gold)));
                Some(((d, value_differs, c.index), ci))
            })
            .min();
        if let Some((_, ci)) = best {
            used[ci] = true;
            gold_done[gi] = true;
            out.push((gi, vec![ci], MatchKind::Direct));
        }
    }

    for (gi, gold) in golds.iter().enumerate() {
        if gold_done[gi] {
            continue;
        }
        let group: Vec<usize> = claims
            .iter()
            .enumerate()
            .filter(|(ci, c)| !used[*ci] && equivalence_eligible(c, gold))
            .map(|(ci, _)| ci)
            .collect();
        if group.len() >= 2 {
            for &ci in &group {
                used[ci] = true;
            }
            gold_done[gi] = true;
            out.push((gi, group, MatchKind::Equivalence));
        }
    }
    out.sort_by_key(|(gi, _, _)| *gi);
    out
}

/// Largest number of gold errors any injective assignment can match, by
/// exhaustive search. Meant for documents with at most a handful of errors.
fn exhaustive_match_count(golds: &[&GoldError], claims: &[Claim], window: usize) -> usize {
    fn go(gi: usize, used: u64, golds: &[&GoldError], claims: &[Claim], window: usize) -> usize {
        if gi == golds.len() {
            return 0;
        }
        let gold = golds[gi];
        let mut best = go(gi + 1, used, golds, claims, window);
        let mut eligible = Vec::new();
        for (ci, c) in claims.iter().enumerate() {
            if used & (1 << ci) != 0 {
                continue;
            }
            if categories_agree(c, gold) && locate(c, gold, window).is_some() {
                best = best.max(1 + go(gi + 1, used | (1 << ci), golds, claims, window));
            }
            if equivalence_eligible(c, gold) {
                eligible.push(ci);
            }
        }
        for (k, &a) in eligible.iter().enumerate() {
            for &b in &eligible[k + 1..] {
                best = best.max(1 + go(gi + 1, used | (1 << a) | (1 << b), golds, claims, window));
            }
        }
        best
    }
    go(0, 0, golds, claims, window)
}

pub const ORACLE_LIMIT: usize = 8;

/// Aligns a metric's claimed errors with the gold standard and scores it.
pub fn align_metric_errors(
    report: &MetricReport,
    gold: &[GoldStandard],
    docs: &[Document],
    config: &AlignConfig,
) -> Result<ValidationResult> {
    let doc_by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let gold_by_id: BTreeMap<&str, &GoldStandard> = gold.iter().map(|g| (g.doc_id.as_str(), g)).collect();

    let mut rejections = Vec::new();
    let mut claims_by_doc: BTreeMap<&str, Vec<Claim>> = BTreeMap::new();
    for (index, error) in report.errors.iter().enumerate() {
        let doc = *doc_by_id
            .get(error.doc_id.as_str())
            .ok_or_else(|| Error::MissingDocument(error.doc_id.clone()))?;
        if !gold_by_id.contains_key(error.doc_id.as_str()) {
            return Err(Error::MissingDocument(error.doc_id.clone()));
        }
        let resolved = match &error.locator {
            Locator::Span(span) => match span.verify(doc, &format!("metric record {index}")) {
                Ok(()) => Resolved::Span(normalize_range(span.start, span.end, doc, &config.lexicon)),
                Err(e) => {
                    rejections.push(Rejection {
                        index,
                        reason: e.to_string(),
                    });
                    continue;
                }
            },
            Locator::Tuple(t) if t.entity.trim().is_empty() => {
                rejections.push(Rejection {
                    index,
                    reason: "tuple locator has an empty entity".into(),
                });
                continue;
            }
            Locator::Tuple(t) => Resolved::Tuple(occurrences(doc, &t.entity)),
        };
        claims_by_doc.entry(error.doc_id.as_str()).or_default().push(Claim {
            index,
            error,
            resolved,
        });
    }

    let mut matches = Vec::new();
    let mut unmatched_gold = Vec::new();
    let mut spurious = Vec::new();
    let mut log = Vec::new();
    let mut gold_total = [0usize; 6];
    let mut matched_gold = [0usize; 6];
    let mut metric_total = [0usize; 6];
    let mut matched_metric = [0usize; 6];

    for g in gold {
        if !doc_by_id.contains_key(g.doc_id.as_str()) {
            return Err(Error::MissingDocument(g.doc_id.clone()));
        }
        let golds: Vec<&GoldError> = g.errors.iter().collect();
        let claims = claims_by_doc.remove(g.doc_id.as_str()).unwrap_or_default();
        let aligned = align_document(&golds, &claims, config.window);

        if golds.len() <= ORACLE_LIMIT && claims.len() <= ORACLE_LIMIT {
            let optimal = exhaustive_match_count(&golds, &claims, config.window);
            if optimal != aligned.len() {
                log.push(AlignNote {
                    kind: NoteKind::OracleDiscrepancy,
                    doc_id: g.doc_id.clone(),
                    message: format!("greedy matched {} gold errors, exhaustive search {}", aligned.len(), optimal),
                });
            }
        }

        let mut gold_hit = vec![false; golds.len()];
        let mut claim_hit = vec![false; claims.len()];
        for (gi, cis, kind) in aligned {
            gold_hit[gi] = true;
            for &ci in &cis {
                claim_hit[ci] = true;
            }
            if kind == MatchKind::Equivalence {
                log.push(AlignNote {
                    kind: NoteKind::Equivalence,
                    doc_id: g.doc_id.clone(),
                    message: format!(
                        "{} NUMBER claims about {:?} matched one NAME error",
                        cis.len(),
                        golds[gi].canonical_span.surface
                    ),
                });
            }
            matches.push(MatchRecord {
                doc_id: g.doc_id.clone(),
                cluster_id: golds[gi].cluster_id.clone(),
                gold_category: golds[gi].category,
                metric: cis.iter().map(|&ci| claims[ci].index).collect(),
                kind,
            });
        }

        for (gi, gold_error) in golds.iter().enumerate() {
            if let Some(c) = gold_error.category.category() {
                gold_total[c.index()] += 1;
                if gold_hit[gi] {
                    matched_gold[c.index()] += 1;
                }
            }
            if !gold_hit[gi] {
                unmatched_gold.push(GoldRef {
                    doc_id: g.doc_id.clone(),
                    cluster_id: gold_error.cluster_id.clone(),
                    category: gold_error.category,
                    surface: gold_error.canonical_span.surface.clone(),
                });
            }
        }
        for (ci, claim) in claims.iter().enumerate() {
            let c = claim.error.category.index();
            metric_total[c] += 1;
            if claim_hit[ci] {
                matched_metric[c] += 1;
                continue;
            }
            spurious.push(claim.index);
            let clash: BTreeSet<&str> = golds
                .iter()
                .enumerate()
                .filter(|(gi, ge)| !gold_hit[*gi] && locate(claim, ge, config.window).is_some() && !categories_agree(claim, ge))
                .map(|(_, ge)| ge.category.as_str())
                .collect();
            if !clash.is_empty() {
                log.push(AlignNote {
                    kind: NoteKind::CategoryMismatch,
                    doc_id: g.doc_id.clone(),
                    message: format!(
                        "record {} ({}) sits on unmatched gold error(s) of category {}",
                        claim.index,
                        claim.error.category,
                        clash.into_iter().collect::<Vec<_>>().join("/")
                    ),
                });
            }
        }
    }

    // claims on documents without a gold standard were rejected above
    debug_assert!(claims_by_doc.is_empty());
    spurious.sort_unstable();

    let categories = ErrorCategory::ALL
        .iter()
        .map(|&c| {
            let i = c.index();
            CategoryScore {
                category: c,
                gold_total: gold_total[i],
                matched_gold: matched_gold[i],
                metric_total: metric_total[i],
                matched_metric: matched_metric[i],
                recall: (gold_total[i] > 0).then(|| matched_gold[i] as f64 / gold_total[i] as f64),
                precision: (metric_total[i] > 0).then(|| matched_metric[i] as f64 / metric_total[i] as f64),
                applicable: metric_total[i] > 0,
            }
        })
        .collect();

    Ok(ValidationResult {
        metric_name: report.metric_name.clone(),
        categories,
        matches,
        unmatched_gold,
        spurious,
        log,
        rejections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

fn cell(value: Option<f64>, applicable: bool) -> String {
    match (applicable, value) {
        (true, Some(v)) => format!("{v:.3}"),
        _ => "---".to_string(),
    }
}

/// Recall/precision table with `---` where the metric reported nothing.
pub fn summarize_validation(result: &ValidationResult, format: ReportFormat) -> String {
    let rows: [(&str, Vec<String>); 2] = [
        (
            "Recall",
            result.categories.iter().map(|s| cell(s.recall, s.applicable)).collect(),
        ),
        (
            "Precision",
            result.categories.iter().map(|s| cell(s.precision, s.applicable)).collect(),
        ),
    ];
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(result).expect("result serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["measurement"];
            header.extend(ErrorCategory::ALL.iter().map(|c| c.label()));
            w.write_record(&header).expect("in-memory write");
            for (name, cells) in &rows {
                let mut rec = vec![name.to_string()];
                rec.extend(cells.iter().cloned());
                w.write_record(&rec).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
        }
        ReportFormat::Text => {
            let mut out = format!("{} vs gold standard\n", result.metric_name);
            let _ = write!(out, "{:<12}", "measurement");
            for c in ErrorCategory::ALL {
                let _ = write!(out, " |{:>14}", c.label());
            }
            out.push('\n');
            for (name, cells) in &rows {
                let _ = write!(out, "{:<12}", name);
                for v in cells {
                    let _ = write!(out, " |{:>14}", v);
                }
                out.push('\n');
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjudication::Agreement;

    const STORY: &str = "Lou Williams scored 30 points and had 6 rebounds. The Raptors won 102-91 on Monday.";

    fn doc() -> Document {
        Document::new("s1", "sys", STORY).unwrap()
    }

    fn gold_error(doc: &Document, start: usize, end: usize, cat: ErrorCategory) -> GoldError {
        GoldError {
            cluster_id: format!("s1#{start}"),
            canonical_span: doc.span(start, end).unwrap(),
            part: None,
            category: GoldCategory::Category(cat),
            agreement: Agreement::AllAgree,
            corrections: vec![],
            miss_count: 0,
            provenance: vec![],
        }
    }

    fn tuple(entity: &str, attribute: &str, value: &str) -> MetricError {
        MetricError {
            doc_id: "s1".into(),
            category: ErrorCategory::Number,
            locator: Locator::Tuple(TupleLocator {
                entity: entity.into(),
                attribute: attribute.into(),
                claimed_value: value.into(),
            }),
            expected_value: None,
        }
    }

    fn span_claim(doc: &Document, start: usize, end: usize, cat: ErrorCategory) -> MetricError {
        MetricError {
            doc_id: "s1".into(),
            category: cat,
            locator: Locator::Span(doc.span(start, end).unwrap()),
            expected_value: None,
        }
    }

    fn report(errors: Vec<MetricError>) -> MetricReport {
        MetricReport {
            metric_name: "ie-metric".into(),
            errors,
            coverage: BTreeMap::new(),
        }
    }

    #[test]
    fn recall_one_third_precision_one_half() {
        let d = doc();
        // tokens: 3 = "30", 7 = "6", 13 = "102-91"
        let gold = GoldStandard {
            doc_id: "s1".into(),
            errors: vec![
                gold_error(&d, 3, 4, ErrorCategory::Number),
                gold_error(&d, 7, 8, ErrorCategory::Number),
                gold_error(&d, 13, 14, ErrorCategory::Number),
            ],
            rule_log: vec![],
        };
        let r = report(vec![
            span_claim(&d, 7, 8, ErrorCategory::Number),
            span_claim(&d, 11, 12, ErrorCategory::Number),
        ]);
        let result = align_metric_errors(&r, &[gold], &[d], &AlignConfig::default()).unwrap();
        let number = result.score(ErrorCategory::Number);
        assert_eq!(number.recall, Some(1.0 / 3.0));
        assert_eq!(number.precision, Some(0.5));
        assert_eq!(result.spurious, vec![1]);
        assert!(!result.score(ErrorCategory::Name).applicable);
    }

    #[test]
    fn number_tuples_about_wrong_name_match_once() {
        let d = doc();
        let gold = GoldStandard {
            doc_id: "s1".into(),
            errors: vec![gold_error(&d, 0, 2, ErrorCategory::Name)],
            rule_log: vec![],
        };
        let r = report(vec![
            tuple("Lou Williams", "PTS", "30"),
            tuple("Lou Williams", "REB", "6"),
        ]);
        let result = align_metric_errors(&r, &[gold], &[d], &AlignConfig::default()).unwrap();
        assert_eq!(result.matches.len(), 1);
        assert_eq!(result.matches[0].kind, MatchKind::Equivalence);
        assert_eq!(result.matches[0].metric, vec![0, 1]);
        assert_eq!(result.score(ErrorCategory::Name).recall, Some(1.0));
        assert_eq!(result.score(ErrorCategory::Number).precision, Some(1.0));
        assert!(result.log.iter().any(|n| n.kind == NoteKind::Equivalence));
    }

    #[test]
    fn single_number_tuple_is_not_an_equivalence() {
        let d = doc();
        let gold = GoldStandard {
            doc_id: "s1".into(),
            errors: vec![gold_error(&d, 0, 2, ErrorCategory::Name)],
            rule_log: vec![],
        };
        let r = report(vec![tuple("Lou Williams", "PTS", "30")]);
        let result = align_metric_errors(&r, &[gold], &[d], &AlignConfig::default()).unwrap();
        assert!(result.matches.is_empty());
        assert_eq!(result.score(ErrorCategory::Name).recall, Some(0.0));
        assert!(result.log.iter().any(|n| n.kind == NoteKind::CategoryMismatch));
    }

    #[test]
    fn tuple_window_and_value_preference() {
        let d = doc();
        let gold = GoldStandard {
            doc_id: "s1".into(),
            errors: vec![gold_error(&d, 3, 4, ErrorCategory::Number), gold_error(&d, 7, 8, ErrorCategory::Number)],
            rule_log: vec![],
        };
        let r = report(vec![tuple("Lou Williams", "REB", "6"), tuple("Lou Williams", "PTS", "30")]);
        let result = align_metric_errors(&r, &[gold.clone()], &[d.clone()], &AlignConfig::default()).unwrap();
        assert_eq!(result.matches[0].metric, vec![1]);
        assert_eq!(result.matches[1].metric, vec![0]);

        let narrow = AlignConfig {
            window: 2,
            ..Default::default()
        };
        let result = align_metric_errors(&r, &[gold], &[d], &narrow).unwrap();
        // "6" is 5 tokens after the entity, "30" only 1
        assert_eq!(result.matches.len(), 1);
    }

    #[test]
    fn malformed_records_are_rejected_individually() {
        let d = doc();
        let json = r#"{
            "metric_name": "ie-metric",
            "errors": [
                {"doc_id": "s1", "category": "NUMBER", "locator": {"tuple": {"entity": "Lou Williams", "attribute": "PTS", "claimed_value": "30"}}},
                {"doc_id": "s1", "category": "NUMBER", "locator": {}},
                {"doc_id": "s1", "category": "NUMBER", "locator": {"span": {"doc_id": "s1", "start": 3, "end": 4, "surface": "31"}}}
            ]
        }"#;
        let (r, rejected) = MetricReport::parse_lenient(json).unwrap();
        assert_eq!(r.errors.len(), 2);
        assert_eq!(rejected[0].index, 1);
        let gold = GoldStandard::empty("s1");
        let result = align_metric_errors(&r, &[gold], &[d], &AlignConfig::default()).unwrap();
        assert_eq!(result.rejections.len(), 1);
        assert_eq!(result.score(ErrorCategory::Number).metric_total, 1);
    }

    #[test]
    fn unknown_document_is_an_error() {
        let d = doc();
        let mut e = tuple("Lou Williams", "PTS", "30");
        e.doc_id = "nope".into();
        let err = align_metric_errors(&report(vec![e]), &[GoldStandard::empty("s1")], &[d], &AlignConfig::default());
        assert!(matches!(err, Err(Error::MissingDocument(_))));
    }

    #[test]
    fn rendering_marks_inapplicable_cells() {
        let d = doc();
        let gold = GoldStandard {
            doc_id: "s1".into(),
            errors: vec![gold_error(&d, 3, 4, ErrorCategory::Number), gold_error(&d, 0, 2, ErrorCategory::Name)],
            rule_log: vec![],
        };
        let empty = align_metric_errors(&report(vec![]), &[gold.clone()], &[d.clone()], &AlignConfig::default()).unwrap();
        assert_eq!(empty.score(ErrorCategory::Number).recall, Some(0.0));
        let text = summarize_validation(&empty, ReportFormat::Text);
        assert!(!text.contains("0.000"));
        assert_eq!(text.matches("---").count(), 12);

        let numbers = align_metric_errors(
            &report(vec![span_claim(&d, 3, 4, ErrorCategory::Number)]),
            &[gold.clone()],
            &[d.clone()],
            &AlignConfig::default(),
        )
        .unwrap();
        let csv = summarize_validation(&numbers, ReportFormat::Csv);
        let recall_row = csv.lines().nth(1).unwrap();
        assert_eq!(recall_row, "Recall,1.000,---,---,---,---,---");

        let both = align_metric_errors(
            &report(vec![
                span_claim(&d, 3, 4, ErrorCategory::Number),
                span_claim(&d, 0, 2, ErrorCategory::Name),
            ]),
            &[gold],
            &[d],
            &AlignConfig::default(),
        )
        .unwrap();
        let csv = summarize_validation(&both, ReportFormat::Csv);
        assert_eq!(csv.lines().nth(2).unwrap(), "Precision,1.000,1.000,---,---,---,---");
        let json = summarize_validation(&both, ReportFormat::Json);
        let back: ValidationResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, both);
    }
}
