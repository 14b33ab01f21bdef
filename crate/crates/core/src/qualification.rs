//! Screening candidate annotators against an already-adjudicated text.

use serde::{Deserialize, Serialize};

use crate::adjudication::{apply_guideline_rules, GoldCategory, GoldStandard};
use crate::error::{Error, Result};
use crate::text_model::{normalize_range, parts_compatible, AnnotationSet, Document, Lexicon};

pub const DEFAULT_THRESHOLD: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualificationConfig {
    pub threshold: f64,
    /// Credit a found span even when the category is wrong.
    pub span_only: bool,
    pub lexicon: Lexicon,
}

impl Default for QualificationConfig {
    fn default() -> Self {
        QualificationConfig {
            threshold: DEFAULT_THRESHOLD,
            span_only: false,
            lexicon: Lexicon::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceMatch {
    pub cluster_id: String,
    pub surface: String,
    /// Id of the candidate annotation credited for this error, if any.
    pub matched_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationResult {
    pub candidate_id: String,
    pub found: usize,
    pub reference_total: usize,
    pub fraction: f64,
    pub passed: bool,
    pub threshold: f64,
    pub details: Vec<ReferenceMatch>,
}

// Kuhn's augmenting-path bipartite matching.
fn try_assign(r: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &c in &adj[r] {
        if seen[c] {
            continue;
        }
        seen[c] = true;
        if owner[c].is_none_or(|other| try_assign(other, adj, seen, owner)) {
            owner[c] = Some(r);
            return true;
        }
    }
    false
}

/// Fraction of reference errors the candidate found, with one candidate
/// annotation credited to at most one reference error.
pub fn score_qualification(
    candidate: &AnnotationSet,
    reference: &GoldStandard,
    doc: &Document,
    config: &QualificationConfig,
) -> Result<QualificationResult> {
    for id in [&candidate.doc_id, &reference.doc_id] {
        if *id != doc.doc_id {
            return Err(Error::DocumentMismatch {
                expected: doc.doc_id.clone(),
                found: id.clone(),
            });
        }
    }
    if reference.errors.is_empty() {
        return Err(Error::EmptyReference(doc.doc_id.clone()));
    }
    let corrected = apply_guideline_rules(candidate, doc, &config.lexicon)?.set;

    let cand_norm: Vec<(usize, usize)> = corrected
        .annotations
        .iter()
        .map(|a| normalize_range(a.span.start, a.span.end, doc, &config.lexicon))
        .collect();
    let adj: Vec<Vec<usize>> = reference
        .errors
        .iter()
        .map(|r| {
            let rn = normalize_range(r.canonical_span.start, r.canonical_span.end, doc, &config.lexicon);
            corrected
                .annotations
                .iter()
                .enumerate()
                .filter(|(ci, a)| {
                    let (s, e) = cand_norm[*ci];
                    let overlaps = s.max(rn.0) < e.min(rn.1) && parts_compatible(a.part, r.part);
                    let category_ok = config.span_only
                        || match r.category {
                            GoldCategory::Category(c) => a.category == Some(c),
                            GoldCategory::NoLabel | GoldCategory::NoMajority => true,
                        };
                    overlaps && category_ok
                })
                .map(|(ci, _)| ci)
                .collect()
        })
        .collect();

    let mut owner: Vec<Option<usize>> = vec![None; corrected.annotations.len()];
    for r in 0..adj.len() {
        let mut seen = vec![false; corrected.annotations.len()];
        try_assign(r, &adj, &mut seen, &mut owner);
    }
    let mut matched_by: Vec<Option<String>> = vec![None; reference.errors.len()];
    for (ci, r) in owner.iter().enumerate() {
        if let Some(r) = r {
            matched_by[*r] = Some(corrected.annotations[ci].id());
        }
    }

    let found = matched_by.iter().filter(|m| m.is_some()).count();
    let reference_total = reference.errors.len();
    let fraction = found as f64 / reference_total as f64;
    Ok(QualificationResult {
        candidate_id: candidate.annotator_id.clone(),
        found,
        reference_total,
        fraction,
        passed: fraction >= config.threshold,
        threshold: config.threshold,
        details: reference
            .errors
            .iter()
            .zip(matched_by)
            .map(|(r, matched_by)| ReferenceMatch {
                cluster_id: r.cluster_id.clone(),
                surface: r.canonical_span.surface.clone(),
                matched_by,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjudication::{Agreement, GoldError};
    use crate::text_model::ErrorCategory;

    fn setup(n: usize) -> (Document, GoldStandard) {
        let text: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let doc = Document::new("q", "s", text.join(" ")).unwrap();
        let errors = (0..n)
            .map(|i| GoldError {
                cluster_id: format!("q#{i}"),
                canonical_span: doc.span(i, i + 1).unwrap(),
                part: None,
                category: GoldCategory::Category(ErrorCategory::Word),
                agreement: Agreement::AllAgree,
                corrections: vec![],
                miss_count: 0,
                provenance: vec![],
            })
            .collect();
        (
            doc,
            GoldStandard {
                doc_id: "q".into(),
                errors,
                rule_log: vec![],
            },
        )
    }

    fn candidate(doc: &Document, hits: usize, cat: ErrorCategory) -> AnnotationSet {
        let mut set = AnnotationSet::new("q", "cand");
        for i in 0..hits {
            set.mark(doc, i, i + 1, Some(cat)).unwrap();
        }
        set
    }

    #[test]
    fn seven_of_ten_passes() {
        let (doc, gold) = setup(10);
        let r = score_qualification(&candidate(&doc, 7, ErrorCategory::Word), &gold, &doc, &QualificationConfig::default()).unwrap();
        assert_eq!((r.found, r.reference_total), (7, 10));
        assert_eq!(r.fraction, 0.70);
        assert!(r.passed);
    }

    #[test]
    fn empty_and_identical_candidates() {
        let (doc, gold) = setup(10);
        let cfg = QualificationConfig::default();
        let none = score_qualification(&candidate(&doc, 0, ErrorCategory::Word), &gold, &doc, &cfg).unwrap();
        assert_eq!(none.fraction, 0.0);
        assert!(!none.passed);
        let all = score_qualification(&candidate(&doc, 10, ErrorCategory::Word), &gold, &doc, &cfg).unwrap();
        assert_eq!(all.fraction, 1.0);
        assert!(all.passed);
    }

    #[test]
    fn category_must_match_unless_span_only() {
        let (doc, gold) = setup(4);
        let cand = candidate(&doc, 4, ErrorCategory::Name);
        let strict = score_qualification(&cand, &gold, &doc, &QualificationConfig::default()).unwrap();
        assert_eq!(strict.found, 0);
        let relaxed = QualificationConfig {
            span_only: true,
            ..Default::default()
        };
        assert_eq!(score_qualification(&cand, &gold, &doc, &relaxed).unwrap().found, 4);
    }

    #[test]
    fn one_annotation_cannot_find_two_errors() {
        let (doc, gold) = setup(3);
        let mut set = AnnotationSet::new("q", "cand");
        set.mark(&doc, 0, 3, Some(ErrorCategory::Word)).unwrap();
        let r = score_qualification(&set, &gold, &doc, &QualificationConfig::default()).unwrap();
        assert_eq!(r.found, 1);
    }

    #[test]
    fn errors() {
        let (doc, gold) = setup(3);
        let cfg = QualificationConfig::default();
        let empty = GoldStandard::empty("q");
        assert!(matches!(
            score_qualification(&candidate(&doc, 1, ErrorCategory::Word), &empty, &doc, &cfg),
            Err(Error::EmptyReference(_))
        ));
        let other = AnnotationSet::new("elsewhere", "cand");
        assert!(matches!(
            score_qualification(&other, &gold, &doc, &cfg),
            Err(Error::DocumentMismatch { .. })
        ));
    }
}
