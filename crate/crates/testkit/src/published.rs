//! Published corpus-level figures and corpora rebuilt from them.
//!
//! The released annotations are not available offline, so two consistent
//! stand-ins are built here:
//!
//! * a 21-story, 3-annotator corpus whose every gold cluster has exactly the
//!   label multiset implied by the published confusion table, and
//! * per-system gold standards whose counts are recovered from the
//!   published per-story means by exhaustive search.

use annogold::adjudication::{Agreement, GoldCategory, GoldError, GoldStandard};
use annogold::stats::Outcome;
use annogold::text_model::{AnnotationSet, Document, ErrorAnnotation, ErrorCategory};

use ErrorCategory::*;

pub const STORIES: usize = 21;
pub const ANNOTATORS: [&str; 3] = ["t1", "t2", "t3"];
pub const PUBLISHED_KAPPA: f64 = 0.79;

/// Gold error totals: all, then number, name, word, context,
/// not checkable, other, no majority.
pub const PUBLISHED_BREAKDOWN: [usize; 8] = [418, 184, 105, 80, 19, 6, 3, 21];

/// (row, total, all agree, minority columns in
/// number, name, word, context, not checkable, other, no type, no error order).
pub const PUBLISHED_CONFUSION: [(Outcome, u64, u64, [u64; 8]); 9] = [
    (Outcome::Category(Number), 184, 124, [0, 0, 12, 1, 5, 0, 0, 42]),
    (Outcome::Category(Name), 105, 75, [0, 0, 4, 2, 0, 0, 3, 21]),
    (Outcome::Category(Word), 80, 29, [14, 3, 0, 3, 1, 0, 3, 27]),
    (Outcome::Category(Context), 19, 7, [0, 2, 1, 0, 0, 0, 0, 9]),
    (Outcome::Category(NotCheckable), 6, 1, [3, 0, 0, 0, 0, 0, 0, 2]),
    (Outcome::Category(Other), 3, 1, [0, 0, 0, 0, 0, 0, 0, 2]),
    (Outcome::Split, 21, 0, [12, 5, 16, 9, 4, 3, 0, 14]),
    (Outcome::NoLabel, 0, 0, [0; 8]),
    (Outcome::NoError, 0, 0, [0; 8]),
];

/// Per-system mean errors per story: total, number, name, word, context,
/// not checkable, other.
pub const PUBLISHED_PROFILES: [(&str, [f64; 7]); 3] = [
    ("system-1", [20.3, 9.3, 5.1, 5.0, 0.4, 0.3, 0.1]),
    ("system-2", [20.9, 10.9, 5.3, 4.0, 0.7, 0.0, 0.0]),
    ("system-3", [15.0, 6.0, 4.0, 2.6, 1.6, 0.6, 0.3]),
];
pub const STORIES_PER_SYSTEM: usize = 7;

const COLUMNS: [Option<ErrorCategory>; 6] = [Some(Number), Some(Name), Some(Word), Some(Context), Some(NotCheckable), Some(Other)];

/// What each annotator did on one cluster: a label, or nothing.
type Votes = [Option<Option<ErrorCategory>>; 3];

fn column_label(col: usize) -> Option<Option<ErrorCategory>> {
    match col {
        0..=5 => Some(COLUMNS[col]),
        6 => Some(None),
        _ => None,
    }
}

/// Label multisets of every gold cluster, derived from the confusion table.
///
/// Non-unanimous rows have exactly one deviating annotator per cluster (the
/// minority columns sum to total minus all-agree). Split clusters take their
/// labels in grouped order, dealt round-robin over 21 slots, which gives 7
/// three-label clusters and 14 two-label clusters with a miss, all distinct.
pub fn confusion_clusters() -> Vec<Votes> {
    let mut out = Vec::new();
    for (outcome, total, all_agree, minority) in PUBLISHED_CONFUSION {
        let label = match outcome {
            Outcome::Category(c) => Some(c),
            Outcome::Split => {
                let labels: Vec<ErrorCategory> = minority[..6]
                    .iter()
                    .enumerate()
                    .flat_map(|(col, &n)| std::iter::repeat_n(COLUMNS[col].unwrap(), n as usize))
                    .collect();
                let slots = total as usize;
                let mut clusters: Vec<Vec<ErrorCategory>> = vec![Vec::new(); slots];
                for (k, l) in labels.into_iter().enumerate() {
                    clusters[k % slots].push(l);
                }
                for (i, labels) in clusters.into_iter().enumerate() {
                    let mut votes: Votes = [None, None, None];
                    // rotate who misses so no annotator is singled out
                    for (j, l) in labels.into_iter().enumerate() {
                        votes[(i + j) % 3] = Some(Some(l));
                    }
                    out.push(votes);
                }
                continue;
            }
            Outcome::NoLabel | Outcome::NoError => {
                assert_eq!(total, 0, "no published clusters in this row");
                continue;
            }
        };
        for _ in 0..all_agree {
            out.push([Some(label); 3]);
        }
        let deviations = minority
            .iter()
            .enumerate()
            .flat_map(|(col, &n)| std::iter::repeat_n(col, n as usize));
        for (i, col) in deviations.enumerate() {
            let mut votes: Votes = [Some(label); 3];
            votes[i % 3] = column_label(col);
            out.push(votes);
        }
    }
    out
}

/// The 21-story corpus behind [`confusion_clusters`]: every cluster is one
/// distinct token, clusters dealt round-robin over the stories, plus a few
/// single-annotator marks that must stay out of the gold standard.
pub fn confusion_corpus() -> (Vec<Document>, Vec<AnnotationSet>) {
    let clusters = confusion_clusters();
    let mut per_story: Vec<Vec<Votes>> = vec![Vec::new(); STORIES];
    for (i, c) in clusters.into_iter().enumerate() {
        per_story[i % STORIES].push(c);
    }
    let mut docs = Vec::new();
    let mut sets = Vec::new();
    for (s, story) in per_story.into_iter().enumerate() {
        // one extra token per story for a minority-only mark
        let words: Vec<String> = (0..=story.len())
            .map(|i| format!("claim{i}{}", if i % 5 == 4 { "." } else { "" }))
            .collect();
        let doc = Document::new(format!("story{s:02}"), format!("system-{}", s % 3 + 1), words.join(" ")).unwrap();
        let token_of = |i: usize| doc.tokens.iter().position(|t| t.surface == format!("claim{i}")).unwrap();
        let mut story_sets: Vec<AnnotationSet> = ANNOTATORS.iter().map(|a| AnnotationSet::new(doc.doc_id.clone(), *a)).collect();
        for (i, votes) in story.iter().enumerate() {
            let t = token_of(i);
            for (a, vote) in votes.iter().enumerate() {
                if let Some(label) = vote {
                    let mut ann = ErrorAnnotation::new(ANNOTATORS[a], doc.span(t, t + 1).unwrap(), *label);
                    ann.correction = Some("corrected".into());
                    story_sets[a].annotations.push(ann);
                }
            }
        }
        let t = token_of(story.len());
        let mut stray = ErrorAnnotation::new(ANNOTATORS[s % 3], doc.span(t, t + 1).unwrap(), Some(Word));
        stray.correction = Some("corrected".into());
        story_sets[s % 3].annotations.push(stray);
        docs.push(doc);
        sets.extend(story_sets);
    }
    (docs, sets)
}

fn round_trip_ok(count: usize, stories: usize, cell: f64) -> bool {
    (count as f64 / stories as f64 - cell).abs() <= 0.05
}

/// Every assignment of integer counts (number, name, word, context,
/// not checkable, other) over `stories` stories that reproduces all seven
/// cells of a profile row within 0.05.
pub fn invert_profile(cells: [f64; 7], stories: usize) -> Vec<[usize; 6]> {
    let candidates: Vec<Vec<usize>> = cells[1..]
        .iter()
        .map(|&cell| (0..=stories * 30).filter(|&k| round_trip_ok(k, stories, cell)).collect())
        .collect();
    let mut out = Vec::new();
    let mut pick = [0usize; 6];
    fn walk(depth: usize, candidates: &[Vec<usize>], pick: &mut [usize; 6], total: f64, stories: usize, out: &mut Vec<[usize; 6]>) {
        if depth == 6 {
            if round_trip_ok(pick.iter().sum(), stories, total) {
                out.push(*pick);
            }
            return;
        }
        for &k in &candidates[depth] {
            pick[depth] = k;
            walk(depth + 1, candidates, pick, total, stories, out);
        }
    }
    walk(0, &candidates, &mut pick, cells[0], stories, &mut out);
    out
}

/// Gold standards for one system with the given category counts spread
/// over `stories` stories.
pub fn gold_for_counts(system: &str, counts: [usize; 6], stories: usize) -> (Vec<Document>, Vec<GoldStandard>) {
    let mut labels: Vec<ErrorCategory> = Vec::new();
    for (col, &n) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(COLUMNS[col].unwrap(), n));
    }
    let mut per_story: Vec<Vec<ErrorCategory>> = vec![Vec::new(); stories];
    for (i, l) in labels.into_iter().enumerate() {
        per_story[i % stories].push(l);
    }
    let mut docs = Vec::new();
    let mut gold = Vec::new();
    for (s, labels) in per_story.into_iter().enumerate() {
        let words: Vec<String> = (0..labels.len().max(1)).map(|i| format!("w{i}")).collect();
        let doc = Document::new(format!("{system}-{s}"), system, words.join(" ")).unwrap();
        let errors = labels
            .into_iter()
            .enumerate()
            .map(|(i, c)| GoldError {
                cluster_id: format!("{}#{i}", doc.doc_id),
                canonical_span: doc.span(i, i + 1).unwrap(),
                part: None,
                category: GoldCategory::Category(c),
                agreement: Agreement::AllAgree,
                corrections: Vec::new(),
                miss_count: 0,
                provenance: Vec::new(),
            })
            .collect();
        gold.push(GoldStandard {
            doc_id: doc.doc_id.clone(),
            errors,
            rule_log: Vec::new(),
        });
        docs.push(doc);
    }
    (docs, gold)
}
