//! Seeded generators for small annotated corpora and metric reports.

use annogold::adjudication::GoldStandard;
use annogold::metric_validation::{Locator, MetricError, MetricReport, TupleLocator};
use annogold::text_model::{AnnotationSet, Document, ErrorAnnotation, ErrorCategory, ScorePart};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONTENT: &[&str] = &[
    "Grizzlies", "Suns", "Celtics", "Raptors", "Lou", "Williams", "Marc", "Gasol", "scored", "points", "rebounds",
    "assists", "led", "Phoenix", "Boston", "won", "lost", "defeated", "first", "half", "quarter", "game", "season",
    "strong", "road", "18", "30", "6", "12", "15", "102-91", "59-42", "30-20", "Monday", "Friday", "Tuesday",
];
const FUNCTION: &[&str] = &["the", "a", "on", "at", "in", "against", "The"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn category(rng: &mut ChaCha8Rng) -> ErrorCategory {
    // weighted roughly like real annotations: mostly NUMBER, NAME, WORD
    let weights = [(ErrorCategory::Number, 5), (ErrorCategory::Name, 3), (ErrorCategory::Word, 3), (ErrorCategory::Context, 1), (ErrorCategory::NotCheckable, 1), (ErrorCategory::Other, 1)];
    let total: u32 = weights.iter().map(|w| w.1).sum();
    let mut pick = rng.random_range(0..total);
    for (c, w) in weights {
        if pick < w {
            return c;
        }
        pick -= w;
    }
    unreachable!()
}

pub fn random_text(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut out = String::new();
    for i in 0..words {
        if i > 0 {
            out.push(' ');
        }
        if rng.random_bool(0.04) {
            out.push('(');
        }
        let pool = if rng.random_bool(0.25) { FUNCTION } else { CONTENT };
        out.push_str(pool.choose(rng).unwrap());
        if rng.random_bool(0.12) {
            out.push_str([".", ",", ")"].choose(rng).unwrap());
        }
    }
    out.push('.');
    out
}

#[derive(Debug, Clone)]
pub struct CorpusShape {
    pub docs: usize,
    pub annotators: usize,
    pub words: (usize, usize),
    pub sites: (usize, usize),
    /// Chance an annotator marks a given error site.
    pub recall: f64,
    /// Chance an annotator agrees with the site's category.
    pub agreement: f64,
    /// Extra marks per annotator that match no site.
    pub noise: (usize, usize),
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            docs: 1,
            annotators: 3,
            words: (8, 24),
            sites: (1, 3),
            recall: 0.7,
            agreement: 0.7,
            noise: (0, 1),
        }
    }
}

fn correction(rng: &mut ChaCha8Rng, doc: &Document, start: usize, end: usize) -> Option<String> {
    if end == start + 1 {
        if let Some((l, r)) = annogold::text_model::score_pair(doc.token(start)) {
            let l: u32 = l.parse().unwrap_or(0);
            let r: u32 = r.parse().unwrap_or(0);
            return match rng.random_range(0..4) {
                0 => Some(format!("{}-{}", l + 3, r + 1)),
                1 => Some(format!("{}-{}", l, r + 2)),
                2 => Some("they lost".to_string()),
                _ => None,
            };
        }
    }
    rng.random_bool(0.8).then(|| CONTENT.choose(rng).unwrap().to_string())
}

fn push_mark(set: &mut AnnotationSet, rng: &mut ChaCha8Rng, doc: &Document, start: usize, end: usize, cat: Option<ErrorCategory>) {
    let span = doc.span(start, end).expect("generated span in bounds");
    let mut ann = ErrorAnnotation::new(set.annotator_id.clone(), span, cat);
    ann.correction = correction(rng, doc, start, end);
    if cat == Some(ErrorCategory::Other) && rng.random_bool(0.7) {
        ann.explanation = Some("unclear claim".into());
    }
    if end == start + 1 && annogold::text_model::score_pair(doc.token(start)).is_some() && rng.random_bool(0.2) {
        ann.part = Some(if rng.random_bool(0.5) { ScorePart::Left } else { ScorePart::Right });
    }
    let key = |a: &ErrorAnnotation| (a.span.start, a.span.end, a.part, a.category);
    if set.annotations.iter().all(|a| key(a) != key(&ann)) {
        set.annotations.push(ann);
    }
}

/// Documents and one annotation set per (document, annotator).
///
/// Annotators mark shared error sites with jittered boundaries and
/// occasional category disagreement, plus a little independent noise.
pub fn random_corpus(seed: u64, shape: &CorpusShape) -> (Vec<Document>, Vec<AnnotationSet>) {
    let mut rng = rng(seed);
    let mut docs = Vec::new();
    let mut sets = Vec::new();
    for d in 0..shape.docs {
        let words = rng.random_range(shape.words.0..=shape.words.1);
        let text = random_text(&mut rng, words);
        let doc = Document::new(format!("doc{d:02}"), format!("sys{}", d % 3), text).expect("generated text tokenizes");
        let n = doc.len();
        let sites: Vec<(usize, usize, Option<ErrorCategory>)> = (0..rng.random_range(shape.sites.0..=shape.sites.1))
            .map(|_| {
                let start = rng.random_range(0..n);
                let end = (start + rng.random_range(1..=3)).min(n);
                let cat = if rng.random_bool(0.05) { None } else { Some(category(&mut rng)) };
                (start, end, cat)
            })
            .collect();
        for a in 0..shape.annotators {
            let mut set = AnnotationSet::new(doc.doc_id.clone(), format!("a{}", a + 1));
            for &(s, e, cat) in &sites {
                if !rng.random_bool(shape.recall) {
                    continue;
                }
                let s2 = s.saturating_sub(rng.random_range(0..=1));
                let e2 = (e + rng.random_range(0..=1)).min(n);
                let (s2, e2) = if rng.random_bool(0.2) && e - s > 1 { (s + 1, e) } else { (s2, e2) };
                let cat = if rng.random_bool(shape.agreement) {
                    cat
                } else if rng.random_bool(0.1) {
                    None
                } else {
                    Some(category(&mut rng))
                };
                push_mark(&mut set, &mut rng, &doc, s2, e2, cat);
            }
            for _ in 0..rng.random_range(shape.noise.0..=shape.noise.1) {
                let s = rng.random_range(0..n);
                let e = (s + rng.random_range(1..=2)).min(n);
                let cat = Some(category(&mut rng));
                push_mark(&mut set, &mut rng, &doc, s, e, cat);
            }
            sets.push(set);
        }
        docs.push(doc);
    }
    (docs, sets)
}

/// A metric report that finds some gold errors, misplaces or miscategorizes
/// others, adds spurious claims and sometimes names an entity instead of a
/// number. At most `max_per_doc` claims per document.
pub fn random_metric_report(seed: u64, gold: &[GoldStandard], docs: &[Document], max_per_doc: usize) -> MetricReport {
    let mut rng = rng(seed);
    let mut errors = Vec::new();
    for g in gold {
        let doc = docs.iter().find(|d| d.doc_id == g.doc_id).expect("gold has a document");
        let mut claims = Vec::new();
        for e in &g.errors {
            let cat = match e.category.category() {
                Some(c) if rng.random_bool(0.8) => c,
                _ => category(&mut rng),
            };
            match rng.random_range(0..5) {
                0 | 1 => {
                    let s = e.canonical_span.start.saturating_sub(rng.random_range(0..=1));
                    let span = doc.span(s, e.canonical_span.end).unwrap();
                    claims.push((cat, Locator::Span(span)));
                }
                2 => {
                    let near = (e.canonical_span.start + rng.random_range(0..3)).min(doc.len() - 1);
                    claims.push((
                        cat,
                        Locator::Tuple(TupleLocator {
                            entity: doc.token(near).to_string(),
                            attribute: "PTS".into(),
                            claimed_value: e.canonical_span.surface.clone(),
                        }),
                    ));
                }
                3 if e.category.category() == Some(ErrorCategory::Name) => {
                    for attr in ["PTS", "REB", "AST"].iter().take(rng.random_range(1..=3)) {
                        claims.push((
                            ErrorCategory::Number,
                            Locator::Tuple(TupleLocator {
                                entity: e.canonical_span.surface.clone(),
                                attribute: attr.to_string(),
                                claimed_value: "0".into(),
                            }),
                        ));
                    }
                }
                _ => {}
            }
        }
        for _ in 0..rng.random_range(0..=2) {
            let s = rng.random_range(0..doc.len());
            claims.push((category(&mut rng), Locator::Span(doc.span(s, s + 1).unwrap())));
        }
        claims.truncate(max_per_doc);
        errors.extend(claims.into_iter().map(|(category, locator)| MetricError {
            doc_id: g.doc_id.clone(),
            category,
            locator,
            expected_value: None,
        }));
    }
    MetricReport {
        metric_name: format!("random-{seed}"),
        errors,
        coverage: Default::default(),
    }
}
