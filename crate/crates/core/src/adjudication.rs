//! Guideline enforcement, cross-annotator clustering and majority vote.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text_model::{
    normalize_range, parts_compatible, score_pair, AnnotationSet, Document, ErrorAnnotation,
    ErrorCategory, Lexicon, ScorePart, Span,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// A weekday marked as anything but NAME was recategorized.
    WeekdayAsName,
    /// Recategorizing a weekday produced an annotation the annotator already had.
    WeekdayDuplicate,
    /// A score pair with both numbers wrong became two NUMBER errors.
    ScorePairSplit,
    /// The score-pair rule could not tell whether both numbers were wrong.
    ScorePairSkipped,
    /// A split produced a half the annotator had already marked.
    ScorePairDuplicate,
    /// Marked by too few annotators to enter the gold standard.
    MinorityOnly,
    /// Many gold errors packed into one sentence; likely a nonsense sentence.
    CoLocatedReview,
    /// One sentence marked in different places by different annotators.
    AlternativeMarkups,
}

/// One automatic rewrite or review note, with enough detail to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub rule: RuleKind,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    pub before: Vec<ErrorAnnotation>,
    pub after: Vec<ErrorAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RuleRecord {
    fn note(rule: RuleKind, doc_id: &str, note: String) -> Self {
        RuleRecord {
            rule,
            doc_id: doc_id.to_string(),
            annotator_id: None,
            before: Vec::new(),
            after: Vec::new(),
            note: Some(note),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleOutcome {
    pub set: AnnotationSet,
    pub log: Vec<RuleRecord>,
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+").unwrap())
}

/// Applies the two mechanical guideline rules: weekdays are NAME errors,
/// and a score pair with both numbers wrong counts as two errors.
pub fn apply_guideline_rules(set: &AnnotationSet, doc: &Document, lexicon: &Lexicon) -> Result<RuleOutcome> {
    set.validate(doc)?;
    let mut log = Vec::new();
    let mut out: Vec<ErrorAnnotation> = Vec::with_capacity(set.annotations.len());
    let existing: BTreeSet<(usize, usize, Option<ScorePart>, Option<ErrorCategory>)> = set
        .annotations
        .iter()
        .map(|a| (a.span.start, a.span.end, a.part, a.category))
        .collect();
    let mut renamed = BTreeSet::new();

    for ann in &set.annotations {
        let record = |rule, before: &ErrorAnnotation, after: Vec<ErrorAnnotation>, note: Option<String>| RuleRecord {
            rule,
            doc_id: doc.doc_id.clone(),
            annotator_id: Some(set.annotator_id.clone()),
            before: vec![before.clone()],
            after,
            note,
        };

        let mut ann = ann.clone();
        if ann.span.len() == 1
            && lexicon.is_weekday(doc.token(ann.span.start))
            && ann.category != Some(ErrorCategory::Name)
        {
            let before = ann.clone();
            ann.category = Some(ErrorCategory::Name);
            let key = (ann.span.start, ann.span.end, ann.part, ann.category);
            if existing.contains(&key) || !renamed.insert(key) {
                log.push(record(RuleKind::WeekdayDuplicate, &before, Vec::new(), None));
                continue;
            }
            log.push(record(RuleKind::WeekdayAsName, &before, vec![ann.clone()], None));
        }

        let pair = (ann.span.len() == 1)
            .then(|| score_pair(doc.token(ann.span.start)))
            .flatten();
        if let (Some((left, right)), Some(ErrorCategory::Number), None) = (pair, ann.category, ann.part) {
            let numbers: Vec<&str> = ann
                .correction
                .as_deref()
                .map(|c| number_regex().find_iter(c).map(|m| m.as_str()).collect())
                .unwrap_or_default();
            if numbers.len() != 2 {
                let why = match &ann.correction {
                    None => "no correction text".to_string(),
                    Some(c) => format!("correction {c:?} does not give a score pair"),
                };
                log.push(record(RuleKind::ScorePairSkipped, &ann, Vec::new(), Some(why)));
            } else if numbers[0] != left && numbers[1] != right {
                let mut halves = Vec::new();
                for (part, fix) in [(ScorePart::Left, numbers[0]), (ScorePart::Right, numbers[1])] {
                    let mut half = ann.clone();
                    half.part = Some(part);
                    half.correction = Some(fix.to_string());
                    if existing.contains(&(half.span.start, half.span.end, half.part, half.category)) {
                        log.push(record(RuleKind::ScorePairDuplicate, &ann, vec![half], None));
                    } else {
                        halves.push(half);
                    }
                }
                log.push(record(RuleKind::ScorePairSplit, &ann, halves.clone(), None));
                out.extend(halves);
                continue;
            }
        }
        out.push(ann);
    }

    Ok(RuleOutcome {
        set: AnnotationSet {
            annotations: out,
            ..set.clone()
        },
        log,
    })
}

/// Annotations from different annotators judged to describe one error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCluster {
    pub cluster_id: String,
    pub doc_id: String,
    pub members: Vec<ErrorAnnotation>,
    pub canonical_span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<ScorePart>,
    pub n_annotators: usize,
    /// Split off a component because its annotator already had a better-placed member there.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub spilled: bool,
}

impl ErrorCluster {
    /// Label chosen by `annotator`, `None` if they did not mark this cluster.
    pub fn label_of(&self, annotator: &str) -> Option<Option<ErrorCategory>> {
        self.members
            .iter()
            .find(|m| m.annotator_id == annotator)
            .map(|m| m.category)
    }
}

struct Item {
    ann: ErrorAnnotation,
    norm: (usize, usize),
}

fn items_corefer(a: &Item, b: &Item) -> bool {
    a.norm.0.max(b.norm.0) < a.norm.1.min(b.norm.1) && parts_compatible(a.ann.part, b.ann.part)
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

fn components(items: &[Item], subset: &[usize]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..subset.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for i in 0..subset.len() {
        for j in i + 1..subset.len() {
            if items_corefer(&items[subset[i]], &items[subset[j]]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &item) in subset.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(item);
    }
    groups.into_values().collect()
}

/// Keeps at most one member per annotator; returns (clusters, spilled singletons).
fn resolve_component(items: &[Item], component: Vec<usize>, out: &mut Vec<(Vec<usize>, bool)>) {
    let mut by_annotator: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in &component {
        by_annotator.entry(items[i].ann.annotator_id.as_str()).or_default().push(i);
    }
    let Some((annotator, own)) = by_annotator.iter().find(|(_, v)| v.len() > 1) else {
        out.push((component, false));
        return;
    };
    let score = |i: usize| -> usize {
        component
            .iter()
            .filter(|&&j| items[j].ann.annotator_id != *annotator)
            .map(|&j| overlap(items[i].norm, items[j].norm))
            .sum()
    };
    // items are pre-sorted, so the first maximum is the earliest span
    let keep = own
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, usize)>, i| {
            let s = score(i);
            match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((i, s)),
            }
        })
        .map(|(i, _)| i)
        .expect("annotator has members");
    for &i in own.iter().filter(|&&i| i != keep) {
        out.push((vec![i], true));
    }
    let remaining: Vec<usize> = component
        .into_iter()
        .filter(|i| *i == keep || !own.contains(i))
        .collect();
    for sub in components(items, &remaining) {
        resolve_component(items, sub, out);
    }
}

/// Groups annotations from all annotators into connected components of
/// the coreference graph, with at most one member per annotator.
pub fn cluster_annotations(sets: &[AnnotationSet], doc: &Document, lexicon: &Lexicon) -> Result<Vec<ErrorCluster>> {
    let mut annotators = BTreeSet::new();
    for set in sets {
        if set.doc_id != doc.doc_id {
            return Err(Error::DocumentMismatch {
                expected: doc.doc_id.clone(),
                found: set.doc_id.clone(),
            });
        }
        if !annotators.insert(set.annotator_id.as_str()) {
            return Err(Error::DuplicateAnnotator {
                doc_id: doc.doc_id.clone(),
                annotator_id: set.annotator_id.clone(),
            });
        }
    }
    let mut ordered: Vec<&AnnotationSet> = sets.iter().collect();
    ordered.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));

    let mut items = Vec::new();
    for set in ordered {
        for ann in set.sorted_annotations() {
            ann.span.verify(doc, &format!("annotator `{}`", set.annotator_id))?;
            items.push(Item {
                ann: ann.clone(),
                norm: normalize_range(ann.span.start, ann.span.end, doc, lexicon),
            });
        }
    }

    let all: Vec<usize> = (0..items.len()).collect();
    let mut groups = Vec::new();
    for component in components(&items, &all) {
        resolve_component(&items, component, &mut groups);
    }

    let mut clusters: Vec<ErrorCluster> = groups
        .into_iter()
        .map(|(members, spilled)| {
            let lo = members.iter().map(|&i| items[i].norm.0).min().unwrap_or(0);
            let hi = members.iter().map(|&i| items[i].norm.1).max().unwrap_or(0);
            let (lo, hi) = normalize_range(lo, hi, doc, lexicon);
            let first_part = items[members[0]].ann.part;
            let part = first_part.filter(|_| members.iter().all(|&i| items[i].ann.part == first_part));
            ErrorCluster {
                cluster_id: String::new(),
                doc_id: doc.doc_id.clone(),
                members: members.iter().map(|&i| items[i].ann.clone()).collect(),
                canonical_span: Span {
                    doc_id: doc.doc_id.clone(),
                    start: lo,
                    end: hi,
                    surface: doc.surface(lo, hi).to_string(),
                },
                part,
                n_annotators: sets.len(),
                spilled,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        (a.canonical_span.start, a.canonical_span.end, a.part, a.members[0].id())
            .cmp(&(b.canonical_span.start, b.canonical_span.end, b.part, b.members[0].id()))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = format!("{}#{}", doc.doc_id, i);
    }
    Ok(clusters)
}

/// Outcome of the vote on one cluster's category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GoldCategory {
    Category(ErrorCategory),
    /// The plurality of markers gave no type.
    NoLabel,
    /// No label had a strict plurality.
    NoMajority,
}

impl GoldCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            GoldCategory::Category(c) => c.as_str(),
            GoldCategory::NoLabel => "NO_LABEL",
            GoldCategory::NoMajority => "NO_MAJORITY",
        }
    }

    pub fn category(self) -> Option<ErrorCategory> {
        match self {
            GoldCategory::Category(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for GoldCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoldCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NO_LABEL" => Ok(GoldCategory::NoLabel),
            "NO_MAJORITY" => Ok(GoldCategory::NoMajority),
            other => other.parse().map(GoldCategory::Category),
        }
    }
}

impl Serialize for GoldCategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for GoldCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Agreement {
    AllAgree,
    Majority,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub outcome: GoldCategory,
    pub agreement: Agreement,
    /// Strictly more than half of the document's annotators marked it.
    pub enters_gold: bool,
}

/// Majority test and strict-plurality category vote for one cluster.
pub fn vote(cluster: &ErrorCluster) -> Vote {
    let marked = cluster.members.len();
    let mut counts: BTreeMap<Option<ErrorCategory>, usize> = BTreeMap::new();
    for m in &cluster.members {
        *counts.entry(m.category).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let leaders: Vec<_> = counts.iter().filter(|(_, &c)| c == best).map(|(k, _)| *k).collect();
    let (outcome, agreement) = if leaders.len() == 1 {
        let outcome = match leaders[0] {
            Some(c) => GoldCategory::Category(c),
            None => GoldCategory::NoLabel,
        };
        let unanimous = counts.len() == 1 && marked == cluster.n_annotators;
        (outcome, if unanimous { Agreement::AllAgree } else { Agreement::Majority })
    } else {
        (GoldCategory::NoMajority, Agreement::Split)
    };
    Vote {
        outcome,
        agreement,
        enters_gold: 2 * marked > cluster.n_annotators,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldError {
    pub cluster_id: String,
    pub canonical_span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<ScorePart>,
    pub category: GoldCategory,
    pub agreement: Agreement,
    pub corrections: Vec<String>,
    pub miss_count: usize,
    pub provenance: Vec<String>,
}

/// The adjudicated error list of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub doc_id: String,
    pub errors: Vec<GoldError>,
    pub rule_log: Vec<RuleRecord>,
}

impl GoldStandard {
    pub fn empty(doc_id: impl Into<String>) -> Self {
        GoldStandard {
            doc_id: doc_id.into(),
            errors: Vec::new(),
            rule_log: Vec::new(),
        }
    }
}

/// Majority vote over the clusters of one document.
///
/// A cluster enters the gold standard when more than half of the annotators
/// marked it. Minority-only clusters are kept in `rule_log`.
pub fn adjudicate(doc_id: &str, clusters: &[ErrorCluster]) -> Result<GoldStandard> {
    let mut gold = GoldStandard::empty(doc_id);
    for cluster in clusters {
        if cluster.doc_id != doc_id {
            return Err(Error::DocumentMismatch {
                expected: doc_id.to_string(),
                found: cluster.doc_id.clone(),
            });
        }
        if cluster.n_annotators < 2 {
            return Err(Error::TooFewAnnotators {
                doc_id: doc_id.to_string(),
                found: cluster.n_annotators,
            });
        }
        let v = vote(cluster);
        if !v.enters_gold {
            gold.rule_log.push(RuleRecord {
                rule: RuleKind::MinorityOnly,
                doc_id: doc_id.to_string(),
                annotator_id: None,
                before: cluster.members.clone(),
                after: Vec::new(),
                note: Some(format!(
                    "{} of {} annotators marked {:?}",
                    cluster.members.len(),
                    cluster.n_annotators,
                    cluster.canonical_span.surface
                )),
            });
            continue;
        }
        gold.errors.push(GoldError {
            cluster_id: cluster.cluster_id.clone(),
            canonical_span: cluster.canonical_span.clone(),
            part: cluster.part,
            category: v.outcome,
            agreement: v.agreement,
            corrections: cluster
                .members
                .iter()
                .filter_map(|m| m.correction.clone())
                .collect(),
            miss_count: cluster.n_annotators - cluster.members.len(),
            provenance: cluster.members.iter().map(|m| m.id()).collect(),
        });
    }
    gold.errors
        .sort_by_key(|e| (e.canonical_span.start, e.canonical_span.end, e.part));
    Ok(gold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjudicationConfig {
    pub lexicon: Lexicon,
    /// Turn skipped-rule notes into errors.
    pub strict: bool,
    /// Flag sentences holding more than this many gold errors.
    pub co_located_threshold: usize,
}

impl Default for AdjudicationConfig {
    fn default() -> Self {
        AdjudicationConfig {
            lexicon: Lexicon::default(),
            strict: false,
            co_located_threshold: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentAdjudication {
    pub gold: GoldStandard,
    pub clusters: Vec<ErrorCluster>,
}

fn review_notes(doc: &Document, gold: &GoldStandard, clusters: &[ErrorCluster], threshold: usize) -> Vec<RuleRecord> {
    let sentence = doc.sentence_ids();
    let mut notes = Vec::new();

    let mut per_sentence: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &gold.errors {
        *per_sentence.entry(sentence[e.canonical_span.start]).or_default() += 1;
    }
    for (s, n) in per_sentence {
        if n > threshold {
            notes.push(RuleRecord::note(
                RuleKind::CoLocatedReview,
                &doc.doc_id,
                format!("sentence {s} holds {n} gold errors"),
            ));
        }
    }

    let mut minority: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    let mut minority_count: BTreeMap<usize, usize> = BTreeMap::new();
    for c in clusters.iter().filter(|c| !vote(c).enters_gold) {
        let s = sentence[c.canonical_span.start];
        *minority_count.entry(s).or_default() += 1;
        minority
            .entry(s)
            .or_default()
            .extend(c.members.iter().map(|m| m.annotator_id.as_str()));
    }
    for (s, who) in minority {
        if minority_count[&s] >= 2 && who.len() >= 2 {
            notes.push(RuleRecord::note(
                RuleKind::AlternativeMarkups,
                &doc.doc_id,
                format!(
                    "sentence {s}: {} minority markups by {}",
                    minority_count[&s],
                    who.into_iter().collect::<Vec<_>>().join(", ")
                ),
            ));
        }
    }
    notes
}

/// Rules, clustering and vote for one document.
pub fn adjudicate_document(doc: &Document, sets: &[AnnotationSet], config: &AdjudicationConfig) -> Result<DocumentAdjudication> {
    if sets.len() < 2 {
        return Err(Error::TooFewAnnotators {
            doc_id: doc.doc_id.clone(),
            found: sets.len(),
        });
    }
    let mut corrected = Vec::with_capacity(sets.len());
    let mut log = Vec::new();
    let mut ordered: Vec<&AnnotationSet> = sets.iter().collect();
    ordered.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));
    for set in ordered {
        let outcome = apply_guideline_rules(set, doc, &config.lexicon)?;
        corrected.push(outcome.set);
        log.extend(outcome.log);
    }
    if config.strict {
        if let Some(skip) = log.iter().find(|r| r.rule == RuleKind::ScorePairSkipped) {
            return Err(Error::Strict(format!(
                "document `{}`, annotator `{}`: score-pair rule skipped ({})",
                doc.doc_id,
                skip.annotator_id.as_deref().unwrap_or("?"),
                skip.note.as_deref().unwrap_or("")
            )));
        }
    }
    let clusters = cluster_annotations(&corrected, doc, &config.lexicon)?;
    let mut gold = adjudicate(&doc.doc_id, &clusters)?;
    let reviews = review_notes(doc, &gold, &clusters, config.co_located_threshold);
    log.append(&mut gold.rule_log);
    log.extend(reviews);
    gold.rule_log = log;
    Ok(DocumentAdjudication { gold, clusters })
}

/// Adjudicates every annotated document in parallel; results in doc-id order.
/// Documents without any annotation set are skipped.
pub fn adjudicate_corpus(
    docs: &[Document],
    sets: &[AnnotationSet],
    config: &AdjudicationConfig,
) -> Result<Vec<DocumentAdjudication>> {
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut grouped: BTreeMap<&str, Vec<AnnotationSet>> = BTreeMap::new();
    for set in sets {
        if !by_id.contains_key(set.doc_id.as_str()) {
            return Err(Error::MissingDocument(set.doc_id.clone()));
        }
        grouped.entry(set.doc_id.as_str()).or_default().push(set.clone());
    }
    let work: Vec<(&Document, Vec<AnnotationSet>)> = grouped
        .into_iter()
        .map(|(id, sets)| (by_id[id], sets))
        .collect();
    work.into_par_iter()
        .map(|(doc, sets)| adjudicate_document(doc, &sets, config))
        .collect()
}
