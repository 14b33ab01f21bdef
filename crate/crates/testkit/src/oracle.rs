//! Slow, literal re-implementations of the pipeline definitions.
//!
//! Nothing here calls into the production algorithms beyond the data types;
//! the point is to have a second opinion written from the definitions.

use std::collections::BTreeMap;

use annogold::adjudication::{ErrorCluster, GoldStandard};
use annogold::metric_validation::{Locator, MetricReport};
use annogold::text_model::{AnnotationSet, Document, ErrorAnnotation, ErrorCategory, Lexicon, ScorePart};
use serde::{Deserialize, Serialize};

/// One annotation after the guideline rules, reduced to what clustering sees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mark {
    pub annotator: String,
    pub start: usize,
    pub end: usize,
    pub part: Option<ScorePart>,
    pub category: Option<ErrorCategory>,
}

impl Mark {
    pub fn of(a: &ErrorAnnotation) -> Mark {
        Mark {
            annotator: a.annotator_id.clone(),
            start: a.span.start,
            end: a.span.end,
            part: a.part,
            category: a.category,
        }
    }

    pub fn key(&self) -> String {
        format!(
            "{}:{}-{}:{}:{}",
            self.annotator,
            self.start,
            self.end,
            self.part.map_or("-", |p| p.as_str()),
            self.category.map_or("-", |c| c.as_str())
        )
    }
}

fn punctuation_only(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_punctuation() || c == '‘' || c == '’')
}

fn token(doc: &Document, i: usize) -> &str {
    &doc.tokens[i].surface
}

pub fn normalize(doc: &Document, lexicon: &Lexicon, start: usize, end: usize) -> (usize, usize) {
    let first_content = (start..end).find(|&i| !lexicon.function_words.contains(&token(doc, i).to_lowercase()));
    let Some(lo) = first_content else {
        return (start, end);
    };
    match (lo..end).rev().find(|&i| !punctuation_only(token(doc, i))) {
        Some(last) => (lo, last + 1),
        None => (start, end),
    }
}

fn digits_pair(s: &str) -> Option<(&str, &str)> {
    let (l, r) = s.split_once('-')?;
    let ok = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    (ok(l) && ok(r)).then_some((l, r))
}

fn integers(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_ascii_digit() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Weekday and score-pair rules, straight from their definitions.
pub fn rules(set: &AnnotationSet, doc: &Document, lexicon: &Lexicon) -> Vec<Mark> {
    let original: Vec<Mark> = set.annotations.iter().map(Mark::of).collect();
    let mut out: Vec<Mark> = Vec::new();
    let mut rewritten: Vec<Mark> = Vec::new();
    for (ann, mark) in set.annotations.iter().zip(&original) {
        let mut m = mark.clone();
        let single = m.end == m.start + 1;
        if single && lexicon.weekdays.contains(&token(doc, m.start).to_lowercase()) && m.category != Some(ErrorCategory::Name) {
            m.category = Some(ErrorCategory::Name);
            if original.contains(&m) || rewritten.contains(&m) {
                continue;
            }
            rewritten.push(m.clone());
        }
        if single && m.category == Some(ErrorCategory::Number) && m.part.is_none() {
            if let Some((l, r)) = digits_pair(token(doc, m.start)) {
                let nums = integers(ann.correction.as_deref().unwrap_or(""));
                if nums.len() == 2 && nums[0] != l && nums[1] != r {
                    for part in [ScorePart::Left, ScorePart::Right] {
                        let half = Mark {
                            part: Some(part),
                            ..m.clone()
                        };
                        if !original.contains(&half) {
                            out.push(half);
                        }
                    }
                    continue;
                }
            }
        }
        out.push(m);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClusterShape {
    pub start: usize,
    pub end: usize,
    pub part: Option<ScorePart>,
    pub members: Vec<String>,
    pub spilled: bool,
}

impl ClusterShape {
    pub fn of(c: &ErrorCluster) -> ClusterShape {
        let mut members: Vec<String> = c.members.iter().map(|m| Mark::of(m).key()).collect();
        members.sort();
        ClusterShape {
            start: c.canonical_span.start,
            end: c.canonical_span.end,
            part: c.part,
            members,
            spilled: c.spilled,
        }
    }
}

fn linked(a: &Mark, na: (usize, usize), b: &Mark, nb: (usize, usize)) -> bool {
    let overlap = na.0.max(nb.0) < na.1.min(nb.1);
    let parts = a.part.is_none() || b.part.is_none() || a.part == b.part;
    overlap && parts
}

/// Connected components by transitive closure of the adjacency matrix.
fn closure_components(marks: &[Mark], norm: &[(usize, usize)], subset: &[usize]) -> Vec<Vec<usize>> {
    let n = subset.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i == j || linked(&marks[subset[i]], norm[subset[i]], &marks[subset[j]], norm[subset[j]]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        for &j in &comp {
            seen[j] = true;
        }
        out.push(comp.into_iter().map(|j| subset[j]).collect());
    }
    out
}

fn resolve(marks: &[Mark], norm: &[(usize, usize)], comp: Vec<usize>, out: &mut Vec<(Vec<usize>, bool)>) {
    let mut annotators: Vec<&str> = comp.iter().map(|&i| marks[i].annotator.as_str()).collect();
    annotators.sort();
    annotators.dedup();
    let dup = annotators
        .into_iter()
        .find(|a| comp.iter().filter(|&&i| marks[i].annotator == *a).count() > 1);
    let Some(who) = dup else {
        out.push((comp, false));
        return;
    };
    let mut own: Vec<usize> = comp.iter().copied().filter(|&i| marks[i].annotator == who).collect();
    let overlap = |i: usize| -> usize {
        comp.iter()
            .filter(|&&j| marks[j].annotator != who)
            .map(|&j| norm[i].1.min(norm[j].1).saturating_sub(norm[i].0.max(norm[j].0)))
            .sum()
    };
    own.sort_by(|&a, &b| overlap(b).cmp(&overlap(a)).then_with(|| marks[a].cmp(&marks[b])));
    let keep = own[0];
    for &i in &own[1..] {
        out.push((vec![i], true));
    }
    let rest: Vec<usize> = comp.into_iter().filter(|i| *i == keep || !own.contains(i)).collect();
    for c in closure_components(marks, norm, &rest) {
        resolve(marks, norm, c, out);
    }
}

/// Rules, then brute-force clustering, for one document.
pub fn clusters(doc: &Document, sets: &[AnnotationSet], lexicon: &Lexicon) -> Vec<ClusterShape> {
    let marks: Vec<Mark> = sets.iter().flat_map(|s| rules(s, doc, lexicon)).collect();
    let norm: Vec<(usize, usize)> = marks.iter().map(|m| normalize(doc, lexicon, m.start, m.end)).collect();
    let all: Vec<usize> = (0..marks.len()).collect();
    let mut groups = Vec::new();
    for c in closure_components(&marks, &norm, &all) {
        resolve(&marks, &norm, c, &mut groups);
    }
    let mut shapes: Vec<ClusterShape> = groups
        .into_iter()
        .map(|(members, spilled)| {
            let lo = members.iter().map(|&i| norm[i].0).min().unwrap();
            let hi = members.iter().map(|&i| norm[i].1).max().unwrap();
            let (start, end) = normalize(doc, lexicon, lo, hi);
            let part = marks[members[0]].part;
            let part = if members.iter().all(|&i| marks[i].part == part) { part } else { None };
            let mut keys: Vec<String> = members.iter().map(|&i| marks[i].key()).collect();
            keys.sort();
            ClusterShape {
                start,
                end,
                part,
                members: keys,
                spilled,
            }
        })
        .collect();
    shapes.sort();
    shapes
}

/// A gold error reduced to its observable outcome; the golden-file format.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpectedError {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<ScorePart>,
    pub category: String,
    pub agreement: String,
    pub markers: usize,
}

/// Production gold, projected onto [`ExpectedError`].
pub fn project(gold: &GoldStandard) -> Vec<ExpectedError> {
    let mut out: Vec<ExpectedError> = gold
        .errors
        .iter()
        .map(|e| ExpectedError {
            doc_id: gold.doc_id.clone(),
            start: e.canonical_span.start,
            end: e.canonical_span.end,
            surface: e.canonical_span.surface.clone(),
            part: e.part,
            category: e.category.as_str().to_string(),
            agreement: serde_json::to_value(e.agreement).unwrap().as_str().unwrap().to_string(),
            markers: e.provenance.len(),
        })
        .collect();
    out.sort();
    out
}

/// Gold errors for one document from the oracle clustering and a plain vote.
pub fn gold(doc: &Document, sets: &[AnnotationSet], lexicon: &Lexicon) -> Vec<ExpectedError> {
    let n = sets.len();
    let label_of = |key: &str| key.rsplit(':').next().unwrap().to_string();
    let mut out = Vec::new();
    for c in clusters(doc, sets, lexicon) {
        let m = c.members.len();
        if 2 * m <= n {
            continue;
        }
        let mut votes: BTreeMap<String, usize> = BTreeMap::new();
        for key in &c.members {
            *votes.entry(label_of(key)).or_default() += 1;
        }
        let top = *votes.values().max().unwrap();
        let winners: Vec<&String> = votes.iter().filter(|(_, v)| **v == top).map(|(k, _)| k).collect();
        let (category, agreement) = if winners.len() > 1 {
            ("NO_MAJORITY".to_string(), "SPLIT")
        } else {
            let cat = if winners[0] == "-" { "NO_LABEL".to_string() } else { winners[0].clone() };
            (cat, if votes.len() == 1 && m == n { "ALL_AGREE" } else { "MAJORITY" })
        };
        out.push(ExpectedError {
            doc_id: doc.doc_id.clone(),
            start: c.start,
            end: c.end,
            surface: doc.surface(c.start, c.end).to_string(),
            part: c.part,
            category,
            agreement: agreement.to_string(),
            markers: m,
        });
    }
    out.sort();
    out
}

fn squash(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Largest number of gold errors matchable in one document, trying every
/// injective assignment. Direct matches need the same category and a
/// locator on the error; a gold NAME error can instead absorb two NUMBER
/// tuples naming it.
pub fn max_matches(report: &MetricReport, gold: &GoldStandard, doc: &Document, window: usize, lexicon: &Lexicon) -> usize {
    let claims: Vec<_> = report.errors.iter().filter(|e| e.doc_id == gold.doc_id).collect();
    let words: Vec<String> = doc.tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    let direct = |gi: usize, ci: usize| -> bool {
        let g = &gold.errors[gi];
        let c = claims[ci];
        if g.category.category() != Some(c.category) {
            return false;
        }
        let (gs, ge) = (g.canonical_span.start, g.canonical_span.end);
        match &c.locator {
            Locator::Span(s) => {
                let (s0, s1) = normalize(doc, lexicon, s.start, s.end);
                s0.max(gs) < s1.min(ge)
            }
            Locator::Tuple(t) => {
                let ent: Vec<String> = annogold::text_model::tokenize(&t.entity)
                    .into_iter()
                    .map(|t| t.surface.to_lowercase())
                    .collect();
                if ent.is_empty() || ent.len() > words.len() {
                    return false;
                }
                (0..=words.len() - ent.len()).any(|s| {
                    words[s..s + ent.len()] == ent[..] && {
                        let e = s + ent.len();
                        let distance = if e <= gs { gs - e } else { s.saturating_sub(ge) };
                        distance <= window
                    }
                })
            }
        }
    };
    let grouped = |gi: usize, ci: usize| -> bool {
        let g = &gold.errors[gi];
        let c = claims[ci];
        g.category.category() == Some(ErrorCategory::Name)
            && c.category == ErrorCategory::Number
            && matches!(&c.locator, Locator::Tuple(t) if squash(&t.entity) == squash(&g.canonical_span.surface))
    };
    fn search(gi: usize, used: &mut Vec<bool>, n: usize, direct: &dyn Fn(usize, usize) -> bool, grouped: &dyn Fn(usize, usize) -> bool) -> usize {
        if gi == n {
            return 0;
        }
        let mut best = search(gi + 1, used, n, direct, grouped);
        for a in 0..used.len() {
            if used[a] {
                continue;
            }
            if direct(gi, a) {
                used[a] = true;
                best = best.max(1 + search(gi + 1, used, n, direct, grouped));
                used[a] = false;
            }
            if grouped(gi, a) {
                for b in a + 1..used.len() {
                    if !used[b] && grouped(gi, b) {
                        used[a] = true;
                        used[b] = true;
                        best = best.max(1 + search(gi + 1, used, n, direct, grouped));
                        used[a] = false;
                        used[b] = false;
                    }
                }
            }
        }
        best
    }
    let mut used = vec![false; claims.len()];
    search(0, &mut used, gold.errors.len(), &direct, &grouped)
}
