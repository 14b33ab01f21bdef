//! Documents, tokens, spans and raw error annotations.
//!
//! Spans are token ranges, never character ranges: annotators highlight
//! whole words. Every serialized span carries a redundant `surface` string
//! that loaders check against the referenced document.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six accuracy-error categories annotators choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCategory {
    Number,
    Name,
    Word,
    Context,
    NotCheckable,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 6] = [
        ErrorCategory::Number,
        ErrorCategory::Name,
        ErrorCategory::Word,
        ErrorCategory::Context,
        ErrorCategory::NotCheckable,
        ErrorCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Number => "NUMBER",
            ErrorCategory::Name => "NAME",
            ErrorCategory::Word => "WORD",
            ErrorCategory::Context => "CONTEXT",
            ErrorCategory::NotCheckable => "NOT_CHECKABLE",
            ErrorCategory::Other => "OTHER",
        }
    }

    /// Lower-case label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            ErrorCategory::Number => "number",
            ErrorCategory::Name => "name",
            ErrorCategory::Word => "word",
            ErrorCategory::Context => "context",
            ErrorCategory::NotCheckable => "not checkable",
            ErrorCategory::Other => "other",
        }
    }

    /// Annotator-facing definition, served to the UI as help text.
    pub fn definition(self) -> &'static str {
        match self {
            ErrorCategory::Number => {
                "Incorrect number, whether written as digits or spelled out."
            }
            ErrorCategory::Name => {
                "Incorrect named entity: people, places, organisations and days of the week."
            }
            ErrorCategory::Word => "An incorrect word that is not a number or a named entity.",
            ErrorCategory::Context => {
                "A phrase that leads to a wrong inference because of its context or discourse."
            }
            ErrorCategory::NotCheckable => {
                "A statement that cannot be checked: the information is unavailable or too time-consuming to verify."
            }
            ErrorCategory::Other => "Any other accuracy mistake. Use only as a last resort.",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = Error;

    /// Accepts the stable serialized names plus a few spellings seen in
    /// hand-made annotation sheets (`not checkable`, `not-checkable`).
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .map(|c| match c {
                ' ' | '-' => '_',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        match key.as_str() {
            "NUMBER" => Ok(ErrorCategory::Number),
            "NAME" => Ok(ErrorCategory::Name),
            "WORD" => Ok(ErrorCategory::Word),
            "CONTEXT" => Ok(ErrorCategory::Context),
            "NOT_CHECKABLE" | "NOTCHECKABLE" => Ok(ErrorCategory::NotCheckable),
            "OTHER" => Ok(ErrorCategory::Other),
            _ => Err(Error::UnknownCategory(s.to_string())),
        }
    }
}

/// Word lists that drive span normalization and the guideline rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lexicon {
    /// Stripped from the front of spans before comparing them.
    pub function_words: BTreeSet<String>,
    /// Day names; a wrong weekday is a NAME error.
    pub weekdays: BTreeSet<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        Lexicon {
            function_words: set(&["the", "a", "an", "on", "at", "in", "against"]),
            weekdays: set(&[
                "monday",
                "tuesday",
                "wednesday",
                "thursday",
                "friday",
                "saturday",
                "sunday",
            ]),
        }
    }
}

impl Lexicon {
    pub fn is_function_word(&self, surface: &str) -> bool {
        self.function_words.contains(&surface.to_lowercase())
    }

    pub fn is_weekday(&self, surface: &str) -> bool {
        self.weekdays.contains(&surface.to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    /// Character (not byte) offsets into the document text, half-open.
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
}

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | '!' | '?' | ';' | ':' | ')')
}

/// Whitespace tokenizer that also splits off parentheses, commas and
/// sentence punctuation. Hyphenated constructs such as `102-91` stay whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let push = |tokens: &mut Vec<Token>, chars: &[char], start: usize, end: usize| {
        tokens.push(Token {
            index: tokens.len(),
            char_start: start,
            char_end: end,
            surface: chars[start..end].iter().collect(),
        });
    };

    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut lo = run_start;
        let mut hi = i;

        while lo < hi && chars[lo] == '(' {
            push(&mut tokens, &chars, lo, lo + 1);
            lo += 1;
        }
        let mut trailing = Vec::new();
        while hi > lo && is_trailing_punct(chars[hi - 1]) {
            hi -= 1;
            trailing.push(hi);
        }
        if lo < hi {
            push(&mut tokens, &chars, lo, hi);
        }
        for &p in trailing.iter().rev() {
            push(&mut tokens, &chars, p, p + 1);
        }
    }
    tokens
}

pub(crate) fn is_punctuation(surface: &str) -> bool {
    !surface.is_empty() && surface.chars().all(|c| c.is_ascii_punctuation() || c == '‘' || c == '’')
}

fn score_pair_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d+)-(\d+)$").unwrap())
}

/// Splits a `digits-digits` token into its two numbers.
pub fn score_pair(surface: &str) -> Option<(&str, &str)> {
    let caps = score_pair_regex().captures(surface)?;
    Some((caps.get(1)?.as_str(), caps.get(2)?.as_str()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRepr {
    doc_id: String,
    #[serde(default)]
    system_id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<Token>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

/// A generated story and its tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DocumentRepr", into = "DocumentRepr")]
pub struct Document {
    pub doc_id: String,
    pub system_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub metadata: BTreeMap<String, String>,
    // byte offsets of each token, parallel to `tokens`
    byte_ranges: Vec<(usize, usize)>,
}

impl TryFrom<DocumentRepr> for Document {
    type Error = Error;

    fn try_from(repr: DocumentRepr) -> Result<Self> {
        let tokens = match repr.tokens {
            Some(tokens) => tokens,
            None => tokenize(&repr.text),
        };
        Document::with_tokens(repr.doc_id, repr.system_id, repr.text, tokens, repr.metadata)
    }
}

impl From<Document> for DocumentRepr {
    fn from(doc: Document) -> Self {
        DocumentRepr {
            doc_id: doc.doc_id,
            system_id: doc.system_id,
            text: doc.text,
            tokens: Some(doc.tokens),
            metadata: doc.metadata,
        }
    }
}

impl Document {
    pub fn new(doc_id: impl Into<String>, system_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let tokens = tokenize(&text);
        Document::with_tokens(doc_id.into(), system_id.into(), text, tokens, BTreeMap::new())
    }

    /// Builds a document from externally produced tokens, checking that
    /// they are ordered, disjoint and agree with the text.
    pub fn with_tokens(
        doc_id: String,
        system_id: String,
        text: String,
        tokens: Vec<Token>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidDocument {
            doc_id: doc_id.clone(),
            reason,
        };
        if doc_id.is_empty() {
            return Err(invalid("empty doc_id".into()));
        }
        let char_to_byte: Vec<usize> = text
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(text.len()))
            .collect();
        let n_chars = char_to_byte.len() - 1;
        let mut byte_ranges = Vec::with_capacity(tokens.len());
        let mut prev_end = 0;
        for (i, tok) in tokens.iter().enumerate() {
            if tok.index != i {
                return Err(invalid(format!("token {i} has index {}", tok.index)));
            }
            if tok.char_start >= tok.char_end || tok.char_end > n_chars {
                return Err(invalid(format!(
                    "token {i} has bad range {}..{}",
                    tok.char_start, tok.char_end
                )));
            }
            if tok.char_start < prev_end {
                return Err(invalid(format!("token {i} overlaps its predecessor")));
            }
            let (b0, b1) = (char_to_byte[tok.char_start], char_to_byte[tok.char_end]);
            if text[b0..b1] != tok.surface {
                return Err(invalid(format!(
                    "token {i} surface {:?} does not match text {:?}",
                    tok.surface,
                    &text[b0..b1]
                )));
            }
            if text[char_to_byte[prev_end]..b0].chars().any(|c| !c.is_whitespace()) {
                return Err(invalid(format!("non-whitespace text before token {i} is not covered")));
            }
            prev_end = tok.char_end;
            byte_ranges.push((b0, b1));
        }
        if text[char_to_byte[prev_end]..].chars().any(|c| !c.is_whitespace()) {
            return Err(invalid("trailing text is not covered by tokens".into()));
        }
        Ok(Document {
            doc_id,
            system_id,
            text,
            tokens,
            metadata,
            byte_ranges,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index].surface
    }

    /// Original text covered by tokens `start..end`, inner whitespace included.
    pub fn surface(&self, start: usize, end: usize) -> &str {
        if start >= end || end > self.tokens.len() {
            return "";
        }
        &self.text[self.byte_ranges[start].0..self.byte_ranges[end - 1].1]
    }

    pub fn span(&self, start: usize, end: usize) -> Result<Span> {
        Span::new(self, start, end)
    }

    /// Index of the sentence containing each token; sentences end at `.`, `!` or `?`.
    pub fn sentence_ids(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.tokens.len());
        let mut current = 0;
        for tok in &self.tokens {
            ids.push(current);
            if matches!(tok.surface.as_str(), "." | "!" | "?") {
                current += 1;
            }
        }
        ids
    }
}

/// A token range `start..end` inside one document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Span {
    pub fn new(doc: &Document, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > doc.len() {
            return Err(Error::SpanOutOfBounds {
                doc_id: doc.doc_id.clone(),
                start,
                end,
                len: doc.len(),
            });
        }
        Ok(Span {
            doc_id: doc.doc_id.clone(),
            start,
            end,
            surface: doc.surface(start, end).to_string(),
        })
    }

    /// Checks bounds and the redundant surface string against `doc`.
    pub fn verify(&self, doc: &Document, context: &str) -> Result<()> {
        if self.doc_id != doc.doc_id {
            return Err(Error::DocumentMismatch {
                expected: doc.doc_id.clone(),
                found: self.doc_id.clone(),
            });
        }
        let fresh = Span::new(doc, self.start, self.end)?;
        if fresh.surface != self.surface {
            return Err(Error::SurfaceMismatch {
                doc_id: doc.doc_id.clone(),
                context: context.to_string(),
                expected: fresh.surface,
                found: self.surface.clone(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlap(&self, other: &Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    /// Tokens between the two spans; zero when they overlap or touch.
    pub fn gap(&self, other: &Span) -> usize {
        if self.overlap(other) > 0 {
            0
        } else if self.end <= other.start {
            other.start - self.end
        } else {
            self.start - other.end
        }
    }
}

/// Which number of a `digits-digits` token an annotation points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorePart {
    Left,
    Right,
}

impl ScorePart {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorePart::Left => "left",
            ScorePart::Right => "right",
        }
    }
}

/// Two annotations on the same token may address different halves of a score pair.
pub fn parts_compatible(a: Option<ScorePart>, b: Option<ScorePart>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAnnotation {
    pub annotator_id: String,
    pub span: Span,
    /// `None` means the annotator marked an error without choosing a type.
    pub category: Option<ErrorCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<ScorePart>,
}

impl ErrorAnnotation {
    pub fn new(annotator_id: impl Into<String>, span: Span, category: Option<ErrorCategory>) -> Self {
        ErrorAnnotation {
            annotator_id: annotator_id.into(),
            span,
            category,
            correction: None,
            explanation: None,
            part: None,
        }
    }

    pub fn with_correction(mut self, correction: impl Into<String>) -> Self {
        self.correction = Some(correction.into());
        self
    }

    pub fn with_explanation(mut self, explanation: impl Into<String>) -> Self {
        self.explanation = Some(explanation.into());
        self
    }

    pub fn with_part(mut self, part: ScorePart) -> Self {
        self.part = Some(part);
        self
    }

    /// Stable identifier used for provenance: `annotator:start-end[:part]`.
    pub fn id(&self) -> String {
        match self.part {
            Some(p) => format!(
                "{}:{}-{}:{}",
                self.annotator_id,
                self.span.start,
                self.span.end,
                p.as_str()
            ),
            None => format!("{}:{}-{}", self.annotator_id, self.span.start, self.span.end),
        }
    }

    /// Text the annotator actually highlighted, honouring score-pair halves.
    pub fn highlighted(&self) -> &str {
        match (self.part, score_pair(&self.span.surface)) {
            (Some(ScorePart::Left), Some((l, _))) => l,
            (Some(ScorePart::Right), Some((_, r))) => r,
            _ => &self.span.surface,
        }
    }

    fn sort_key(&self) -> (usize, usize, Option<ScorePart>, Option<ErrorCategory>) {
        (self.span.start, self.span.end, self.part, self.category)
    }
}

/// One reason an annotation set was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    /// Index into `annotations`, absent for set-level problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<usize>,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetStatus {
    Qualification,
    #[default]
    Main,
}

/// All errors one annotator marked in one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub doc_id: String,
    pub annotator_id: String,
    pub annotations: Vec<ErrorAnnotation>,
    #[serde(default)]
    pub status: SetStatus,
    /// Optimistic-concurrency counter maintained by the annotation service.
    #[serde(default)]
    pub version: u64,
}

impl AnnotationSet {
    pub fn new(doc_id: impl Into<String>, annotator_id: impl Into<String>) -> Self {
        AnnotationSet {
            doc_id: doc_id.into(),
            annotator_id: annotator_id.into(),
            annotations: Vec::new(),
            status: SetStatus::Main,
            version: 0,
        }
    }

    /// Adds an annotation over `start..end`, attributing it to this set's annotator.
    pub fn mark(
        &mut self,
        doc: &Document,
        start: usize,
        end: usize,
        category: Option<ErrorCategory>,
    ) -> Result<&mut ErrorAnnotation> {
        let span = Span::new(doc, start, end)?;
        self.annotations
            .push(ErrorAnnotation::new(self.annotator_id.clone(), span, category));
        Ok(self.annotations.last_mut().expect("just pushed"))
    }

    /// Checks every annotation against `doc` and rejects duplicates.
    pub fn validate(&self, doc: &Document) -> Result<()> {
        match self.check(doc).into_iter().next() {
            Some((_, e)) => Err(e),
            None => Ok(()),
        }
    }

    /// Every problem [`validate`](Self::validate) would report, not just the first.
    pub fn problems(&self, doc: &Document) -> Vec<Problem> {
        self.check(doc)
            .into_iter()
            .map(|(annotation, e)| Problem {
                annotation,
                code: e.code().to_string(),
                message: e.to_string(),
            })
            .collect()
    }

    fn check(&self, doc: &Document) -> Vec<(Option<usize>, Error)> {
        let bad = |reason: String| Error::InvalidAnnotationSet {
            doc_id: self.doc_id.clone(),
            annotator_id: self.annotator_id.clone(),
            reason,
        };
        if self.doc_id != doc.doc_id {
            return vec![(
                None,
                Error::DocumentMismatch {
                    expected: doc.doc_id.clone(),
                    found: self.doc_id.clone(),
                },
            )];
        }
        let mut out = Vec::new();
        if self.annotator_id.is_empty() {
            out.push((None, bad("empty annotator_id".into())));
        }
        let mut seen = BTreeSet::new();
        for (i, ann) in self.annotations.iter().enumerate() {
            if ann.annotator_id != self.annotator_id {
                out.push((Some(i), bad(format!("annotation {i} belongs to `{}`", ann.annotator_id))));
            }
            if let Err(e) = ann
                .span
                .verify(doc, &format!("annotator `{}`, annotation {i}", self.annotator_id))
            {
                out.push((Some(i), e));
                continue;
            }
            if ann.part.is_some() && score_pair(&ann.span.surface).is_none() {
                out.push((
                    Some(i),
                    bad(format!(
                        "annotation {i} addresses a score half but {:?} is not a score pair",
                        ann.span.surface
                    )),
                ));
            }
            if !seen.insert(ann.sort_key()) {
                out.push((Some(i), bad(format!("annotation {i} duplicates an earlier span and category"))));
            }
        }
        out
    }

    /// Annotations in token order; the order used by every pipeline stage.
    pub fn sorted_annotations(&self) -> Vec<&ErrorAnnotation> {
        let mut out: Vec<_> = self.annotations.iter().collect();
        out.sort_by_key(|a| a.sort_key());
        out
    }
}

/// Strips leading function words and trailing punctuation. Never returns
/// an empty span: if everything would be stripped the input comes back.
pub fn normalize_span(span: &Span, doc: &Document, lexicon: &Lexicon) -> Result<Span> {
    span.verify(doc, "normalize_span")?;
    Ok(normalize_unchecked(span, doc, lexicon))
}

pub(crate) fn normalize_range(start: usize, end: usize, doc: &Document, lexicon: &Lexicon) -> (usize, usize) {
    let mut lo = start;
    let mut hi = end;
    while lo < hi && lexicon.is_function_word(doc.token(lo)) {
        lo += 1;
    }
    while hi > lo && is_punctuation(doc.token(hi - 1)) {
        hi -= 1;
    }
    if lo < hi {
        (lo, hi)
    } else {
        (start, end)
    }
}

pub(crate) fn normalize_unchecked(span: &Span, doc: &Document, lexicon: &Lexicon) -> Span {
    let (lo, hi) = normalize_range(span.start, span.end, doc, lexicon);
    if (lo, hi) == (span.start, span.end) {
        return span.clone();
    }
    Span {
        doc_id: span.doc_id.clone(),
        start: lo,
        end: hi,
        surface: doc.surface(lo, hi).to_string(),
    }
}

/// True when the normalized spans share at least one token.
pub fn spans_corefer(a: &Span, b: &Span, doc: &Document, lexicon: &Lexicon) -> Result<bool> {
    if a.doc_id != b.doc_id {
        return Err(Error::DocumentMismatch {
            expected: a.doc_id.clone(),
            found: b.doc_id.clone(),
        });
    }
    let na = normalize_span(a, doc, lexicon)?;
    let nb = normalize_span(b, doc, lexicon)?;
    Ok(na.overlap(&nb) > 0)
}

/// Span coreference refined by score-pair halves.
pub fn annotations_corefer(
    a: &ErrorAnnotation,
    b: &ErrorAnnotation,
    doc: &Document,
    lexicon: &Lexicon,
) -> Result<bool> {
    Ok(spans_corefer(&a.span, &b.span, doc, lexicon)? && parts_compatible(a.part, b.part))
}
