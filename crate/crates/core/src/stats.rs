//! Agreement and reporting statistics: Fleiss' kappa, the category
//! confusion matrix, corpus error counts and per-system error profiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adjudication::{vote, Agreement, ErrorCluster, GoldCategory, GoldStandard};
use crate::error::{Error, Result};
use crate::text_model::{Document, ErrorCategory};

pub const NO_TYPE: &str = "NO_TYPE";
pub const NO_ERROR: &str = "NO_ERROR";

/// How annotators who did not mark a gold error are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// A miss is the label `NO_ERROR`; every item has all `n` raters.
    IncludeMisses,
    /// A miss is no rating at all; an item is rated by those who marked it.
    ExcludeMisses,
}

impl KappaMode {
    pub const ALL: [KappaMode; 2] = [KappaMode::IncludeMisses, KappaMode::ExcludeMisses];

    pub fn as_str(self) -> &'static str {
        match self {
            KappaMode::IncludeMisses => "include-misses",
            KappaMode::ExcludeMisses => "exclude-misses",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub mode: KappaMode,
    pub n_items: usize,
    pub n_raters: usize,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub category_marginals: BTreeMap<String, f64>,
    /// Every rating used a single label, so chance agreement is 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaParts {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub marginals: BTreeMap<String, f64>,
    pub degenerate: bool,
}

/// Fleiss-style agreement over items given as label → count maps.
///
/// Items may have different rater counts (each at least 2); with a constant
/// count this is exactly Fleiss' kappa.
pub fn kappa_from_counts(items: &[BTreeMap<String, usize>]) -> Result<KappaParts> {
    if items.is_empty() {
        return Err(Error::NoItems);
    }
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    let mut ratings = 0usize;
    let mut observed = 0.0;
    for item in items {
        let m: usize = item.values().sum();
        if m < 2 {
            return Err(Error::TooFewRaters(m));
        }
        let squares: usize = item.values().map(|c| c * c).sum();
        observed += (squares - m) as f64 / (m * (m - 1)) as f64;
        for (label, &c) in item {
            *totals.entry(label.clone()).or_default() += c;
        }
        ratings += m;
    }
    observed /= items.len() as f64;
    let marginals: BTreeMap<String, f64> = totals
        .into_iter()
        .filter(|(_, c)| *c > 0)
        .map(|(k, c)| (k, c as f64 / ratings as f64))
        .collect();
    let expected: f64 = marginals.values().map(|p| p * p).sum();
    let degenerate = marginals.len() == 1;
    let kappa = if degenerate {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(KappaParts {
        kappa,
        observed,
        expected,
        marginals,
        degenerate,
    })
}

fn label_name(label: Option<ErrorCategory>) -> String {
    label.map_or(NO_TYPE.to_string(), |c| c.as_str().to_string())
}

/// Label counts for each gold-entering cluster.
pub fn kappa_items(clusters: &[ErrorCluster], mode: KappaMode) -> Vec<BTreeMap<String, usize>> {
    clusters
        .iter()
        .filter(|c| vote(c).enters_gold)
        .map(|c| {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for m in &c.members {
                *counts.entry(label_name(m.category)).or_default() += 1;
            }
            let missing = c.n_annotators - c.members.len();
            if mode == KappaMode::IncludeMisses && missing > 0 {
                counts.insert(NO_ERROR.to_string(), missing);
            }
            counts
        })
        .collect()
}

/// Fleiss' kappa on error type, over clusters that entered the gold standard.
pub fn fleiss_kappa(clusters: &[ErrorCluster], mode: KappaMode) -> Result<AgreementReport> {
    let n = clusters.first().map_or(0, |c| c.n_annotators);
    if let Some(c) = clusters.iter().find(|c| c.n_annotators != n) {
        return Err(Error::InconsistentRaters(n, c.n_annotators));
    }
    if !clusters.is_empty() && n < 2 {
        return Err(Error::TooFewRaters(n));
    }
    let items = kappa_items(clusters, mode);
    let parts = kappa_from_counts(&items)?;
    Ok(AgreementReport {
        kappa: parts.kappa,
        mode,
        n_items: items.len(),
        n_raters: n,
        observed_agreement: parts.observed,
        expected_agreement: parts.expected,
        category_marginals: parts.marginals,
        degenerate: parts.degenerate,
    })
}

pub fn render_agreement(reports: &[AgreementReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "fleiss kappa ({}): {:.2}  [items {}, raters {}{}]",
            r.mode.as_str(),
            r.kappa,
            r.n_items,
            r.n_raters,
            if r.degenerate { ", degenerate" } else { "" }
        );
    }
    out
}

/// Majority outcome that keys a confusion-matrix row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Category(ErrorCategory),
    Split,
    NoLabel,
    NoError,
}

impl Outcome {
    pub const ROWS: [Outcome; 9] = [
        Outcome::Category(ErrorCategory::Number),
        Outcome::Category(ErrorCategory::Name),
        Outcome::Category(ErrorCategory::Word),
        Outcome::Category(ErrorCategory::Context),
        Outcome::Category(ErrorCategory::NotCheckable),
        Outcome::Category(ErrorCategory::Other),
        Outcome::Split,
        Outcome::NoLabel,
        Outcome::NoError,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Category(c) => c.label(),
            Outcome::Split => "split",
            Outcome::NoLabel => "no label",
            Outcome::NoError => "no error",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Outcome::Category(c) => c.as_str(),
            Outcome::Split => "SPLIT",
            Outcome::NoLabel => "NO_LABEL",
            Outcome::NoError => NO_ERROR,
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Outcome::ROWS
            .into_iter()
            .find(|o| o.key() == s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown outcome `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorityCounts {
    pub number: u64,
    pub name: u64,
    pub word: u64,
    pub context: u64,
    pub not_checkable: u64,
    pub other: u64,
    pub no_type: u64,
    pub no_error: u64,
}

impl MinorityCounts {
    fn slot(&mut self, label: Option<ErrorCategory>) -> &mut u64 {
        match label {
            Some(ErrorCategory::Number) => &mut self.number,
            Some(ErrorCategory::Name) => &mut self.name,
            Some(ErrorCategory::Word) => &mut self.word,
            Some(ErrorCategory::Context) => &mut self.context,
            Some(ErrorCategory::NotCheckable) => &mut self.not_checkable,
            Some(ErrorCategory::Other) => &mut self.other,
            None => &mut self.no_type,
        }
    }

    pub fn as_array(&self) -> [u64; 8] {
        [
            self.number,
            self.name,
            self.word,
            self.context,
            self.not_checkable,
            self.other,
            self.no_type,
            self.no_error,
        ]
    }

    pub fn sum(&self) -> u64 {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionRow {
    pub outcome: Outcome,
    pub total: u64,
    pub all_agree: u64,
    pub minority: MinorityCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rows: Vec<ConfusionRow>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix {
            rows: Outcome::ROWS
                .iter()
                .map(|&outcome| ConfusionRow {
                    outcome,
                    total: 0,
                    all_agree: 0,
                    minority: MinorityCounts::default(),
                })
                .collect(),
        }
    }
}

const COLUMNS: [&str; 8] = [
    "number",
    "name",
    "word",
    "context",
    "not checkable",
    "other",
    "no type",
    "no error",
];

impl ConfusionMatrix {
    pub fn row(&self, outcome: Outcome) -> &ConfusionRow {
        self.rows
            .iter()
            .find(|r| r.outcome == outcome)
            .expect("every outcome has a row")
    }

    fn row_mut(&mut self, outcome: Outcome) -> &mut ConfusionRow {
        self.rows
            .iter_mut()
            .find(|r| r.outcome == outcome)
            .expect("every outcome has a row")
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.total).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for row in &other.rows {
            let mine = self.row_mut(row.outcome);
            mine.total += row.total;
            mine.all_agree += row.all_agree;
            for (a, b) in [
                (&mut mine.minority.number, row.minority.number),
                (&mut mine.minority.name, row.minority.name),
                (&mut mine.minority.word, row.minority.word),
                (&mut mine.minority.context, row.minority.context),
                (&mut mine.minority.not_checkable, row.minority.not_checkable),
                (&mut mine.minority.other, row.minority.other),
                (&mut mine.minority.no_type, row.minority.no_type),
                (&mut mine.minority.no_error, row.minority.no_error),
            ] {
                *a += b;
            }
        }
    }

    /// Plain-text table; a row's own category column shows `-`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<14}|{:>6} |{:>6}", "error type", "total", "all");
        for c in COLUMNS {
            let _ = write!(out, " |{:>14}", c);
        }
        out.push('\n');
        let _ = write!(out, "{:<14}|{:>6} |{:>6}", "", "", "agree");
        for _ in COLUMNS {
            let _ = write!(out, " |{:>14}", "");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<14}|{:>6} |{:>6}", row.outcome.label(), row.total, row.all_agree);
            for (i, v) in row.minority.as_array().iter().enumerate() {
                let own = matches!(row.outcome, Outcome::Category(c) if c.index() == i);
                if own {
                    let _ = write!(out, " |{:>14}", "-");
                } else {
                    let _ = write!(out, " |{:>14}", v);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["error_type", "total", "all_agree"];
        header.extend(COLUMNS);
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![
                row.outcome.label().to_string(),
                row.total.to_string(),
                row.all_agree.to_string(),
            ];
            rec.extend(row.minority.as_array().iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Disagreement table over clusters that entered the gold standard.
///
/// Rows are keyed by the majority outcome; each minority choice (or miss)
/// increments one column of its row.
pub fn confusion_matrix(clusters: &[ErrorCluster]) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::default();
    for cluster in clusters {
        let v = vote(cluster);
        if !v.enters_gold {
            continue;
        }
        let (outcome, majority_label) = match v.outcome {
            GoldCategory::Category(c) => (Outcome::Category(c), Some(Some(c))),
            GoldCategory::NoLabel => (Outcome::NoLabel, Some(None)),
            GoldCategory::NoMajority => (Outcome::Split, None),
        };
        let row = matrix.row_mut(outcome);
        row.total += 1;
        if v.agreement == Agreement::AllAgree {
            row.all_agree += 1;
        }
        for m in &cluster.members {
            if majority_label != Some(m.category) {
                *row.minority.slot(m.category) += 1;
            }
        }
        row.minority.no_error += (cluster.n_annotators - cluster.members.len()) as u64;
    }
    matrix
}

/// Gold error counts by category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub stories: usize,
    pub total: usize,
    pub number: usize,
    pub name: usize,
    pub word: usize,
    pub context: usize,
    pub not_checkable: usize,
    pub other: usize,
    pub no_majority: usize,
    pub no_label: usize,
}

impl ErrorCounts {
    pub fn add(&mut self, gold: &GoldStandard) {
        self.stories += 1;
        for e in &gold.errors {
            self.total += 1;
            *match e.category {
                GoldCategory::Category(ErrorCategory::Number) => &mut self.number,
                GoldCategory::Category(ErrorCategory::Name) => &mut self.name,
                GoldCategory::Category(ErrorCategory::Word) => &mut self.word,
                GoldCategory::Category(ErrorCategory::Context) => &mut self.context,
                GoldCategory::Category(ErrorCategory::NotCheckable) => &mut self.not_checkable,
                GoldCategory::Category(ErrorCategory::Other) => &mut self.other,
                GoldCategory::NoMajority => &mut self.no_majority,
                GoldCategory::NoLabel => &mut self.no_label,
            } += 1;
        }
    }

    pub fn from_gold<'a>(gold: impl IntoIterator<Item = &'a GoldStandard>) -> Self {
        let mut counts = ErrorCounts::default();
        for g in gold {
            counts.add(g);
        }
        counts
    }

    pub fn category(&self, c: ErrorCategory) -> usize {
        match c {
            ErrorCategory::Number => self.number,
            ErrorCategory::Name => self.name,
            ErrorCategory::Word => self.word,
            ErrorCategory::Context => self.context,
            ErrorCategory::NotCheckable => self.not_checkable,
            ErrorCategory::Other => self.other,
        }
    }

    /// Corpus summary in the "N errors, then one line per category" shape.
    pub fn render_breakdown(&self) -> String {
        let mut out = format!(
            "{} accuracy errors in {} stories\n",
            self.total, self.stories
        );
        for c in ErrorCategory::ALL {
            let _ = writeln!(out, "  {:>4} {} errors", self.category(c), c.label());
        }
        let _ = writeln!(out, "  {:>4} errors with no majority annotation", self.no_majority);
        if self.no_label > 0 {
            let _ = writeln!(out, "  {:>4} errors with no type", self.no_label);
        }
        out
    }
}

/// Mean errors per story for one generating system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub system_id: String,
    pub stories: usize,
    pub total: f64,
    pub number: f64,
    pub name: f64,
    pub word: f64,
    pub context: f64,
    pub not_checkable: f64,
    pub other: f64,
    /// Only part of `total`; not shown as its own column.
    pub no_majority: f64,
    pub no_label: f64,
    pub counts: ErrorCounts,
}

impl ErrorProfile {
    fn from_counts(system_id: String, counts: ErrorCounts) -> Self {
        let mean = |x: usize| {
            if counts.stories == 0 {
                0.0
            } else {
                x as f64 / counts.stories as f64
            }
        };
        ErrorProfile {
            system_id,
            stories: counts.stories,
            total: mean(counts.total),
            number: mean(counts.number),
            name: mean(counts.name),
            word: mean(counts.word),
            context: mean(counts.context),
            not_checkable: mean(counts.not_checkable),
            other: mean(counts.other),
            no_majority: mean(counts.no_majority),
            no_label: mean(counts.no_label),
            counts,
        }
    }

    pub fn category(&self, c: ErrorCategory) -> f64 {
        match c {
            ErrorCategory::Number => self.number,
            ErrorCategory::Name => self.name,
            ErrorCategory::Word => self.word,
            ErrorCategory::Context => self.context,
            ErrorCategory::NotCheckable => self.not_checkable,
            ErrorCategory::Other => self.other,
        }
    }
}

/// Per-system average story error rates, systems in id order.
pub fn error_profile(gold: &[GoldStandard], docs: &[Document]) -> Result<Vec<ErrorProfile>> {
    let system_of: BTreeMap<&str, &str> = docs
        .iter()
        .map(|d| (d.doc_id.as_str(), d.system_id.as_str()))
        .collect();
    let mut per_system: BTreeMap<String, ErrorCounts> = BTreeMap::new();
    for g in gold {
        let system = system_of
            .get(g.doc_id.as_str())
            .ok_or_else(|| Error::MissingDocument(g.doc_id.clone()))?;
        per_system.entry(system.to_string()).or_default().add(g);
    }
    Ok(per_system
        .into_iter()
        .map(|(system, counts)| ErrorProfile::from_counts(system, counts))
        .collect())
}

const PROFILE_COLUMNS: [&str; 7] = [
    "total",
    "number",
    "name",
    "word",
    "context",
    "not checkable",
    "other",
];

fn profile_cells(p: &ErrorProfile) -> [f64; 7] {
    [
        p.total,
        p.number,
        p.name,
        p.word,
        p.context,
        p.not_checkable,
        p.other,
    ]
}

pub fn render_profiles_text(profiles: &[ErrorProfile]) -> String {
    let width = profiles
        .iter()
        .map(|p| p.system_id.len())
        .max()
        .unwrap_or(0)
        .max("system".len());
    let mut out = format!("{:<width$}", "system");
    for c in PROFILE_COLUMNS {
        let _ = write!(out, " |{:>14}", c);
    }
    out.push('\n');
    for p in profiles {
        let _ = write!(out, "{:<width$}", p.system_id);
        for v in profile_cells(p) {
            let _ = write!(out, " |{:>14.1}", v);
        }
        out.push('\n');
    }
    out
}

pub fn render_profiles_csv(profiles: &[ErrorProfile]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["system", "stories"];
    header.extend(PROFILE_COLUMNS);
    w.write_record(&header).expect("in-memory write");
    for p in profiles {
        let mut rec = vec![p.system_id.clone(), p.stories.to_string()];
        rec.extend(profile_cells(p).iter().map(|v| format!("{v:.1}")));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
