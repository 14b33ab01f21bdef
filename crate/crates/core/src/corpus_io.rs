//! Reading and writing corpora, annotation sets and gold standards.
//!
//! Native layout, one JSON file per document and per annotation set:
//!
//! ```text
//! corpus/
//!   docs/<doc_id>.json
//!   annotations/<doc_id>/<annotator_id>.json
//! ```
//!
//! All writers emit pretty-printed JSON with a fixed key order and a
//! trailing newline, so identical values always produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adjudication::GoldStandard;
use crate::error::{Error, Result};
use crate::text_model::{parts_compatible, AnnotationSet, Document, ErrorCategory};

pub const DOCS_DIR: &str = "docs";
pub const ANNOTATIONS_DIR: &str = "annotations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    #[default]
    Native,
    ReleasedCorpus,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(CorpusFormat::Native),
            "released-corpus" => Ok(CorpusFormat::ReleasedCorpus),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintCode {
    EmptyCorpus,
    OverlappingSpans,
    MissingCorrection,
    OtherWithoutExplanation,
    MissingSystemId,
    DuplicateAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintWarning {
    pub code: LintCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub warnings: Vec<LintWarning>,
}

impl LintReport {
    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.warnings.len()
    }

    pub fn count(&self, code: LintCode) -> usize {
        self.warnings.iter().filter(|w| w.code == code).count()
    }

    fn push(&mut self, code: LintCode, doc_id: Option<&str>, annotator_id: Option<&str>, message: String) {
        self.warnings.push(LintWarning {
            code,
            doc_id: doc_id.map(str::to_string),
            annotator_id: annotator_id.map(str::to_string),
            message,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            let place = match (&w.doc_id, &w.annotator_id) {
                (Some(d), Some(a)) => format!("{d}/{a}: "),
                (Some(d), None) => format!("{d}: "),
                _ => String::new(),
            };
            out.push_str(&format!("warning[{}] {place}{}\n", serde_json::to_value(w.code).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(), w.message));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub docs: Vec<Document>,
    pub sets: Vec<AnnotationSet>,
    pub lint: LintReport,
}

/// Warnings that never block loading.
pub fn lint_corpus(docs: &[Document], sets: &[AnnotationSet]) -> LintReport {
    let mut report = LintReport::default();
    if docs.is_empty() {
        report.push(LintCode::EmptyCorpus, None, None, "corpus contains no documents".into());
    }
    for doc in docs {
        if doc.system_id.trim().is_empty() {
            report.push(LintCode::MissingSystemId, Some(&doc.doc_id), None, "document has no system_id".into());
        }
    }
    for set in sets {
        let doc = Some(set.doc_id.as_str());
        let who = Some(set.annotator_id.as_str());
        let anns = set.sorted_annotations();
        for (i, a) in anns.iter().enumerate() {
            if a.correction.as_deref().is_none_or(|c| c.trim().is_empty()) {
                report.push(LintCode::MissingCorrection, doc, who, format!("{:?} has no correction", a.span.surface));
            }
            if a.category == Some(ErrorCategory::Other) && a.explanation.as_deref().is_none_or(|e| e.trim().is_empty()) {
                report.push(
                    LintCode::OtherWithoutExplanation,
                    doc,
                    who,
                    format!("{:?} is OTHER without an explanation; OTHER is a last resort", a.span.surface),
                );
            }
            for b in &anns[i + 1..] {
                if a.span.overlap(&b.span) > 0 && parts_compatible(a.part, b.part) {
                    report.push(
                        LintCode::OverlappingSpans,
                        doc,
                        who,
                        format!("{:?} overlaps {:?}", a.span.surface, b.span.surface),
                    );
                }
            }
        }
    }
    report
}

/// Serializes `value` the way every writer in this crate does.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes to JSON");
    s.push('\n');
    s
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Writes through a temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Ids become file names, so only `[A-Za-z0-9._-]` without a leading dot.
pub fn check_file_id(kind: &str, id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{kind} id `{id}` is not usable as a file name")))
    }
}

pub fn document_path(root: &Path, doc_id: &str) -> PathBuf {
    root.join(DOCS_DIR).join(format!("{doc_id}.json"))
}

pub fn annotation_path(root: &Path, doc_id: &str, annotator_id: &str) -> PathBuf {
    root.join(ANNOTATIONS_DIR).join(doc_id).join(format!("{annotator_id}.json"))
}

pub fn save_document(root: &Path, doc: &Document) -> Result<()> {
    check_file_id("document", &doc.doc_id)?;
    write_atomic(&document_path(root, &doc.doc_id), &to_canonical_json(doc))
}

pub fn save_annotation_set(root: &Path, set: &AnnotationSet) -> Result<()> {
    check_file_id("document", &set.doc_id)?;
    check_file_id("annotator", &set.annotator_id)?;
    write_atomic(&annotation_path(root, &set.doc_id, &set.annotator_id), &to_canonical_json(set))
}

pub fn save_corpus(root: &Path, docs: &[Document], sets: &[AnnotationSet]) -> Result<()> {
    for doc in docs {
        save_document(root, doc)?;
    }
    for set in sets {
        save_annotation_set(root, set)?;
    }
    Ok(())
}

pub fn save_gold(gold: &[GoldStandard], path: &Path) -> Result<()> {
    write_atomic(path, &to_canonical_json(gold))
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldStandard>> {
    read_json(path)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_documents(root: &Path) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut seen = BTreeSet::new();
    for path in json_files(&root.join(DOCS_DIR))? {
        let doc: Document = read_json(&path)?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::InvalidDocument {
                doc_id: doc.doc_id,
                reason: format!("duplicate doc_id in {}", path.display()),
            });
        }
        docs.push(doc);
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}

pub fn load_annotation_sets(root: &Path, docs: &[Document]) -> Result<Vec<AnnotationSet>> {
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let dir = root.join(ANNOTATIONS_DIR);
    let mut sets = Vec::new();
    if !dir.is_dir() {
        return Ok(sets);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        for path in json_files(&sub)? {
            let set: AnnotationSet = read_json(&path)?;
            let doc = by_id
                .get(set.doc_id.as_str())
                .ok_or_else(|| Error::MissingDocument(set.doc_id.clone()))?;
            set.validate(doc)?;
            sets.push(set);
        }
    }
    sets.sort_by(|a, b| (&a.doc_id, &a.annotator_id).cmp(&(&b.doc_id, &b.annotator_id)));
    Ok(sets)
}

/// Loads and validates a corpus directory in the given layout.
pub fn load_corpus(root: &Path, format: CorpusFormat) -> Result<LoadedCorpus> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory does not exist"),
        ));
    }
    let (docs, sets, mut extra) = match format {
        CorpusFormat::Native => {
            let docs = load_documents(root)?;
            let sets = load_annotation_sets(root, &docs)?;
            (docs, sets, LintReport::default())
        }
        CorpusFormat::ReleasedCorpus => released::load(root)?,
    };
    let mut lint = lint_corpus(&docs, &sets);
    lint.warnings.append(&mut extra.warnings);
    Ok(LoadedCorpus { docs, sets, lint })
}

/// Adapter for the public CSV release of the annotated stories.
///
/// Expected layout:
///
/// ```text
/// texts/<TEXT_ID>.txt
/// systems.csv       TEXT_ID,SYSTEM            (optional)
/// annotations.csv   TEXT_ID,ANNOTATOR,DOC_TOKEN_START,DOC_TOKEN_END,TOKENS,TYPE,CORRECTION,COMMENT
/// ```
///
/// Token positions are inclusive and refer to this crate's tokenizer; the
/// `TOKENS` column is checked against the text they select.
pub mod released {
    use super::*;
    use crate::text_model::{ErrorAnnotation, Span};

    #[derive(Debug, Deserialize)]
    #[serde(rename_all = "SCREAMING_SNAKE_CASE")]
    struct Row {
        text_id: String,
        annotator: String,
        doc_token_start: usize,
        doc_token_end: usize,
        tokens: String,
        #[serde(rename = "TYPE")]
        kind: String,
        #[serde(default)]
        correction: String,
        #[serde(default)]
        comment: String,
    }

    #[derive(Debug, Deserialize)]
    #[serde(rename_all = "SCREAMING_SNAKE_CASE")]
    struct SystemRow {
        text_id: String,
        system: String,
    }

    fn squash(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    fn csv_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        reader
            .deserialize()
            .map(|r| {
                r.map_err(|e| Error::Csv {
                    path: path.to_path_buf(),
                    source: e,
                })
            })
            .collect()
    }

    pub fn load(root: &Path) -> Result<(Vec<Document>, Vec<AnnotationSet>, LintReport)> {
        let mut lint = LintReport::default();
        let systems: BTreeMap<String, String> = {
            let path = root.join("systems.csv");
            if path.is_file() {
                csv_rows::<SystemRow>(&path)?
                    .into_iter()
                    .map(|r| (r.text_id, r.system))
                    .collect()
            } else {
                BTreeMap::new()
            }
        };

        let texts = root.join("texts");
        let mut docs = Vec::new();
        if texts.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(&texts)
                .map_err(|e| Error::io(&texts, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            for path in files {
                let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let system = systems.get(&id).cloned().unwrap_or_default();
                let mut doc = Document::new(id.clone(), system, text)?;
                doc.metadata.insert("source".into(), path.display().to_string());
                docs.push(doc);
            }
        }
        let by_id: BTreeMap<String, Document> = docs.iter().map(|d| (d.doc_id.clone(), d.clone())).collect();

        let mut sets: BTreeMap<(String, String), AnnotationSet> = BTreeMap::new();
        let ann_path = root.join("annotations.csv");
        let rows: Vec<Row> = if ann_path.is_file() { csv_rows(&ann_path)? } else { Vec::new() };
        for (line, row) in rows.into_iter().enumerate() {
            let doc = by_id
                .get(&row.text_id)
                .ok_or_else(|| Error::MissingDocument(row.text_id.clone()))?;
            let span = Span::new(doc, row.doc_token_start, row.doc_token_end + 1)?;
            if squash(&span.surface) != squash(&row.tokens) {
                return Err(Error::SurfaceMismatch {
                    doc_id: doc.doc_id.clone(),
                    context: format!("annotations.csv row {}", line + 2),
                    expected: span.surface,
                    found: row.tokens,
                });
            }
            let category = match row.kind.trim() {
                "" => None,
                other => Some(other.parse::<ErrorCategory>()?),
            };
            let mut ann = ErrorAnnotation::new(row.annotator.clone(), span, category);
            ann.correction = Some(row.correction).filter(|c| !c.trim().is_empty());
            ann.explanation = Some(row.comment).filter(|c| !c.trim().is_empty());
            let set = sets
                .entry((row.text_id.clone(), row.annotator.clone()))
                .or_insert_with(|| AnnotationSet::new(row.text_id.clone(), row.annotator.clone()));
            let dup = set
                .annotations
                .iter()
                .any(|a| a.span == ann.span && a.category == ann.category && a.part == ann.part);
            if dup {
                lint.push(
                    LintCode::DuplicateAnnotation,
                    Some(&row.text_id),
                    Some(&row.annotator),
                    format!("row {} repeats {:?}; dropped", line + 2, ann.span.surface),
                );
                continue;
            }
            set.annotations.push(ann);
        }
        let sets: Vec<AnnotationSet> = sets.into_values().collect();
        for set in &sets {
            set.validate(&by_id[&set.doc_id])?;
        }
        Ok((docs, sets, lint))
    }
}
