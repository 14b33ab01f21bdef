//! Corpora for exercising the annotation service.

use std::path::Path;

use annogold::corpus_io::save_corpus;
use annogold::text_model::{AnnotationSet, Document, ErrorCategory};

use crate::fixtures::synthetic_corpus;

pub const REFERENCE_DOC: &str = "qual-01";
pub const REFERENCE_ERRORS: usize = 10;
pub const REFERENCE_ANNOTATORS: [&str; 3] = ["ref1", "ref2", "ref3"];

/// Ten sentences, each with one wrong number at token `4 * i + 2`.
pub fn reference_doc() -> Document {
    let text: Vec<String> = (0..REFERENCE_ERRORS).map(|i| format!("Player{i} scored {} points.", 10 + i)).collect();
    Document::new(REFERENCE_DOC, "sys-q", text.join(" ")).unwrap()
}

/// Marks the first `found` reference errors, plus `spurious` marks on
/// tokens that are not errors.
pub fn candidate_set(annotator: &str, found: usize, spurious: usize) -> AnnotationSet {
    let doc = reference_doc();
    let mut set = AnnotationSet::new(REFERENCE_DOC, annotator);
    for i in 0..found {
        set.mark(&doc, 4 * i + 2, 4 * i + 3, Some(ErrorCategory::Number)).unwrap();
    }
    for i in 0..spurious {
        set.mark(&doc, 4 * i, 4 * i + 1, Some(ErrorCategory::Name)).unwrap();
    }
    set
}

/// Unanimous sets for the reference document: ten NUMBER errors.
pub fn reference_sets() -> Vec<AnnotationSet> {
    REFERENCE_ANNOTATORS.iter().map(|a| candidate_set(a, REFERENCE_ERRORS, 0)).collect()
}

/// Writes the synthetic corpus plus the reference document and its sets
/// under `root`, in the native layout.
pub fn write_service_corpus(root: &Path, with_reference: bool) {
    let (mut docs, mut sets) = synthetic_corpus();
    if with_reference {
        docs.push(reference_doc());
        sets.extend(reference_sets());
    }
    save_corpus(root, &docs, &sets).unwrap();
}

/// The synthetic corpus documents with no annotation sets.
pub fn write_empty_corpus(root: &Path, with_reference: bool) {
    let (mut docs, _) = synthetic_corpus();
    let mut sets = Vec::new();
    if with_reference {
        docs.push(reference_doc());
        sets = reference_sets();
    }
    save_corpus(root, &docs, &sets).unwrap();
}
