use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use annogold::adjudication::{adjudicate_document, GoldStandard};
use annogold::corpus_io::{load_corpus, load_gold, CorpusFormat};
use annogold::qualification::QualificationResult;
use annogold::text_model::{AnnotationSet, Document};
use tokio::sync::RwLock;

use crate::config::ServiceConfig;
use crate::ServiceError;

pub const QUALIFICATION_DIR: &str = "qualification";

pub struct Reference {
    pub doc: Document,
    pub gold: GoldStandard,
}

pub struct AppState {
    pub config: ServiceConfig,
    pub docs: BTreeMap<String, Document>,
    /// Keyed by (doc_id, annotator_id). Writers hold the lock across the
    /// version check and the file write.
    pub sets: RwLock<BTreeMap<(String, String), AnnotationSet>>,
    pub reference: Option<Reference>,
    pub qualified: RwLock<BTreeMap<String, QualificationResult>>,
}

impl AppState {
    pub fn load(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let corpus = load_corpus(&config.corpus, CorpusFormat::Native)?;
        for w in &corpus.lint.warnings {
            tracing::warn!(code = ?w.code, doc = ?w.doc_id, annotator = ?w.annotator_id, "{}", w.message);
        }
        let docs: BTreeMap<String, Document> = corpus.docs.into_iter().map(|d| (d.doc_id.clone(), d)).collect();
        let sets: BTreeMap<(String, String), AnnotationSet> = corpus
            .sets
            .into_iter()
            .map(|s| ((s.doc_id.clone(), s.annotator_id.clone()), s))
            .collect();

        let reference = match &config.reference_doc {
            None => None,
            Some(id) => {
                let doc = docs
                    .get(id)
                    .cloned()
                    .ok_or_else(|| ServiceError::Config(format!("reference_doc `{id}` is not in the corpus")))?;
                let gold = match &config.reference_gold {
                    Some(path) => load_gold(path)?
                        .into_iter()
                        .find(|g| g.doc_id == *id)
                        .ok_or_else(|| ServiceError::Config(format!("{} has no gold for `{id}`", path.display())))?,
                    None => {
                        let mine: Vec<AnnotationSet> = sets.values().filter(|s| s.doc_id == *id).cloned().collect();
                        adjudicate_document(&doc, &mine, &config.adjudication)?.gold
                    }
                };
                Some(Reference { doc, gold })
            }
        };

        let mut qualified = BTreeMap::new();
        let qdir = config.corpus.join(QUALIFICATION_DIR);
        if qdir.is_dir() {
            let entries = std::fs::read_dir(&qdir).map_err(|e| ServiceError::Io { path: qdir.clone(), source: e })?;
            for entry in entries {
                let path = entry.map_err(|e| ServiceError::Io { path: qdir.clone(), source: e })?.path();
                if path.extension().is_some_and(|x| x == "json") {
                    let text = std::fs::read_to_string(&path).map_err(|e| ServiceError::Io { path: path.clone(), source: e })?;
                    let result: QualificationResult =
                        serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
                    qualified.insert(result.candidate_id.clone(), result);
                }
            }
        }

        tracing::info!(docs = docs.len(), sets = sets.len(), "corpus loaded from {}", config.corpus.display());
        Ok(AppState {
            config,
            docs,
            sets: RwLock::new(sets),
            reference,
            qualified: RwLock::new(qualified),
        })
    }

    pub fn qualification_path(&self, annotator: &str) -> PathBuf {
        self.config.corpus.join(QUALIFICATION_DIR).join(format!("{annotator}.json"))
    }

    /// Annotators per document, over the sets currently stored.
    pub fn submissions(sets: &BTreeMap<(String, String), AnnotationSet>) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (doc, who) in sets.keys() {
            out.entry(doc.clone()).or_default().insert(who.clone());
        }
        out
    }
}
