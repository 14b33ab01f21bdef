//! JSON bodies exchanged with the annotation service.

use serde::{Deserialize, Serialize};

use crate::text_model::{ErrorCategory, Problem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocSummary {
    pub doc_id: String,
    pub system_id: String,
    pub tokens: usize,
    /// Annotators who have submitted a set for this document.
    pub annotators: Vec<String>,
    /// At least the configured number of annotators have submitted.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutAck {
    pub doc_id: String,
    pub annotator_id: String,
    /// Version now stored; send it back with the next edit.
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextDoc {
    pub doc_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub category: ErrorCategory,
    pub label: String,
    pub definition: String,
}

pub fn taxonomy() -> Vec<TaxonomyEntry> {
    ErrorCategory::ALL
        .iter()
        .map(|&c| TaxonomyEntry {
            category: c,
            label: c.label().to_string(),
            definition: c.definition().to_string(),
        })
        .collect()
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<Problem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_version: Option<u64>,
}
