//! Gold-standard accuracy annotation for generated texts.
//!
//! Several annotators mark accuracy errors in a generated story as token
//! spans with one of six categories. This crate turns those markups into a
//! single adjudicated gold standard and computes what is needed to report on
//! it and to use it:
//!
//! * [`text_model`]: documents, tokens, spans, categories, span normalization.
//! * [`adjudication`]: guideline rules, cross-annotator clustering, majority vote.
//! * [`stats`]: Fleiss' kappa, the category confusion matrix, per-system profiles.
//! * [`metric_validation`]: recall and precision of an automatic metric against gold.
//! * [`qualification`]: screening candidate annotators on a reference text.
//! * [`corpus_io`]: file formats and the released-corpus adapter.
//! * [`api`]: request and response bodies of the annotation service.
//!
//! ```
//! use annogold::adjudication::{adjudicate_document, AdjudicationConfig, GoldCategory};
//! use annogold::text_model::{AnnotationSet, Document, ErrorCategory};
//!
//! let doc = Document::new("g1", "sys", "The Suns play the Boston Celtics on Friday.")?;
//! let mut sets = Vec::new();
//! for (who, start) in [("a1", 3), ("a2", 4), ("a3", 4)] {
//!     let mut set = AnnotationSet::new("g1", who);
//!     set.mark(&doc, start, 6, Some(ErrorCategory::Name))?;
//!     sets.push(set);
//! }
//! let result = adjudicate_document(&doc, &sets, &AdjudicationConfig::default())?;
//! assert_eq!(result.gold.errors.len(), 1);
//! assert_eq!(result.gold.errors[0].category, GoldCategory::Category(ErrorCategory::Name));
//! assert_eq!(result.gold.errors[0].canonical_span.surface, "Boston Celtics");
//! # Ok::<(), annogold::Error>(())
//! ```

pub mod adjudication;
pub mod api;
pub mod corpus_io;
pub mod error;
pub mod metric_validation;
pub mod qualification;
pub mod stats;
pub mod text_model;

pub use error::{Error, Result};
