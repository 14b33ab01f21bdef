use std::sync::Arc;

use annogold::adjudication::{adjudicate_document, GoldStandard};
use annogold::api::{taxonomy, ApiError, DocSummary, NextDoc, PutAck, TaxonomyEntry};
use annogold::corpus_io::{check_file_id, save_annotation_set, to_canonical_json, write_atomic};
use annogold::qualification::{score_qualification, QualificationConfig, QualificationResult};
use annogold::text_model::{AnnotationSet, Document, Problem};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::assignment::assignment_policy;
use crate::state::AppState;

type Shared = Arc<AppState>;

pub struct Failure {
    status: StatusCode,
    body: ApiError,
}

impl Failure {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Failure {
            status,
            body: ApiError {
                error: error.to_string(),
                message: message.into(),
                problems: Vec::new(),
                current_version: None,
            },
        }
    }

    fn invalid(message: impl Into<String>, problems: Vec<Problem>) -> Self {
        let mut f = Failure::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_annotation_set", message);
        f.body.problems = problems;
        f
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!("{e}");
        Failure::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Reply<T> = Result<Json<T>, Failure>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/docs", get(list_docs))
        .route("/api/docs/{id}", get(get_doc))
        .route("/api/docs/{id}/annotations/{annotator}", get(get_annotations).put(put_annotations))
        .route("/api/gold/{id}", get(get_gold))
        .route("/api/qualify/{annotator}", post(qualify))
        .route("/api/taxonomy", get(get_taxonomy))
        .route("/api/next/{annotator}", get(next_doc))
        .with_state(state)
}

/// With tokens configured, the bearer token must belong to `annotator`.
fn authorize(state: &AppState, headers: &HeaderMap, annotator: &str) -> Result<(), Failure> {
    check_file_id("annotator", annotator)
        .map_err(|e| Failure::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_id", e.to_string()))?;
    if state.config.tokens.is_empty() {
        return Ok(());
    }
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| Failure::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing bearer token"))?;
    match state.config.tokens.get(token.trim()) {
        Some(who) if who == annotator => Ok(()),
        Some(_) => Err(Failure::new(StatusCode::FORBIDDEN, "forbidden", format!("token does not belong to `{annotator}`"))),
        None => Err(Failure::new(StatusCode::UNAUTHORIZED, "unauthorized", "unknown bearer token")),
    }
}

fn find_doc<'a>(state: &'a AppState, id: &str) -> Result<&'a Document, Failure> {
    state
        .docs
        .get(id)
        .ok_or_else(|| Failure::new(StatusCode::NOT_FOUND, "unknown_document", format!("no document `{id}`")))
}

/// Parses and validates a submitted set against the path it was sent to.
fn accept_set(body: &Bytes, doc: &Document, annotator: &str) -> Result<AnnotationSet, Failure> {
    let set: AnnotationSet = serde_json::from_slice(body).map_err(|e| {
        Failure::invalid(
            "body is not an annotation set",
            vec![Problem {
                annotation: None,
                code: "json".into(),
                message: e.to_string(),
            }],
        )
    })?;
    if set.doc_id != doc.doc_id || set.annotator_id != annotator {
        return Err(Failure::invalid(
            format!(
                "set is for `{}`/`{}` but was sent to `{}`/`{annotator}`",
                set.doc_id, set.annotator_id, doc.doc_id
            ),
            vec![Problem {
                annotation: None,
                code: "path_mismatch".into(),
                message: "doc_id and annotator_id must match the URL".into(),
            }],
        ));
    }
    let problems = set.problems(doc);
    if !problems.is_empty() {
        return Err(Failure::invalid(format!("{} problem(s) in the annotation set", problems.len()), problems));
    }
    Ok(set)
}

async fn list_docs(State(state): State<Shared>) -> Json<Vec<DocSummary>> {
    let sets = state.sets.read().await;
    let subs = AppState::submissions(&sets);
    Json(
        state
            .docs
            .values()
            .map(|d| {
                let annotators: Vec<String> = subs.get(&d.doc_id).map(|s| s.iter().cloned().collect()).unwrap_or_default();
                DocSummary {
                    doc_id: d.doc_id.clone(),
                    system_id: d.system_id.clone(),
                    tokens: d.len(),
                    complete: annotators.len() >= state.config.k,
                    annotators,
                }
            })
            .collect(),
    )
}

async fn get_doc(State(state): State<Shared>, Path(id): Path<String>) -> Reply<Document> {
    find_doc(&state, &id).cloned().map(Json)
}

async fn get_annotations(State(state): State<Shared>, Path((id, annotator)): Path<(String, String)>) -> Reply<AnnotationSet> {
    find_doc(&state, &id)?;
    state
        .sets
        .read()
        .await
        .get(&(id.clone(), annotator.clone()))
        .cloned()
        .map(Json)
        .ok_or_else(|| Failure::new(StatusCode::NOT_FOUND, "no_annotations", format!("`{annotator}` has not submitted `{id}`")))
}

/// Stores a set. Its `version` must be one more than the stored version
/// (1 for a first submission); anything else is a conflict.
async fn put_annotations(
    State(state): State<Shared>,
    Path((id, annotator)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Reply<PutAck> {
    authorize(&state, &headers, &annotator)?;
    let doc = find_doc(&state, &id)?;
    let set = accept_set(&body, doc, &annotator)?;

    let key = (id.clone(), annotator.clone());
    let mut sets = state.sets.write().await;
    let current = sets.get(&key).map_or(0, |s| s.version);
    if set.version != current + 1 {
        let mut f = Failure::new(
            StatusCode::CONFLICT,
            "version_conflict",
            format!("stored version is {current}; submit version {}", current + 1),
        );
        f.body.current_version = Some(current);
        return Err(f);
    }
    let root = state.config.corpus.clone();
    let to_save = set.clone();
    tokio::task::spawn_blocking(move || save_annotation_set(&root, &to_save))
        .await
        .map_err(Failure::internal)?
        .map_err(Failure::internal)?;
    let version = set.version;
    sets.insert(key, set);
    tracing::info!(doc = %id, annotator = %annotator, version, "annotation set stored");
    Ok(Json(PutAck {
        doc_id: id,
        annotator_id: annotator,
        version,
    }))
}

async fn get_gold(State(state): State<Shared>, Path(id): Path<String>) -> Reply<GoldStandard> {
    let doc = find_doc(&state, &id)?.clone();
    let mine: Vec<AnnotationSet> = state.sets.read().await.values().filter(|s| s.doc_id == id).cloned().collect();
    if mine.len() < 2 {
        return Err(Failure::new(
            StatusCode::NOT_FOUND,
            "gold_unavailable",
            format!("`{id}` has {} annotation set(s); gold needs at least 2", mine.len()),
        ));
    }
    let config = state.config.adjudication.clone();
    let result = tokio::task::spawn_blocking(move || adjudicate_document(&doc, &mine, &config))
        .await
        .map_err(Failure::internal)?
        .map_err(|e| Failure::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()))?;
    Ok(Json(result.gold))
}

async fn qualify(
    State(state): State<Shared>,
    Path(annotator): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Reply<QualificationResult> {
    authorize(&state, &headers, &annotator)?;
    let reference = state
        .reference
        .as_ref()
        .ok_or_else(|| Failure::new(StatusCode::NOT_FOUND, "no_reference", "no qualification document configured"))?;
    let set = accept_set(&body, &reference.doc, &annotator)?;
    let config = QualificationConfig {
        threshold: state.config.threshold,
        span_only: state.config.span_only,
        lexicon: state.config.adjudication.lexicon.clone(),
    };
    let result = score_qualification(&set, &reference.gold, &reference.doc, &config)
        .map_err(|e| Failure::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()))?;

    let mut qualified = state.qualified.write().await;
    let path = state.qualification_path(&annotator);
    let json = to_canonical_json(&result);
    tokio::task::spawn_blocking(move || write_atomic(&path, &json))
        .await
        .map_err(Failure::internal)?
        .map_err(Failure::internal)?;
    qualified.insert(annotator, result.clone());
    Ok(Json(result))
}

async fn get_taxonomy() -> Json<Vec<TaxonomyEntry>> {
    Json(taxonomy())
}

async fn next_doc(State(state): State<Shared>, Path(annotator): Path<String>, headers: HeaderMap) -> Reply<NextDoc> {
    authorize(&state, &headers, &annotator)?;
    if let Some(reference) = &state.reference {
        let passed = state.qualified.read().await.get(&annotator).is_some_and(|r| r.passed);
        if !passed {
            return Err(Failure::new(
                StatusCode::FORBIDDEN,
                "not_qualified",
                format!("`{annotator}` has not passed qualification on `{}`", reference.doc.doc_id),
            ));
        }
    }
    let sets = state.sets.read().await;
    let subs = AppState::submissions(&sets);
    let reference = state.config.reference_doc.as_deref();
    let candidates = state.docs.keys().map(String::as_str).filter(|id| Some(*id) != reference);
    Ok(Json(NextDoc {
        doc_id: assignment_policy(candidates, &subs, &annotator, state.config.k),
    }))
}
