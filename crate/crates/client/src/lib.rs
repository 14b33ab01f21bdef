//! Typed async client for the annotation service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), annogold_client::ClientError> {
//! let client = annogold_client::Client::new("http://127.0.0.1:8080").with_token("s3cret");
//! if let Some(doc_id) = client.next("annotator-1").await?.doc_id {
//!     let doc = client.document(&doc_id).await?;
//!     println!("{} tokens", doc.tokens.len());
//! }
//! # Ok(()) }
//! ```

use annogold::adjudication::GoldStandard;
use annogold::api::{ApiError, DocSummary, NextDoc, PutAck, TaxonomyEntry};
use annogold::qualification::QualificationResult;
use annogold::text_model::{AnnotationSet, Document};
use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{status}: {} ({})", .body.message, .body.error)]
    Api { status: StatusCode, body: ApiError },
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("unexpected {status} response: {text}")]
    Unexpected { status: StatusCode, text: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } | ClientError::Unexpected { status, .. } => Some(*status),
            ClientError::Http(e) => e.status(),
        }
    }

    /// The machine-readable error code, when the service sent one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.error),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    token: Option<String>,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            token: None,
            http: reqwest::Client::new(),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let req = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        }
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        match serde_json::from_str::<ApiError>(&text) {
            Ok(body) => Err(ClientError::Api { status, body }),
            Err(_) => Err(ClientError::Unexpected { status, text }),
        }
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.send(self.request(Method::GET, path)).await
    }

    async fn with_body<B: Serialize + ?Sized, T: DeserializeOwned>(&self, method: Method, path: &str, body: &B) -> Result<T> {
        self.send(self.request(method, path).json(body)).await
    }

    pub async fn list_docs(&self) -> Result<Vec<DocSummary>> {
        self.get("/api/docs").await
    }

    pub async fn document(&self, doc_id: &str) -> Result<Document> {
        self.get(&format!("/api/docs/{doc_id}")).await
    }

    pub async fn annotations(&self, doc_id: &str, annotator: &str) -> Result<AnnotationSet> {
        self.get(&format!("/api/docs/{doc_id}/annotations/{annotator}")).await
    }

    /// Submits `set`; its `version` must be one past the stored version.
    pub async fn put_annotations(&self, set: &AnnotationSet) -> Result<PutAck> {
        let path = format!("/api/docs/{}/annotations/{}", set.doc_id, set.annotator_id);
        self.with_body(Method::PUT, &path, set).await
    }

    /// Sends an arbitrary JSON body to the annotation endpoint.
    pub async fn put_raw(&self, doc_id: &str, annotator: &str, body: &serde_json::Value) -> Result<PutAck> {
        self.with_body(Method::PUT, &format!("/api/docs/{doc_id}/annotations/{annotator}"), body).await
    }

    pub async fn gold(&self, doc_id: &str) -> Result<GoldStandard> {
        self.get(&format!("/api/gold/{doc_id}")).await
    }

    pub async fn qualify(&self, set: &AnnotationSet) -> Result<QualificationResult> {
        self.with_body(Method::POST, &format!("/api/qualify/{}", set.annotator_id), set).await
    }

    pub async fn taxonomy(&self) -> Result<Vec<TaxonomyEntry>> {
        self.get("/api/taxonomy").await
    }

    pub async fn next(&self, annotator: &str) -> Result<NextDoc> {
        self.get(&format!("/api/next/{annotator}")).await
    }
}
