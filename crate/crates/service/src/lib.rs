//! Read-only HTTP JSON API over a built index.
//!
//! | route                                        | body                             |
//! |----------------------------------------------|----------------------------------|
//! | `GET /api/search`                            | paged [`QueryResult`]            |
//! | `GET /api/regions/{region}/partners?species` | list of [`PartnerCount`]         |
//! | `GET /api/citations?subject&object&region`   | list of [`Citation`]             |
//! | `GET /api/documents/{id}`                    | the stored document with context |
//! | `GET /api/meta/concepts`                     | concept inventory and regions    |
//!
//! Every error body has the shape `{"status", "code", "message"}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query as RawQuery, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Serialize;
use tower_http::cors::{Any, CorsLayer};

use phytomine_core::index::{
    Citation, DocHit, Index, IndexError, PartnerCount, Query, QueryResult, SortOrder,
};
use phytomine_core::ConceptType;

pub const DEFAULT_LIMIT: usize = 100;
pub const MAX_LIMIT: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code,
            message: message.into(),
        }
    }

    pub fn invalid_query(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_query", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::InvalidQuery(m) => ApiError::invalid_query(m),
            IndexError::UnknownRegion(r) => ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_region",
                format!("unknown region {r:?}"),
            ),
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                other.to_string(),
            ),
        }
    }
}

type Params = HashMap<String, String>;

fn param<'a>(p: &'a Params, names: &[&str]) -> Option<&'a str> {
    names
        .iter()
        .find_map(|n| p.get(*n))
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
}

fn date_param(p: &Params, names: &[&str]) -> Result<Option<NaiveDate>, ApiError> {
    param(p, names)
        .map(|s| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| {
                ApiError::invalid_query(format!("{}: bad date {s:?}, want YYYY-MM-DD", names[0]))
            })
        })
        .transpose()
}

fn usize_param(p: &Params, name: &str, default: usize) -> Result<usize, ApiError> {
    match param(p, &[name]) {
        None => Ok(default),
        Some(s) => s.parse().map_err(|_| {
            ApiError::invalid_query(format!("{name}: expected a non-negative integer"))
        }),
    }
}

/// Decodes search parameters: `crop`, `disease`, `pest`, `from`, `to`,
/// `q`, `region`, `sort` (`date_desc` | `date_asc`, hyphens also accepted).
pub fn query_from_params(p: &Params) -> Result<Query, ApiError> {
    let sort = match param(p, &["sort"]) {
        None => SortOrder::default(),
        Some(s) => s
            .parse()
            .map_err(|e: IndexError| ApiError::invalid_query(e.to_string()))?,
    };
    let q = Query {
        crop: param(p, &["crop"]).map(Into::into),
        disease: param(p, &["disease"]).map(Into::into),
        pest: param(p, &["pest"]).map(Into::into),
        date_from: date_param(p, &["from", "date_from"])?,
        date_to: date_param(p, &["to", "date_to"])?,
        free_word: param(p, &["q", "free_word"]).map(Into::into),
        region: param(p, &["region"]).map(Into::into),
        sort,
    };
    q.validate()?;
    Ok(q)
}

/// One page of a [`QueryResult`]. `total` and `region_hits` cover every
/// match; `docs` holds `limit` of them starting at `offset`.
#[derive(Debug, Clone, Serialize)]
pub struct SearchPage {
    pub docs: Vec<DocHit>,
    pub region_hits: std::collections::BTreeMap<String, usize>,
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
}

impl SearchPage {
    fn from_result(r: QueryResult, offset: usize, limit: usize) -> Self {
        let docs = r.docs.into_iter().skip(offset).take(limit).collect();
        Self {
            docs,
            region_hits: r.region_hits,
            total: r.total,
            offset,
            limit,
        }
    }
}

async fn search(
    State(index): State<Arc<Index>>,
    RawQuery(p): RawQuery<Params>,
) -> Result<Json<SearchPage>, ApiError> {
    let q = query_from_params(&p)?;
    let limit = usize_param(&p, "limit", DEFAULT_LIMIT)?.min(MAX_LIMIT);
    let offset = usize_param(&p, "offset", 0)?;
    let result = index.search(&q)?;
    Ok(Json(SearchPage::from_result(result, offset, limit)))
}

async fn partners(
    State(index): State<Arc<Index>>,
    Path(region): Path<String>,
    RawQuery(p): RawQuery<Params>,
) -> Result<Json<Vec<PartnerCount>>, ApiError> {
    let species = param(&p, &["species"])
        .ok_or_else(|| ApiError::invalid_query("missing `species` parameter"))?;
    Ok(Json(index.partners(&region, species)?))
}

async fn citations(
    State(index): State<Arc<Index>>,
    RawQuery(p): RawQuery<Params>,
) -> Result<Json<Vec<Citation>>, ApiError> {
    let subject = param(&p, &["subject"])
        .ok_or_else(|| ApiError::invalid_query("missing `subject` parameter"))?;
    let object = param(&p, &["object"])
        .ok_or_else(|| ApiError::invalid_query("missing `object` parameter"))?;
    Ok(Json(index.citations(
        subject,
        object,
        param(&p, &["region"]),
    )))
}

async fn document(
    State(index): State<Arc<Index>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    match index.document(&id) {
        Some(d) => Ok(Json(d).into_response()),
        None => Err(ApiError::not_found(format!("no document {id:?}"))),
    }
}

#[derive(Serialize)]
struct ConceptSummary<'a> {
    id: &'a str,
    label: &'a str,
    docs: usize,
}

#[derive(Serialize)]
struct ConceptGroup<'a> {
    concept: ConceptType,
    entries: Vec<ConceptSummary<'a>>,
}

#[derive(Serialize)]
struct ConceptInventory<'a> {
    concepts: Vec<ConceptGroup<'a>>,
    regions: &'a [String],
}

async fn concepts(State(index): State<Arc<Index>>) -> Response {
    let groups = ConceptType::ALL
        .into_iter()
        .map(|concept| ConceptGroup {
            concept,
            entries: index
                .concepts()
                .iter()
                .filter(|e| e.concept == concept)
                .map(|e| ConceptSummary {
                    id: &e.id,
                    label: &e.label,
                    docs: e.docs.len(),
                })
                .collect(),
        })
        .collect();
    Json(ConceptInventory {
        concepts: groups,
        regions: index.regions().names(),
    })
    .into_response()
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "not_found",
        "the API is read-only",
    )
}

/// Builds the API router over a loaded index.
pub fn router(index: Arc<Index>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET])
        .allow_headers(Any);
    Router::new()
        .route("/api/search", get(search))
        .route("/api/regions/{region}/partners", get(partners))
        .route("/api/citations", get(citations))
        .route("/api/documents/{id}", get(document))
        .route("/api/meta/concepts", get(concepts))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors)
        .with_state(index)
}

/// Serves the API until Ctrl-C.
pub async fn serve(index: Arc<Index>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(index))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
