//! JSON over HTTP for the explorer:
//!
//! * `GET /explanations` lists `{id, scenario, domain}` for every export
//!   document in the export directory; `GET /explanations/{id}` returns one.
//! * `GET /pages` returns the study pages; `GET /pages/{id}` returns one.
//! * `POST /ratings` validates one rating record and appends it to the
//!   ratings CSV.
//!
//! Explanation and page bodies are byte-for-byte what the CLI writes to disk.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use clap::Args;
use serde::Serialize;
use tracelens::render::ExportDocument;
use tracelens::study::{pages_from_json, read_ratings, RatingRecord, StudyPage, RATINGS_HEADER};
use tracelens::trace::Domain;

use crate::commands::{io_error, read, CommandError};

/// Name of the pages file looked up in the export directory when `--pages`
/// is not given.
pub const DEFAULT_PAGES_FILE: &str = "pages.json";

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Directory of layered-explanation JSON documents.
    #[arg(long)]
    pub export: PathBuf,
    /// Ratings CSV; created with a header if missing.
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Study pages file; defaults to `pages.json` in the export directory.
    #[arg(long)]
    pub pages: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplanationSummary {
    pub id: String,
    pub scenario: String,
    pub domain: Domain,
}

struct Explanation {
    summary: ExplanationSummary,
    body: Vec<u8>,
}

struct RatingsLog {
    file: File,
    seen: BTreeSet<(String, String)>,
}

/// Everything the service reads, loaded once at startup, plus the ratings
/// log, which is the only thing it writes.
pub struct AppState {
    explanations: BTreeMap<String, Explanation>,
    pages: Vec<StudyPage>,
    pages_body: Vec<u8>,
    ratings: Mutex<RatingsLog>,
}

impl AppState {
    pub fn load(
        export_dir: &Path,
        pages: Option<&Path>,
        ratings: &Path,
    ) -> Result<Self, CommandError> {
        let pages_path = pages
            .map(Path::to_path_buf)
            .unwrap_or_else(|| export_dir.join(DEFAULT_PAGES_FILE));

        let mut files: Vec<PathBuf> = std::fs::read_dir(export_dir)
            .map_err(io_error(export_dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json") && *p != pages_path)
            .collect();
        files.sort();
        let mut explanations = BTreeMap::new();
        for path in files {
            let id = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let body = read(&path)?;
            let doc = ExportDocument::from_json(&body)
                .map_err(|e| CommandError::Serve(format!("{}: {e}", path.display())))?;
            let summary = ExplanationSummary {
                id: id.clone(),
                scenario: doc.scenario,
                domain: doc.domain,
            };
            explanations.insert(id, Explanation { summary, body });
        }

        let (pages, pages_body) = if pages_path.exists() {
            let body = read(&pages_path)?;
            (pages_from_json(&body)?, body)
        } else if pages.is_some() {
            return Err(CommandError::Serve(format!(
                "{}: not found",
                pages_path.display()
            )));
        } else {
            (Vec::new(), b"[]\n".to_vec())
        };

        Ok(AppState {
            explanations,
            pages,
            pages_body,
            ratings: Mutex::new(open_ratings(ratings)?),
        })
    }
}

fn open_ratings(path: &Path) -> Result<RatingsLog, CommandError> {
    let existing = match std::fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_error(path)(e)),
    };
    let seen = if existing.is_empty() {
        BTreeSet::new()
    } else {
        read_ratings(existing.as_slice())?
            .into_iter()
            .map(|r| (r.participant, r.page))
            .collect()
    };
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_error(path))?;
    if existing.is_empty() {
        file.write_all(format!("{RATINGS_HEADER}\n").as_bytes())
            .map_err(io_error(path))?;
    }
    Ok(RatingsLog { file, seen })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/explanations", get(list_explanations))
        .route("/explanations/{id}", get(get_explanation))
        .route("/pages", get(list_pages))
        .route("/pages/{id}", get(get_page))
        .route("/ratings", axum::routing::post(post_rating))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn json_bytes(body: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn list_explanations(State(state): State<Arc<AppState>>) -> Json<Vec<ExplanationSummary>> {
    Json(
        state
            .explanations
            .values()
            .map(|e| e.summary.clone())
            .collect(),
    )
}

async fn get_explanation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    match state.explanations.get(&id) {
        Some(e) => json_bytes(e.body.clone()),
        None => error(StatusCode::NOT_FOUND, format!("unknown explanation `{id}`")),
    }
}

async fn list_pages(State(state): State<Arc<AppState>>) -> Response {
    json_bytes(state.pages_body.clone())
}

async fn get_page(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Response {
    match state.pages.iter().find(|p| p.id == id) {
        Some(page) => Json(page).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown page `{id}`")),
    }
}

async fn post_rating(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let record: RatingRecord = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if let Err(e) = record.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    if !state.pages.is_empty() && !state.pages.iter().any(|p| p.id == record.page) {
        return error(
            StatusCode::NOT_FOUND,
            format!("unknown page `{}`", record.page),
        );
    }

    let mut log = state.ratings.lock().unwrap_or_else(|e| e.into_inner());
    let key = (record.participant.clone(), record.page.clone());
    if log.seen.contains(&key) {
        return error(
            StatusCode::CONFLICT,
            format!("participant `{}` already rated page `{}`", key.0, key.1),
        );
    }
    // One write per record keeps rows whole if the process is interrupted.
    let row = record.to_csv_row();
    if let Err(e) = log
        .file
        .write_all(row.as_bytes())
        .and_then(|_| log.file.flush())
    {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    log.seen.insert(key);
    drop(log);
    (StatusCode::CREATED, Json(record)).into_response()
}

/// Serves until interrupted.
pub fn run(args: ServeArgs) -> Result<(), CommandError> {
    let state = Arc::new(AppState::load(
        &args.export,
        args.pages.as_deref(),
        &args.ratings,
    )?);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CommandError::Serve(format!("bad address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CommandError::Serve(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CommandError::Serve(format!("bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CommandError::Serve(e.to_string()))?;
        eprintln!("listening on http://{local}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CommandError::Serve(e.to_string()))
    })
}
