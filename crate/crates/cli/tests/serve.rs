mod support;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use support::{assert_conforms, populate_export_dir, schema};
use tower::ServiceExt;
use tracelens::study::{read_ratings, RATINGS_HEADER};
use tracelens_cli::serve::{router, AppState};

struct Fixture {
    dir: tempfile::TempDir,
    app: Router,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("export")).unwrap();
        populate_export_dir(&dir.path().join("export"));
        let app = app(dir.path());
        Fixture { dir, app }
    }

    fn ratings(&self) -> std::path::PathBuf {
        self.dir.path().join("ratings.csv")
    }

    fn first_page(&self) -> String {
        let pages: Value = serde_json::from_slice(
            &std::fs::read(self.dir.path().join("export/pages.json")).unwrap(),
        )
        .unwrap();
        pages[0]["id"].as_str().unwrap().to_string()
    }
}

fn app(root: &Path) -> Router {
    let state = AppState::load(&root.join("export"), None, &root.join("ratings.csv")).unwrap();
    router(Arc::new(state))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (
        status,
        res.into_body().collect().await.unwrap().to_bytes().to_vec(),
    )
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::post("/ratings")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    send(app, req).await
}

fn rating(participant: &str, page: &str) -> Value {
    json!({
        "participant": participant,
        "page": page,
        "exp1": [1, 2, 3, 4, 5],
        "exp2": [7, 6, 5, 4, 3],
        "more_info": "no",
        "feedback": "",
        "justification": "The second one, \"because\", it is shorter."
    })
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn explanation_list_and_documents_conform() {
    let f = Fixture::new();
    let (status, body) = get(&f.app, "/explanations").await;
    assert_eq!(status, StatusCode::OK);
    let list = json_of(&body);
    assert_conforms(&schema("explanation_list"), &list, "list");
    let ids: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 18);
    assert!(!ids.contains(&"pages"));

    let export = schema("export");
    for id in ids {
        let (status, body) = get(&f.app, &format!("/explanations/{id}")).await;
        assert_eq!(status, StatusCode::OK);
        let on_disk = std::fs::read(f.dir.path().join(format!("export/{id}.json"))).unwrap();
        assert_eq!(body, on_disk, "{id}");
        assert_conforms(&export, &json_of(&body), id);
    }
}

#[tokio::test]
async fn pages_conform() {
    let f = Fixture::new();
    let (status, body) = get(&f.app, "/pages").await;
    assert_eq!(status, StatusCode::OK);
    let page_schema = schema("page");
    let pages = json_of(&body);
    assert_eq!(pages.as_array().unwrap().len(), 18);
    for p in pages.as_array().unwrap() {
        let id = p["id"].as_str().unwrap();
        assert_conforms(&page_schema, p, id);
        let (status, one) = get(&f.app, &format!("/pages/{id}")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(&json_of(&one), p);
    }
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let f = Fixture::new();
    for uri in ["/explanations/atlantis", "/pages/atlantis", "/nowhere"] {
        let (status, _) = get(&f.app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn valid_rating_appends_exactly_one_row() {
    let f = Fixture::new();
    let page = f.first_page();
    let before = std::fs::read_to_string(f.ratings()).unwrap();
    assert_eq!(before, format!("{RATINGS_HEADER}\n"));

    let record = rating("P01", &page);
    let (status, body) = post(&f.app, record.to_string()).await;
    assert_eq!(
        status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&body)
    );
    assert_conforms(&schema("rating"), &json_of(&body), "echo");

    let after = std::fs::read_to_string(f.ratings()).unwrap();
    assert!(after.starts_with(&before));
    let rows = read_ratings(after.as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(serde_json::to_value(&rows[0]).unwrap(), record);
}

#[tokio::test]
async fn rejected_ratings_leave_the_log_untouched() {
    let f = Fixture::new();
    let page = f.first_page();
    let rating_schema = schema("rating");

    let mut out_of_range = rating("P01", &page);
    out_of_range["exp1"][2] = json!(9);
    let mut short = rating("P01", &page);
    short["exp2"] = json!([1, 2, 3]);
    let mut extra = rating("P01", &page);
    extra["score"] = json!(1);
    let mut missing = rating("P01", &page);
    missing.as_object_mut().unwrap().remove("more_info");
    let mut bad_choice = rating("P01", &page);
    bad_choice["more_info"] = json!("maybe");

    for bad in [&out_of_range, &short, &extra, &missing, &bad_choice] {
        // The schema and the service agree on what is invalid.
        assert!(!rating_schema.is_valid(bad), "{bad}");
        let (status, body) = post(&f.app, bad.to_string()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(json_of(&body)["error"].is_string());
    }
    let (status, _) = post(&f.app, "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = post(&f.app, rating("P01", "atlantis").to_string()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    assert_eq!(
        std::fs::read_to_string(f.ratings()).unwrap(),
        format!("{RATINGS_HEADER}\n")
    );
}

#[tokio::test]
async fn duplicate_rating_conflicts_even_after_restart() {
    let f = Fixture::new();
    let page = f.first_page();
    let (status, _) = post(&f.app, rating("P01", &page).to_string()).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, _) = post(&f.app, rating("P01", &page).to_string()).await;
    assert_eq!(status, StatusCode::CONFLICT);

    // A fresh service over the same log keeps the header single and still
    // knows the earlier submission.
    let restarted = app(f.dir.path());
    let (status, _) = post(&restarted, rating("P01", &page).to_string()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = post(&restarted, rating("P02", &page).to_string()).await;
    assert_eq!(status, StatusCode::CREATED);

    let log = std::fs::read_to_string(f.ratings()).unwrap();
    assert_eq!(log.matches(RATINGS_HEADER).count(), 1);
    assert_eq!(read_ratings(log.as_bytes()).unwrap().len(), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_produce_whole_rows() {
    let f = Fixture::new();
    let page = f.first_page();
    let mut tasks = Vec::new();
    for i in 0..64 {
        let app = f.app.clone();
        let body = rating(&format!("P{i:02}"), &page).to_string();
        tasks.push(tokio::spawn(async move { post(&app, body).await.0 }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::CREATED);
    }
    let rows = read_ratings(std::fs::File::open(f.ratings()).unwrap()).unwrap();
    assert_eq!(rows.len(), 64);
    let mut participants: Vec<&str> = rows.iter().map(|r| r.participant.as_str()).collect();
    participants.sort();
    participants.dedup();
    assert_eq!(participants.len(), 64);
}

#[test]
fn explicit_pages_path_must_exist() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("pages.json");
    let res = AppState::load(dir.path(), Some(&missing), &dir.path().join("r.csv"));
    assert!(res.is_err());
    // Without pages the service still starts and serves an empty list.
    assert!(AppState::load(dir.path(), None, &dir.path().join("r.csv")).is_ok());
}

#[test]
fn corrupt_export_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), b"{\"layers\": []}").unwrap();
    assert!(AppState::load(dir.path(), None, &dir.path().join("r.csv")).is_err());
}
