//! Drives the HTTP API in process: create a session, upload the two state
//! tables, preview a lossy match, commit it, and read back the provenance.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tabletide::io::{write_csv, CsvOptions};
use tabletide::samples;
use tabletide_service::{router, AppState, Config};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn upload(app: &Router, id: &str, handle: &str, table: &tabletide::Table) -> StatusCode {
    let boundary = "example-boundary";
    let csv = write_csv(table, &CsvOptions::default()).unwrap();
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{handle}.csv\"\r\n\r\n{csv}\r\n\
         --{boundary}\r\nContent-Disposition: form-data; name=\"handle\"\r\n\r\n{handle}\r\n--{boundary}--\r\n"
    );
    let req = Request::builder()
        .method("POST")
        .uri(format!("/session/{id}/upload"))
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    app.clone().oneshot(req).await.unwrap().status()
}

#[tokio::main]
async fn main() {
    let app = router(AppState::new(Config::default()));
    let (_, session) = call(&app, "POST", "/session", None).await;
    let id = session["id"].as_str().unwrap().to_string();
    println!("session {id}");

    for (handle, table) in [("pop", samples::state_population()), ("ref", samples::refugee_arrivals_by_state())] {
        println!("upload {handle}: {}", upload(&app, &id, handle, &table).await);
    }

    let op = json!({"op": "match", "key": "state", "inputs": ["pop", "ref"], "outputs": ["joined"]});
    let (status, preview) = call(&app, "POST", &format!("/session/{id}/preview"), Some(op.clone())).await;
    println!("preview {status}: diagnostics {}", preview["diagnostics"]);

    let (status, applied) = call(&app, "POST", &format!("/session/{id}/op"), Some(op)).await;
    println!("commit {status}: {applied}");

    let (_, tables) = call(&app, "GET", &format!("/session/{id}/tables"), None).await;
    println!("tables: {tables}");
    let (_, page) = call(&app, "GET", &format!("/session/{id}/table/joined?offset=0&limit=3"), None).await;
    println!("first rows of joined: {}", page["rows"]);

    let pipeline = "(big, small) = subset joined where population > 5000000\naudit profile big\n";
    let (status, report) = call(&app, "POST", &format!("/session/{id}/pipeline"), Some(json!({ "source": pipeline }))).await;
    println!("pipeline {status}: {report}");

    let (_, graph) = call(&app, "GET", &format!("/session/{id}/provenance"), None).await;
    println!("provenance edges: {}", graph["edges"].as_array().map_or(0, Vec::len));
}
