use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use tabletide::io::{self, CsvOptions};
use tabletide::provenance::ProvenanceGraph;
use tabletide::samples;
use tabletide::value::Value;
use tabletide_service::cli::{main_with, EXIT_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["tabletide"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn states_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let opts = CsvOptions::default();
    io::save_csv(&samples::state_population(), &dir.path().join("pop.csv"), &opts).unwrap();
    io::save_csv(&samples::refugee_arrivals_by_state(), &dir.path().join("ref.csv"), &opts).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn listing(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

const JOIN: &str = "load \"pop.csv\" as pop\nload \"ref.csv\" as ref\njoined = match pop with ref on state\nexport joined to \"joined.csv\"\n";

#[test]
fn run_writes_exports_provenance_and_diagnostics() {
    let dir = states_dir();
    let wr = write(dir.path(), "join.wr", JOIN);
    let dot = dir.path().join("graph.dot");
    let diags = dir.path().join("diags.jsonl");
    let (code, out, err) = cli(&[
        "run",
        wr.to_str().unwrap(),
        "--provenance",
        "dot",
        dot.to_str().unwrap(),
        "--diagnostics",
        diags.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("joined: 50 rows x 3 columns"), "{out}");
    assert!(out.contains("LossyJoin"));
    assert!(err.is_empty(), "{err}");
    let joined = io::load_csv(&dir.path().join("joined.csv"), &CsvOptions::default()).unwrap();
    assert_eq!(joined.row_count(), 50);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let report = tabletide::diagnostic::from_report(&std::fs::read_to_string(&diags).unwrap()).unwrap();
    assert!(report.iter().any(|d| d.kind() == tabletide::diagnostic::DiagnosticKind::LossyJoin));
}

#[test]
fn run_writes_provenance_json() {
    let dir = states_dir();
    let wr = write(dir.path(), "join.wr", JOIN);
    let json = dir.path().join("graph.json");
    let (code, _, err) = cli(&["run", wr.to_str().unwrap(), "--provenance", "json", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let graph = ProvenanceGraph::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(graph.edges().len(), 3);
    let exported: Vec<&str> = graph.nodes().iter().filter(|n| n.exported).map(|n| n.handle.as_str()).collect();
    assert_eq!(exported, vec!["joined"]);
}

#[test]
fn fail_on_warning_turns_a_lossy_join_into_a_failure() {
    let dir = states_dir();
    let wr = write(dir.path(), "join.wr", JOIN);
    let (code, _, err) = cli(&["run", wr.to_str().unwrap(), "--fail-on", "warning"]);
    assert_eq!(code, EXIT_FAILED);
    assert!(err.contains("--fail-on warning"));
    let (code, _, _) = cli(&["run", wr.to_str().unwrap(), "--fail-on", "never"]);
    assert_eq!(code, EXIT_OK);

    let clean = write(dir.path(), "clean.wr", "load \"pop.csv\" as pop\nexport pop to \"copy.csv\"\n");
    let (code, _, err) = cli(&["run", clean.to_str().unwrap(), "--fail-on", "warning"]);
    assert_eq!(code, EXIT_OK, "{err}");
}

#[test]
fn parse_errors_exit_2_with_a_position() {
    let dir = states_dir();
    let wr = write(dir.path(), "bad.wr", "load \"pop.csv\" as pop\nx = subset pop wear a == 1\n");
    let (code, out, err) = cli(&["run", wr.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty());
    assert!(err.contains("bad.wr:2:16: error:"), "{err}");
    assert!(err.contains("`wear`"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["run"]).0, EXIT_USAGE);
    let dir = states_dir();
    let wr = write(dir.path(), "join.wr", JOIN);
    assert_eq!(cli(&["run", wr.to_str().unwrap(), "--provenance", "svg", "x.svg"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn missing_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = cli(&["run", dir.path().join("nope.wr").to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);
    assert!(err.contains("nope.wr"));
    let wr = write(dir.path(), "load.wr", "load \"absent.csv\" as a\nexport a to \"b.csv\"\n");
    assert_eq!(cli(&["run", wr.to_str().unwrap()]).0, EXIT_IO);
}

#[test]
fn runtime_operation_errors_exit_1() {
    let dir = states_dir();
    let wr = write(dir.path(), "bad.wr", "load \"pop.csv\" as pop\nx = filter pop where nope > 1\nexport x to \"x.csv\"\n");
    let (code, out, err) = cli(&["run", wr.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILED);
    assert!(err.contains("statement 2 failed"), "{err}");
    assert!(out.contains("[1] load"));
}

#[test]
fn check_accepts_clean_pipelines_and_writes_nothing() {
    let dir = states_dir();
    let wr = write(dir.path(), "join.wr", JOIN);
    let before = listing(dir.path());
    let (code, out, err) = cli(&["check", wr.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.is_empty());
    assert_eq!(listing(dir.path()), before);
}

#[test]
fn check_reports_unbound_handles_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let wr = write(dir.path(), "unbound.wr", "load \"a.csv\" as a\nx = extend a, b\nexport x to \"x.csv\"\n");
    let before = listing(dir.path());
    let (code, _, err) = cli(&["check", wr.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILED);
    assert!(err.contains("unbound.wr:2:"), "{err}");
    assert!(err.contains("[statement 2]"));
    assert!(err.contains("`b`"));
    assert_eq!(listing(dir.path()), before);

    let bad = write(dir.path(), "bad.wr", "x = = y");
    assert_eq!(cli(&["check", bad.to_str().unwrap()]).0, EXIT_USAGE);
    assert_eq!(listing(dir.path()).len(), before.len() + 1);
}

#[test]
fn profile_prints_one_line_per_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "t.csv", "name,score,when\nann,1.5,2020-01-02\nbob,,2020-01-03\n,3,\ncid,4.25,2020-02-01\n");
    let (code, out, err) = cli(&["profile", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "rows: 4");
    assert!(lines[1].starts_with("column"));
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("name "));
    assert!(lines[3].contains("float"));
    assert!(lines[3].contains("4.25"));
}

#[test]
fn profile_null_counts_match_a_recount() {
    let dir = tempfile::tempdir().unwrap();
    let text = "a,b,c\n1,,x\n,,y\n3,2,\n,5,z\n7,,\n";
    let csv = write(dir.path(), "t.csv", text);
    let (code, out, _) = cli(&["profile", "--json", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let profile: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mut expected = [0usize; 3];
    for line in text.lines().skip(1) {
        for (i, cell) in line.split(',').enumerate() {
            if cell.is_empty() {
                expected[i] += 1;
            }
        }
    }
    let got: Vec<usize> = profile["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["nulls"].as_u64().unwrap() as usize)
        .collect();
    assert_eq!(got, expected);
    assert_eq!(profile["rows"], 5);
}

#[test]
fn profile_of_a_missing_file_exits_3() {
    let (code, out, err) = cli(&["profile", "/definitely/not/here.csv"]);
    assert_eq!(code, EXIT_IO);
    assert!(out.is_empty());
    assert!(!err.is_empty());
}

/// Runs the same pipeline through the command line and a service session
/// and compares the exported rows.
#[tokio::test]
async fn cli_and_service_exports_agree() {
    use axum::body::Body;
    use axum::http::{Request, StatusCode};
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    let cli_dir = states_dir();
    let svc_dir = states_dir();
    let src = "load \"pop.csv\" as pop\nload \"ref.csv\" as ref\nall = supplement pop with ref on state\n\
               (big, small) = subset all where population > 5000000\n\
               s = summarize big agg sum(arrivals) as n, count() as k\nexport big to \"big.csv\"\nexport s to \"s.csv\"\n";
    let wr = write(cli_dir.path(), "p.wr", src);
    assert_eq!(cli(&["run", wr.to_str().unwrap()]).0, EXIT_OK);

    let app = tabletide_service::router(tabletide_service::AppState::new(tabletide_service::Config {
        data_dir: Some(svc_dir.path().to_path_buf()),
        ..Default::default()
    }));
    let resp = app.clone().oneshot(Request::post("/session").body(Body::empty()).unwrap()).await.unwrap();
    let body: serde_json::Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let id = body["id"].as_str().unwrap();
    let resp = app
        .oneshot(Request::post(format!("/session/{id}/pipeline")).body(Body::from(src)).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);

    for name in ["big.csv", "s.csv"] {
        let rows = |dir: &Path| -> Vec<Vec<Value>> {
            let t = io::load_csv(&dir.join(name), &CsvOptions::default()).unwrap();
            let mut rows: Vec<Vec<Value>> = (0..t.row_count()).map(|i| t.row(i)).collect();
            rows.sort();
            rows
        };
        assert_eq!(rows(cli_dir.path()), rows(svc_dir.path()), "{name}");
    }
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn_serve(args: &[&str]) -> (Server, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tabletide"))
        .arg("serve")
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    (Server(child), addr)
}

fn http_get(addr: &str, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    let status = resp.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = resp.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[test]
fn serve_answers_health_and_serves_static_assets() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>tabletide</html>").unwrap();
    let (_server, addr) = spawn_serve(&["--port", "0", "--static", ui.path().to_str().unwrap()]);
    let (status, body) = http_get(&addr, "/health");
    assert_eq!(status, 200);
    assert!(body.contains("\"ok\""), "{body}");
    let (status, body) = http_get(&addr, "/index.html");
    assert_eq!(status, 200);
    assert!(body.contains("<html>tabletide</html>"));
}

#[test]
fn serve_reads_the_port_from_the_environment() {
    let free = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_tabletide"))
        .arg("serve")
        .env("TABLETIDE_PORT", free.to_string())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let server = Server(child);
    assert_eq!(line.trim(), format!("listening on http://127.0.0.1:{free}"));
    drop(server);
}

#[test]
fn serve_on_an_occupied_port_exits_3() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let (code, out, err) = cli(&["serve", "--port", &port]);
    assert_eq!(code, EXIT_IO);
    assert!(out.is_empty());
    assert!(err.contains("cannot listen"), "{err}");
}
