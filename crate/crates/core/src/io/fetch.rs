use std::time::Duration;

use super::csv::{parse_csv, CsvOptions};
use super::json::parse_table_json;
use super::{IoError, Result};
use crate::table::Table;

const MAX_BODY: u64 = 64 * 1024 * 1024;

/// GETs a table over http(s) with a 30 second timeout.
pub fn fetch(url: &str, opts: &CsvOptions) -> Result<Table> {
    fetch_with(url, opts, Duration::from_secs(30))
}

/// GETs a table over http(s). A body that starts with `{` is read as the
/// JSON table format, anything else as CSV. The URL becomes the table's
/// attribution.
pub fn fetch_with(url: &str, opts: &CsvOptions, timeout: Duration) -> Result<Table> {
    let lower = url.to_ascii_lowercase();
    if !(lower.starts_with("http://") || lower.starts_with("https://")) {
        return Err(IoError::InvalidOptions(format!(
            "`{url}` is not an http(s) URL"
        )));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let mut resp = agent.get(url).call().map_err(|e| match e {
        ureq::Error::StatusCode(code) => IoError::HttpStatus { code },
        other => IoError::Network(other.to_string()),
    })?;
    let body = resp
        .body_mut()
        .with_config()
        .limit(MAX_BODY)
        .read_to_string()
        .map_err(|e| IoError::Network(e.to_string()))?;
    let table = if body.trim_start().starts_with('{') {
        parse_table_json(&body)?
    } else {
        parse_csv(&body, opts)?
    };
    Ok(table.with_attribution(url))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;
    use std::thread;

    /// Serves one canned response per connection, `n` times.
    fn serve(status: &str, body: &'static str, n: usize) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let status = status.to_string();
        thread::spawn(move || {
            for stream in listener.incoming().take(n) {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                while reader.read_line(&mut line).unwrap() > 0 && line != "\r\n" {
                    line.clear();
                }
                write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        format!("http://{addr}/data.csv")
    }

    #[test]
    fn csv_body_becomes_a_table() {
        let url = serve("200 OK", "a,b\n1,x\n", 1);
        let t = fetch(&url, &CsvOptions::default()).unwrap();
        assert_eq!(t.row_count(), 1);
        assert_eq!(t.attribution(), Some(url.as_str()));
    }

    #[test]
    fn status_codes_surface() {
        let url = serve("404 Not Found", "", 1);
        assert_eq!(
            fetch(&url, &CsvOptions::default()),
            Err(IoError::HttpStatus { code: 404 })
        );
    }

    #[test]
    fn rejects_other_schemes() {
        assert!(matches!(
            fetch("ftp://example.org/a.csv", &CsvOptions::default()),
            Err(IoError::InvalidOptions(_))
        ));
    }
}
