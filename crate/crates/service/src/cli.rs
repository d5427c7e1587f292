//! The `tabletide` command line: run, check and profile pipelines and
//! tables, or serve the HTTP API.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use tabletide::audit::{profile_summary, Profile};
use tabletide::diagnostic::{to_report, Severity as DiagSeverity};
use tabletide::dsl::{self, Severity};
use tabletide::io::{self, CsvOptions};
use tabletide::value::format_float;
use tabletide::workspace::{FileAccess, Workspace};
use tabletide::OpError;

use crate::{Config, DEFAULT_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tabletide", version, about = "Multi-table wrangling with provenance and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FailOn {
    Warning,
    Never,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, check and execute a .wr pipeline. Relative paths in the
    /// pipeline resolve against its directory.
    Run {
        pipeline: PathBuf,
        /// Write the provenance graph as `dot` or `json`.
        #[arg(long, num_args = 2, value_names = ["FORMAT", "PATH"])]
        provenance: Option<Vec<String>>,
        /// Write every diagnostic as JSON Lines.
        #[arg(long, value_name = "PATH")]
        diagnostics: Option<PathBuf>,
        /// Exit with 1 when any warning-level diagnostic is raised.
        #[arg(long, value_enum, default_value = "never")]
        fail_on: FailOn,
    },
    /// Print a per-column summary of a CSV file.
    Profile {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Parse and statically check a pipeline without running it.
    Check { pipeline: PathBuf },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "TABLETIDE_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of UI assets to serve at `/`.
        #[arg(long = "static", value_name = "DIR")]
        static_dir: Option<PathBuf>,
        /// Directory pipelines may load from and export to.
        #[arg(long, value_name = "DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        allow_fetch: bool,
        /// Seconds before an idle session is dropped.
        #[arg(long, default_value_t = 3600)]
        idle_timeout: u64,
    },
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Run {
            pipeline,
            provenance,
            diagnostics,
            fail_on,
        } => run(&pipeline, provenance.as_deref(), diagnostics.as_deref(), fail_on, out, err),
        Command::Profile { csv, json } => profile(&csv, json, out, err),
        Command::Check { pipeline } => check(&pipeline, err),
        Command::Serve {
            port,
            host,
            static_dir,
            data_dir,
            allow_fetch,
            idle_timeout,
        } => {
            let config = Config {
                static_dir,
                data_dir,
                allow_fetch,
                idle_timeout: std::time::Duration::from_secs(idle_timeout),
                ..Config::default()
            };
            serve(&host, port, config, out, err)
        }
    }
}

fn read_pipeline(path: &Path, err: &mut dyn Write) -> Result<dsl::Pipeline, i32> {
    let source = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        EXIT_IO
    })?;
    dsl::parse(&source).map_err(|e| {
        let _ = writeln!(err, "{}:{}:{}: error: {} (at `{}`)", path.display(), e.line, e.column, e.message, e.token);
        EXIT_USAGE
    })
}

/// Prints issues to `err`; returns whether any was an error.
fn report_issues(path: &Path, p: &dsl::Pipeline, err: &mut dyn Write) -> bool {
    let issues = dsl::check(p);
    for i in &issues {
        let _ = writeln!(err, "{}:{i} [statement {}]", path.display(), i.statement);
    }
    issues.iter().any(|i| i.severity == Severity::Error)
}

fn check(path: &Path, err: &mut dyn Write) -> i32 {
    let p = match read_pipeline(path, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if report_issues(path, &p, err) {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

fn write_file(path: &Path, text: &str, err: &mut dyn Write) -> bool {
    match std::fs::write(path, text) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            false
        }
    }
}

fn run(
    path: &Path,
    provenance: Option<&[String]>,
    diagnostics: Option<&Path>,
    fail_on: FailOn,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if let Some([format, _]) = provenance {
        if format != "dot" && format != "json" {
            let _ = writeln!(err, "error: --provenance format must be `dot` or `json`, not `{format}`");
            return EXIT_USAGE;
        }
    }
    let p = match read_pipeline(path, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if report_issues(path, &p, err) {
        return EXIT_FAILED;
    }
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let mut ws = Workspace::new(FileAccess::Relative(base));
    let (report, mut code) = match dsl::execute(&p, &mut ws) {
        Ok(r) => (r, EXIT_OK),
        Err(e) => {
            let _ = writeln!(
                err,
                "{}:{}:{}: error: statement {} failed: {}",
                path.display(),
                e.line,
                e.column,
                e.statement,
                e.error
            );
            let code = match e.error {
                OpError::Io(_) | OpError::PathDenied(_) => EXIT_IO,
                _ => EXIT_FAILED,
            };
            (e.completed, code)
        }
    };
    for s in &report.statements {
        let _ = writeln!(out, "[{}] {}", s.index, s.text);
        for h in &s.bound {
            if let Some(t) = ws.table(h) {
                let _ = writeln!(out, "    {h}: {} rows x {} columns", t.row_count(), t.column_count());
            }
        }
        for d in &s.diagnostics {
            let _ = writeln!(out, "    {d}");
        }
        if let Some(profile) = &s.profile {
            write_profile(profile, out);
        }
    }
    if let Some([format, target]) = provenance {
        let text = if format == "dot" { ws.graph().to_dot() } else { ws.graph().to_json() };
        if !write_file(Path::new(target), &text, err) {
            return EXIT_IO;
        }
    }
    if let Some(target) = diagnostics {
        if !write_file(target, &to_report(ws.diagnostics()), err) {
            return EXIT_IO;
        }
    }
    let warned = ws.diagnostics().iter().any(|d| d.severity == DiagSeverity::Warning);
    if code == EXIT_OK && fail_on == FailOn::Warning && warned {
        let _ = writeln!(err, "error: warnings were raised and --fail-on warning is set");
        code = EXIT_FAILED;
    }
    code
}

fn write_profile(p: &Profile, out: &mut dyn Write) {
    let cell = |v: &tabletide::value::Value| match v {
        tabletide::value::Value::Float(f) => format_float(*f),
        other => other.to_string(),
    };
    let mut lines = vec![["column".to_string(), "type".into(), "nulls".into(), "distinct".into(), "min".into(), "max".into()]];
    for c in &p.columns {
        lines.push([
            c.name.clone(),
            c.dtype.to_string(),
            c.nulls.to_string(),
            c.distinct.to_string(),
            cell(&c.min),
            cell(&c.max),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
        .collect();
    let _ = writeln!(out, "rows: {}", p.rows);
    for l in &lines {
        let padded: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    }
}

fn profile(path: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let t = match io::load_csv(path, &CsvOptions::default()) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    };
    let p = profile_summary(&t);
    if json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&p).expect("profiles serialize"));
    } else {
        write_profile(&p, out);
    }
    EXIT_OK
}

fn serve(host: &str, port: u16, config: Config, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start runtime: {e}");
            return EXIT_IO;
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                let _ = writeln!(err, "error: cannot listen on {host}:{port}: {e}");
                return EXIT_IO;
            }
        };
        let addr = listener.local_addr().map_or_else(|_| format!("{host}:{port}"), |a| a.to_string());
        let _ = writeln!(out, "listening on http://{addr}");
        let _ = out.flush();
        match crate::serve(listener, config).await {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_IO
            }
        }
    })
}
