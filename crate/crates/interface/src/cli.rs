use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use workanno_core::annotations::{meta, Metadata};
use workanno_core::clock::{Clock, FixedClock, SystemClock};
use workanno_core::porter::NormalizationRule;
use workanno_core::Annotation;

use crate::error::ApiError;
use crate::service::Service;
use crate::workspace::{parse_meta, target_strings, TopicSpec, Workspace};

#[derive(Debug, Parser)]
#[command(name = "workanno", version, about = "Portable annotations over hierarchical text corpora")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, default_value = "store")]
    store: PathBuf,
    /// Use this RFC 3339 instant instead of the system clock.
    #[arg(long, global = true, value_name = "TIMESTAMP")]
    now: Option<String>,
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct MetaArgs {
    /// Metadata pair, repeatable.
    #[arg(long = "meta", value_name = "K=V")]
    meta: Vec<String>,
    /// Shorthand for --meta author=NAME.
    #[arg(long)]
    author: Option<String>,
}

impl MetaArgs {
    fn metadata(&self) -> Result<Metadata, ApiError> {
        let mut m = parse_meta(&self.meta)?;
        if let Some(a) = &self.author {
            m.insert(meta::AUTHOR.to_string(), a.clone());
        }
        Ok(m)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a work document.
    Ingest { file: PathBuf },
    /// Load a feature table into a work.
    Features { work: String, file: PathBuf },
    /// Run a query.
    Query {
        work: String,
        tql: String,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run a query and freeze its result as an annotation.
    FreezeQuery {
        work: String,
        tql: String,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// Freeze the extension of key=value as an annotation.
    FreezeFeature {
        work: String,
        key: String,
        value: String,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// Assign a keyword to one or more targets.
    Keyword {
        text: String,
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// Assign a topic (JSON file) to targets, one annotation per target.
    Topic {
        file: PathBuf,
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
        #[arg(long)]
        confidence: f64,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// Port annotations from one work to another.
    Port {
        src: String,
        dst: String,
        #[arg(long = "norm", value_name = "RULE")]
        rules: Vec<NormalizationRule>,
        #[arg(long = "id")]
        ids: Vec<String>,
        #[arg(long)]
        max_group: Option<usize>,
    },
    /// Export all annotations as N-Triples.
    Export {
        #[arg(long)]
        base: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Import annotations from N-Triples.
    Import {
        file: PathBuf,
        #[arg(long)]
        base: String,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn read(path: &Path) -> Result<String, ApiError> {
    std::fs::read_to_string(path).map_err(|e| ApiError::io(path.display(), e))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::io::Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable output"))
}

fn print_annotation(out: &mut dyn Write, a: &Annotation) -> std::io::Result<()> {
    writeln!(out, "annotation {}: {} targets", a.id, a.targets.len())?;
    for t in target_strings(a) {
        writeln!(out, "  {t}")?;
    }
    Ok(())
}

/// Run the command line and return the exit code: 0 on success, 1 when an
/// operation fails, 2 on usage errors.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), ApiError> {
    let clock: Arc<dyn Clock> = match &cli.now {
        Some(t) => Arc::new(
            FixedClock::parse(t).map_err(|e| ApiError::bad_request("invalid_input", format!("--now {t:?}: {e}")))?,
        ),
        None => Arc::new(SystemClock),
    };
    let mut ws = Workspace::open(&cli.store, clock)?;
    let json = cli.json;
    let io = |e: std::io::Error| ApiError::io("output", e);
    match cli.command {
        Command::Ingest { file } => {
            let s = ws.ingest(&read(&file)?)?;
            if json {
                write_json(out, &s)
            } else {
                writeln!(out, "{}: {} leaves", s.work, s.leaves)
            }
            .map_err(io)?;
        }
        Command::Features { work, file } => {
            let s = ws.load_features(&work, &read(&file)?)?;
            if json {
                write_json(out, &s)
            } else {
                writeln!(out, "{}: {} feature assignments", s.work, s.assignments)
            }
            .map_err(io)?;
        }
        Command::Query { work, tql, limit } => {
            let result = ws.query(&work, &tql, limit)?;
            if json {
                write_json(out, &result).map_err(io)?;
            } else {
                for m in &result.matches {
                    let anchors: Vec<String> = m.bindings.iter().map(|b| b.anchor.to_string()).collect();
                    writeln!(out, "{}", anchors.join("\t")).map_err(io)?;
                }
            }
            let _ = writeln!(
                err,
                "{} matches{}",
                result.matches.len(),
                if result.truncated { " (truncated)" } else { "" }
            );
        }
        Command::FreezeQuery { work, tql, meta } => {
            let a = ws.freeze_query(&work, &tql, meta.metadata()?)?;
            if json { write_json(out, &a) } else { print_annotation(out, &a) }.map_err(io)?;
        }
        Command::FreezeFeature { work, key, value, meta } => {
            let a = ws.freeze_feature(&work, &key, &value, meta.metadata()?)?;
            if json { write_json(out, &a) } else { print_annotation(out, &a) }.map_err(io)?;
        }
        Command::Keyword { text, targets, meta } => {
            let a = ws.keyword(&text, &targets, meta.metadata()?)?;
            if json { write_json(out, &a) } else { print_annotation(out, &a) }.map_err(io)?;
        }
        Command::Topic {
            file,
            targets,
            confidence,
            meta,
        } => {
            let topic: TopicSpec = serde_json::from_str(&read(&file)?)
                .map_err(|e| ApiError::bad_request("malformed_body", format!("{}: {e}", file.display())))?;
            let added = ws.topic(topic, &targets, confidence, meta.metadata()?)?;
            if json {
                write_json(out, &added).map_err(io)?;
            } else {
                for a in &added {
                    print_annotation(out, a).map_err(io)?;
                }
            }
        }
        Command::Port {
            src,
            dst,
            rules,
            ids,
            max_group,
        } => {
            let result = ws.port(&src, &dst, &rules, &ids, max_group)?;
            write_json(out, &result).map_err(io)?;
        }
        Command::Export { base, output } => {
            let document = ws.export(&base)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &document).map_err(|e| ApiError::io(path.display(), e))?;
                    let _ = writeln!(err, "{} triples written to {}", document.lines().count(), path.display());
                }
                None => out.write_all(document.as_bytes()).map_err(io)?,
            }
        }
        Command::Import { file, base } => {
            let summary = ws.import(&read(&file)?, &base)?;
            if json {
                write_json(out, &summary).map_err(io)?;
            } else {
                for r in &summary.imported {
                    writeln!(out, "{} -> {}", r.foreign, r.local).map_err(io)?;
                }
                for o in &summary.opaque {
                    for t in &o.targets {
                        writeln!(out, "annotation {}: opaque target <{t}>", o.annotation).map_err(io)?;
                    }
                }
            }
        }
        Command::Serve { port, host } => {
            let service = Arc::new(Service::new(ws));
            crate::http::serve_forever(service, SocketAddr::new(host, port), |addr| {
                let _ = writeln!(err, "listening on http://{addr}");
            })
            .map_err(|e| ApiError::io("serve", e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(store: &Path, args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["workanno", "--store", store.to_str().unwrap(), "--now", "2026-10-14T09:30:00Z"];
        argv.extend_from_slice(args);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn fixture(name: &str) -> String {
        format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn cli_examples() {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path();
        let (code, out, _) = run(store, &["ingest", &fixture("w1.json")]);
        assert_eq!((code, out.as_str()), (0, "W1: 6 leaves\n"));
        assert_eq!(run(store, &["features", "W1", &fixture("f1.tsv")]).0, 0);

        let (code, out, _) = run(store, &["freeze-feature", "W1", "pos", "verb", "--author", "eep"]);
        assert_eq!(code, 0);
        assert_eq!(
            out,
            "annotation 1: 2 targets\n  W1:book/B/chapter/1/verse/1/word/3\n  W1:book/B/chapter/1/verse/2/word/2\n"
        );

        let (code, out, err) = run(store, &["query", "W1", "[verse [word"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("unclosed block at 1:13"), "{err}");

        let (code, out, err) = run(store, &["query", "W1", "[word pos=verb]"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
        assert_eq!(err, "2 matches\n");
    }

    #[test]
    fn usage_errors_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(dir.path(), &["frobnicate"]).0, 2);
        assert_eq!(run(dir.path(), &["keyword", "k"]).0, 2);
        assert_eq!(run(dir.path(), &["port", "A", "B", "--norm", "upper"]).0, 2);
        let (code, out, _) = run(dir.path(), &["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("freeze-query"));
    }

    #[test]
    fn operation_errors_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = run(dir.path(), &["freeze-feature", "W9", "pos", "verb"]);
        assert_eq!(code, 1);
        assert!(err.contains("unknown work"), "{err}");
        assert_eq!(run(dir.path(), &["ingest", "/nonexistent.json"]).0, 1);
        assert_eq!(run(dir.path(), &["keyword", "k", "--target", "W1:book/"]).0, 1);
    }
}
