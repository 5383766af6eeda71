//! Helpers shared by the CLI test targets: a minimal embedding service stub
//! and a runner for the built binary.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

#[derive(Debug, Clone, Copy)]
pub enum StubMode {
    /// 200 with `dim`-length vectors derived from each text.
    Ok { dim: usize },
    /// 200, but every vector is one element short.
    WrongDim { dim: usize },
    /// Always answers with this status.
    Status(u16),
}

pub struct StubServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

/// Vector the stub returns for `text`: position 0 carries the text length,
/// the rest its bytes cycled, so order mix-ups are visible.
pub fn stub_vector(text: &str, dim: usize) -> Vec<f64> {
    let bytes = text.as_bytes();
    (0..dim)
        .map(|i| {
            if i == 0 {
                bytes.len() as f64
            } else if bytes.is_empty() {
                0.0
            } else {
                f64::from(bytes[(i - 1) % bytes.len()]) / 255.0
            }
        })
        .collect()
}

impl StubServer {
    pub fn start(mode: StubMode) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let counter = Arc::clone(&counter);
                thread::spawn(move || {
                    let _ = handle(stream, mode, &counter);
                });
            }
        });
        StubServer { url, requests }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn handle(stream: TcpStream, mode: StubMode, counter: &AtomicUsize) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    counter.fetch_add(1, Ordering::SeqCst);

    let (status, payload) = if !request_line.starts_with("POST /embed ") {
        (404, "{}".to_string())
    } else {
        match mode {
            StubMode::Status(code) => (code, r#"{"error":"unavailable"}"#.to_string()),
            StubMode::Ok { dim } | StubMode::WrongDim { dim } => {
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
                let len = if matches!(mode, StubMode::WrongDim { .. }) {
                    dim - 1
                } else {
                    dim
                };
                let vectors: Vec<Vec<f64>> = req["texts"]
                    .as_array()
                    .map(|a| {
                        a.iter()
                            .map(|t| stub_vector(t.as_str().unwrap_or(""), len))
                            .collect()
                    })
                    .unwrap_or_default();
                (200, serde_json::json!({ "vectors": vectors }).to_string())
            }
        }
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    out.flush()
}

/// Runs the `checkworthy` binary from `dir` with the embedding URL variable
/// cleared, so the host environment cannot leak in.
pub fn run_cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_checkworthy"))
        .current_dir(dir)
        .env_remove("CHECKWORTHY_EMBED_URL")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("run checkworthy binary")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
