#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use serde_json::{json, Value};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The fixture pipeline with absolute paths, writing under `root`.
pub fn config_text(root: &Path, parallelism: usize, extra: &str) -> String {
    let f = fixtures();
    format!(
        r#"seed = 7
parallelism = {parallelism}

[data]
train = [{{ path = "{train}", format = "copa", name = "copa" }}]
test = [{{ path = "{test}", format = "ecare", name = "ecare" }}]

[transcripts]
path = "{transcripts}"
mode = "replay"

[output]
root = "{root}"

{extra}
"#,
        train = f.join("train.xml").display(),
        test = f.join("test.jsonl").display(),
        transcripts = f.join("transcripts.jsonl").display(),
        root = root.display(),
    )
}

pub const JUDGE: &str = "[judge]\nenabled = true\n";

pub struct Setup {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
}

pub fn setup(parallelism: usize, extra: &str) -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        config_text(&dir.path().join("runs"), parallelism, extra),
    )
    .unwrap();
    Setup { dir, config }
}

pub fn ibe_eval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibe-eval"))
        .args(args)
        .env_remove("IBE_EVAL_CACHE_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file below `root`, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let key = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// HTTP sidecar that scores entailment and hedges but reports the
/// certainty op as unavailable.
pub fn sidecar_without_certainty() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() {
                continue;
            }
            let mut length = 0usize;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                if h.trim().is_empty() {
                    break;
                }
                if let Some(v) = h.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0u8; length];
            reader.read_exact(&mut body).unwrap();
            let reqs: Vec<Value> = serde_json::from_slice(&body).unwrap_or_default();
            let answers: Vec<Value> = reqs
                .iter()
                .map(|r| {
                    let id = r["id"].clone();
                    match r["op"].as_str() {
                        Some("entail") => json!({"id": id, "entail": 0.6, "neutral": 0.3, "contradiction": 0.1}),
                        Some("hedge") => {
                            let tokens: Vec<Value> = r["sentence"]
                                .as_str()
                                .unwrap_or("")
                                .split_whitespace()
                                .map(|t| json!([t, "none"]))
                                .collect();
                            json!({"id": id, "tokens": tokens})
                        }
                        _ => json!({"id": id, "error": "certainty model not loaded", "error_kind": "capability"}),
                    }
                })
                .collect();
            let text = Value::Array(answers).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    format!("http://{addr}")
}
