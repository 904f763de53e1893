//! Record/replay store for LLM calls.
//!
//! Entries are keyed by a SHA-256 fingerprint over the model name, the
//! sampling parameters and the whitespace-normalized prompt. The file form is
//! JSONL with keys `fingerprint`, `model`, `prompt`, `response`, `created_at`.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::LlmClient;
use crate::error::GenerationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmRequest {
    pub fn new(
        model: &str,
        prompt: String,
        temperature: f64,
        max_tokens: u32,
    ) -> Result<Self, GenerationError> {
        if temperature.is_nan() || temperature < 0.0 {
            return Err(GenerationError::InvalidRequest(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        Ok(LlmRequest {
            model: model.to_string(),
            prompt,
            temperature,
            max_tokens,
        })
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.model, self.temperature, self.max_tokens, &self.prompt)
    }
}

/// Canonical prompt text: LF line endings, runs of horizontal whitespace
/// collapsed to one space, lines right-trimmed, outer blank lines removed.
pub fn normalize_prompt(prompt: &str) -> String {
    let unified = prompt.replace("\r\n", "\n").replace('\r', "\n");
    let lines: Vec<String> = unified
        .split('\n')
        .map(|line| {
            let mut out = String::with_capacity(line.len());
            let mut in_space = false;
            for c in line.chars() {
                if c == ' ' || c == '\t' {
                    if !in_space {
                        out.push(' ');
                    }
                    in_space = true;
                } else {
                    out.push(c);
                    in_space = false;
                }
            }
            out.trim_end().to_string()
        })
        .collect();
    lines.join("\n").trim_matches('\n').to_string()
}

/// Hex SHA-256 over `model`, `temperature`, `max_tokens` and the normalized
/// prompt, each on its own line in that order.
pub fn fingerprint(model: &str, temperature: f64, max_tokens: u32, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(
        format!("model={model}\ntemperature={temperature}\nmax_tokens={max_tokens}\n\n").as_bytes(),
    );
    hasher.update(normalize_prompt(prompt).as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreMode {
    /// Call the client every time; nothing is persisted.
    Live,
    /// Reuse stored responses, call the client for misses and persist them.
    Record,
    /// Stored responses only. A miss is an error.
    Replay,
}

impl std::str::FromStr for StoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(StoreMode::Live),
            "record" => Ok(StoreMode::Record),
            "replay" => Ok(StoreMode::Replay),
            other => Err(format!("unknown transcript mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub model: String,
    pub prompt: String,
    pub response: String,
    pub created_at: String,
}

/// Thread-safe transcript store. Reads are shared; appends to the backing
/// file go through a single writer.
#[derive(Debug)]
pub struct TranscriptStore {
    mode: StoreMode,
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, TranscriptEntry>>,
    writer: Mutex<Option<File>>,
}

impl TranscriptStore {
    pub fn in_memory(mode: StoreMode) -> Self {
        TranscriptStore {
            mode,
            path: None,
            entries: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens a JSONL transcript. A missing file is an empty store, except in
    /// replay mode where it is an error.
    pub fn open(path: impl AsRef<Path>, mode: StoreMode) -> Result<Self, GenerationError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| store_err(&path, e))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| store_err(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: TranscriptEntry = serde_json::from_str(&line).map_err(|e| {
                    GenerationError::Store(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?;
                entries.insert(entry.fingerprint.clone(), entry);
            }
        } else if mode == StoreMode::Replay {
            return Err(GenerationError::Store(format!(
                "replay transcript {} does not exist",
                path.display()
            )));
        }
        Ok(TranscriptStore {
            mode,
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(None),
        })
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("transcript lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, fingerprint: &str) -> Option<TranscriptEntry> {
        self.entries
            .read()
            .expect("transcript lock")
            .get(fingerprint)
            .cloned()
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries
            .read()
            .expect("transcript lock")
            .values()
            .cloned()
            .collect()
    }

    /// Inserts an entry and appends it to the backing file, if any.
    pub fn insert(&self, entry: TranscriptEntry) -> Result<(), GenerationError> {
        let mut writer = self.writer.lock().expect("transcript writer lock");
        if let Some(path) = &self.path {
            if writer.is_none() {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
                }
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| store_err(path, e))?;
                *writer = Some(file);
            }
            let line =
                serde_json::to_string(&entry).map_err(|e| GenerationError::Store(e.to_string()))?;
            let file = writer.as_mut().expect("writer opened above");
            writeln!(file, "{line}").map_err(|e| store_err(path, e))?;
        }
        self.entries
            .write()
            .expect("transcript lock")
            .insert(entry.fingerprint.clone(), entry);
        Ok(())
    }

    /// Resolves a request according to the store mode.
    pub fn complete(
        &self,
        client: Option<&dyn LlmClient>,
        request: &LlmRequest,
    ) -> Result<String, GenerationError> {
        let fp = request.fingerprint();
        match self.mode {
            StoreMode::Replay => {
                self.get(&fp)
                    .map(|e| e.response)
                    .ok_or(GenerationError::ReplayMiss {
                        fingerprint: fp,
                        candidate: None,
                    })
            }
            StoreMode::Live => require(client)?.complete(request),
            StoreMode::Record => {
                if let Some(hit) = self.get(&fp) {
                    return Ok(hit.response);
                }
                let response = require(client)?.complete(request)?;
                self.insert(TranscriptEntry {
                    fingerprint: fp,
                    model: request.model.clone(),
                    prompt: request.prompt.clone(),
                    response: response.clone(),
                    created_at: now_rfc3339(),
                })?;
                Ok(response)
            }
        }
    }
}

fn require(client: Option<&dyn LlmClient>) -> Result<&dyn LlmClient, GenerationError> {
    client.ok_or_else(|| GenerationError::Transport("no LLM client configured".into()))
}

fn store_err(path: &Path, e: std::io::Error) -> GenerationError {
    GenerationError::Store(format!("{}: {e}", path.display()))
}

fn now_rfc3339() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}
