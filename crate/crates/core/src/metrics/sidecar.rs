//! Client for an external scoring service.
//!
//! Requests and responses are JSON objects. Over stdio they travel one per
//! line to a child process; over HTTP a JSON array is POSTed to `/score` and
//! an array of the same length comes back. Responses are matched to requests
//! by `id`. A response carrying `error_kind: "capability"` means the op is
//! disabled on the service, which [`super::WithFallback`] turns into a
//! switch to the local scorer.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::scorers::{CertaintyScorer, EntailmentProbs, EntailmentScorer, HedgeLabel, HedgeTagger};
use crate::error::ScorerError;

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ScoreOp {
    Entail { premise: String, hypothesis: String },
    Certainty { sentence: String },
    Hedge { sentence: String },
    Health,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    #[serde(flatten)]
    pub op: ScoreOp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contradiction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certainty: Option<f64>,
    /// `[token, label]` pairs for the hedge op.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<(String, HedgeLabel)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `capability` when the op is disabled; anything else is a rejection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
}

impl ScoreResponse {
    fn into_result(self) -> Result<ScoreResponse, ScorerError> {
        match &self.error {
            None => Ok(self),
            Some(msg) => match self.error_kind.as_deref() {
                Some("capability") | Some("unavailable") => {
                    Err(ScorerError::Unavailable(msg.clone()))
                }
                _ => Err(ScorerError::Rejected(msg.clone())),
            },
        }
    }
}

/// Moves a batch of requests to the service and back, order preserved.
pub trait Transport: Send + Sync {
    fn exchange(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError>;
}

struct StdioInner {
    writer: Option<Box<dyn Write + Send>>,
    reader: Box<dyn BufRead + Send>,
    child: Option<Child>,
}

impl Drop for StdioInner {
    fn drop(&mut self) {
        self.writer.take();
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Newline-delimited JSON over a pair of byte streams, usually the stdin and
/// stdout of a child process. Calls are serialized.
pub struct StdioTransport {
    inner: Mutex<StdioInner>,
}

impl StdioTransport {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, ScorerError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Transport(format!("spawning `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(StdioTransport {
            inner: Mutex::new(StdioInner {
                writer: Some(Box::new(stdin)),
                reader: Box::new(BufReader::new(stdout)),
                child: Some(child),
            }),
        })
    }

    pub fn from_streams(
        writer: impl Write + Send + 'static,
        reader: impl std::io::Read + Send + 'static,
    ) -> Self {
        StdioTransport {
            inner: Mutex::new(StdioInner {
                writer: Some(Box::new(writer)),
                reader: Box::new(BufReader::new(reader)),
                child: None,
            }),
        }
    }
}

impl Transport for StdioTransport {
    fn exchange(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let transport = |e: std::io::Error| ScorerError::Transport(e.to_string());
        let mut inner = self
            .inner
            .lock()
            .map_err(|_| ScorerError::Transport("stdio lock poisoned".into()))?;
        let writer = inner
            .writer
            .as_mut()
            .ok_or_else(|| ScorerError::Transport("stdio writer closed".into()))?;
        for req in requests {
            let line = serde_json::to_string(req).expect("requests serialize");
            writer.write_all(line.as_bytes()).map_err(transport)?;
            writer.write_all(b"\n").map_err(transport)?;
        }
        writer.flush().map_err(transport)?;
        let mut out = Vec::with_capacity(requests.len());
        for _ in requests {
            let mut line = String::new();
            if inner.reader.read_line(&mut line).map_err(transport)? == 0 {
                return Err(ScorerError::Transport("sidecar closed its output".into()));
            }
            out.push(
                serde_json::from_str(line.trim_end())
                    .map_err(|e| ScorerError::Invalid(format!("bad response line: {e}")))?,
            );
        }
        Ok(out)
    }
}

/// `POST {base}/score` with a JSON array body.
pub struct HttpTransport {
    agent: ureq::Agent,
    base: String,
}

impl HttpTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            agent,
            base: base_url.trim_end_matches('/').to_string(),
        }
    }

    pub fn health(&self) -> Result<ScoreResponse, ScorerError> {
        let mut resp = self
            .agent
            .get(&format!("{}/health", self.base))
            .call()
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ScorerError::Transport(format!(
                "health: HTTP {}",
                resp.status()
            )));
        }
        resp.body_mut()
            .read_json()
            .map_err(|e| ScorerError::Invalid(e.to_string()))
    }
}

impl Transport for HttpTransport {
    fn exchange(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let mut resp = self
            .agent
            .post(&format!("{}/score", self.base))
            .send_json(requests)
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        if status.is_client_error() {
            // The service rejects whole batches (e.g. over its cap) with a
            // single error object.
            let msg = serde_json::from_str::<ScoreResponse>(&text)
                .ok()
                .and_then(|r| r.error)
                .unwrap_or(text);
            return Err(ScorerError::Rejected(msg));
        }
        if !status.is_success() {
            return Err(ScorerError::Transport(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str(&text)
            .map_err(|e| ScorerError::Invalid(format!("bad response body: {e}")))
    }
}

/// Scorer backed by a [`Transport`].
pub struct SidecarClient {
    transport: Arc<dyn Transport>,
    next_id: AtomicU64,
    label: String,
}

impl SidecarClient {
    pub fn new(transport: Arc<dyn Transport>, label: impl Into<String>) -> Self {
        SidecarClient {
            transport,
            next_id: AtomicU64::new(1),
            label: label.into(),
        }
    }

    fn request(&self, op: ScoreOp) -> ScoreRequest {
        ScoreRequest {
            id: self.next_id.fetch_add(1, Ordering::Relaxed).to_string(),
            op,
        }
    }

    /// Sends several ops in one exchange. Failures are reported per item.
    pub fn batch(
        &self,
        ops: Vec<ScoreOp>,
    ) -> Result<Vec<Result<ScoreResponse, ScorerError>>, ScorerError> {
        let requests: Vec<ScoreRequest> = ops.into_iter().map(|op| self.request(op)).collect();
        let responses = self.transport.exchange(&requests)?;
        if responses.len() != requests.len() {
            return Err(ScorerError::Invalid(format!(
                "{} responses for {} requests",
                responses.len(),
                requests.len()
            )));
        }
        requests
            .iter()
            .zip(responses)
            .map(|(req, resp)| {
                if resp.id != req.id {
                    return Err(ScorerError::Invalid(format!(
                        "response id `{}` does not match request `{}`",
                        resp.id, req.id
                    )));
                }
                Ok(resp.into_result())
            })
            .collect()
    }

    pub fn call(&self, op: ScoreOp) -> Result<ScoreResponse, ScorerError> {
        self.batch(vec![op])?.pop().expect("one response")
    }

    pub fn health(&self) -> Result<ScoreResponse, ScorerError> {
        self.call(ScoreOp::Health)
    }
}

fn missing(field: &str) -> ScorerError {
    ScorerError::Invalid(format!("response lacks `{field}`"))
}

impl EntailmentScorer for SidecarClient {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs, ScorerError> {
        let r = self.call(ScoreOp::Entail {
            premise: premise.to_string(),
            hypothesis: hypothesis.to_string(),
        })?;
        EntailmentProbs::new(
            r.entail.ok_or_else(|| missing("entail"))?,
            r.neutral.ok_or_else(|| missing("neutral"))?,
            r.contradiction.ok_or_else(|| missing("contradiction"))?,
        )
    }

    fn name(&self) -> String {
        format!("sidecar:{}", self.label)
    }
}

impl CertaintyScorer for SidecarClient {
    fn certainty(&self, sentence: &str) -> Result<f64, ScorerError> {
        let r = self.call(ScoreOp::Certainty {
            sentence: sentence.to_string(),
        })?;
        let c = r.certainty.ok_or_else(|| missing("certainty"))?;
        if !(1.0..=6.0).contains(&c) {
            return Err(ScorerError::Invalid(format!(
                "certainty {c} outside [1, 6]"
            )));
        }
        Ok(c)
    }

    fn name(&self) -> String {
        format!("sidecar:{}", self.label)
    }
}

impl HedgeTagger for SidecarClient {
    fn tag(&self, sentence: &str) -> Result<Vec<(String, HedgeLabel)>, ScorerError> {
        let r = self.call(ScoreOp::Hedge {
            sentence: sentence.to_string(),
        })?;
        r.tokens.ok_or_else(|| missing("tokens"))
    }

    fn name(&self) -> String {
        format!("sidecar:{}", self.label)
    }
}
