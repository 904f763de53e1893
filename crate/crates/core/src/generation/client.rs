//! LLM client boundary. Everything network-specific lives here.

use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::transcript::LlmRequest;
use crate::error::GenerationError;

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, GenerationError>;
}

/// Number of attempts made for a single request before giving up.
pub const MAX_ATTEMPTS: u32 = 3;

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct HttpChatClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpChatClient {
    pub fn new(base_url: &str, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpChatClient {
            agent,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
        }
    }

    /// Reads the API key from the named environment variable.
    pub fn from_env(base_url: &str, api_key_env: &str) -> Self {
        Self::new(base_url, std::env::var(api_key_env).ok())
    }

    fn attempt(&self, request: &LlmRequest) -> Result<String, GenerationError> {
        let body = json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let value: serde_json::Value = call
            .send_json(&body)
            .map_err(|e| GenerationError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                GenerationError::Transport(format!("unexpected completion payload: {value}"))
            })
    }
}

impl LlmClient for HttpChatClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, GenerationError> {
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("completion attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                    if attempt + 1 < MAX_ATTEMPTS {
                        thread::sleep(Duration::from_millis(500 << attempt));
                    }
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScriptedResponse {
    /// Every string must occur in the prompt for the entry to apply.
    #[serde(rename = "match")]
    pub needles: Vec<String>,
    pub response: String,
}

/// Offline client that answers from a fixed script. The first entry whose
/// needles all occur in the prompt wins. Used to record fixture transcripts.
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    script: Vec<ScriptedResponse>,
}

impl ScriptedClient {
    pub fn new(script: Vec<ScriptedResponse>) -> Self {
        ScriptedClient { script }
    }

    pub fn from_file(path: &Path) -> Result<Self, GenerationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenerationError::Store(format!("{}: {e}", path.display())))?;
        let script = serde_json::from_str(&text)
            .map_err(|e| GenerationError::Store(format!("{}: {e}", path.display())))?;
        Ok(ScriptedClient { script })
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, GenerationError> {
        self.script
            .iter()
            .find(|s| {
                s.needles
                    .iter()
                    .all(|n| request.prompt.contains(n.as_str()))
            })
            .map(|s| s.response.clone())
            .ok_or_else(|| GenerationError::Transport("no scripted response matches prompt".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_client_matches_all_needles() {
        let client = ScriptedClient::new(vec![
            ScriptedResponse {
                needles: vec!["alpha".into(), "beta".into()],
                response: "both".into(),
            },
            ScriptedResponse {
                needles: vec!["alpha".into()],
                response: "alpha only".into(),
            },
        ]);
        let req = |p: &str| LlmRequest::new("m", p.into(), 0.0, 8).unwrap();
        assert_eq!(client.complete(&req("alpha beta")).unwrap(), "both");
        assert_eq!(client.complete(&req("alpha")).unwrap(), "alpha only");
        assert!(client.complete(&req("gamma")).unwrap_err().is_upstream());
    }

    #[test]
    fn http_client_reports_transport_failure() {
        // Nothing listens on port 9 of the loopback interface.
        let client = HttpChatClient::new("http://127.0.0.1:9/v1", None);
        let req = LlmRequest::new("m", "p".into(), 0.0, 8).unwrap();
        let err = client.attempt(&req).unwrap_err();
        assert!(err.is_upstream());
    }
}
