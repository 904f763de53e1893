//! Construction of the external services a run talks to.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use ibe_core::generation::{HttpChatClient, LlmClient, ScriptedClient, StoreMode, TranscriptStore};
use ibe_core::logic::EmbeddingTable;
use ibe_core::metrics::sidecar::{HttpTransport, SidecarClient, StdioTransport, Transport};
use ibe_core::metrics::{
    CertaintyScorer, EntailmentScorer, HedgeTagger, Lexicon, ScorerSuite, WithFallback,
};

use crate::config::{Backend, PipelineConfig, SidecarTransport};
use crate::error::{CliError, Result};

/// The scripted client when `llm.script` is set, else the HTTP client when
/// `llm.base_url` is set. Replay runs need neither.
pub fn llm_client(config: &PipelineConfig) -> Result<Option<Box<dyn LlmClient>>> {
    if let Some(script) = &config.llm.script {
        let client =
            ScriptedClient::from_file(script).map_err(|e| CliError::generation("llm script", e))?;
        return Ok(Some(Box::new(client)));
    }
    Ok(config.llm.base_url.as_deref().map(|url| {
        Box::new(HttpChatClient::from_env(url, &config.llm.api_key_env)) as Box<dyn LlmClient>
    }))
}

pub fn transcript_store(config: &PipelineConfig) -> Result<TranscriptStore> {
    TranscriptStore::open(&config.transcripts.path, config.transcripts.mode)
        .map_err(|e| CliError::generation("transcripts", e))
}

/// Whether stages that call the LLM should read the transcript file as an
/// input. Live runs do not consult it.
pub fn uses_transcripts(config: &PipelineConfig) -> bool {
    config.transcripts.mode != StoreMode::Live
}

pub fn embeddings(config: &PipelineConfig) -> Result<Arc<EmbeddingTable>> {
    match &config.logic.embeddings {
        None => Ok(EmbeddingTable::toy()),
        Some(path) => EmbeddingTable::load(path)
            .map(Arc::new)
            .map_err(|e| CliError::data(path, e.to_string())),
    }
}

pub fn lexicon(config: &PipelineConfig) -> Result<Arc<Lexicon>> {
    match &config.scorers.hedge_lexicon {
        None => Ok(Lexicon::bundled()),
        Some(path) => Lexicon::with_hedge_file(path)
            .map(Arc::new)
            .map_err(|m| CliError::data(path, m)),
    }
}

/// Fallback scorers, or sidecar scorers that switch to the fallback on a
/// capability error. Part-of-speech tagging is always local.
pub fn scorer_suite(
    config: &PipelineConfig,
    lexicon: Arc<Lexicon>,
    embeddings: Arc<EmbeddingTable>,
) -> Result<ScorerSuite> {
    let local = ScorerSuite::fallback(lexicon, embeddings);
    if config.scorers.backend == Backend::Fallback {
        return Ok(local);
    }
    let s = &config.scorers;
    let (transport, label): (Arc<dyn Transport>, String) = match s.transport {
        SidecarTransport::Stdio => {
            let (program, args) = s
                .command
                .split_first()
                .expect("validated: command is nonempty");
            (
                Arc::new(StdioTransport::spawn(program, args)?),
                format!("sidecar-stdio:{program}"),
            )
        }
        SidecarTransport::Http => {
            let url = s.url.as_deref().expect("validated: url is set");
            (
                Arc::new(HttpTransport::new(url, Duration::from_secs(s.timeout_secs))),
                format!("sidecar-http:{url}"),
            )
        }
    };
    let remote = Arc::new(SidecarClient::new(transport, label));
    let log: Arc<Mutex<Vec<String>>> = Arc::default();
    let entail: Arc<dyn EntailmentScorer> = Arc::new(WithFallback::<dyn EntailmentScorer>::new(
        remote.clone(),
        local.entailment.clone(),
        "entail",
        Arc::clone(&log),
    ));
    let certainty: Arc<dyn CertaintyScorer> = Arc::new(WithFallback::<dyn CertaintyScorer>::new(
        remote.clone(),
        local.certainty.clone(),
        "certainty",
        Arc::clone(&log),
    ));
    let hedge: Arc<dyn HedgeTagger> = Arc::new(WithFallback::<dyn HedgeTagger>::new(
        remote,
        local.hedge.clone(),
        "hedge",
        Arc::clone(&log),
    ));
    Ok(ScorerSuite::new(entail, certainty, hedge, local.pos.clone()).with_substitution_log(log))
}
