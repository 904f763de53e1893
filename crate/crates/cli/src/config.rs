//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths resolve against the directory holding the config file.
//! Secrets never live in the file: `llm.api_key_env` names the environment
//! variable to read. `IBE_EVAL_CACHE_DIR` replaces `output.root`.

use std::path::{Path, PathBuf};

use ibe_core::generation::{GenerationSettings, StoreMode};
use ibe_core::logic::{ProverConfig, DEFAULT_MAX_DEPTH, DEFAULT_MAX_EXPANSIONS, DEFAULT_THRESHOLD};
use ibe_core::metrics::MetricsConfig;
use ibe_core::Feature;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{sha256_bytes, sha256_file};
use crate::error::{CliError, Result};

pub const CACHE_DIR_ENV: &str = "IBE_EVAL_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// COPA XML.
    Copa,
    /// E-CARE JSON lines.
    Ecare,
    /// One serialized example per line, as written to `examples.jsonl`.
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DatasetFormat,
    /// Label used in ids and report columns; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    /// Draw this many examples under the run seed.
    #[serde(default)]
    pub sample: Option<usize>,
}

impl DatasetSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub train: Vec<DatasetSpec>,
    #[serde(default)]
    pub test: Vec<DatasetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    /// OpenAI-compatible endpoint. Unset means no live client.
    pub base_url: Option<String>,
    pub api_key_env: String,
    /// Offline scripted responses, used instead of `base_url` when set.
    pub script: Option<PathBuf>,
    pub model: String,
    pub judge_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        let g = GenerationSettings::default();
        LlmConfig {
            base_url: None,
            api_key_env: "OPENAI_API_KEY".into(),
            script: None,
            model: g.model,
            judge_model: g.judge_model,
            temperature: g.temperature,
            max_tokens: g.max_tokens,
        }
    }
}

impl LlmConfig {
    pub fn settings(&self) -> GenerationSettings {
        GenerationSettings {
            model: self.model.clone(),
            judge_model: self.judge_model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptConfig {
    pub path: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: StoreMode,
}

fn default_mode() -> StoreMode {
    StoreMode::Replay
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Fallback,
    Sidecar,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidecarTransport {
    #[default]
    Stdio,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScorerConfig {
    pub backend: Backend,
    pub transport: SidecarTransport,
    /// Program and arguments for the stdio sidecar.
    pub command: Vec<String>,
    pub url: Option<String>,
    pub timeout_secs: u64,
    /// Replaces the bundled hedge-cue lexicon.
    pub hedge_lexicon: Option<PathBuf>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            backend: Backend::Fallback,
            transport: SidecarTransport::Stdio,
            command: Vec::new(),
            url: None,
            timeout_secs: 30,
            hedge_lexicon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalizer {
    /// Deterministic propositional encoding.
    #[default]
    Fallback,
    /// LLM translation through the transcript store.
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogicConfig {
    pub formalizer: Formalizer,
    /// Word-vector table; the bundled toy table when unset.
    pub embeddings: Option<PathBuf>,
    pub threshold: f64,
    pub max_depth: usize,
    pub max_expansions: usize,
}

impl Default for LogicConfig {
    fn default() -> Self {
        LogicConfig {
            formalizer: Formalizer::Fallback,
            embeddings: None,
            threshold: DEFAULT_THRESHOLD,
            max_depth: DEFAULT_MAX_DEPTH,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
        }
    }
}

impl LogicConfig {
    pub fn prover(&self) -> ProverConfig {
        ProverConfig {
            threshold: self.threshold,
            max_depth: self.max_depth,
            max_expansions: self.max_expansions,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// One model over all training rows.
    #[default]
    Joint,
    /// One model per dataset label; test examples use their own dataset's.
    PerDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Selection features, also the cumulative ablation order.
    pub features: Vec<Feature>,
    /// Z-score features before fitting the selection model.
    pub standardize: bool,
    /// Z-score features in the regression report.
    pub regression_standardize: bool,
    pub fit_scope: FitScope,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            features: Feature::ALL.to_vec(),
            standardize: false,
            regression_standardize: true,
            fit_scope: FitScope::Joint,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JudgeConfig {
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub root: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            root: "runs".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub seed: u64,
    pub data: DataConfig,
    #[serde(default)]
    pub llm: LlmConfig,
    pub transcripts: TranscriptConfig,
    #[serde(default)]
    pub scorers: ScorerConfig,
    #[serde(default)]
    pub logic: LogicConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub judge: JudgeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parses, resolves relative paths against `base` and validates.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.resolve(base);
        if let Some(root) = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()) {
            config.output.root = PathBuf::from(root);
        }
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for spec in self.data.train.iter_mut().chain(self.data.test.iter_mut()) {
            fix(&mut spec.path);
        }
        fix(&mut self.transcripts.path);
        fix(&mut self.output.root);
        for p in [
            self.llm.script.as_mut(),
            self.scorers.hedge_lexicon.as_mut(),
            self.logic.embeddings.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        let t = self.logic.threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(format!("logic.threshold must lie in (0, 1), got {t}"));
        }
        if self.logic.max_depth == 0 {
            return Err("logic.max_depth must be at least 1".into());
        }
        if self.llm.temperature < 0.0 || !self.llm.temperature.is_finite() {
            return Err("llm.temperature must be finite and non-negative".into());
        }
        if self.model.features.is_empty() {
            return Err("model.features must not be empty".into());
        }
        let mut seen = self.model.features.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.model.features.len() {
            return Err("model.features lists a feature twice".into());
        }
        if self.data.test.is_empty() {
            return Err("data.test must list at least one dataset".into());
        }
        if self.scorers.backend == Backend::Sidecar {
            match self.scorers.transport {
                SidecarTransport::Stdio if self.scorers.command.is_empty() => {
                    return Err("scorers.command is required for the stdio sidecar".into())
                }
                SidecarTransport::Http if self.scorers.url.is_none() => {
                    return Err("scorers.url is required for the http sidecar".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Content hash of every setting that can change an artifact. Input
    /// files enter by content hash, so moving the corpus keeps the run
    /// directory. Parallelism and output location are excluded; the
    /// transcript file is tracked per stage instead.
    pub fn fingerprint(&self) -> Result<String> {
        let file = |p: &Path| sha256_file(p);
        let opt_file = |p: &Option<PathBuf>| p.as_deref().map(file).transpose();
        let datasets = |specs: &[DatasetSpec]| -> Result<Vec<serde_json::Value>> {
            specs
                .iter()
                .map(|s| {
                    Ok(json!({
                        "sha256": file(&s.path)?,
                        "format": s.format,
                        "name": s.label(),
                        "sample": s.sample,
                    }))
                })
                .collect()
        };
        let view = json!({
            "seed": self.seed,
            "train": datasets(&self.data.train)?,
            "test": datasets(&self.data.test)?,
            "llm": {
                "model": self.llm.model,
                "judge_model": self.llm.judge_model,
                "temperature": self.llm.temperature,
                "max_tokens": self.llm.max_tokens,
            },
            "scorers": {
                "backend": self.scorers.backend,
                "transport": self.scorers.transport,
                "command": self.scorers.command,
                "url": self.scorers.url,
                "hedge_lexicon": opt_file(&self.scorers.hedge_lexicon)?,
            },
            "logic": {
                "formalizer": self.logic.formalizer,
                "embeddings": opt_file(&self.logic.embeddings)?,
                "threshold": self.logic.threshold,
                "max_depth": self.logic.max_depth,
                "max_expansions": self.logic.max_expansions,
            },
            "metrics": self.metrics,
            "model": self.model,
            "judge": self.judge,
        });
        Ok(sha256_bytes(view.to_string().as_bytes()))
    }

    pub fn run_dir(&self) -> Result<PathBuf> {
        Ok(self
            .output
            .root
            .join(format!("run-{}", &self.fingerprint()?[..16])))
    }
}
