//! Stage orchestration.
//!
//! Every stage reads the artifacts of earlier stages from the run directory,
//! writes its own, and records a manifest. A stage whose params, inputs and
//! outputs still match its manifest is skipped unless forced.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ibe_core::formalize::{autoformalize, fallback_formalize};
use ibe_core::generation::generate_explanations;
use ibe_core::logic::prove;
use ibe_core::metrics::{classify_hedges, compute_features, hedge_ratio, is_self_evident};
use ibe_core::scoring::{fit_linear, FitOptions};
use ibe_core::{
    Feature, FormalizeError, GenerationError, LinearModel, MetricsError, ProofDiagnostics,
    ProofResult,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifacts::{
    read_json, read_jsonl, sha256_file, write_json, write_jsonl, ExampleRecord, ExplanationRecord,
    FeatureRecord, Manifest, ProgramRecord, ProofRecord, RunDir, Split,
};
use crate::backend;
use crate::config::{FitScope, Formalizer, PipelineConfig};
use crate::data;
use crate::error::{CliError, Result};
use crate::{evaluate, report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Generate,
    Formalize,
    Prove,
    Features,
    Fit,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Generate,
        Stage::Formalize,
        Stage::Prove,
        Stage::Features,
        Stage::Fit,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Formalize => "formalize",
            Stage::Prove => "prove",
            Stage::Features => "features",
            Stage::Fit => "fit",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Stages that work example by example and honor `--examples`.
    fn per_example(self) -> bool {
        matches!(
            self,
            Stage::Generate | Stage::Formalize | Stage::Prove | Stage::Features
        )
    }

    /// Stages that honor `--features`.
    fn uses_features(self) -> bool {
        matches!(self, Stage::Fit | Stage::Evaluate | Stage::Report)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Recompute even when the manifest matches.
    pub force: bool,
    /// Restrict per-example stages to these ids.
    pub examples: Option<BTreeSet<String>>,
    /// Override `model.features`.
    pub features: Option<Vec<Feature>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Cached,
}

/// What a stage body hands back for its manifest.
#[derive(Debug, Default)]
pub(crate) struct Produced {
    pub outputs: Vec<PathBuf>,
    pub scorers: Vec<(String, String)>,
    pub substitutions: Vec<String>,
    pub notes: Vec<String>,
}

impl Produced {
    fn files(outputs: Vec<PathBuf>) -> Self {
        Produced {
            outputs,
            ..Default::default()
        }
    }
}

/// Fitted selection models, keyed by `joint` or by example source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub scope: FitScope,
    pub features: Vec<Feature>,
    pub standardize: bool,
    pub models: BTreeMap<String, LinearModel>,
}

pub const JOINT_KEY: &str = "joint";

impl ModelArtifact {
    pub fn model_for(&self, source_key: &str) -> Option<&LinearModel> {
        match self.scope {
            FitScope::Joint => self.models.get(JOINT_KEY),
            FitScope::PerDataset => self.models.get(source_key),
        }
    }
}

pub(crate) fn source_key(record: &FeatureRecord) -> String {
    serde_json::to_value(record.source)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub run: RunDir,
    fingerprint: String,
    options: RunOptions,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Result<Self> {
        if let Some(features) = &options.features {
            let distinct: BTreeSet<_> = features.iter().collect();
            if features.is_empty() || distinct.len() != features.len() {
                return Err(CliError::Usage(
                    "--features must list distinct features".into(),
                ));
            }
        }
        let fingerprint = config.fingerprint()?;
        let run = RunDir::new(config.run_dir()?);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            config,
            run,
            fingerprint,
            options,
            pool,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Selection features after the command-line override.
    pub fn features(&self) -> Vec<Feature> {
        self.options
            .features
            .clone()
            .unwrap_or_else(|| self.config.model.features.clone())
    }

    pub(crate) fn par_map<T: Sync, R: Send>(
        &self,
        items: &[T],
        f: impl Fn(&T) -> R + Sync + Send,
    ) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn wanted(&self, id: &str) -> bool {
        self.options
            .examples
            .as_ref()
            .is_none_or(|set| set.contains(id))
    }

    /// Runs `stages` in order, stopping at the first failure.
    pub fn run_all(&self, stages: &[Stage]) -> Result<Vec<(Stage, Outcome)>> {
        stages
            .iter()
            .map(|&s| Ok((s, self.run_stage(s)?)))
            .collect()
    }

    pub fn run_stage(&self, stage: Stage) -> Result<Outcome> {
        for (path, producer) in self.upstream(stage) {
            if !path.exists() {
                return Err(CliError::MissingUpstream {
                    path,
                    stage: producer.name(),
                });
            }
        }
        let params = self.params(stage);
        let manifest_path = self.run.manifest(stage.name());
        let inputs = self.input_hashes(stage)?;
        if let Some(previous) = self.previous_manifest(&manifest_path) {
            let fresh = previous.params == params && previous.inputs == inputs;
            if fresh && self.outputs_match(&previous) {
                if !self.options.force {
                    info!("{stage}: up to date");
                    return Ok(Outcome::Cached);
                }
            } else {
                warn!("{stage}: manifest is stale, recomputing");
            }
        }
        info!("{stage}: running");
        let produced = match stage {
            Stage::Generate => self.generate()?,
            Stage::Formalize => self.formalize()?,
            Stage::Prove => self.prove()?,
            Stage::Features => self.features_stage()?,
            Stage::Fit => self.fit()?,
            Stage::Evaluate => evaluate::run(self)?,
            Stage::Report => report::run(self)?,
        };
        // Record mode appends to the transcript file, so hash it afterwards.
        let inputs = self.input_hashes(stage)?;
        let outputs = produced
            .outputs
            .iter()
            .map(|p| Ok((self.run.key(p), sha256_file(p)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let manifest = Manifest {
            stage: stage.name().into(),
            config_fingerprint: self.fingerprint.clone(),
            params,
            inputs,
            outputs,
            scorers: produced.scorers,
            substitutions: produced.substitutions,
            notes: produced.notes,
        };
        write_json(&manifest_path, &manifest)?;
        Ok(Outcome::Ran)
    }

    fn previous_manifest(&self, path: &Path) -> Option<Manifest> {
        if !path.exists() {
            return None;
        }
        match read_json::<Manifest>(path) {
            Ok(m) => Some(m),
            Err(e) => {
                warn!("ignoring unreadable manifest: {e}");
                None
            }
        }
    }

    fn outputs_match(&self, manifest: &Manifest) -> bool {
        manifest.outputs.iter().all(|(key, sha)| {
            let path = self.run.root.join(key);
            path.exists() && sha256_file(&path).is_ok_and(|s| &s == sha)
        })
    }

    fn params(&self, stage: Stage) -> Value {
        let mut params = serde_json::Map::new();
        if stage.per_example() {
            params.insert("examples".into(), json!(self.options.examples));
        }
        if stage.uses_features() {
            params.insert("features".into(), json!(self.features()));
        }
        Value::Object(params)
    }

    /// Artifacts a stage reads, each with the stage that writes it.
    fn upstream(&self, stage: Stage) -> Vec<(PathBuf, Stage)> {
        let r = &self.run;
        match stage {
            Stage::Generate => vec![],
            Stage::Formalize => vec![(r.explanations(), Stage::Generate)],
            Stage::Prove => vec![(r.programs(), Stage::Formalize)],
            Stage::Features => vec![
                (r.examples(), Stage::Generate),
                (r.explanations(), Stage::Generate),
                (r.proofs(), Stage::Prove),
            ],
            Stage::Fit => vec![(r.features(), Stage::Features)],
            Stage::Evaluate => {
                let mut v = vec![(r.features(), Stage::Features), (r.model(), Stage::Fit)];
                if self.config.judge.enabled {
                    v.push((r.examples(), Stage::Generate));
                    v.push((r.explanations(), Stage::Generate));
                }
                v
            }
            Stage::Report => vec![
                (r.evaluation(), Stage::Evaluate),
                (r.features(), Stage::Features),
            ],
        }
    }

    fn calls_llm(&self, stage: Stage) -> bool {
        match stage {
            Stage::Generate => true,
            Stage::Formalize => self.config.logic.formalizer == Formalizer::Llm,
            Stage::Evaluate => self.config.judge.enabled,
            _ => false,
        }
    }

    fn input_hashes(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let mut inputs = BTreeMap::new();
        for (path, _) in self.upstream(stage) {
            inputs.insert(self.run.key(&path), sha256_file(&path)?);
        }
        let transcripts = &self.config.transcripts.path;
        if self.calls_llm(stage) && backend::uses_transcripts(&self.config) && transcripts.exists()
        {
            inputs.insert("transcripts".into(), sha256_file(transcripts)?);
        }
        Ok(inputs)
    }

    fn generate(&self) -> Result<Produced> {
        let cfg = &self.config;
        let mut records = Vec::new();
        for (split, specs) in [
            (Split::Train, &cfg.data.train),
            (Split::Test, &cfg.data.test),
        ] {
            for spec in specs {
                let dataset = spec.label();
                for example in data::load_dataset(spec, cfg.seed)? {
                    records.push(ExampleRecord {
                        split,
                        dataset: dataset.clone(),
                        example,
                    });
                }
            }
        }
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.example.id.as_str()) {
                return Err(CliError::Invalid(format!(
                    "duplicate example id `{}`",
                    r.example.id
                )));
            }
        }
        if let Some(wanted) = &self.options.examples {
            let unknown: Vec<&str> = wanted
                .iter()
                .map(String::as_str)
                .filter(|id| !ids.contains(id))
                .collect();
            if !unknown.is_empty() {
                return Err(CliError::Usage(format!(
                    "unknown example id(s): {}",
                    unknown.join(", ")
                )));
            }
        }
        records.retain(|r| self.wanted(&r.example.id));

        let client = backend::llm_client(cfg)?;
        let store = backend::transcript_store(cfg)?;
        let settings = cfg.llm.settings();
        let results = self.par_map(&records, |r| {
            generate_explanations(&r.example, client.as_deref(), &store, &settings)
        });
        let mut explanations = Vec::new();
        let mut notes = Vec::new();
        for (r, result) in records.iter().zip(results) {
            match result {
                Ok(list) => {
                    explanations.extend(list.into_iter().enumerate().map(|(i, explanation)| {
                        ExplanationRecord {
                            example_id: r.example.id.clone(),
                            candidate_index: i,
                            explanation,
                        }
                    }))
                }
                Err(e) if is_content_error(&e) => {
                    warn!("{}: dropped, {e}", r.example.id);
                    notes.push(format!("{}: dropped, {e}", r.example.id));
                }
                Err(e) => return Err(CliError::generation(r.example.id.clone(), e)),
            }
        }
        info!(
            "generate: {} examples, {} explanations",
            records.len(),
            explanations.len()
        );
        write_jsonl(&self.run.examples(), &records)?;
        write_jsonl(&self.run.explanations(), &explanations)?;
        Ok(Produced {
            outputs: vec![self.run.examples(), self.run.explanations()],
            notes,
            ..Default::default()
        })
    }

    fn formalize(&self) -> Result<Produced> {
        let cfg = &self.config;
        let mut explanations: Vec<ExplanationRecord> = read_jsonl(&self.run.explanations())?;
        explanations.retain(|r| self.wanted(&r.example_id));
        let store = match cfg.logic.formalizer {
            Formalizer::Llm => Some(backend::transcript_store(cfg)?),
            Formalizer::Fallback => None,
        };
        let client = match store {
            Some(_) => backend::llm_client(cfg)?,
            None => None,
        };
        let settings = cfg.llm.settings();
        let results = self.par_map(&explanations, |r| {
            let (h, e) = (&r.explanation.hypothesis, &r.explanation);
            match &store {
                Some(store) => autoformalize(h, e, client.as_deref(), store, &settings),
                None => fallback_formalize(h, e),
            }
        });
        let mut programs = Vec::new();
        let mut notes = Vec::new();
        for (r, result) in explanations.iter().zip(results) {
            let (program, warnings, error) = match result {
                Ok(f) => (Some(f.program), f.warnings, None),
                Err(FormalizeError::Generation(g)) => {
                    return Err(CliError::generation(
                        format!("{} candidate {}", r.example_id, r.candidate_index),
                        g,
                    ))
                }
                Err(e) => {
                    let short = match &e {
                        FormalizeError::Parse { source, .. } => source.to_string(),
                        other => other.to_string(),
                    };
                    notes.push(format!(
                        "{} candidate {}: no program, {short}",
                        r.example_id, r.candidate_index
                    ));
                    (None, Vec::new(), Some(e.to_string()))
                }
            };
            programs.push(ProgramRecord {
                example_id: r.example_id.clone(),
                candidate_index: r.candidate_index,
                program,
                warnings,
                error,
            });
        }
        write_jsonl(&self.run.programs(), &programs)?;
        Ok(Produced {
            outputs: vec![self.run.programs()],
            notes,
            ..Default::default()
        })
    }

    fn prove(&self) -> Result<Produced> {
        let mut programs: Vec<ProgramRecord> = read_jsonl(&self.run.programs())?;
        programs.retain(|r| self.wanted(&r.example_id));
        let table = backend::embeddings(&self.config)?;
        let config = self.config.logic.prover();
        let proofs = self.par_map(&programs, |r| {
            let proof = match &r.program {
                Some(program) => prove(program, table.as_ref(), &config),
                None => ProofResult::unsatisfied(ProofDiagnostics {
                    threshold: config.threshold,
                    ..Default::default()
                }),
            };
            ProofRecord {
                example_id: r.example_id.clone(),
                candidate_index: r.candidate_index,
                proof,
            }
        });
        let satisfied = proofs.iter().filter(|p| p.proof.satisfied).count();
        info!("prove: {satisfied} of {} programs satisfied", proofs.len());
        write_jsonl(&self.run.proofs(), &proofs)?;
        Ok(Produced::files(vec![self.run.proofs()]))
    }

    fn features_stage(&self) -> Result<Produced> {
        let cfg = &self.config;
        let examples: Vec<ExampleRecord> = read_jsonl(&self.run.examples())?;
        let explanations: Vec<ExplanationRecord> = read_jsonl(&self.run.explanations())?;
        let proofs: Vec<ProofRecord> = read_jsonl(&self.run.proofs())?;
        let proofs: HashMap<(&str, usize), &ProofResult> = proofs
            .iter()
            .map(|p| ((p.example_id.as_str(), p.candidate_index), &p.proof))
            .collect();
        let mut by_example: HashMap<&str, Vec<&ExplanationRecord>> = HashMap::new();
        for e in &explanations {
            by_example.entry(e.example_id.as_str()).or_default().push(e);
        }

        let mut notes = Vec::new();
        let mut work = Vec::new();
        for ex in examples.iter().filter(|ex| self.wanted(&ex.example.id)) {
            let id = ex.example.id.as_str();
            let mut found = by_example.remove(id).unwrap_or_default();
            found.sort_by_key(|e| e.candidate_index);
            if found.len() != ex.example.candidates.len() {
                notes.push(format!("{id}: skipped, no explanation for every candidate"));
                continue;
            }
            for e in found {
                let proof = proofs.get(&(id, e.candidate_index)).ok_or_else(|| {
                    CliError::Invalid(format!(
                        "{id} candidate {}: no proof in {} (re-run `prove`)",
                        e.candidate_index,
                        self.run.proofs().display()
                    ))
                })?;
                work.push((ex, e, *proof));
            }
        }

        let lexicon = backend::lexicon(cfg)?;
        let embeddings = backend::embeddings(cfg)?;
        let suite = backend::scorer_suite(cfg, lexicon, embeddings)?;
        let results = self.par_map(
            &work,
            |&(ex, e, proof)| -> Result<FeatureRecord, MetricsError> {
                let explanation = &e.explanation;
                let features = compute_features(
                    &explanation.hypothesis,
                    explanation,
                    proof,
                    &suite,
                    &cfg.metrics,
                )?;
                let hedges = classify_hedges(explanation, suite.hedge.as_ref())?;
                Ok(FeatureRecord {
                    split: ex.split,
                    dataset: ex.dataset.clone(),
                    source: ex.example.source,
                    example_id: ex.example.id.clone(),
                    direction: ex.example.direction,
                    gold_index: ex.example.gold_index,
                    candidate_index: e.candidate_index,
                    self_evident: is_self_evident(&features),
                    features,
                    hedges,
                    hedge_ratio: hedge_ratio(&hedges).ok(),
                })
            },
        );
        let mut rows = Vec::with_capacity(results.len());
        for ((ex, e, _), result) in work.iter().zip(results) {
            rows.push(result.map_err(|source| CliError::Metrics {
                context: format!("{} candidate {}", ex.example.id, e.candidate_index),
                source,
            })?);
        }
        write_jsonl(&self.run.features(), &rows)?;
        Ok(Produced {
            outputs: vec![self.run.features()],
            scorers: suite
                .describe()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            substitutions: suite.substitutions(),
            notes,
        })
    }

    fn fit(&self) -> Result<Produced> {
        let rows: Vec<FeatureRecord> = read_jsonl(&self.run.features())?;
        let train: Vec<&FeatureRecord> = rows.iter().filter(|r| r.split == Split::Train).collect();
        let features = self.features();
        let options = FitOptions {
            standardize: self.config.model.standardize,
        };
        let fit = |subset: &[&FeatureRecord], key: &str| -> Result<LinearModel> {
            let x: Vec<_> = subset.iter().map(|r| r.features).collect();
            let y: Vec<f64> = subset.iter().map(|r| r.label()).collect();
            fit_linear(&x, &y, &features, options)
                .map_err(|e| CliError::Invalid(format!("fit `{key}`: {e}")))
        };
        let mut models = BTreeMap::new();
        let mut notes = Vec::new();
        match self.config.model.fit_scope {
            FitScope::Joint => {
                models.insert(JOINT_KEY.to_string(), fit(&train, JOINT_KEY)?);
            }
            FitScope::PerDataset => {
                let keys: BTreeSet<String> = train.iter().map(|r| source_key(r)).collect();
                if keys.is_empty() {
                    return Err(CliError::Invalid("fit: no training rows".into()));
                }
                for key in keys {
                    let subset: Vec<&FeatureRecord> = train
                        .iter()
                        .copied()
                        .filter(|r| source_key(r) == key)
                        .collect();
                    models.insert(key.clone(), fit(&subset, &key)?);
                }
            }
        }
        for (key, model) in &models {
            let d = &model.diagnostics;
            if d.ridge_applied {
                notes.push(format!("{key}: singular design, ridge applied"));
            }
            if d.constant_labels {
                notes.push(format!("{key}: constant labels, zero weights"));
            }
        }
        let artifact = ModelArtifact {
            scope: self.config.model.fit_scope,
            features,
            standardize: options.standardize,
            models,
        };
        write_json(&self.run.model(), &artifact)?;
        Ok(Produced {
            outputs: vec![self.run.model()],
            notes,
            ..Default::default()
        })
    }
}

/// Problems with one model response rather than with the service or the
/// transcript store. Such examples are dropped instead of failing the run.
fn is_content_error(e: &GenerationError) -> bool {
    match e {
        GenerationError::NoStepsFound
        | GenerationError::MalformedStep { .. }
        | GenerationError::EmptyResponse => true,
        GenerationError::Candidate { source, .. } => is_content_error(source),
        _ => false,
    }
}
