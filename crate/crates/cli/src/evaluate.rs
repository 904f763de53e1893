//! Test-set selection, accuracy, ablations and the judge baseline.

use std::collections::{BTreeMap, HashMap};

use ibe_core::generation::judge_baseline;
use ibe_core::scoring::{
    ablation, chance_accuracy, directionality_breakdown, score, select, AblationBlock,
    DirectionalityReport, EvalExample, FitOptions,
};
use ibe_core::{Direction, Feature, GenerationError, IbeFeatureVector};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    read_json, read_jsonl, write_json, ExampleRecord, ExplanationRecord, FeatureRecord, Split,
};
use crate::backend;
use crate::config::FitScope;
use crate::error::{CliError, Result};
use crate::stages::{source_key, ModelArtifact, Pipeline, Produced};

/// Column key that pools every test dataset.
pub const ALL_KEY: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub accuracy: f64,
    pub hits: usize,
    pub n: usize,
}

impl Accuracy {
    fn of(hits: usize, n: usize) -> Self {
        Accuracy {
            accuracy: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
            hits,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedExample {
    pub example_id: String,
    pub dataset: String,
    pub direction: Direction,
    pub gold_index: usize,
    pub scores: Vec<f64>,
    pub selected: usize,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub block: AblationBlock,
    pub label: String,
    pub features: Vec<Feature>,
    /// Per test dataset, plus [`ALL_KEY`].
    pub accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub features: Vec<Feature>,
    pub scope: FitScope,
    /// Test dataset labels in config order.
    pub datasets: Vec<String>,
    pub examples: Vec<EvaluatedExample>,
    pub accuracy: BTreeMap<String, Accuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<BTreeMap<String, Accuracy>>,
    pub ablation: Vec<AblationEntry>,
    pub directionality: BTreeMap<String, DirectionalityReport>,
}

struct TestExample {
    dataset: String,
    source: String,
    eval: EvalExample,
}

/// Groups test rows into questions, keeping first-appearance order.
fn test_examples(rows: &[FeatureRecord]) -> Result<Vec<TestExample>> {
    let mut out: Vec<TestExample> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in rows.iter().filter(|r| r.split == Split::Test) {
        let i = *index.entry(r.example_id.as_str()).or_insert_with(|| {
            out.push(TestExample {
                dataset: r.dataset.clone(),
                source: source_key(r),
                eval: EvalExample {
                    id: r.example_id.clone(),
                    direction: r.direction,
                    gold_index: r.gold_index,
                    candidates: Vec::new(),
                },
            });
            out.len() - 1
        });
        let candidates = &mut out[i].eval.candidates;
        if r.candidate_index != candidates.len() {
            return Err(CliError::Invalid(format!(
                "{}: feature rows out of candidate order",
                r.example_id
            )));
        }
        candidates.push(r.features);
    }
    Ok(out)
}

fn train_set(
    rows: &[FeatureRecord],
    scope: FitScope,
    source: &str,
) -> (Vec<IbeFeatureVector>, Vec<f64>) {
    rows.iter()
        .filter(|r| {
            r.split == Split::Train && (scope == FitScope::Joint || source_key(r) == source)
        })
        .map(|r| (r.features, r.label()))
        .unzip()
}

pub(crate) fn run(p: &Pipeline) -> Result<Produced> {
    let rows: Vec<FeatureRecord> = read_jsonl(&p.run.features())?;
    let artifact: ModelArtifact = read_json(&p.run.model())?;
    let features = p.features();
    if artifact.features != features {
        return Err(CliError::Usage(format!(
            "{} was fit with features {:?}; re-run `fit` with the same selection",
            p.run.model().display(),
            artifact
                .features
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
        )));
    }
    let tests = test_examples(&rows)?;
    if tests.is_empty() {
        return Err(CliError::Invalid("no test examples with features".into()));
    }
    let datasets: Vec<String> = p
        .config
        .data
        .test
        .iter()
        .map(|s| s.label())
        .filter(|l| tests.iter().any(|t| &t.dataset == l))
        .collect();

    let mut examples = Vec::with_capacity(tests.len());
    for t in &tests {
        let model = artifact.model_for(&t.source).ok_or_else(|| {
            CliError::Invalid(format!(
                "{}: no model fit for source `{}`",
                t.eval.id, t.source
            ))
        })?;
        let selected = select(model, &t.eval.candidates)?;
        examples.push(EvaluatedExample {
            example_id: t.eval.id.clone(),
            dataset: t.dataset.clone(),
            direction: t.eval.direction,
            gold_index: t.eval.gold_index,
            scores: t.eval.candidates.iter().map(|c| score(model, c)).collect(),
            selected,
            correct: selected == t.eval.gold_index,
            judge: None,
        });
    }

    let mut notes = Vec::new();
    if p.config.judge.enabled {
        notes.extend(run_judge(p, &mut examples)?);
    }

    let per = |pick: &dyn Fn(&EvaluatedExample) -> bool| -> BTreeMap<String, Accuracy> {
        let mut out = BTreeMap::new();
        for d in &datasets {
            let subset: Vec<_> = examples.iter().filter(|e| &e.dataset == d).collect();
            out.insert(
                d.clone(),
                Accuracy::of(subset.iter().filter(|e| pick(e)).count(), subset.len()),
            );
        }
        out.insert(
            ALL_KEY.into(),
            Accuracy::of(examples.iter().filter(|e| pick(e)).count(), examples.len()),
        );
        out
    };
    let accuracy = per(&|e| e.correct);
    let judge = p
        .config
        .judge
        .enabled
        .then(|| per(&|e| e.judge == Some(e.gold_index)));

    let options = FitOptions {
        standardize: p.config.model.standardize,
    };
    let mut ablation_entries: Vec<AblationEntry> = Vec::new();
    let mut pooled_hits: Vec<usize> = Vec::new();
    for d in &datasets {
        let subset: Vec<&TestExample> = tests.iter().filter(|t| &t.dataset == d).collect();
        let evals: Vec<EvalExample> = subset.iter().map(|t| t.eval.clone()).collect();
        let (x, y) = train_set(&rows, artifact.scope, &subset[0].source);
        let table = ablation(&x, &y, &evals, &features, options)
            .map_err(|e| CliError::Invalid(format!("ablation on `{d}`: {e}")))?;
        if ablation_entries.is_empty() {
            pooled_hits = vec![0; table.len()];
            ablation_entries = table
                .iter()
                .map(|row| AblationEntry {
                    block: row.block,
                    label: row.label.clone(),
                    features: row.features.clone(),
                    accuracy: BTreeMap::new(),
                })
                .collect();
        }
        for (i, row) in table.iter().enumerate() {
            ablation_entries[i].accuracy.insert(d.clone(), row.accuracy);
            pooled_hits[i] += (row.accuracy * evals.len() as f64).round() as usize;
        }
    }
    let all_evals: Vec<EvalExample> = tests.iter().map(|t| t.eval.clone()).collect();
    let chance = chance_accuracy(&all_evals)?;
    for (entry, hits) in ablation_entries.iter_mut().zip(&pooled_hits) {
        let pooled = if entry.features.is_empty() {
            chance
        } else {
            *hits as f64 / all_evals.len() as f64
        };
        entry.accuracy.insert(ALL_KEY.into(), pooled);
    }

    let mut directionality = BTreeMap::new();
    for key in datasets.iter().map(String::as_str).chain([ALL_KEY]) {
        let (evals, picks): (Vec<EvalExample>, Vec<usize>) = tests
            .iter()
            .zip(&examples)
            .filter(|(t, _)| key == ALL_KEY || t.dataset == key)
            .map(|(t, e)| (t.eval.clone(), e.selected))
            .unzip();
        directionality.insert(key.to_string(), directionality_breakdown(&evals, &picks)?);
    }

    let evaluation = Evaluation {
        features,
        scope: artifact.scope,
        datasets,
        examples,
        accuracy,
        judge,
        ablation: ablation_entries,
        directionality,
    };
    write_json(&p.run.evaluation(), &evaluation)?;
    Ok(Produced {
        outputs: vec![p.run.evaluation()],
        notes,
        ..Default::default()
    })
}

/// Fills in the judge's pick per example. Unreadable verdicts count as
/// misses and are noted.
fn run_judge(p: &Pipeline, examples: &mut [EvaluatedExample]) -> Result<Vec<String>> {
    let records: Vec<ExampleRecord> = read_jsonl(&p.run.examples())?;
    let explanations: Vec<ExplanationRecord> = read_jsonl(&p.run.explanations())?;
    let by_id: HashMap<&str, &ExampleRecord> =
        records.iter().map(|r| (r.example.id.as_str(), r)).collect();
    let mut by_example: HashMap<&str, Vec<&ExplanationRecord>> = HashMap::new();
    for e in &explanations {
        by_example.entry(e.example_id.as_str()).or_default().push(e);
    }
    let client = backend::llm_client(&p.config)?;
    let store = backend::transcript_store(&p.config)?;
    let settings = p.config.llm.settings();
    let verdicts = p.par_map(examples, |ev| {
        let record = by_id.get(ev.example_id.as_str()).ok_or(())?;
        let mut list = by_example
            .get(ev.example_id.as_str())
            .cloned()
            .unwrap_or_default();
        list.sort_by_key(|e| e.candidate_index);
        let list: Vec<_> = list.into_iter().map(|e| e.explanation.clone()).collect();
        Ok(judge_baseline(
            &record.example,
            &list,
            client.as_deref(),
            &store,
            &settings,
        ))
    });
    let mut notes = Vec::new();
    for (ev, verdict) in examples.iter_mut().zip(verdicts) {
        match verdict {
            Err(()) => {
                return Err(CliError::Invalid(format!(
                    "{}: missing from {}",
                    ev.example_id,
                    p.run.examples().display()
                )))
            }
            Ok(Ok(pick)) => ev.judge = Some(pick),
            Ok(Err(
                e @ (GenerationError::UnparseableVerdict { .. } | GenerationError::JudgeArity(_)),
            )) => {
                notes.push(format!("{}: judge miss, {e}", ev.example_id));
            }
            Ok(Err(e)) => return Err(CliError::generation(format!("judge {}", ev.example_id), e)),
        }
    }
    Ok(notes)
}
