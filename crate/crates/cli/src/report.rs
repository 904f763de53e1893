//! Report tables derived from the evaluation and feature artifacts.
//!
//! Everything here is a pure function of `evaluation.json` and
//! `features.jsonl`, so deleting `report/` and re-running the stage
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ibe_core::metrics::HedgeLabel;
use ibe_core::scoring::{regression_report, AblationBlock};
use ibe_core::{Feature, RegressionReport, StatsError};
use serde::Serialize;

use crate::artifacts::{read_json, read_jsonl, write_atomic, write_json, FeatureRecord, Split};
use crate::error::{CliError, Result};
use crate::evaluate::{Evaluation, ALL_KEY};
use crate::stages::{Pipeline, Produced};

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn fmt_pct(x: f64) -> String {
    format!("{:.4}", x)
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Rate {
    pub total: usize,
    pub self_evident: usize,
    pub rate: f64,
}

impl Rate {
    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.self_evident += usize::from(hit);
        self.rate = self.self_evident as f64 / self.total as f64;
    }
}

#[derive(Debug, Serialize)]
pub struct SelfEvidentEntry {
    pub example_id: String,
    pub candidate_index: usize,
    pub split: Split,
    pub dataset: String,
    pub correct: bool,
}

#[derive(Debug, Default, Serialize)]
pub struct SelfEvidentReport {
    pub overall: Rate,
    pub by_dataset: BTreeMap<String, Rate>,
    /// Keyed `correct` / `incorrect` by the candidate's gold label.
    pub by_label: BTreeMap<String, Rate>,
    pub explanations: Vec<SelfEvidentEntry>,
}

pub fn self_evident_report(rows: &[FeatureRecord]) -> SelfEvidentReport {
    let mut report = SelfEvidentReport::default();
    for r in rows {
        let hit = r.self_evident;
        let correct = r.label() == 1.0;
        report.overall.add(hit);
        report
            .by_dataset
            .entry(r.dataset.clone())
            .or_default()
            .add(hit);
        report
            .by_label
            .entry(if correct { "correct" } else { "incorrect" }.into())
            .or_default()
            .add(hit);
        if hit {
            report.explanations.push(SelfEvidentEntry {
                example_id: r.example_id.clone(),
                candidate_index: r.candidate_index,
                split: r.split,
                dataset: r.dataset.clone(),
                correct,
            });
        }
    }
    report
}

/// Univariate regressions of the gold label on every feature, over the test
/// rows of each dataset and pooled. Datasets too small to fit are noted.
pub fn regression_tables(
    rows: &[FeatureRecord],
    datasets: &[String],
    standardize: bool,
) -> Result<(BTreeMap<String, RegressionReport>, Vec<String>)> {
    let mut out = BTreeMap::new();
    let mut notes = Vec::new();
    for key in datasets.iter().map(String::as_str).chain([ALL_KEY]) {
        let subset: Vec<&FeatureRecord> = rows
            .iter()
            .filter(|r| r.split == Split::Test && (key == ALL_KEY || r.dataset == key))
            .collect();
        let x: Vec<_> = subset.iter().map(|r| r.features).collect();
        let y: Vec<f64> = subset.iter().map(|r| r.label()).collect();
        match regression_report(&x, &y, &Feature::ALL, standardize) {
            Ok(report) => {
                out.insert(key.to_string(), report);
            }
            Err(e @ StatsError::TooFewRows { .. }) => {
                notes.push(format!("regression `{key}`: {e}"))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, notes))
}

fn ablation_rows(evaluation: &Evaluation, columns: &[String]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    if let Some(judge) = &evaluation.judge {
        let mut row = vec!["baseline".to_string(), "Judge".to_string(), String::new()];
        row.extend(columns.iter().map(|c| fmt_pct(judge[c].accuracy)));
        rows.push(row);
    }
    for entry in &evaluation.ablation {
        let block = match entry.block {
            AblationBlock::Single => "single",
            AblationBlock::Composed => "composed",
        };
        let features: Vec<&str> = entry.features.iter().map(|f| f.name()).collect();
        let mut row = vec![block.to_string(), entry.label.clone(), features.join("+")];
        row.extend(columns.iter().map(|c| fmt_pct(entry.accuracy[c])));
        rows.push(row);
    }
    rows
}

fn hedge_rows(rows: &[FeatureRecord], datasets: &[String]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let keys: Vec<&str> = datasets
        .iter()
        .map(String::as_str)
        .chain([ALL_KEY])
        .collect();
    for key in keys {
        for (group, want) in [("correct", 1.0), ("incorrect", 0.0)] {
            let subset: Vec<&FeatureRecord> = rows
                .iter()
                .filter(|r| (key == ALL_KEY || r.dataset == key) && r.label() == want)
                .collect();
            if subset.is_empty() {
                continue;
            }
            let sum = |label: HedgeLabel| {
                subset
                    .iter()
                    .map(|r| u64::from(r.hedges.get(label)))
                    .sum::<u64>()
            };
            let tokens: u64 = subset.iter().map(|r| u64::from(r.hedges.tokens)).sum();
            let ratios: Vec<f64> = subset.iter().filter_map(|r| r.hedge_ratio).collect();
            let mean_ratio = if ratios.is_empty() {
                0.0
            } else {
                ratios.iter().sum::<f64>() / ratios.len() as f64
            };
            out.push(vec![
                key.to_string(),
                group.to_string(),
                subset.len().to_string(),
                tokens.to_string(),
                sum(HedgeLabel::Epistemic).to_string(),
                sum(HedgeLabel::Doxatic).to_string(),
                sum(HedgeLabel::Conditional).to_string(),
                fmt(mean_ratio),
            ]);
        }
    }
    out
}

pub(crate) fn run(p: &Pipeline) -> Result<Produced> {
    let evaluation: Evaluation = read_json(&p.run.evaluation())?;
    if evaluation.examples.is_empty() {
        return Err(CliError::Invalid(format!(
            "{} has no evaluated examples",
            p.run.evaluation().display()
        )));
    }
    let rows: Vec<FeatureRecord> = read_jsonl(&p.run.features())?;
    let dir = p.run.report_dir();
    let path = |name: &str| -> PathBuf { dir.join(name) };
    let columns: Vec<String> = evaluation
        .datasets
        .iter()
        .cloned()
        .chain([ALL_KEY.to_string()])
        .collect();
    let mut outputs = Vec::new();

    let mut header = vec!["dataset", "n", "hits", "accuracy"];
    if evaluation.judge.is_some() {
        header.push("judge_accuracy");
    }
    let accuracy_rows = columns
        .iter()
        .map(|c| {
            let a = evaluation.accuracy[c];
            let mut row = vec![
                c.clone(),
                a.n.to_string(),
                a.hits.to_string(),
                fmt_pct(a.accuracy),
            ];
            if let Some(j) = &evaluation.judge {
                row.push(fmt_pct(j[c].accuracy));
            }
            row
        })
        .collect();
    write_csv(&path("accuracy.csv"), &header, accuracy_rows)?;
    outputs.push(path("accuracy.csv"));

    let mut header = vec!["block", "label", "features"];
    header.extend(columns.iter().map(String::as_str));
    write_csv(
        &path("ablation.csv"),
        &header,
        ablation_rows(&evaluation, &columns),
    )?;
    outputs.push(path("ablation.csv"));

    let (regression, notes) = regression_tables(
        &rows,
        &evaluation.datasets,
        p.config.model.regression_standardize,
    )?;
    write_json(&path("regression.json"), &regression)?;
    outputs.push(path("regression.json"));
    let mut reg_rows = Vec::new();
    for (key, report) in &regression {
        for e in &report.entries {
            reg_rows.push(vec![
                key.clone(),
                e.feature.name().to_string(),
                fmt(e.coefficient),
                fmt(e.std_error),
                fmt(e.t_statistic),
                fmt(e.p_value),
                e.significance.clone(),
                e.n.to_string(),
            ]);
        }
    }
    write_csv(
        &path("regression.csv"),
        &[
            "dataset",
            "feature",
            "coefficient",
            "std_error",
            "t_statistic",
            "p_value",
            "significance",
            "n",
        ],
        reg_rows,
    )?;
    outputs.push(path("regression.csv"));

    write_json(&path("directionality.json"), &evaluation.directionality)?;
    outputs.push(path("directionality.json"));
    let mut dir_rows = Vec::new();
    for c in &columns {
        let d = &evaluation.directionality[c];
        for (name, acc) in [("cause", d.cause), ("effect", d.effect)] {
            if let Some(a) = acc {
                dir_rows.push(vec![
                    c.clone(),
                    name.to_string(),
                    a.n.to_string(),
                    fmt_pct(a.accuracy),
                ]);
            }
        }
    }
    write_csv(
        &path("directionality.csv"),
        &["dataset", "direction", "n", "accuracy"],
        dir_rows,
    )?;
    outputs.push(path("directionality.csv"));

    write_json(&path("self_evident.json"), &self_evident_report(&rows))?;
    outputs.push(path("self_evident.json"));

    write_csv(
        &path("hedge_distribution.csv"),
        &[
            "dataset",
            "group",
            "explanations",
            "tokens",
            "epistemic",
            "doxatic",
            "conditional",
            "mean_hedge_ratio",
        ],
        hedge_rows(&rows, &evaluation.datasets),
    )?;
    outputs.push(path("hedge_distribution.csv"));

    let mut score_rows = Vec::new();
    for ex in &evaluation.examples {
        for (i, s) in ex.scores.iter().enumerate() {
            let f = rows
                .iter()
                .find(|r| r.example_id == ex.example_id && r.candidate_index == i)
                .ok_or_else(|| {
                    CliError::Invalid(format!("{} candidate {i}: no feature row", ex.example_id))
                })?;
            let v = f.features;
            score_rows.push(vec![
                ex.dataset.clone(),
                ex.example_id.clone(),
                ex.direction.to_string(),
                i.to_string(),
                u8::from(i == ex.gold_index).to_string(),
                u8::from(i == ex.selected).to_string(),
                fmt(*s),
                v.consistency.to_string(),
                v.depth.to_string(),
                v.drift.to_string(),
                fmt(v.coherence),
                fmt(v.uncertainty),
            ]);
        }
    }
    write_csv(
        &path("scores.csv"),
        &[
            "dataset",
            "example_id",
            "direction",
            "candidate_index",
            "gold",
            "selected",
            "score",
            "consistency",
            "depth",
            "drift",
            "coherence",
            "uncertainty",
        ],
        score_rows,
    )?;
    outputs.push(path("scores.csv"));

    Ok(Produced {
        outputs,
        notes,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_with_commas() {
        let bytes = csv_bytes(&["a", "b"], vec![vec!["x,y".into(), "z".into()]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n\"x,y\",z\n");
    }

    #[test]
    fn rates_accumulate() {
        let mut r = Rate::default();
        r.add(true);
        r.add(false);
        assert_eq!((r.total, r.self_evident, r.rate), (2, 1, 0.5));
    }
}
