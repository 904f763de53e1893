//! Feature ablation and per-direction accuracy.

use serde::{Deserialize, Serialize};

use super::analysis::accuracy;
use super::linear::{fit_linear, select, FitOptions};
use crate::error::StatsError;
use crate::model::{Direction, Feature, IbeFeatureVector};

/// A test question: one feature vector per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalExample {
    pub id: String,
    pub direction: Direction,
    pub gold_index: usize,
    pub candidates: Vec<IbeFeatureVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationBlock {
    /// One feature at a time.
    Single,
    /// Chance level and growing prefixes of the feature order.
    Composed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub block: AblationBlock,
    pub label: String,
    pub features: Vec<Feature>,
    pub accuracy: f64,
}

/// Fits on the training rows with `features` and returns the selected index
/// per test example.
pub fn fit_and_select(
    train_rows: &[IbeFeatureVector],
    train_labels: &[f64],
    test: &[EvalExample],
    features: &[Feature],
    options: FitOptions,
) -> Result<Vec<usize>, StatsError> {
    let model = fit_linear(train_rows, train_labels, features, options)?;
    test.iter()
        .map(|ex| select(&model, &ex.candidates))
        .collect()
}

fn subset_accuracy(
    train_rows: &[IbeFeatureVector],
    train_labels: &[f64],
    test: &[EvalExample],
    features: &[Feature],
    options: FitOptions,
) -> Result<f64, StatsError> {
    let selections = fit_and_select(train_rows, train_labels, test, features, options)?;
    let golds: Vec<usize> = test.iter().map(|e| e.gold_index).collect();
    accuracy(&selections, &golds)
}

/// Expected accuracy of a uniform random pick.
pub fn chance_accuracy(test: &[EvalExample]) -> Result<f64, StatsError> {
    if test.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(test
        .iter()
        .map(|e| 1.0 / e.candidates.len() as f64)
        .sum::<f64>()
        / test.len() as f64)
}

/// Single-feature rows for each feature in `order`, then a chance row, then
/// one row per prefix of `order` (labelled `+ <feature>`).
pub fn ablation(
    train_rows: &[IbeFeatureVector],
    train_labels: &[f64],
    test: &[EvalExample],
    order: &[Feature],
    options: FitOptions,
) -> Result<Vec<AblationRow>, StatsError> {
    if order.is_empty() {
        return Err(StatsError::EmptySubset);
    }
    let mut rows = Vec::new();
    for &f in order {
        rows.push(AblationRow {
            block: AblationBlock::Single,
            label: f.label().to_string(),
            features: vec![f],
            accuracy: subset_accuracy(train_rows, train_labels, test, &[f], options)?,
        });
    }
    rows.push(AblationRow {
        block: AblationBlock::Composed,
        label: "Random".into(),
        features: Vec::new(),
        accuracy: chance_accuracy(test)?,
    });
    for i in 1..=order.len() {
        let subset = &order[..i];
        rows.push(AblationRow {
            block: AblationBlock::Composed,
            label: format!("+ {}", order[i - 1].short_label()),
            features: subset.to_vec(),
            accuracy: subset_accuracy(train_rows, train_labels, test, subset, options)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionAccuracy {
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectionalityReport {
    pub cause: Option<DirectionAccuracy>,
    pub effect: Option<DirectionAccuracy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Accuracy restricted to cause and to effect questions.
pub fn directionality_breakdown(
    examples: &[EvalExample],
    selections: &[usize],
) -> Result<DirectionalityReport, StatsError> {
    if examples.len() != selections.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} examples but {} selections",
            examples.len(),
            selections.len()
        )));
    }
    let mut report = DirectionalityReport::default();
    for dir in [Direction::Cause, Direction::Effect] {
        let (sel, gold): (Vec<usize>, Vec<usize>) = examples
            .iter()
            .zip(selections)
            .filter(|(e, _)| e.direction == dir)
            .map(|(e, &s)| (s, e.gold_index))
            .unzip();
        let entry = if sel.is_empty() {
            report.notes.push(format!("no {dir} examples"));
            None
        } else {
            Some(DirectionAccuracy {
                accuracy: accuracy(&sel, &gold)?,
                n: sel.len(),
            })
        };
        match dir {
            Direction::Cause => report.cause = entry,
            Direction::Effect => report.effect = entry,
        }
    }
    Ok(report)
}
