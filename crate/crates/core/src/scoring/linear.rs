//! Least-squares plausibility model and argmax selection.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use sha2::{Digest, Sha256};

use super::stats::{mean, sample_std};
use crate::error::StatsError;
use crate::model::{Feature, FitDiagnostics, IbeFeatureVector, LinearModel, Standardization};

pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Z-score each feature with training statistics before fitting.
    pub standardize: bool,
}

fn check_subset(features: &[Feature]) -> Result<(), StatsError> {
    if features.is_empty() {
        return Err(StatsError::EmptySubset);
    }
    let mut seen = features.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != features.len() {
        return Err(StatsError::DimensionMismatch(
            "duplicate feature in subset".into(),
        ));
    }
    Ok(())
}

/// SHA-256 over the training rows, labels and feature subset.
pub fn training_fingerprint(
    rows: &[IbeFeatureVector],
    labels: &[f64],
    features: &[Feature],
) -> String {
    let body = serde_json::to_string(&(features, rows, labels)).expect("training data serializes");
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Rejects factorizations whose pivots collapsed relative to the matching
/// Gram diagonal, which is how exact collinearity shows up after rounding.
fn well_conditioned(ch: &Cholesky<f64, nalgebra::Dyn>, a: &DMatrix<f64>) -> bool {
    let l = ch.l_dirty();
    (0..a.nrows()).all(|j| l[(j, j)].powi(2) > PIVOT_TOLERANCE * a[(j, j)])
}

const PIVOT_TOLERANCE: f64 = 1e-10;

/// Ordinary least squares via the centered normal equations. A singular
/// system gets a 1e-8 ridge and is flagged; identical labels give zero
/// weights and an intercept equal to the label.
pub fn fit_linear(
    rows: &[IbeFeatureVector],
    labels: &[f64],
    features: &[Feature],
    options: FitOptions,
) -> Result<LinearModel, StatsError> {
    if rows.len() != labels.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    check_subset(features)?;
    let needed = features.len() + 1;
    if rows.len() < needed {
        return Err(StatsError::TooFewRows {
            needed,
            got: rows.len(),
        });
    }
    let n = rows.len();
    let k = features.len();

    let columns: Vec<Vec<f64>> = features
        .iter()
        .map(|&f| rows.iter().map(|r| r.get(f)).collect())
        .collect();
    let standardization = options.standardize.then(|| {
        let mut means = BTreeMap::new();
        let mut stds = BTreeMap::new();
        for (f, col) in features.iter().zip(&columns) {
            let sd = sample_std(col);
            means.insert(f.name().to_string(), mean(col));
            stds.insert(f.name().to_string(), if sd > 0.0 { sd } else { 1.0 });
        }
        Standardization { means, stds }
    });
    let columns: Vec<Vec<f64>> = match &standardization {
        None => columns,
        Some(s) => features
            .iter()
            .zip(columns)
            .map(|(f, col)| {
                let (m, sd) = (s.means[f.name()], s.stds[f.name()]);
                col.into_iter().map(|x| (x - m) / sd).collect()
            })
            .collect(),
    };

    let mut diagnostics = FitDiagnostics {
        n_rows: n,
        ..Default::default()
    };
    let y_mean = mean(labels);
    let weights: Vec<f64>;
    let intercept: f64;
    if labels.iter().all(|&y| y == labels[0]) {
        diagnostics.constant_labels = true;
        weights = vec![0.0; k];
        intercept = labels[0];
    } else {
        let x_means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
        let x = DMatrix::from_fn(n, k, |i, j| columns[j][i] - x_means[j]);
        let y = DVector::from_iterator(n, labels.iter().map(|v| v - y_mean));
        let xt = x.transpose();
        let a = &xt * &x;
        let b = &xt * &y;
        let solution = match Cholesky::new(a.clone()).filter(|ch| well_conditioned(ch, &a)) {
            Some(ch) => ch.solve(&b),
            None => {
                diagnostics.ridge_applied = true;
                let ridged = a + DMatrix::identity(k, k) * RIDGE;
                Cholesky::new(ridged)
                    .expect("ridged Gram matrix is positive definite")
                    .solve(&b)
            }
        };
        weights = solution.iter().copied().collect();
        intercept = y_mean
            - weights
                .iter()
                .zip(&x_means)
                .map(|(w, m)| w * m)
                .sum::<f64>();
    }
    if diagnostics.ridge_applied {
        log::warn!("normal equations singular for {features:?}; applied ridge {RIDGE}");
    }

    let mut model = LinearModel::new(features.iter().copied().zip(weights).collect(), intercept)?;
    model.standardization = standardization;
    model.training_fingerprint = training_fingerprint(rows, labels, features);
    model.diagnostics = diagnostics;
    Ok(model)
}

/// Linear score of one candidate; not clamped.
pub fn score(model: &LinearModel, features: &IbeFeatureVector) -> f64 {
    let mut total = model.intercept;
    for f in &model.feature_order {
        let mut x = features.get(*f);
        if let Some(s) = &model.standardization {
            x = (x - s.means[f.name()]) / s.stds[f.name()];
        }
        total += model.weights[f] * x;
    }
    total
}

/// Index of the highest-scoring candidate; the lowest index wins ties.
pub fn select(model: &LinearModel, candidates: &[IbeFeatureVector]) -> Result<usize, StatsError> {
    if candidates.len() < 2 {
        return Err(StatsError::TooFewCandidates);
    }
    let mut best = 0;
    let mut best_score = score(model, &candidates[0]);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let s = score(model, c);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(
        consistency: u8,
        depth: u32,
        drift: u32,
        coherence: f64,
        uncertainty: f64,
    ) -> IbeFeatureVector {
        IbeFeatureVector::new(consistency, depth, drift, coherence, uncertainty).unwrap()
    }

    #[test]
    fn recovers_exact_coefficients() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for depth in 1..5u32 {
            for drift in 0..4u32 {
                rows.push(fv(1, depth, drift, 0.0, 1.0));
                y.push(2.0 * f64::from(depth) - 3.0 * f64::from(drift) + 1.0);
            }
        }
        let m = fit_linear(
            &rows,
            &y,
            &[Feature::Depth, Feature::Drift],
            FitOptions::default(),
        )
        .unwrap();
        assert!((m.weights[&Feature::Depth] - 2.0).abs() < 1e-9);
        assert!((m.weights[&Feature::Drift] + 3.0).abs() < 1e-9);
        assert!((m.intercept - 1.0).abs() < 1e-9);
        assert!(!m.diagnostics.ridge_applied);
    }

    #[test]
    fn constant_labels_collapse() {
        let rows = vec![
            fv(1, 1, 0, 0.1, 1.0),
            fv(0, 0, 2, 0.3, 2.0),
            fv(1, 3, 1, 0.2, 4.0),
        ];
        let m = fit_linear(&rows, &[1.0; 3], &[Feature::Depth], FitOptions::default()).unwrap();
        assert_eq!(m.weights[&Feature::Depth], 0.0);
        assert_eq!(m.intercept, 1.0);
        assert!(m.diagnostics.constant_labels);
    }

    #[test]
    fn two_points_interpolate() {
        let rows = vec![fv(1, 1, 0, 0.0, 1.0), fv(1, 3, 0, 0.0, 1.0)];
        let m = fit_linear(&rows, &[0.0, 1.0], &[Feature::Depth], FitOptions::default()).unwrap();
        assert!((m.weights[&Feature::Depth] - 0.5).abs() < 1e-12);
        assert!((m.intercept + 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_design_uses_ridge() {
        let rows = vec![
            fv(1, 1, 0, 0.0, 1.0),
            fv(1, 2, 0, 0.0, 2.0),
            fv(1, 3, 0, 0.0, 3.0),
        ];
        let m = fit_linear(
            &rows,
            &[0.0, 1.0, 1.0],
            &[Feature::Consistency, Feature::Depth],
            FitOptions::default(),
        )
        .unwrap();
        assert!(m.diagnostics.ridge_applied);
        assert!(m.weights[&Feature::Consistency].abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let rows = vec![fv(1, 1, 0, 0.0, 1.0)];
        assert!(matches!(
            fit_linear(&rows, &[1.0, 0.0], &[Feature::Depth], FitOptions::default()),
            Err(StatsError::DimensionMismatch(_))
        ));
        assert!(matches!(
            fit_linear(&rows, &[1.0], &[], FitOptions::default()),
            Err(StatsError::EmptySubset)
        ));
        assert!(matches!(
            fit_linear(&rows, &[1.0], &[Feature::Depth], FitOptions::default()),
            Err(StatsError::TooFewRows { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn score_and_select() {
        let m = LinearModel::new(vec![(Feature::Consistency, 0.0)], 0.5).unwrap();
        assert_eq!(score(&m, &fv(1, 2, 3, 0.1, 2.0)), 0.5);
        let m = LinearModel::new(vec![(Feature::Consistency, 1.0)], 0.25).unwrap();
        assert_eq!(score(&m, &fv(1, 2, 3, 0.1, 2.0)), 1.25);
        let m = LinearModel::new(vec![(Feature::Coherence, 1.0)], 0.0).unwrap();
        assert_eq!(
            select(&m, &[fv(1, 1, 0, 0.7, 1.0), fv(1, 1, 0, 0.3, 1.0)]).unwrap(),
            0
        );
        assert_eq!(
            select(&m, &[fv(1, 1, 0, 0.3, 1.0), fv(1, 1, 0, 0.7, 1.0)]).unwrap(),
            1
        );
        assert_eq!(
            select(&m, &[fv(1, 1, 0, 0.5, 1.0), fv(1, 1, 0, 0.5, 1.0)]).unwrap(),
            0
        );
        assert!(matches!(
            select(&m, &[fv(1, 1, 0, 0.5, 1.0)]),
            Err(StatsError::TooFewCandidates)
        ));
    }

    #[test]
    fn standardized_fit_scores_like_raw_fit() {
        let rows: Vec<_> = (0..8)
            .map(|i| {
                fv(
                    1,
                    1 + i % 3,
                    i % 2,
                    0.1 * f64::from(i),
                    1.0 + f64::from(i % 4),
                )
            })
            .collect();
        let y: Vec<f64> = (0..8).map(|i| f64::from(i % 2 == 0)).collect();
        let fs = [Feature::Depth, Feature::Coherence, Feature::Uncertainty];
        let raw = fit_linear(&rows, &y, &fs, FitOptions::default()).unwrap();
        let z = fit_linear(&rows, &y, &fs, FitOptions { standardize: true }).unwrap();
        for r in &rows {
            assert!((score(&raw, r) - score(&z, r)).abs() < 1e-9);
        }
    }
}
