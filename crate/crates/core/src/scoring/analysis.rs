//! Univariate regression, rank correlation, agreement and accuracy.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::stats::{average_ranks, mean, pearson, sample_std, t_two_sided_p};
use crate::error::StatsError;
use crate::model::{
    significance_marker, Feature, IbeFeatureVector, RegressionEntry, RegressionReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Simple regression of `y` on `x` with a two-sided t test on the slope.
pub fn univariate_regression(x: &[f64], y: &[f64]) -> Result<UnivariateFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} values but {} labels",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewRows { needed: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = (n - 2) as f64;
    let std_error = (sse / df / sxx).sqrt();
    let (t_statistic, p_value) = if std_error == 0.0 {
        (
            if slope == 0.0 {
                0.0
            } else {
                slope.signum() * f64::INFINITY
            },
            if slope == 0.0 { 1.0 } else { 0.0 },
        )
    } else {
        let t = slope / std_error;
        (t, t_two_sided_p(t, df))
    };
    Ok(UnivariateFit {
        slope,
        intercept,
        std_error,
        t_statistic,
        p_value,
        n,
    })
}

/// One univariate regression per feature. With `standardize`, each feature
/// is z-scored first so coefficients are comparable. Zero-variance features
/// are listed in `skipped`.
pub fn regression_report(
    rows: &[IbeFeatureVector],
    labels: &[f64],
    features: &[Feature],
    standardize: bool,
) -> Result<RegressionReport, StatsError> {
    let mut report = RegressionReport {
        standardized: standardize,
        ..Default::default()
    };
    for &f in features {
        let mut x: Vec<f64> = rows.iter().map(|r| r.get(f)).collect();
        if standardize {
            let (m, sd) = (mean(&x), sample_std(&x));
            if sd > 0.0 {
                x.iter_mut().for_each(|v| *v = (*v - m) / sd);
            }
        }
        match univariate_regression(&x, labels) {
            Ok(fit) => report.entries.push(RegressionEntry {
                feature: f,
                coefficient: fit.slope,
                intercept: fit.intercept,
                std_error: fit.std_error,
                t_statistic: fit.t_statistic,
                p_value: fit.p_value,
                significance: significance_marker(fit.p_value).to_string(),
                n: fit.n,
            }),
            Err(StatsError::ZeroVariance) => report.skipped.push((f, "zero variance".into())),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
}

/// Spearman rank correlation; p from the t approximation with n - 2 df.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewRows { needed: 3, got: n });
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y)).ok_or(StatsError::ZeroVariance)?;
    let p_value = if rho.abs() == 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        t_two_sided_p(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    Ok(Correlation { rho, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    /// Chance agreement was 1, so kappa was defined as 1.
    pub degenerate: bool,
}

/// Cohen's kappa for two raters over a shared label set.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<Kappa, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} vs {} annotations",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = a.len() as f64;
    let labels: BTreeSet<&T> = a.iter().chain(b).collect();
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = labels
        .iter()
        .map(|l| {
            let ca = a.iter().filter(|x| x == l).count() as f64;
            let cb = b.iter().filter(|x| x == l).count() as f64;
            (ca / n) * (cb / n)
        })
        .sum();
    if p_e == 1.0 {
        return Ok(Kappa {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: (p_o - p_e) / (1.0 - p_e),
        degenerate: false,
    })
}

pub fn accuracy(selections: &[usize], golds: &[usize]) -> Result<f64, StatsError> {
    if selections.len() != golds.len() {
        return Err(StatsError::DimensionMismatch(format!(
            "{} selections but {} gold labels",
            selections.len(),
            golds.len()
        )));
    }
    if selections.is_empty() {
        return Err(StatsError::Empty);
    }
    let hits = selections.iter().zip(golds).filter(|(s, g)| s == g).count();
    Ok(hits as f64 / selections.len() as f64)
}
