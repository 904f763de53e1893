use ibe_core::scoring::stats::{ln_gamma, t_two_sided_p};
use ibe_core::scoring::{
    ablation, chance_accuracy, cohens_kappa, fit_and_select, fit_linear, score, select, spearman,
    univariate_regression, AblationBlock, EvalExample, FitOptions,
};
use ibe_core::{Direction, Feature, IbeFeatureVector, LinearModel};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

fn vector() -> impl Strategy<Value = IbeFeatureVector> {
    (0u8..=1, 1u32..6, 0u32..8, -8i32..=8, 0u32..40).prop_map(|(c, d, drift, coh, unc)| {
        // Dyadic values keep every product exact.
        IbeFeatureVector::new(
            c,
            d * u32::from(c),
            drift,
            f64::from(coh) / 8.0,
            f64::from(unc) / 4.0,
        )
        .unwrap()
    })
}

fn model() -> impl Strategy<Value = LinearModel> {
    (prop::collection::vec(-16i32..=16, 5), -16i32..=16).prop_map(|(w, b)| {
        LinearModel::new(
            Feature::ALL
                .iter()
                .copied()
                .zip(w.iter().map(|&x| f64::from(x) / 4.0))
                .collect(),
            f64::from(b) / 4.0,
        )
        .unwrap()
    })
}

/// Plain argmax with first-index tie-breaking.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

proptest! {
    #[test]
    fn selection_is_argmax_of_scores(m in model(), cands in prop::collection::vec(vector(), 2..5)) {
        let scores: Vec<f64> = cands.iter().map(|c| score(&m, c)).collect();
        prop_assert_eq!(select(&m, &cands).unwrap(), argmax(&scores));
    }

    #[test]
    fn selection_ignores_intercept_and_positive_scale(
        m in model(),
        cands in prop::collection::vec(vector(), 2..5),
        shift in -16i32..=16,
        scale_exp in 0i32..4,
    ) {
        let factor = f64::from(1 << scale_exp);
        let scaled = LinearModel::new(
            m.feature_order.iter().map(|f| (*f, m.weights[f] * factor)).collect(),
            m.intercept * factor + f64::from(shift),
        )
        .unwrap();
        prop_assert_eq!(select(&m, &cands).unwrap(), select(&scaled, &cands).unwrap());
    }

    #[test]
    fn fit_recovers_exact_linear_labels(
        rows in prop::collection::vec(vector(), 24..40),
        w in prop::collection::vec(-4i32..=4, 5),
        b in -4i32..=4,
    ) {
        let truth: Vec<f64> = w.iter().map(|&x| f64::from(x)).collect();
        let labels: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(b) + Feature::ALL.iter().zip(&truth).map(|(f, w)| w * r.get(*f)).sum::<f64>())
            .collect();
        let m = fit_linear(&rows, &labels, &Feature::ALL, FitOptions::default()).unwrap();
        // Whatever the weights, fitted scores reproduce the labels.
        for (r, y) in rows.iter().zip(&labels) {
            prop_assert!((score(&m, r) - y).abs() < 1e-4, "{} vs {}", score(&m, r), y);
        }
        let z = fit_linear(&rows, &labels, &Feature::ALL, FitOptions { standardize: true }).unwrap();
        for (r, y) in rows.iter().zip(&labels) {
            prop_assert!((score(&z, r) - y).abs() < 1e-4);
        }
    }

    #[test]
    fn last_ablation_row_equals_full_fit(
        train in prop::collection::vec(vector(), 12..20),
        labels in prop::collection::vec(0u8..=1, 20),
        tests in prop::collection::vec((prop::collection::vec(vector(), 2..=3), any::<bool>(), 0usize..3), 1..8),
    ) {
        let labels: Vec<f64> = labels[..train.len()].iter().map(|&l| f64::from(l)).collect();
        let test: Vec<EvalExample> = tests
            .into_iter()
            .enumerate()
            .map(|(i, (c, cause, g))| EvalExample {
                id: format!("t{i}"),
                direction: if cause { Direction::Cause } else { Direction::Effect },
                gold_index: g % c.len(),
                candidates: c,
            })
            .collect();
        let rows = ablation(&train, &labels, &test, &Feature::ALL, FitOptions::default()).unwrap();
        prop_assert_eq!(rows.len(), 11);
        prop_assert_eq!(rows.iter().filter(|r| r.block == AblationBlock::Single).count(), 5);
        prop_assert_eq!(rows[5].accuracy, chance_accuracy(&test).unwrap());
        let sel = fit_and_select(&train, &labels, &test, &Feature::ALL, FitOptions::default()).unwrap();
        let hits = sel.iter().zip(&test).filter(|(s, e)| **s == e.gold_index).count();
        prop_assert_eq!(rows[10].accuracy, hits as f64 / test.len() as f64);
        for r in &rows {
            prop_assert!((0.0..=1.0).contains(&r.accuracy));
        }
    }

    #[test]
    fn spearman_of_monotone_maps(xs in prop::collection::vec(-100.0f64..100.0, 3..30)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        prop_assert!((spearman(&xs, &cubed).unwrap().rho - 1.0).abs() < 1e-12);
        prop_assert!((spearman(&xs, &neg).unwrap().rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_one_for_identical_raters(a in prop::collection::vec(0u8..4, 1..30)) {
        prop_assert_eq!(cohens_kappa(&a, &a).unwrap().value, 1.0);
    }

    #[test]
    fn t_p_values_match_statrs(t in -12.0f64..12.0, df in 1u32..200) {
        let dist = StudentsT::new(0.0, 1.0, f64::from(df)).unwrap();
        let want = 2.0 * (1.0 - dist.cdf(t.abs()));
        prop_assert!((t_two_sided_p(t, f64::from(df)) - want).abs() < 1e-9);
    }

    #[test]
    fn ln_gamma_matches_statrs(x in 0.01f64..200.0) {
        prop_assert!((ln_gamma(x) - statrs_ln_gamma(x)).abs() < 1e-9 * (1.0 + statrs_ln_gamma(x).abs()));
    }
}

#[test]
fn univariate_regression_textbook_case() {
    // y = 1 + 2x with residuals (+1, -1, -1, +1) around the line.
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [4.0, 4.0, 6.0, 10.0];
    let fit = univariate_regression(&x, &y).unwrap();
    assert!((fit.slope - 2.0).abs() < 1e-12);
    assert!((fit.intercept - 1.0).abs() < 1e-12);
    // SSE = 4, df = 2, Sxx = 5: SE = sqrt(2 / 5).
    assert!((fit.std_error - (0.4f64).sqrt()).abs() < 1e-12);
    let t = 2.0 / 0.4f64.sqrt();
    let want = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 2.0).unwrap().cdf(t));
    assert!((fit.p_value - want).abs() < 1e-10);
}

#[test]
fn kappa_known_table() {
    // 50 items: both yes 20, both no 15, disagreements 10 and 5.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, n) in [(1, 1, 20), (0, 0, 15), (1, 0, 10), (0, 1, 5)] {
        for _ in 0..n {
            a.push(x);
            b.push(y);
        }
    }
    // p_o = 0.7; p_e = 0.6 * 0.5 + 0.4 * 0.5 = 0.5.
    let k = cohens_kappa(&a, &b).unwrap();
    assert!((k.value - 0.4).abs() < 1e-12);
    assert!(!k.degenerate);
    assert!(cohens_kappa(&[1, 1], &[1, 1]).unwrap().degenerate);
}

#[test]
fn spearman_p_value_matches_t_approximation() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
    let c = spearman(&x, &y).unwrap();
    // d_i = +-1 everywhere: rho = 1 - 6 * 8 / (8 * 63).
    let rho = 1.0 - 48.0 / 504.0;
    assert!((c.rho - rho).abs() < 1e-12);
    let t = rho * (6.0 / (1.0 - rho * rho)).sqrt();
    let want = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 6.0).unwrap().cdf(t));
    assert!((c.p_value - want).abs() < 1e-9);
}

#[test]
fn constant_labels_collapse_to_intercept() {
    let rows: Vec<_> = (0..6)
        .map(|i| IbeFeatureVector::new(1, 1 + i, i, 0.0, 1.0).unwrap())
        .collect();
    let m = fit_linear(&rows, &[1.0; 6], &Feature::ALL, FitOptions::default()).unwrap();
    assert!(m.diagnostics.constant_labels);
    assert_eq!(m.intercept, 1.0);
    assert!(m.weights.values().all(|w| *w == 0.0));
}

#[test]
fn collinear_features_get_ridge() {
    // depth == drift in every row.
    let rows: Vec<_> = (0..8)
        .map(|i| IbeFeatureVector::new(1, 1 + i % 4, 1 + i % 4, 0.0, 1.0).unwrap())
        .collect();
    let labels: Vec<f64> = (0..8).map(|i| f64::from(i % 2)).collect();
    let m = fit_linear(
        &rows,
        &labels,
        &[Feature::Depth, Feature::Drift],
        FitOptions::default(),
    )
    .unwrap();
    assert!(m.diagnostics.ridge_applied);
    assert!(m.weights.values().all(|w| w.is_finite()));
}
