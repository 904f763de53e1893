//! Linear plausibility model, regression analysis, ablations and agreement
//! statistics.

mod ablation;
mod analysis;
mod linear;
pub mod stats;

pub use ablation::{
    ablation, chance_accuracy, directionality_breakdown, fit_and_select, AblationBlock,
    AblationRow, DirectionAccuracy, DirectionalityReport, EvalExample,
};
pub use analysis::{
    accuracy, cohens_kappa, regression_report, spearman, univariate_regression, Correlation, Kappa,
    UnivariateFit,
};
pub use linear::{fit_linear, score, select, training_fingerprint, FitOptions, RIDGE};
