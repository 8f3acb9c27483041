//! Evaluation of clusterings against ground truth and of weight maps
//! against pixel masks.

mod hungarian;
mod localization;
mod purity;
mod scores;

pub use hungarian::{assignment_cost, hungarian};
pub use localization::{bilinear_upsample, localization_auc, roc_auc, weight_map, LocalizationReport};
pub use purity::{full_range, purity, purity_curve, purity_sweep, PurityCurve, DEFAULT_PURITY_THRESHOLDS};
pub use scores::{
    ari, best_matching, contingency, evaluate, matched_f1, nmi, ContingencyTable, EvalOptions, EvaluationReport,
    F1Average, NmiNormalization,
};
