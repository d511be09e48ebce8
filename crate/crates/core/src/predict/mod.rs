//! Regularized linear prediction on graph features and its evaluation.

mod cv;
mod metrics;
mod model;

pub use cv::{
    assign_folds, check_fold_provenance, cross_validate, default_lambda_grid, default_metrics, kfold_cv, select_lambda, CvConfig,
    CvReport, EmbeddingSource, EvalReport, PipelineConfig,
};
pub use metrics::{mae, pr_auc, rmse, roc_auc, Metric};
pub use model::{fit, fit_traced, objective_and_gradient, sigmoid, FitConfig, FitReport, LinearModel, Penalty, Task};

pub use crate::features::{export_features, read_features_binary, read_features_csv, ExportFormat, ExportedFiles};
