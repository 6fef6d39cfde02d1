//! Error metrics, report aggregation and model studies: cross-validation,
//! architecture grid search, Jacobian feature importance, regression baselines
//! and inference timing.

mod baselines;
mod cv;
mod gridsearch;
mod importance;
mod metrics;
mod report;
mod timing;

pub use baselines::{baseline, monomials, LinearRegressor, RIDGE};
pub use cv::{cross_validate, plan, CvConfig, CvPlan, CvResult, NnRegressor, Regressor};
pub use gridsearch::{grid_search, Grid, GridEntry, GridSearchResult};
pub use importance::{feature_importance, FeatureImportance};
pub use metrics::{ape, log_ratio, mean, median, quantile, spb, weighted_quantile};
pub use report::{
    bin_index, cross_model_report, report_from, size_bin_report_from, BoxStats, CrossModelMode, DimensionError,
    ErrorReport, EvalSet, SizeBin, SizeBinReport, VariableError, SIZE_BINS,
};
pub use timing::{inference_timing, TimingRow, TimingTable, STANDARD_COUNTS};
