//! Decision reliability of optimizer rankings: per-result error
//! distributions estimated from held-out data, resampled to see how often
//! the top-ranked memory stays on top.

mod distribution;
mod resample;
mod shapiro;
mod survey;

pub use distribution::{
    estimate_error_distribution, fit_distribution, mean_std, nearest_in_size, DistributionKind, ErrorDistribution,
    EstimatedDistribution, FittedDistribution, NeighbourSource, ALPHA, NEIGHBOURS,
};
pub use resample::{decision_reliability, reliability_of_terms, ResampleConfig, Sharing, Term, DEFAULT_DRAWS};
pub use shapiro::{shapiro_wilk, ShapiroWilk, MAX_SAMPLES, MIN_SAMPLES};
pub use survey::{
    legal_sizes, ranking_reliability, reliability_survey, RankingReliability, ReliabilityReport, SurveyConfig,
    SurveyReport, SurveyRun, SurveySummary, TestSets, UsedDistribution,
};
