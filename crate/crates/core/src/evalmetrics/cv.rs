use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::report::{report_from, ErrorReport};
use crate::dataset::{fit_scalers, Observation};
use crate::error::{Error, Result};
use crate::neuralnet::{train, Architecture, Network, TrainConfig};
use crate::par;
use crate::seed;

/// A model family that can be fitted and asked for predictions in original units.
pub trait Regressor: Sync {
    fn name(&self) -> String;

    fn fit_predict(
        &self,
        train: &[Observation],
        validation: &[Observation],
        test: &[Observation],
        seed: u64,
    ) -> Result<Vec<Vec<f64>>>;
}

/// Feed-forward network trained with early stopping on the validation data.
#[derive(Debug, Clone)]
pub struct NnRegressor {
    pub arch: Architecture,
    pub train: TrainConfig,
}

impl Regressor for NnRegressor {
    fn name(&self) -> String {
        self.arch.label()
    }

    fn fit_predict(
        &self,
        train_set: &[Observation],
        validation: &[Observation],
        test: &[Observation],
        seed_value: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let scalers = fit_scalers(train_set)?;
        let (x, y) = scalers.matrices(train_set);
        let (xv, yv) = scalers.matrices(validation);
        let mut net = Network::init(self.arch, x.ncols(), y.ncols(), seed_value)?;
        let config = TrainConfig {
            seed: seed::derive(seed_value, &[1]),
            ..self.train.clone()
        };
        train(&mut net, &x, &y, &xv, &yv, &config)?;
        let (xt, _) = scalers.matrices(test);
        let out = net.forward(&xt)?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| scalers.inverse_y(&r.to_vec()).0)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    /// Share of the data held out for early stopping before folding.
    pub validation_fraction: f64,
    /// Smallest admissible fold; the mini-batch size for networks.
    pub min_fold_size: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 3,
            validation_fraction: 0.1,
            min_fold_size: 100,
            seed: 0,
        }
    }
}

/// Index sets of one cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub validation: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

pub fn plan(n: usize, config: &CvConfig) -> Result<CvPlan> {
    if config.folds < 2 {
        return Err(Error::field("folds", "at least two folds are required"));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::field("validation_fraction", "must lie in [0, 1)"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(config.seed, &[0xcf]));
    let n_val = (n as f64 * config.validation_fraction).floor() as usize;
    let validation = order[..n_val].to_vec();
    let rest = &order[n_val..];
    let folds: Vec<Vec<usize>> = (0..config.folds)
        .map(|f| rest.iter().skip(f).step_by(config.folds).copied().collect())
        .collect();
    for (f, fold) in folds.iter().enumerate() {
        if fold.len() < config.min_fold_size {
            return Err(Error::FoldSize {
                fold: f,
                size: fold.len(),
                minibatch: config.min_fold_size,
            });
        }
    }
    Ok(CvPlan { validation, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub name: String,
    /// Per fold: median per variable, then mean over variables.
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
    /// Report over the out-of-fold predictions of every observation.
    pub report: ErrorReport,
}

pub(crate) struct FoldOutcome {
    pub error: f64,
    pub preds: Vec<Vec<f64>>,
}

fn pick(data: &[Observation], idx: &[usize]) -> Vec<Observation> {
    idx.iter().map(|&i| data[i].clone()).collect()
}

pub(crate) fn run_fold(
    data: &[Observation],
    names: &[String],
    corners: usize,
    plan: &CvPlan,
    fold: usize,
    reg: &dyn Regressor,
    base_seed: u64,
) -> Result<FoldOutcome> {
    let train_idx: Vec<usize> = plan
        .folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != fold)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    let train = pick(data, &train_idx);
    let validation = pick(data, &plan.validation);
    let test = pick(data, &plan.folds[fold]);
    let job_seed = seed::derive(base_seed, &[seed::hash_str(&reg.name()), fold as u64]);
    let preds = reg.fit_predict(&train, &validation, &test, job_seed)?;
    let truths: Vec<Vec<f64>> = test.iter().map(|o| o.y.clone()).collect();
    let report = report_from(names, corners, &preds, &truths, None)?;
    Ok(FoldOutcome {
        error: report.variable_mean(),
        preds,
    })
}

pub(crate) fn assemble(
    data: &[Observation],
    names: &[String],
    corners: usize,
    plan: &CvPlan,
    name: String,
    outcomes: Vec<FoldOutcome>,
) -> Result<CvResult> {
    let fold_errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    for (fold, o) in plan.folds.iter().zip(outcomes) {
        preds.extend(o.preds);
        truths.extend(fold.iter().map(|&i| data[i].y.clone()));
    }
    let report = report_from(names, corners, &preds, &truths, None)?;
    Ok(CvResult {
        name,
        mean_error: fold_errors.iter().sum::<f64>() / fold_errors.len() as f64,
        fold_errors,
        report,
    })
}

/// k-fold cross-validation of one regressor. Folds run in parallel and are
/// seeded from `(config.seed, regressor name, fold)`.
pub fn cross_validate(
    data: &[Observation],
    names: &[String],
    corners: usize,
    reg: &dyn Regressor,
    config: &CvConfig,
) -> Result<CvResult> {
    let plan = plan(data.len(), config)?;
    let outcomes = par::map_range(config.folds, |f| run_fold(data, names, corners, &plan, f, reg, config.seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    assemble(data, names, corners, &plan, reg.name(), outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_partitions() {
        let p = plan(400, &CvConfig::default()).unwrap();
        assert_eq!(p.validation.len(), 40);
        let mut all: Vec<usize> = p.validation.clone();
        for f in &p.folds {
            assert_eq!(f.len(), 120);
            all.extend(f);
        }
        all.sort_unstable();
        assert_eq!(all, (0..400).collect::<Vec<_>>());
    }

    #[test]
    fn small_folds_rejected() {
        let err = plan(200, &CvConfig::default()).unwrap_err();
        assert!(matches!(err, Error::FoldSize { minibatch: 100, .. }));
    }
}
