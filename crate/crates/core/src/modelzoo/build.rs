use serde::{Deserialize, Serialize};

use super::{fit_model, ModelRecord};
use crate::dataset::{generate, sample_parametrizations, split, Observation, SizeRange};
use crate::error::{Error, Result};
use crate::neuralnet::{Architecture, TrainConfig};
use crate::paramspace::CompilerSpec;
use crate::seed;
use crate::synthcompiler::{CoefficientSet, DEFAULT_WORKERS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Median symmetric percentage bias every dimension must reach.
    pub quality_target: f64,
    pub batch_size: usize,
    pub max_observations: usize,
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub seed: u64,
    pub workers: usize,
    /// Also require every occupied size bin to meet the target before stopping.
    #[serde(default)]
    pub require_size_bins: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            quality_target: 3.0,
            batch_size: 500,
            max_observations: 6000,
            architecture: Architecture::default(),
            train: TrainConfig::default(),
            seed: 0,
            workers: DEFAULT_WORKERS,
            require_size_bins: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildIteration {
    pub iteration: usize,
    pub batch_size: usize,
    pub observations: usize,
    /// Median error per dimension on the test split, in `Dimension::ALL` order.
    pub dimension_errors: Vec<f64>,
    /// Worst occupied size bin on the test split.
    #[serde(default)]
    pub max_bin_error: f64,
    /// Size ranges excluded from sampling after this iteration.
    pub excluded: Vec<SizeRange>,
    pub met_target: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildLog {
    pub iterations: Vec<BuildIteration>,
    pub below_target: bool,
}

impl BuildLog {
    pub fn batch_sizes(&self) -> Vec<usize> {
        self.iterations.iter().map(|i| i.batch_size).collect()
    }
}

/// Result of [`iterative_build`]: the frozen record, the log and the test
/// split the record was evaluated on.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub record: ModelRecord,
    pub log: BuildLog,
    pub test: Vec<Observation>,
}

/// Share of the spec's log-size axis covered by excluded ranges.
fn excluded_fraction(spec: &CompilerSpec, excluded: &[SizeRange]) -> f64 {
    let (lo, hi) = spec.size_range();
    let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
    if excluded.is_empty() || lhi <= llo {
        return 0.0;
    }
    let covered: f64 = excluded
        .iter()
        .map(|&(a, b)| {
            let a = (a.max(lo) as f64).ln();
            let b = (b.min(hi) as f64).ln();
            (b - a).max(0.0)
        })
        .sum();
    (covered / (lhi - llo)).min(1.0)
}

/// Adds `new` to the set of excluded ranges, merging overlaps.
fn merge(ranges: &mut Vec<SizeRange>, new: &[SizeRange]) {
    ranges.extend_from_slice(new);
    ranges.sort_unstable();
    let mut out: Vec<SizeRange> = Vec::with_capacity(ranges.len());
    for &(lo, hi) in ranges.iter() {
        match out.last_mut() {
            Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    *ranges = out;
}

/// Grows a training set in batches until every dimension meets the quality
/// target or the observation budget is spent.
///
/// Each iteration samples a batch outside the size ranges that already meet
/// the target, compiles it, retrains from scratch on everything gathered so
/// far and evaluates per dimension and per size bin. Batches shrink in
/// proportion to the excluded share of the log-size axis; once nothing is
/// left to sample the exclusions are dropped. If the target is never
/// met, the best model is returned with `below_target` set. The returned
/// record is frozen.
pub fn iterative_build(
    spec: &CompilerSpec,
    coeffs: &CoefficientSet,
    config: &BuildConfig,
) -> Result<BuildOutcome> {
    if config.batch_size == 0 || config.max_observations == 0 {
        return Err(Error::field("batch_size", "batch size and observation budget must be positive"));
    }
    let mut data: Vec<Observation> = Vec::new();
    let mut excluded: Vec<SizeRange> = Vec::new();
    let mut log = BuildLog::default();
    let mut best: Option<(f64, ModelRecord, Vec<Observation>)> = None;
    let mut iteration = 0;

    while data.len() < config.max_observations {
        let remaining = config.max_observations - data.len();
        let batch = |share: f64| ((config.batch_size as f64 * share).round() as usize).min(remaining);
        let mut n = batch(1.0 - excluded_fraction(spec, &excluded));
        if n == 0 {
            // every size range meets the target but some dimension does not
            excluded.clear();
            n = batch(1.0);
        }
        let rng_seed = seed::derive(config.seed, &[iteration as u64]);
        let ps = match sample_parametrizations(spec, n, rng_seed, &excluded) {
            Ok(ps) => ps,
            // the remaining feasible sizes are too rare to fill a batch
            Err(Error::SamplingExhausted { .. }) if !excluded.is_empty() => {
                excluded.clear();
                sample_parametrizations(spec, batch(1.0), rng_seed, &[])?
            }
            Err(e) => return Err(e),
        };
        data.extend(generate(spec, coeffs, ps, config.workers)?);

        let split_data = split(data.clone(), seed::derive(config.seed, &[0x5e, iteration as u64]));
        let train = TrainConfig {
            seed: seed::derive(config.seed, &[0x7a, iteration as u64]),
            ..config.train.clone()
        };
        let record = fit_model(spec, &split_data, config.architecture, &train)?;
        let report = record.error_report(&split_data.test)?;
        let bins = record.size_bin_report(&split_data.test)?;
        merge(&mut excluded, &bins.ranges_meeting(config.quality_target));

        let score = if config.require_size_bins {
            report.max_dimension().max(bins.max_error())
        } else {
            report.max_dimension()
        };
        let met = score <= config.quality_target;
        log.iterations.push(BuildIteration {
            iteration,
            batch_size: n,
            observations: data.len(),
            dimension_errors: report.dimensions.iter().map(|d| d.error).collect(),
            max_bin_error: bins.max_error(),
            excluded: excluded.clone(),
            met_target: met,
        });
        tracing::info!(
            compiler = %spec.key(),
            iteration,
            observations = data.len(),
            max_error = report.max_dimension(),
            "build iteration"
        );
        if met {
            best = Some((score, record, split_data.test));
            break;
        }
        if best.as_ref().is_none_or(|(e, _, _)| score < *e) {
            best = Some((score, record, split_data.test));
        }
        iteration += 1;
    }

    let met = log.iterations.last().is_some_and(|i| i.met_target);
    log.below_target = !met;
    let (_, mut record, test) = best.expect("at least one iteration runs");
    record.meta_mut()?.below_target = !met;
    record.freeze();
    Ok(BuildOutcome { record, log, test })
}
