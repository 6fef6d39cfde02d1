use serde::{Deserialize, Serialize};

use super::distribution::ErrorDistribution;
use crate::error::{Error, Result};
use crate::par;
use crate::seed;

pub const DEFAULT_DRAWS: usize = 1000;

/// How errors of different results relate within one draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sharing {
    /// Every result draws its own error.
    #[default]
    Independent,
    /// Results referring to the same distribution share one error per draw.
    SharedPerDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub draws: usize,
    pub seed: u64,
    #[serde(default)]
    pub sharing: Sharing,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            draws: DEFAULT_DRAWS,
            seed: 0,
            sharing: Sharing::Independent,
        }
    }
}

/// One predicted quantity in a ranking criterion: contributes
/// `coef * value * exp(s)` with `s` drawn from `dists[dist]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub value: f64,
    pub coef: f64,
    pub dist: usize,
}

/// Share of resampled draws in which the first candidate still ranks first.
///
/// `candidates` are in ranked order; each is the sum of its terms. A draw
/// keeps the decision when the first candidate's perturbed criterion does
/// not exceed any other's, as ties keep the original order.
pub fn reliability_of_terms(
    candidates: &[Vec<Term>],
    dists: &[ErrorDistribution],
    config: &ResampleConfig,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Empty("ranking".into()));
    }
    if config.draws == 0 {
        return Err(Error::field("draws", "must be positive"));
    }
    if candidates.iter().flatten().any(|t| t.dist >= dists.len()) {
        return Err(Error::field("dist", "term refers to a missing distribution"));
    }
    if candidates.len() == 1 {
        return Ok(1.0);
    }
    let kept = par::map_range(config.draws, |draw| {
        let mut rng = seed::rng(config.seed, &[draw as u64]);
        let shared: Vec<f64> = match config.sharing {
            Sharing::SharedPerDistribution => dists.iter().map(|d| d.sample(&mut rng)).collect(),
            Sharing::Independent => Vec::new(),
        };
        let mut value = |c: &[Term]| -> f64 {
            c.iter()
                .map(|t| {
                    let s = match config.sharing {
                        Sharing::SharedPerDistribution => shared[t.dist],
                        Sharing::Independent => dists[t.dist].sample(&mut rng),
                    };
                    t.coef * t.value * s.exp()
                })
                .sum()
        };
        let first = value(&candidates[0]);
        candidates[1..].iter().all(|c| first <= value(c))
    });
    Ok(kept.iter().filter(|&&k| k).count() as f64 / config.draws as f64)
}

/// Reliability of a one-dimensional ranking: `values[i]` is perturbed by `dists[i]`.
pub fn decision_reliability(values: &[f64], dists: &[ErrorDistribution], draws: usize, seed: u64) -> Result<f64> {
    if values.len() != dists.len() {
        return Err(Error::Shape("one distribution per ranked value is required".into()));
    }
    let candidates: Vec<Vec<Term>> = values
        .iter()
        .enumerate()
        .map(|(i, &value)| vec![Term { value, coef: 1.0, dist: i }])
        .collect();
    reliability_of_terms(
        &candidates,
        dists,
        &ResampleConfig {
            draws,
            seed,
            sharing: Sharing::Independent,
        },
    )
}
