use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::shapiro::shapiro_wilk;
use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::modelzoo::ModelRecord;

/// Observations used per error distribution.
pub const NEIGHBOURS: usize = 100;
/// Significance level of the normality test.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorDistribution {
    Normal { mean: f64, std: f64 },
    Kde { samples: Vec<f64>, bandwidth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Normal,
    Kde,
}

impl ErrorDistribution {
    pub fn degenerate() -> Self {
        ErrorDistribution::Normal { mean: 0.0, std: 0.0 }
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            ErrorDistribution::Normal { .. } => DistributionKind::Normal,
            ErrorDistribution::Kde { .. } => DistributionKind::Kde,
        }
    }

    /// Gaussian kernel density estimate with Scott's bandwidth `n^(-1/5) * std`.
    pub fn kde(samples: Vec<f64>) -> Result<Self> {
        let (_, std) = mean_std(&samples);
        let bandwidth = (samples.len() as f64).powf(-0.2) * std;
        if !(bandwidth > 0.0) {
            return Err(Error::field("bandwidth", "kernel density samples have no spread"));
        }
        Ok(ErrorDistribution::Kde { samples, bandwidth })
    }

    /// Draws one signed log error.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorDistribution::Normal { mean, std } => {
                if *std == 0.0 {
                    *mean
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + std * z
                }
            }
            ErrorDistribution::Kde { samples, bandwidth } => {
                let centre = samples[rng.random_range(0..samples.len())];
                let z: f64 = StandardNormal.sample(rng);
                centre + bandwidth * z
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, ErrorDistribution::Normal { std, .. } if *std == 0.0)
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fits a normal distribution when the samples pass the normality test at
/// [`ALPHA`] and a kernel density estimate otherwise.
pub fn fit_distribution(samples: Vec<f64>) -> Result<FittedDistribution> {
    if samples.is_empty() {
        return Err(Error::Empty("error samples".into()));
    }
    let (mean, std) = mean_std(&samples);
    let normal = ErrorDistribution::Normal { mean, std };
    let test = match shapiro_wilk(&samples) {
        Ok(t) => Some(t),
        // too few or identical samples: nothing to test
        Err(Error::TestInapplicable(_)) => None,
        Err(e) => return Err(e),
    };
    let distribution = match test {
        Some(t) if t.p_value < ALPHA => ErrorDistribution::kde(samples.clone())?,
        _ => normal,
    };
    Ok(FittedDistribution {
        distribution,
        w: test.map(|t| t.w),
        p_value: test.map(|t| t.p_value),
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    pub distribution: ErrorDistribution,
    pub w: Option<f64>,
    pub p_value: Option<f64>,
    pub samples: usize,
}

/// Which test observations an error distribution was estimated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourSource {
    pub target_size: u64,
    pub same_size: usize,
    pub smaller: usize,
    pub larger: usize,
    pub size_lo: u64,
    pub size_hi: u64,
    /// Fewer than [`NEIGHBOURS`] usable observations were available.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedDistribution {
    pub variable: usize,
    pub fit: FittedDistribution,
    pub source: NeighbourSource,
}

/// Indices of the `k` observations closest in size to `target`: equal sizes
/// first, then half from each side, topped up from whichever side has more.
pub fn nearest_in_size(sizes: &[u64], target: u64, k: usize) -> (Vec<usize>, NeighbourSource) {
    let mut same: Vec<usize> = Vec::new();
    let mut below: Vec<usize> = Vec::new();
    let mut above: Vec<usize> = Vec::new();
    for (i, &s) in sizes.iter().enumerate() {
        match s.cmp(&target) {
            std::cmp::Ordering::Equal => same.push(i),
            std::cmp::Ordering::Less => below.push(i),
            std::cmp::Ordering::Greater => above.push(i),
        }
    }
    // nearest first, ties by index
    below.sort_by_key(|&i| (std::cmp::Reverse(sizes[i]), i));
    above.sort_by_key(|&i| (sizes[i], i));

    let mut picked: Vec<usize> = same.into_iter().take(k).collect();
    let n_same = picked.len();
    let rest = k - n_same;
    let mut n_below = (rest / 2).min(below.len());
    let n_above = (rest - n_below).min(above.len());
    n_below = (rest - n_above).min(below.len());
    picked.extend(&below[..n_below]);
    picked.extend(&above[..n_above]);
    let chosen: Vec<u64> = picked.iter().map(|&i| sizes[i]).collect();
    let source = NeighbourSource {
        target_size: target,
        same_size: n_same,
        smaller: n_below,
        larger: n_above,
        size_lo: chosen.iter().copied().min().unwrap_or(target),
        size_hi: chosen.iter().copied().max().unwrap_or(target),
        low_confidence: picked.len() < k,
    };
    (picked, source)
}

/// Distribution of the signed log error `ln(pred / truth)` of one target
/// variable of `model`, estimated from the test observations nearest in size.
pub fn estimate_error_distribution(
    model: &ModelRecord,
    test: &[Observation],
    target_size: u64,
    variable: usize,
) -> Result<EstimatedDistribution> {
    if variable >= model.spec().n_targets() {
        return Err(Error::field("variable", format!("{variable} is out of range")));
    }
    let sizes: Vec<u64> = test.iter().map(Observation::size_bits).collect();
    let (idx, source) = nearest_in_size(&sizes, target_size, NEIGHBOURS);
    if idx.is_empty() {
        return Err(Error::Empty("test observations for error estimation".into()));
    }
    let picked: Vec<Observation> = idx.iter().map(|&i| test[i].clone()).collect();
    let pred = model.predict_observations(&picked)?;
    // non-positive values have no log ratio
    let samples: Vec<f64> = pred
        .records
        .iter()
        .zip(&picked)
        .filter_map(|(p, o)| {
            let (yh, y) = (p.values[variable], o.y[variable]);
            (yh > 0.0 && y > 0.0).then(|| (yh / y).ln())
        })
        .collect();
    let fit = if samples.is_empty() {
        FittedDistribution {
            distribution: ErrorDistribution::degenerate(),
            w: None,
            p_value: None,
            samples: 0,
        }
    } else {
        fit_distribution(samples)?
    };
    Ok(EstimatedDistribution { variable, fit, source })
}
