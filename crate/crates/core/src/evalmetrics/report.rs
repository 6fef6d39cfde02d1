use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::metrics::{mean, spb, weighted_quantile};
use crate::error::{Error, Result};
use crate::seed;
use crate::synthcompiler::{var_dimension, Dimension};

pub const SIZE_BINS: usize = 10;

/// Box-plot summary of one variable's errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Most extreme values within 1.5 IQR of the quartiles.
    pub whisker_low: f64,
    pub whisker_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableError {
    pub name: String,
    pub dimension: Dimension,
    pub observations: usize,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionError {
    pub dimension: Dimension,
    /// Mean of the member variables' median errors.
    pub error: f64,
}

/// Median symmetric percentage bias per variable, averaged per dimension and overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub variables: Vec<VariableError>,
    pub dimensions: Vec<DimensionError>,
    /// Mean over dimensions.
    pub overall: f64,
    pub observations: usize,
    /// Predictions excluded from the metric because they were not positive.
    pub clamped_count: usize,
}

impl ErrorReport {
    pub fn dimension(&self, d: Dimension) -> Option<f64> {
        self.dimensions.iter().find(|e| e.dimension == d).map(|e| e.error)
    }

    /// Mean over variables of the per-variable medians.
    pub fn variable_mean(&self) -> f64 {
        mean(&self.variables.iter().map(|v| v.stats.median).collect::<Vec<_>>()).unwrap_or(0.0)
    }

    pub fn max_dimension(&self) -> f64 {
        self.dimensions.iter().map(|d| d.error).fold(0.0, f64::max)
    }
}

fn box_stats(items: &mut [(f64, f64)]) -> BoxStats {
    let q = |items: &mut [(f64, f64)], p| weighted_quantile(items, p).unwrap_or(0.0);
    let (q1, median, q3) = (q(items, 0.25), q(items, 0.5), q(items, 0.75));
    let iqr = q3 - q1;
    let lo = items
        .iter()
        .map(|i| i.0)
        .filter(|&v| v >= q1 - 1.5 * iqr)
        .fold(f64::INFINITY, f64::min);
    let hi = items
        .iter()
        .map(|i| i.0)
        .filter(|&v| v <= q3 + 1.5 * iqr)
        .fold(f64::NEG_INFINITY, f64::max);
    BoxStats {
        median,
        q1,
        q3,
        whisker_low: if lo.is_finite() { lo } else { median },
        whisker_high: if hi.is_finite() { hi } else { median },
    }
}

/// Error report over rows of predictions and ground truth in original units.
///
/// `weights` (one per row) turn the per-variable medians into weighted medians.
pub fn report_from(
    names: &[String],
    corners: usize,
    preds: &[Vec<f64>],
    truths: &[Vec<f64>],
    weights: Option<&[f64]>,
) -> Result<ErrorReport> {
    if preds.len() != truths.len() || weights.is_some_and(|w| w.len() != preds.len()) {
        return Err(Error::Shape("predictions, truths and weights differ in length".into()));
    }
    if preds.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let nv = names.len();
    if nv != corners * 5 + 1 || preds.iter().chain(truths).any(|r| r.len() != nv) {
        return Err(Error::Shape(format!("rows must hold {nv} variables")));
    }
    let mut clamped = 0;
    let mut variables = Vec::with_capacity(nv);
    for (j, name) in names.iter().enumerate() {
        let mut items = Vec::with_capacity(preds.len());
        for (i, (p, t)) in preds.iter().zip(truths).enumerate() {
            match spb(p[j], t[j]) {
                Ok(e) => items.push((e, weights.map_or(1.0, |w| w[i]))),
                Err(_) => clamped += 1,
            }
        }
        if items.is_empty() {
            return Err(Error::UndefinedMetric(format!("no positive predictions for {name}")));
        }
        variables.push(VariableError {
            name: name.clone(),
            dimension: var_dimension(j, corners),
            observations: items.len(),
            stats: box_stats(&mut items),
        });
    }
    let dimensions: Vec<DimensionError> = Dimension::ALL
        .iter()
        .map(|&d| DimensionError {
            dimension: d,
            error: mean(
                &variables[d.variables(corners)]
                    .iter()
                    .map(|v| v.stats.median)
                    .collect::<Vec<_>>(),
            )
            .unwrap_or(0.0),
        })
        .collect();
    let overall = mean(&dimensions.iter().map(|d| d.error).collect::<Vec<_>>()).unwrap_or(0.0);
    Ok(ErrorReport {
        variables,
        dimensions,
        overall,
        observations: preds.len(),
        clamped_count: clamped,
    })
}

/// Predictions and ground truth of one model's test set.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub preds: Vec<Vec<f64>>,
    pub truths: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CrossModelMode {
    /// Every model contributes total weight 1, spread over its observations.
    EqualWeight,
    /// The same number of observations is drawn from each model's test set.
    Subsample { per_model: usize, seed: u64 },
}

/// Aggregate report across several models with equal influence per model.
pub fn cross_model_report(
    names: &[String],
    corners: usize,
    sets: &[EvalSet],
    mode: CrossModelMode,
) -> Result<ErrorReport> {
    if sets.is_empty() {
        return Err(Error::Empty("no models to report on".into()));
    }
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    let mut weights = Vec::new();
    for (m, set) in sets.iter().enumerate() {
        let n = set.preds.len();
        if n == 0 || set.truths.len() != n {
            return Err(Error::Empty(format!("model {m} has no test observations")));
        }
        match mode {
            CrossModelMode::EqualWeight => {
                preds.extend(set.preds.iter().cloned());
                truths.extend(set.truths.iter().cloned());
                weights.extend(std::iter::repeat_n(1.0 / n as f64, n));
            }
            CrossModelMode::Subsample { per_model, seed: s } => {
                if per_model > n {
                    return Err(Error::field(
                        "per_model",
                        format!("model {m} has only {n} test observations"),
                    ));
                }
                let mut rng = seed::rng(s, &[m as u64]);
                let mut idx = sample(&mut rng, n, per_model).into_vec();
                idx.sort_unstable();
                for i in idx {
                    preds.push(set.preds[i].clone());
                    truths.push(set.truths[i].clone());
                }
            }
        }
    }
    let w = (!weights.is_empty()).then_some(weights.as_slice());
    report_from(names, corners, &preds, &truths, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Median per variable, then mean over variables.
    pub error: f64,
}

/// Errors grouped into log-spaced size bins. Only occupied bins are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBinReport {
    pub edges: Vec<f64>,
    pub bins: Vec<SizeBin>,
}

impl SizeBinReport {
    pub fn max_error(&self) -> f64 {
        self.bins.iter().map(|b| b.error).fold(0.0, f64::max)
    }

    /// Inclusive integer size ranges of bins whose error is at most `target`.
    pub fn ranges_meeting(&self, target: f64) -> Vec<(u64, u64)> {
        self.bins
            .iter()
            .filter(|b| b.error <= target)
            .map(|b| (b.lo.ceil() as u64, b.hi.floor() as u64))
            .collect()
    }
}

pub fn bin_index(size: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        return 0;
    }
    let f = (size.ln() - lo.ln()) / (hi.ln() - lo.ln());
    ((f * SIZE_BINS as f64).floor().max(0.0) as usize).min(SIZE_BINS - 1)
}

pub fn size_bin_report_from(
    names: &[String],
    corners: usize,
    sizes: &[u64],
    preds: &[Vec<f64>],
    truths: &[Vec<f64>],
) -> Result<SizeBinReport> {
    if sizes.len() != preds.len() {
        return Err(Error::Shape("one size per observation required".into()));
    }
    if sizes.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let lo = *sizes.iter().min().unwrap() as f64;
    let hi = *sizes.iter().max().unwrap() as f64;
    let edges: Vec<f64> = (0..=SIZE_BINS)
        .map(|i| {
            if hi <= lo {
                lo
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / SIZE_BINS as f64).exp()
            }
        })
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); SIZE_BINS];
    for (i, &s) in sizes.iter().enumerate() {
        members[bin_index(s as f64, lo, hi)].push(i);
    }
    let mut bins = Vec::new();
    for (b, idx) in members.iter().enumerate().filter(|(_, m)| !m.is_empty()) {
        let p: Vec<Vec<f64>> = idx.iter().map(|&i| preds[i].clone()).collect();
        let t: Vec<Vec<f64>> = idx.iter().map(|&i| truths[i].clone()).collect();
        let r = report_from(names, corners, &p, &t, None)?;
        bins.push(SizeBin {
            index: b,
            lo: edges[b],
            hi: edges[b + 1],
            count: idx.len(),
            error: r.variable_mean(),
        });
    }
    Ok(SizeBinReport { edges, bins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(c: usize) -> Vec<String> {
        (0..c * 5 + 1).map(|i| format!("v{i}")).collect()
    }

    fn rows(n: usize, seed_value: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = seed::rng(seed_value, &[]);
        (0..n).map(|_| (0..6).map(|_| rng.random_range(1.0..10.0)).collect()).collect()
    }

    #[test]
    fn perfect_and_constant_ratio() {
        let t = rows(20, 1);
        let r = report_from(&names(1), 1, &t, &t, None).unwrap();
        assert!(r.variables.iter().all(|v| v.stats.median == 0.0));
        assert_eq!(r.overall, 0.0);
        let p: Vec<Vec<f64>> = t.iter().map(|r| r.iter().map(|v| v * 1.02).collect()).collect();
        let r = report_from(&names(1), 1, &p, &t, None).unwrap();
        for v in &r.variables {
            assert!((v.stats.median - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_positive_predictions_are_counted() {
        let t = rows(5, 2);
        let mut p = t.clone();
        p[0][3] = 0.0;
        p[1][3] = -1.0;
        let r = report_from(&names(1), 1, &p, &t, None).unwrap();
        assert_eq!(r.clamped_count, 2);
        assert_eq!(r.variables[3].observations, 3);
    }

    #[test]
    fn equal_weight_cross_model() {
        let t1 = rows(7, 3);
        let p1: Vec<_> = t1.iter().map(|r| r.iter().map(|v| v * 1.1).collect()).collect();
        let t2 = rows(3, 4);
        let p2: Vec<_> = t2.iter().map(|r| r.iter().map(|v| v * 0.97).collect()).collect();
        let a = EvalSet { preds: p1.clone(), truths: t1.clone() };
        let b = EvalSet { preds: p2.clone(), truths: t2.clone() };
        let n = names(1);
        let one = cross_model_report(&n, 1, std::slice::from_ref(&a), CrossModelMode::EqualWeight).unwrap();
        assert_eq!(one, report_from(&n, 1, &p1, &t1, None).unwrap());

        let base = cross_model_report(&n, 1, &[a.clone(), b.clone()], CrossModelMode::EqualWeight).unwrap();
        let doubled = EvalSet {
            preds: [p1.clone(), p1.clone()].concat(),
            truths: [t1.clone(), t1.clone()].concat(),
        };
        let dup = cross_model_report(&n, 1, &[doubled, b], CrossModelMode::EqualWeight).unwrap();
        assert_eq!(base.variables.iter().map(|v| v.stats.median).collect::<Vec<_>>(),
                   dup.variables.iter().map(|v| v.stats.median).collect::<Vec<_>>());
    }

    #[test]
    fn size_bins() {
        let t = rows(30, 5);
        let sizes = vec![1024u64; 30];
        let r = size_bin_report_from(&names(1), 1, &sizes, &t, &t).unwrap();
        assert_eq!(r.bins.len(), 1);
        assert_eq!(r.bins[0].count, 30);
        assert_eq!(r.bins[0].error, 0.0);

        let sizes: Vec<u64> = (0..30).map(|i| 256u64 << (i % 12)).collect();
        let r = size_bin_report_from(&names(1), 1, &sizes, &t, &t).unwrap();
        assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), 30);
        assert_eq!(r.edges.len(), 11);
        assert_eq!(bin_index(256.0, 256.0, 256.0 * 2048.0), 0);
        assert_eq!(bin_index(256.0 * 2048.0, 256.0, 256.0 * 2048.0), 9);
    }
}
