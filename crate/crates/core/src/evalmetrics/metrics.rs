use crate::error::{Error, Result};

/// Signed absolute percentage error `(pred - truth) / truth * 100`.
pub fn ape(pred: f64, truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(Error::UndefinedMetric("percentage error of a zero reference".into()));
    }
    Ok((pred - truth) / truth * 100.0)
}

/// Unsigned symmetric percentage bias `(exp(|ln(pred / truth)|) - 1) * 100`.
pub fn spb(pred: f64, truth: f64) -> Result<f64> {
    if !(pred > 0.0 && truth > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "symmetric bias needs positive values, got {pred} and {truth}"
        )));
    }
    // exp(|ln r|) - 1 == max(r, 1/r) - 1, computed without the round trip
    let r = if pred >= truth { pred / truth } else { truth / pred };
    Ok((r - 1.0) * 100.0)
}

/// Signed log accuracy ratio `ln(pred / truth)`.
pub fn log_ratio(pred: f64, truth: f64) -> Result<f64> {
    if !(pred > 0.0 && truth > 0.0) {
        return Err(Error::UndefinedMetric(format!("log ratio of {pred} and {truth}")));
    }
    Ok((pred / truth).ln())
}

/// Weighted quantile with averaged inverted-CDF semantics: with equal
/// weights the median of an even-length sample is the mean of the two middle
/// values. `items` holds `(value, weight)` pairs; weights must be positive.
pub fn weighted_quantile(items: &mut [(f64, f64)], q: f64) -> Option<f64> {
    if items.is_empty() {
        return None;
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = items.iter().map(|i| i.1).sum();
    let target = q.clamp(0.0, 1.0) * total;
    let tol = 1e-12 * total;
    let mut cum = 0.0;
    for (i, &(v, w)) in items.iter().enumerate() {
        cum += w;
        if (cum - target).abs() <= tol && i + 1 < items.len() && q > 0.0 {
            return Some(0.5 * (v + items[i + 1].0));
        }
        if cum > target + tol || (q == 0.0 && cum > 0.0) {
            return Some(v);
        }
    }
    items.last().map(|i| i.0)
}

pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut items: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    weighted_quantile(&mut items, q)
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
