use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::median;
use crate::dataset::sample_parametrizations;
use crate::error::{Error, Result};
use crate::modelzoo::ModelRecord;

pub const STANDARD_COUNTS: [usize; 6] = [1, 10, 100, 1_000, 10_000, 100_000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub samples: usize,
    /// Median wall time of one batch prediction.
    pub seconds: f64,
    /// Time relative to a batch of one.
    pub scale_factor: f64,
    pub per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub compiler: String,
    pub repeats: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn row(&self, samples: usize) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.samples == samples)
    }
}

/// Times batch prediction (validation, encoding and inference) for each
/// batch size in `counts`, taking the median over `repeats` runs.
pub fn inference_timing(model: &ModelRecord, counts: &[usize], repeats: usize, seed: u64) -> Result<TimingTable> {
    if repeats == 0 || counts.is_empty() || counts.contains(&0) {
        return Err(Error::field("counts", "batch sizes and repeats must be positive"));
    }
    let max = counts.iter().copied().max().unwrap_or(1);
    let pool = sample_parametrizations(model.spec(), max, seed, &[])?;
    let mut times = Vec::with_capacity(counts.len());
    for &n in counts {
        let batch = &pool[..n];
        // warm-up
        model.predict(batch)?;
        let mut t = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            std::hint::black_box(model.predict(std::hint::black_box(batch))?);
            t.push(start.elapsed().as_secs_f64());
        }
        times.push((n, median(&t).unwrap_or(f64::NAN)));
    }
    let base = counts
        .iter()
        .position(|&n| n == 1)
        .map(|i| times[i].1)
        .unwrap_or(times[0].1 / times[0].0 as f64);
    Ok(TimingTable {
        compiler: model.key(),
        repeats,
        rows: times
            .into_iter()
            .map(|(samples, seconds)| TimingRow {
                samples,
                seconds,
                scale_factor: seconds / base,
                per_second: samples as f64 / seconds,
            })
            .collect(),
    })
}
