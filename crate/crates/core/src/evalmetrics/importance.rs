use serde::{Deserialize, Serialize};

use crate::dataset::{feature_names, Observation};
use crate::error::{Error, Result};
use crate::modelzoo::ModelRecord;
use crate::par;
use crate::synthcompiler::{var_dimension, Dimension};

/// Mean input sensitivities per (input, PPA dimension), each row scaled into [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub inputs: Vec<String>,
    pub dimensions: Vec<Dimension>,
    /// `values[input][dimension]`.
    pub values: Vec<Vec<f64>>,
    /// Rows whose entries are all zero and therefore not normalized.
    pub degenerate: Vec<bool>,
}

impl FeatureImportance {
    pub fn get(&self, input: &str, d: Dimension) -> Option<f64> {
        let i = self.inputs.iter().position(|n| n == input)?;
        let j = self.dimensions.iter().position(|&e| e == d)?;
        Some(self.values[i][j])
    }
}

/// Averages the scaled-space input Jacobian of `model` over `obs`.
pub fn feature_importance(model: &ModelRecord, obs: &[Observation]) -> Result<FeatureImportance> {
    if obs.is_empty() {
        return Err(Error::Empty("observations for feature importance".into()));
    }
    let net = model.network();
    let (n_in, n_out) = (net.input_dim(), net.output_dim());
    if obs.iter().any(|o| o.x.len() != n_in) {
        return Err(Error::Shape("observation encoding does not match the model".into()));
    }
    let partial = par::map_chunks(obs, 256, |chunk| {
        let mut sum = vec![0.0; n_in * n_out];
        for o in chunk {
            let j = net.input_jacobian(&model.scalers().transform_x(&o.x)).expect("width checked");
            for (s, v) in sum.iter_mut().zip(j.iter()) {
                *s += v;
            }
        }
        vec![sum]
    });
    // out x in, row-major
    let mut mean_j = vec![0.0; n_in * n_out];
    for s in &partial {
        for (m, v) in mean_j.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean_j.iter_mut().for_each(|m| *m /= obs.len() as f64);

    let corners = model.spec().corners.len();
    let dims = Dimension::ALL.to_vec();
    let mut values = vec![vec![0.0; dims.len()]; n_in];
    let mut counts = vec![0usize; dims.len()];
    for out in 0..n_out {
        let d = var_dimension(out, corners) as usize;
        counts[d] += 1;
        for (i, row) in values.iter_mut().enumerate() {
            row[d] += mean_j[out * n_in + i];
        }
    }
    let mut degenerate = Vec::with_capacity(n_in);
    for row in &mut values {
        for (v, &c) in row.iter_mut().zip(&counts) {
            *v /= c.max(1) as f64;
        }
        let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        degenerate.push(peak == 0.0);
        if peak > 0.0 {
            row.iter_mut().for_each(|v| *v /= peak);
        }
    }
    Ok(FeatureImportance {
        inputs: feature_names(model.spec()),
        dimensions: dims,
        values,
        degenerate,
    })
}
