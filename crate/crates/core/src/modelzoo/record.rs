use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Observation, ScalerSet};
use crate::error::{Error, Result};
use crate::evalmetrics::{report_from, size_bin_report_from, ErrorReport, SizeBinReport};
use crate::neuralnet::{Architecture, Layer, Network};
use crate::par;
use crate::paramspace::{validate, CompilerSpec, Parametrization};
use crate::synthcompiler::{variable_names, PpaRecord};

pub const FORMAT_VERSION: u32 = 1;

/// Rows per shard when predicting large batches.
const PREDICT_CHUNK: usize = 2048;

/// Mean and standard deviation of one target variable in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetStat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl TargetStat {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        TargetStat {
            mean,
            std,
            count: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub dataset_size: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub split_seed: u64,
    pub train_seed: u64,
    pub epochs_run: usize,
    pub stopping_epoch: usize,
    /// Median error per PPA dimension on the test split.
    pub test_error: Option<ErrorReport>,
    /// Target statistics of the training split, in original units.
    pub target_stats: Vec<TargetStat>,
    #[serde(default)]
    pub below_target: bool,
}

/// A trained surrogate of one compiler version.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    spec: CompilerSpec,
    network: Network,
    scalers: ScalerSet,
    meta: TrainingMeta,
    frozen: bool,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub records: Vec<PpaRecord>,
    /// Values clamped to zero by the inverse scaling.
    pub clamped: usize,
}

impl ModelRecord {
    pub fn new(spec: CompilerSpec, network: Network, scalers: ScalerSet, meta: TrainingMeta) -> Result<Self> {
        if scalers.inputs.len() != network.input_dim() || scalers.targets.len() != network.output_dim() {
            return Err(Error::Shape("scaler dimensions do not match the network".into()));
        }
        if network.output_dim() != spec.n_targets() {
            return Err(Error::Shape(format!(
                "network has {} outputs, {} expects {}",
                network.output_dim(),
                spec.key(),
                spec.n_targets()
            )));
        }
        Ok(ModelRecord {
            spec,
            network,
            scalers,
            meta,
            frozen: false,
        })
    }

    pub fn compiler_id(&self) -> &str {
        &self.spec.compiler_id
    }

    pub fn version(&self) -> &str {
        &self.spec.version
    }

    pub fn key(&self) -> String {
        self.spec.key()
    }

    pub fn spec(&self) -> &CompilerSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn architecture(&self) -> Architecture {
        self.network.arch
    }

    pub fn scalers(&self) -> &ScalerSet {
        &self.scalers
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    fn mutable(&mut self) -> Result<&mut Self> {
        if self.frozen {
            return Err(Error::Frozen(self.key()));
        }
        Ok(self)
    }

    pub fn set_network(&mut self, network: Network) -> Result<()> {
        let me = self.mutable()?;
        if network.input_dim() != me.network.input_dim() || network.output_dim() != me.network.output_dim() {
            return Err(Error::Shape("replacement network changes dimensions".into()));
        }
        me.network = network;
        Ok(())
    }

    pub fn meta_mut(&mut self) -> Result<&mut TrainingMeta> {
        Ok(&mut self.mutable()?.meta)
    }

    /// Scaled-space predictions for already encoded inputs, in original units.
    pub fn predict_encoded<'a>(&self, xs: &[&'a [f64]]) -> Result<Prediction> {
        let c = self.spec.corners.len();
        let chunks = par::map_chunks(xs, PREDICT_CHUNK, |chunk| {
            let x = self.scalers.x_matrix(chunk.iter().copied());
            let out = self.network.forward(&x).expect("input width checked");
            out.rows()
                .into_iter()
                .map(|row| self.scalers.inverse_y(row.as_slice().expect("standard layout")))
                .collect()
        });
        let mut clamped = 0;
        let mut records = Vec::with_capacity(chunks.len());
        for (y, k) in chunks {
            clamped += k;
            records.push(PpaRecord { corners: c, values: y });
        }
        Ok(Prediction { records, clamped })
    }

    /// Validates, encodes and predicts a batch of parametrizations.
    pub fn predict_detailed(&self, ps: &[Parametrization]) -> Result<Prediction> {
        let mut xs = Vec::with_capacity(ps.len());
        for (i, p) in ps.iter().enumerate() {
            validate(&self.spec, p)
                .and_then(|v| v.into_result())
                .map_err(|e| Error::at(i, e))?;
            xs.push(dataset::encode(&self.spec, p).map_err(|e| Error::at(i, e))?);
        }
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        self.predict_encoded(&refs)
    }

    pub fn predict(&self, ps: &[Parametrization]) -> Result<Vec<PpaRecord>> {
        Ok(self.predict_detailed(ps)?.records)
    }

    pub fn predict_observations(&self, obs: &[Observation]) -> Result<Prediction> {
        let refs: Vec<&[f64]> = obs.iter().map(|o| o.x.as_slice()).collect();
        if refs.iter().any(|x| x.len() != self.network.input_dim()) {
            return Err(Error::Shape("observation encoding does not match the model".into()));
        }
        self.predict_encoded(&refs)
    }

    pub fn error_report(&self, obs: &[Observation]) -> Result<ErrorReport> {
        let pred = self.predict_observations(obs)?;
        let preds: Vec<Vec<f64>> = pred.records.into_iter().map(|r| r.values).collect();
        let truths: Vec<Vec<f64>> = obs.iter().map(|o| o.y.clone()).collect();
        report_from(&variable_names(&self.spec), self.spec.corners.len(), &preds, &truths, None)
    }

    pub fn size_bin_report(&self, obs: &[Observation]) -> Result<SizeBinReport> {
        let pred = self.predict_observations(obs)?;
        let preds: Vec<Vec<f64>> = pred.records.into_iter().map(|r| r.values).collect();
        let truths: Vec<Vec<f64>> = obs.iter().map(|o| o.y.clone()).collect();
        let sizes: Vec<u64> = obs.iter().map(Observation::size_bits).collect();
        size_bin_report_from(&variable_names(&self.spec), self.spec.corners.len(), &sizes, &preds, &truths)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StoredRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Malformed("model file lacks format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::FormatMigration {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        let stored: StoredRecord = serde_json::from_value(value)?;
        stored.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Parameter block: little-endian f64 values, base64 encoded.
#[derive(Serialize, Deserialize)]
struct StoredLayer {
    inputs: usize,
    outputs: usize,
    weights: String,
    biases: String,
}

#[derive(Serialize, Deserialize)]
struct StoredRecord {
    format_version: u32,
    compiler_id: String,
    version: String,
    frozen: bool,
    architecture: Architecture,
    spec: CompilerSpec,
    scalers: ScalerSet,
    meta: TrainingMeta,
    layers: Vec<StoredLayer>,
}

fn encode_block<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(|v| v.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_block(text: &str, len: usize) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Malformed(format!("parameter block: {e}")))?;
    if bytes.len() != len * 8 {
        return Err(Error::Malformed(format!("parameter block holds {} bytes, expected {}", bytes.len(), len * 8)));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

impl From<&ModelRecord> for StoredRecord {
    fn from(r: &ModelRecord) -> Self {
        StoredRecord {
            format_version: FORMAT_VERSION,
            compiler_id: r.spec.compiler_id.clone(),
            version: r.spec.version.clone(),
            frozen: r.frozen,
            architecture: r.network.arch,
            spec: r.spec.clone(),
            scalers: r.scalers.clone(),
            meta: r.meta.clone(),
            layers: r
                .network
                .layers
                .iter()
                .map(|l| StoredLayer {
                    inputs: l.w.nrows(),
                    outputs: l.w.ncols(),
                    // row-major regardless of memory layout
                    weights: encode_block(l.w.iter()),
                    biases: encode_block(l.b.iter()),
                })
                .collect(),
        }
    }
}

impl TryFrom<StoredRecord> for ModelRecord {
    type Error = Error;

    fn try_from(s: StoredRecord) -> Result<Self> {
        if s.compiler_id != s.spec.compiler_id || s.version != s.spec.version {
            return Err(Error::Malformed("record key disagrees with its embedded spec".into()));
        }
        let mut layers = Vec::with_capacity(s.layers.len());
        for l in &s.layers {
            let w = decode_block(&l.weights, l.inputs * l.outputs)?;
            let b = decode_block(&l.biases, l.outputs)?;
            layers.push(Layer {
                w: Array2::from_shape_vec((l.inputs, l.outputs), w).map_err(|e| Error::Malformed(e.to_string()))?,
                b: Array1::from(b),
            });
        }
        if layers.len() != s.architecture.hidden_layers + 1
            || layers.windows(2).any(|p| p[0].w.ncols() != p[1].w.nrows())
        {
            return Err(Error::Malformed("layer chain does not match the architecture".into()));
        }
        let network = Network {
            arch: s.architecture,
            layers,
        };
        let mut r = ModelRecord::new(s.spec, network, s.scalers, s.meta)?;
        r.frozen = s.frozen;
        Ok(r)
    }
}
