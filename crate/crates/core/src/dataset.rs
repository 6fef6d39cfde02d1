//! Sampling, encoding, scaling and splitting of training data.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paramspace::{CompilerSpec, Parametrization, WORD_DEPTH, WORD_WIDTH};
use crate::seed;
use crate::synthcompiler::{compile_batch, CoefficientSet, PpaRecord, TableRow};

/// Rejection attempts allowed per requested parametrization.
pub const RETRY_FACTOR: usize = 1000;

/// An inclusive range of memory sizes in bits.
pub type SizeRange = (u64, u64);

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Ordinal index per parameter, then depth, width and size.
    pub x: Vec<f64>,
    /// Targets in original units.
    pub y: Vec<f64>,
    pub parametrization: Parametrization,
}

impl Observation {
    pub fn size_bits(&self) -> u64 {
        self.parametrization.size_bits().unwrap_or(0)
    }
}

/// Names of the encoded explanatory variables.
pub fn feature_names(spec: &CompilerSpec) -> Vec<String> {
    let mut names = spec.input_names();
    names.push("size".into());
    names
}

/// Ordinal encoding of `p`: choice index per parameter, raw depth and width,
/// and the derived size `depth * width`.
pub fn encode(spec: &CompilerSpec, p: &Parametrization) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(spec.params.len() + 3);
    for def in &spec.params {
        let v = p
            .get(&def.name)
            .ok_or_else(|| Error::Structure(format!("missing parameter {}", def.name)))?;
        let i = def
            .index_of(v)
            .ok_or_else(|| Error::IllegalParametrization(format!("{}={v} is not a legal choice", def.name)))?;
        x.push(i as f64);
    }
    let (Some(d), Some(w)) = (p.depth(), p.width()) else {
        return Err(Error::Structure(format!("{WORD_DEPTH} and {WORD_WIDTH} are required")));
    };
    x.push(f64::from(d));
    x.push(f64::from(w));
    x.push(f64::from(d) * f64::from(w));
    Ok(x)
}

fn excluded(size: u64, ranges: &[SizeRange]) -> bool {
    ranges.iter().any(|&(lo, hi)| size >= lo && size <= hi)
}

/// Draws `n` parametrizations, fixing depth, width and then each parameter
/// uniformly among its legal choices. Sizes inside `exclude` are rejected and
/// redrawn, at most `RETRY_FACTOR * n` times in total.
pub fn sample_parametrizations(
    spec: &CompilerSpec,
    n: usize,
    rng_seed: u64,
    exclude: &[SizeRange],
) -> Result<Vec<Parametrization>> {
    if n == 0 {
        return Err(Error::field("n", "must be at least 1"));
    }
    let mut rng = seed::rng(rng_seed, &[seed::hash_str(&spec.key())]);
    let budget = RETRY_FACTOR * n;
    let mut attempts = 0;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if attempts == budget {
            return Err(Error::SamplingExhausted { attempts });
        }
        attempts += 1;
        let depth = spec.depth_values[rng.random_range(0..spec.depth_values.len())];
        let width = spec.width_values[rng.random_range(0..spec.width_values.len())];
        if excluded(u64::from(depth) * u64::from(width), exclude) {
            continue;
        }
        let mut values = std::collections::BTreeMap::new();
        values.insert(WORD_DEPTH.to_string(), i64::from(depth).into());
        values.insert(WORD_WIDTH.to_string(), i64::from(width).into());
        for (pi, def) in spec.params.iter().enumerate() {
            let allowed = spec.allowed_choices(pi, depth, width);
            let ci = allowed[rng.random_range(0..allowed.len())];
            values.insert(def.name.clone(), def.choices[ci].clone());
        }
        out.push(Parametrization {
            compiler_id: spec.compiler_id.clone(),
            version: spec.version.clone(),
            values,
        });
    }
    Ok(out)
}

/// Compiles `ps` with the synthetic oracle and encodes the results.
pub fn generate(
    spec: &CompilerSpec,
    coeffs: &CoefficientSet,
    ps: Vec<Parametrization>,
    workers: usize,
) -> Result<Vec<Observation>> {
    let ppa = compile_batch(spec, coeffs, &ps, None, workers)?;
    ps.into_iter()
        .zip(ppa)
        .map(|(p, r)| observation(spec, p, r))
        .collect()
}

pub fn observation(spec: &CompilerSpec, p: Parametrization, ppa: PpaRecord) -> Result<Observation> {
    Ok(Observation {
        x: encode(spec, &p)?,
        y: ppa.values,
        parametrization: p,
    })
}

pub fn from_rows(spec: &CompilerSpec, rows: Vec<TableRow>) -> Result<Vec<Observation>> {
    rows.into_iter()
        .map(|r| observation(spec, r.parametrization, r.ppa))
        .collect()
}

pub fn to_rows(spec: &CompilerSpec, obs: &[Observation]) -> Result<Vec<TableRow>> {
    obs.iter()
        .map(|o| {
            Ok(TableRow {
                parametrization: o.parametrization.clone(),
                ppa: PpaRecord::from_flat(spec.corners.len(), o.y.clone())?,
            })
        })
        .collect()
}

/// Scaling of one variable: optional square root, z-score, then min-max to [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarScaler {
    pub sqrt: bool,
    pub mean: f64,
    pub std: f64,
    /// Range of the standardized training values.
    pub min: f64,
    pub max: f64,
    /// Constant on the training set; every value maps to 0.
    pub degenerate: bool,
}

impl VarScaler {
    pub fn fit(values: &[f64], sqrt: bool) -> Self {
        let t: Vec<f64> = values.iter().map(|&v| if sqrt { v.sqrt() } else { v }).collect();
        let n = t.len() as f64;
        let mean = t.iter().sum::<f64>() / n;
        let std = (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let z = t.iter().map(|v| (v - mean) / std);
        let (min, max) = z.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let degenerate = !(std > 0.0 && max > min);
        if degenerate {
            return VarScaler {
                sqrt,
                mean,
                std: 0.0,
                min: 0.0,
                max: 0.0,
                degenerate,
            };
        }
        VarScaler {
            sqrt,
            mean,
            std,
            min,
            max,
            degenerate,
        }
    }

    pub fn transform(&self, v: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let t = if self.sqrt { v.sqrt() } else { v };
        let z = (t - self.mean) / self.std;
        2.0 * (z - self.min) / (self.max - self.min) - 1.0
    }

    /// Inverse transform; the flag is set when a negative pre-square value was clamped to 0.
    pub fn inverse(&self, s: f64) -> (f64, bool) {
        let (t, noise) = if self.degenerate {
            (self.mean, 0.0)
        } else {
            let z = (s + 1.0) / 2.0 * (self.max - self.min) + self.min;
            let spread = z * self.std;
            (spread + self.mean, 8.0 * f64::EPSILON * (spread.abs() + self.mean.abs()))
        };
        // values within rounding noise of zero are zero
        if t.abs() <= noise {
            return (0.0, false);
        }
        if !self.sqrt {
            return (t, false);
        }
        if t < 0.0 {
            (0.0, true)
        } else {
            (t * t, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerSet {
    pub inputs: Vec<VarScaler>,
    pub targets: Vec<VarScaler>,
}

/// Fits input and target scalers on training observations only.
pub fn fit_scalers(train: &[Observation]) -> Result<ScalerSet> {
    let first = train.first().ok_or_else(|| Error::Empty("training set".into()))?;
    let (nx, ny) = (first.x.len(), first.y.len());
    if train.iter().any(|o| o.x.len() != nx || o.y.len() != ny) {
        return Err(Error::Shape("observations differ in length".into()));
    }
    let column = |f: &dyn Fn(&Observation) -> f64| train.iter().map(f).collect::<Vec<_>>();
    let inputs = (0..nx).map(|j| VarScaler::fit(&column(&|o| o.x[j]), false)).collect();
    let targets = (0..ny).map(|j| VarScaler::fit(&column(&|o| o.y[j]), true)).collect();
    Ok(ScalerSet { inputs, targets })
}

impl ScalerSet {
    pub fn transform_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.inputs).map(|(&v, s)| s.transform(v)).collect()
    }

    pub fn transform_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.targets).map(|(&v, s)| s.transform(v)).collect()
    }

    /// Returns targets in original units and the number of clamped values.
    pub fn inverse_y(&self, s: &[f64]) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let y = s
            .iter()
            .zip(&self.targets)
            .map(|(&v, sc)| {
                let (y, c) = sc.inverse(v);
                clamped += usize::from(c);
                y
            })
            .collect();
        (y, clamped)
    }

    pub fn x_matrix<'a>(&self, xs: impl ExactSizeIterator<Item = &'a [f64]>) -> Array2<f64> {
        let n = xs.len();
        let mut m = Array2::zeros((n, self.inputs.len()));
        for (i, x) in xs.enumerate() {
            for (j, (&v, s)) in x.iter().zip(&self.inputs).enumerate() {
                m[[i, j]] = s.transform(v);
            }
        }
        m
    }

    /// Scaled `(x, y)` matrices of `obs`.
    pub fn matrices(&self, obs: &[Observation]) -> (Array2<f64>, Array2<f64>) {
        let x = self.x_matrix(obs.iter().map(|o| o.x.as_slice()));
        let mut y = Array2::zeros((obs.len(), self.targets.len()));
        for (i, o) in obs.iter().enumerate() {
            for (j, (&v, s)) in o.y.iter().zip(&self.targets).enumerate() {
                y[[i, j]] = s.transform(v);
            }
        }
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<Observation>,
    pub validation: Vec<Observation>,
    pub test: Vec<Observation>,
    pub split_seed: u64,
}

/// `(train, validation, test)` sizes for `n` observations.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = 2 * n / 3;
    let validation = (n - train) / 3;
    (train, validation, n - train - validation)
}

/// Random two-thirds training split; the hold-out is split two thirds test,
/// one third validation.
pub fn split(observations: Vec<Observation>, seed_value: u64) -> SplitDataset {
    let n = observations.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_value, &[0x5911]));
    let (n_train, n_val, _) = split_sizes(n);
    let mut slots: Vec<Option<Observation>> = observations.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<Observation> { idx.iter().map(|&i| slots[i].take().unwrap()).collect() };
    let train = take(&order[..n_train]);
    let validation = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..]);
    SplitDataset {
        train,
        validation,
        test,
        split_seed: seed_value,
    }
}
