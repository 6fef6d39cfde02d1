//! Exhaustive memory selection: enumerate legal parametrizations, predict
//! their PPA with the zoo, drop those too slow for the target frequency and
//! rank the rest four ways.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalmetrics::{median, spb};
use crate::modelzoo::{ModelRecord, Zoo};
use crate::paramspace::{enumerate_solutions, CompilerSpec, Fixed, ParamValue, Parametrization, PortConfig, SkippedCompiler};
use crate::synthcompiler::{compile, var_index, variable_names, CoefficientSet, Dimension, PpaRecord};

/// Corner used for each PPA dimension that depends on one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerSelection {
    pub dynamic_power: String,
    pub leakage: String,
    pub access_time: String,
    pub cycle_time: String,
}

impl CornerSelection {
    pub fn all(corner: &str) -> Self {
        CornerSelection {
            dynamic_power: corner.into(),
            leakage: corner.into(),
            access_time: corner.into(),
            cycle_time: corner.into(),
        }
    }

    fn names(&self) -> [&str; 4] {
        [&self.dynamic_power, &self.leakage, &self.access_time, &self.cycle_time]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub dynamic_power: f64,
    pub leakage: f64,
    pub area: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            dynamic_power: 1.0,
            leakage: 1.0,
            area: 1.0,
        }
    }
}

/// Which dynamic power figure ranks the dynamic power list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicMode {
    #[default]
    Read,
    MaxReadWrite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_config: Option<PortConfig>,
    /// Fixed parameter values; `word_depth` and `word_width` are required.
    pub fixed: BTreeMap<String, ParamValue>,
    pub corners: CornerSelection,
    /// Minimum operating frequency in MHz; absent disables the filter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_mhz: Option<f64>,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub dynamic_mode: DynamicMode,
}

impl OptimizationRequest {
    pub fn new(depth: u32, width: u32, corner: &str) -> Self {
        OptimizationRequest {
            port_config: None,
            fixed: Fixed::size(depth, width).values,
            corners: CornerSelection::all(corner),
            frequency_mhz: None,
            weights: Weights::default(),
            dynamic_mode: DynamicMode::Read,
        }
    }

    pub fn to_fixed(&self) -> Fixed {
        Fixed {
            port_config: self.port_config,
            values: self.fixed.clone(),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.to_fixed().depth_width()?;
        let w = [self.weights.dynamic_power, self.weights.leakage, self.weights.area];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::field("weights", "must be finite and non-negative"));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::field("weights", "must not all be zero"));
        }
        if let Some(f) = self.frequency_mhz {
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::field("frequency_mhz", "must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Corner indices of a selection resolved against one spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedCorners {
    pub dynamic_power: usize,
    pub leakage: usize,
    pub access_time: usize,
    pub cycle_time: usize,
}

impl ResolvedCorners {
    pub fn resolve(spec: &CompilerSpec, sel: &CornerSelection) -> Result<Self> {
        let mut idx = [0; 4];
        for (i, name) in sel.names().into_iter().enumerate() {
            idx[i] = spec.corner_index(name).ok_or_else(|| {
                Error::field("corners", format!("corner {name} does not exist in {}", spec.key()))
            })?;
        }
        Ok(ResolvedCorners {
            dynamic_power: idx[0],
            leakage: idx[1],
            access_time: idx[2],
            cycle_time: idx[3],
        })
    }
}

/// Dynamic power figure of `ppa` at corner `k`.
pub fn dynamic_power(ppa: &PpaRecord, k: usize, mode: DynamicMode) -> f64 {
    let read = ppa.get(Dimension::ReadPower, k);
    match mode {
        DynamicMode::Read => read,
        DynamicMode::MaxReadWrite => read.max(ppa.get(Dimension::WritePower, k)),
    }
}

/// Maximum operating frequency in MHz for a cycle time in ns.
pub fn max_frequency_mhz(cycle_time_ns: f64) -> f64 {
    1000.0 / cycle_time_ns
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn z(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// Mean and spread of the ranked dimensions, estimated from known PPA data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScalers {
    pub dynamic_power: Standardizer,
    pub leakage: Standardizer,
    pub area: Standardizer,
    /// Keys of the models whose training data contributed.
    pub sources: Vec<String>,
}

/// Pools per-model `(mean, std, count)` statistics into one standardizer.
fn pool(parts: &[(f64, f64, usize)]) -> Result<Standardizer> {
    let n: usize = parts.iter().map(|p| p.2).sum();
    if n == 0 {
        return Err(Error::Empty("known PPA data for scaling".into()));
    }
    let nf = n as f64;
    let mean = parts.iter().map(|&(m, _, c)| m * c as f64).sum::<f64>() / nf;
    let var = parts
        .iter()
        .map(|&(m, s, c)| c as f64 * (s * s + (m - mean).powi(2)))
        .sum::<f64>()
        / nf;
    let std = var.sqrt();
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::field("scalers", "known PPA data has no spread"));
    }
    Ok(Standardizer { mean, std })
}

impl DimensionScalers {
    /// Pools the training target statistics of `models` at the selected corners.
    pub fn from_models(models: &[&ModelRecord], sel: &CornerSelection, mode: DynamicMode) -> Result<Self> {
        let mut dynamic = Vec::new();
        let mut leakage = Vec::new();
        let mut area = Vec::new();
        for m in models {
            let spec = m.spec();
            let c = spec.corners.len();
            let r = ResolvedCorners::resolve(spec, sel)?;
            let stats = &m.meta().target_stats;
            let get = |i: usize| (stats[i].mean, stats[i].std, stats[i].count);
            dynamic.push(get(var_index(Dimension::ReadPower, r.dynamic_power, c)));
            if mode == DynamicMode::MaxReadWrite {
                dynamic.push(get(var_index(Dimension::WritePower, r.dynamic_power, c)));
            }
            leakage.push(get(var_index(Dimension::Leakage, r.leakage, c)));
            area.push(get(var_index(Dimension::Area, 0, c)));
        }
        Ok(DimensionScalers {
            dynamic_power: pool(&dynamic)?,
            leakage: pool(&leakage)?,
            area: pool(&area)?,
            sources: models.iter().map(|m| m.key()).collect(),
        })
    }
}

/// Weighted sum of the z-scored dynamic power, leakage and area of `ppa`.
pub fn weighted_rank_value(
    ppa: &PpaRecord,
    scalers: &DimensionScalers,
    weights: &Weights,
    corners: &ResolvedCorners,
    mode: DynamicMode,
) -> f64 {
    weights.dynamic_power * scalers.dynamic_power.z(dynamic_power(ppa, corners.dynamic_power, mode))
        + weights.leakage * scalers.leakage.z(ppa.get(Dimension::Leakage, corners.leakage))
        + weights.area * scalers.area.z(ppa.area())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// `id@version` of the compiler.
    pub compiler: String,
    pub parametrization: Parametrization,
    pub ppa: PpaRecord,
    /// Value of the list's ranking criterion.
    pub value: f64,
    /// Position in the enumeration, the tie-breaker.
    pub candidate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub candidates_total: usize,
    pub filtered_by_frequency: usize,
    pub compilers_skipped: Vec<SkippedCompiler>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResults {
    pub dynamic_power: Vec<RankedEntry>,
    pub leakage: Vec<RankedEntry>,
    pub area: Vec<RankedEntry>,
    pub weighted_sum: Vec<RankedEntry>,
    pub diagnostics: Diagnostics,
    pub scalers: Option<DimensionScalers>,
    pub elapsed_ms: f64,
}

impl RankedResults {
    pub fn lists(&self) -> [(&'static str, &[RankedEntry]); 4] {
        [
            ("dynamic_power", &self.dynamic_power),
            ("leakage", &self.leakage),
            ("area", &self.area),
            ("weighted_sum", &self.weighted_sum),
        ]
    }

    pub fn len(&self) -> usize {
        self.area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }
}

/// A surviving candidate with its criterion values.
struct Candidate {
    compiler: String,
    parametrization: Parametrization,
    ppa: PpaRecord,
    keys: [f64; 4],
}

fn ranked(cands: &[Candidate], slot: usize) -> Vec<RankedEntry> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    // stable: equal values keep enumeration order
    order.sort_by(|&a, &b| cands[a].keys[slot].total_cmp(&cands[b].keys[slot]));
    order
        .into_iter()
        .map(|i| RankedEntry {
            compiler: cands[i].compiler.clone(),
            parametrization: cands[i].parametrization.clone(),
            ppa: cands[i].ppa.clone(),
            value: cands[i].keys[slot],
            candidate: i,
        })
        .collect()
}

/// Candidate predictions for one request, before filtering and ranking.
pub struct Predicted {
    pub solutions: Vec<(usize, Parametrization, PpaRecord)>,
    pub skipped: Vec<SkippedCompiler>,
}

/// Enumerates every legal parametrization and predicts it with its compiler's model.
pub fn predict_candidates(request: &OptimizationRequest, zoo: &Zoo, specs: &[CompilerSpec]) -> Result<Predicted> {
    request.check()?;
    let en = enumerate_solutions(specs, &request.to_fixed())?;
    let mut solutions = Vec::with_capacity(en.solutions.len());
    let mut start = 0;
    while start < en.solutions.len() {
        let si = en.solutions[start].spec;
        let end = start + en.solutions[start..].iter().take_while(|s| s.spec == si).count();
        let model = zoo.get_spec(&specs[si])?;
        if model.spec() != &specs[si] {
            return Err(Error::InvalidSpec(format!("model of {} was trained on a different spec", specs[si].key())));
        }
        let ps: Vec<Parametrization> = en.solutions[start..end].iter().map(|s| s.parametrization.clone()).collect();
        let preds = model.predict(&ps)?;
        solutions.extend(ps.into_iter().zip(preds).map(|(p, r)| (si, p, r)));
        start = end;
    }
    Ok(Predicted {
        solutions,
        skipped: en.skipped,
    })
}

/// Finds the best memories for `request` among the compilers in `specs`.
///
/// Each applicable compiler needs a model in `zoo`. Cycle time only filters;
/// it never ranks. Ties keep enumeration order.
pub fn optimize(request: &OptimizationRequest, zoo: &Zoo, specs: &[CompilerSpec]) -> Result<RankedResults> {
    let started = Instant::now();
    let predicted = predict_candidates(request, zoo, specs)?;
    let total = predicted.solutions.len();

    let mut applicable: Vec<usize> = predicted.solutions.iter().map(|s| s.0).collect();
    applicable.dedup();
    let resolved: BTreeMap<usize, ResolvedCorners> = applicable
        .iter()
        .map(|&si| Ok((si, ResolvedCorners::resolve(&specs[si], &request.corners)?)))
        .collect::<Result<_>>()?;
    let models: Vec<&ModelRecord> = applicable
        .iter()
        .map(|&si| zoo.get_spec(&specs[si]).map(|m| m.as_ref()))
        .collect::<Result<_>>()?;
    let scalers = DimensionScalers::from_models(&models, &request.corners, request.dynamic_mode)?;

    let mut cands = Vec::with_capacity(total);
    for (si, p, ppa) in predicted.solutions {
        let r = &resolved[&si];
        if let Some(target) = request.frequency_mhz {
            if max_frequency_mhz(ppa.get(Dimension::CycleTime, r.cycle_time)) < target {
                continue;
            }
        }
        let keys = [
            dynamic_power(&ppa, r.dynamic_power, request.dynamic_mode),
            ppa.get(Dimension::Leakage, r.leakage),
            ppa.area(),
            weighted_rank_value(&ppa, &scalers, &request.weights, r, request.dynamic_mode),
        ];
        cands.push(Candidate {
            compiler: specs[si].key(),
            parametrization: p,
            ppa,
            keys,
        });
    }
    let filtered = total - cands.len();
    tracing::debug!(total, filtered, "optimizer candidates");
    Ok(RankedResults {
        dynamic_power: ranked(&cands, 0),
        leakage: ranked(&cands, 1),
        area: ranked(&cands, 2),
        weighted_sum: ranked(&cands, 3),
        diagnostics: Diagnostics {
            candidates_total: total,
            filtered_by_frequency: filtered,
            compilers_skipped: predicted.skipped,
        },
        scalers: Some(scalers),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCheck {
    pub name: String,
    pub predicted: f64,
    pub actual: f64,
    /// Symmetric percentage bias; absent when either value is not positive.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub compiler: String,
    pub parametrization: Parametrization,
    pub variables: Vec<VariableCheck>,
    pub median_error: f64,
    pub max_error: f64,
}

/// Compiles a selected memory with the ground-truth compiler and compares
/// it with the model's prediction.
pub fn verify_selection(
    selected: &Parametrization,
    model: &ModelRecord,
    coeffs: &CoefficientSet,
) -> Result<VerificationReport> {
    let spec = model.spec();
    let predicted = model.predict(std::slice::from_ref(selected))?.remove(0);
    let actual = compile(spec, coeffs, selected)?;
    let variables: Vec<VariableCheck> = variable_names(spec)
        .into_iter()
        .zip(predicted.values.iter().zip(&actual.values))
        .map(|(name, (&p, &a))| VariableCheck {
            name,
            predicted: p,
            actual: a,
            error: spb(p, a).ok(),
        })
        .collect();
    let errors: Vec<f64> = variables.iter().filter_map(|v| v.error).collect();
    Ok(VerificationReport {
        compiler: spec.key(),
        parametrization: selected.clone(),
        median_error: median(&errors).unwrap_or(f64::NAN),
        max_error: errors.iter().copied().fold(0.0, f64::max),
        variables,
    })
}
