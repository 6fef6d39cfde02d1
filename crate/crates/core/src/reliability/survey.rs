use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::distribution::{estimate_error_distribution, DistributionKind, ErrorDistribution, EstimatedDistribution};
use super::resample::{reliability_of_terms, ResampleConfig, Sharing, Term, DEFAULT_DRAWS};
use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::evalmetrics::quantile;
use crate::modelzoo::Zoo;
use crate::optimizer::{optimize, DynamicMode, OptimizationRequest, RankedEntry, RankedResults, ResolvedCorners};
use crate::par;
use crate::paramspace::CompilerSpec;
use crate::seed;
use crate::synthcompiler::{var_index, variable_names, Dimension};

/// Held-out observations per compiler, keyed by `id@version`.
pub type TestSets = BTreeMap<String, Vec<Observation>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReliability {
    pub ranking: String,
    /// Absent when the list is empty.
    pub score: Option<f64>,
    pub draws: usize,
    pub candidates: usize,
    /// Distribution kinds used by the list's terms.
    pub kinds: BTreeMap<DistributionKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsedDistribution {
    pub compiler: String,
    pub variable: String,
    pub estimate: EstimatedDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub rankings: Vec<RankingReliability>,
    pub distributions: Vec<UsedDistribution>,
    pub sharing: Sharing,
}

impl ReliabilityReport {
    pub fn score(&self, ranking: &str) -> Option<f64> {
        self.rankings.iter().find(|r| r.ranking == ranking).and_then(|r| r.score)
    }
}

/// Lazily estimated error distributions, one per (compiler, variable).
struct DistTable<'a> {
    zoo: &'a Zoo,
    specs: HashMap<String, &'a CompilerSpec>,
    tests: &'a TestSets,
    size: u64,
    index: HashMap<(String, usize), usize>,
    used: Vec<UsedDistribution>,
}

impl DistTable<'_> {
    fn get(&mut self, compiler: &str, variable: usize) -> Result<usize> {
        if let Some(&i) = self.index.get(&(compiler.to_string(), variable)) {
            return Ok(i);
        }
        let spec = self.specs[compiler];
        let model = self.zoo.get_spec(spec)?;
        let test = self
            .tests
            .get(compiler)
            .ok_or_else(|| Error::Empty(format!("test observations of {compiler}")))?;
        let estimate = estimate_error_distribution(model, test, self.size, variable)?;
        self.used.push(UsedDistribution {
            compiler: compiler.to_string(),
            variable: variable_names(spec)[variable].clone(),
            estimate,
        });
        let i = self.used.len() - 1;
        self.index.insert((compiler.to_string(), variable), i);
        Ok(i)
    }
}

/// Monte Carlo decision reliability of each of the four lists of `results`.
pub fn ranking_reliability(
    request: &OptimizationRequest,
    results: &RankedResults,
    zoo: &Zoo,
    specs: &[CompilerSpec],
    tests: &TestSets,
    config: &ResampleConfig,
) -> Result<ReliabilityReport> {
    let (depth, width) = request.to_fixed().depth_width()?;
    let mut table = DistTable {
        zoo,
        specs: specs.iter().map(|s| (s.key(), s)).collect(),
        tests,
        size: u64::from(depth) * u64::from(width),
        index: HashMap::new(),
        used: Vec::new(),
    };
    let mut corners: HashMap<String, (usize, ResolvedCorners)> = HashMap::new();
    let mut resolve = |key: &str| -> Result<(usize, ResolvedCorners)> {
        if let Some(&r) = corners.get(key) {
            return Ok(r);
        }
        let spec = specs
            .iter()
            .find(|s| s.key() == key)
            .ok_or_else(|| Error::field("compiler", format!("{key} is not among the specs")))?;
        let r = (spec.corners.len(), ResolvedCorners::resolve(spec, &request.corners)?);
        corners.insert(key.to_string(), r);
        Ok(r)
    };

    let mut per_list: Vec<(&str, Vec<Vec<Term>>)> = Vec::new();
    for (name, list) in results.lists() {
        let mut cands = Vec::with_capacity(list.len());
        for e in list {
            let (c, r) = resolve(&e.compiler)?;
            let terms = match name {
                "weighted_sum" => {
                    let s = results
                        .scalers
                        .as_ref()
                        .ok_or_else(|| Error::Empty("weighted ranking scalers".into()))?;
                    let w = &request.weights;
                    let dyn_var = dynamic_variable(e, r.dynamic_power, c, request.dynamic_mode);
                    let parts = [
                        (dyn_var, w.dynamic_power / s.dynamic_power.std),
                        (var_index(Dimension::Leakage, r.leakage, c), w.leakage / s.leakage.std),
                        (var_index(Dimension::Area, 0, c), w.area / s.area.std),
                    ];
                    let mut terms = Vec::new();
                    for (v, coef) in parts {
                        if coef != 0.0 {
                            terms.push(Term {
                                value: e.ppa.values[v],
                                coef,
                                dist: table.get(&e.compiler, v)?,
                            });
                        }
                    }
                    terms
                }
                _ => {
                    let v = match name {
                        "dynamic_power" => dynamic_variable(e, r.dynamic_power, c, request.dynamic_mode),
                        "leakage" => var_index(Dimension::Leakage, r.leakage, c),
                        _ => var_index(Dimension::Area, 0, c),
                    };
                    vec![Term {
                        value: e.ppa.values[v],
                        coef: 1.0,
                        dist: table.get(&e.compiler, v)?,
                    }]
                }
            };
            cands.push(terms);
        }
        per_list.push((name, cands));
    }

    let dists: Vec<ErrorDistribution> = table.used.iter().map(|u| u.estimate.fit.distribution.clone()).collect();
    let mut rankings = Vec::new();
    for (li, (name, cands)) in per_list.iter().enumerate() {
        let mut kinds = BTreeMap::new();
        for t in cands.iter().flatten() {
            *kinds.entry(dists[t.dist].kind()).or_insert(0) += 1;
        }
        let score = if cands.is_empty() {
            None
        } else {
            let c = ResampleConfig {
                seed: seed::derive(config.seed, &[li as u64]),
                ..*config
            };
            Some(reliability_of_terms(cands, &dists, &c)?)
        };
        rankings.push(RankingReliability {
            ranking: name.to_string(),
            score,
            draws: config.draws,
            candidates: cands.len(),
            kinds,
        });
    }
    Ok(ReliabilityReport {
        rankings,
        distributions: table.used,
        sharing: config.sharing,
    })
}

fn dynamic_variable(e: &RankedEntry, k: usize, c: usize, mode: DynamicMode) -> usize {
    let read = var_index(Dimension::ReadPower, k, c);
    let write = var_index(Dimension::WritePower, k, c);
    match mode {
        DynamicMode::MaxReadWrite if e.ppa.values[write] > e.ppa.values[read] => write,
        _ => read,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub n_sizes: usize,
    pub draws: usize,
    pub seed: u64,
    /// Corner used for every dimension; defaults to the first corner of the first spec.
    #[serde(default)]
    pub corner: Option<String>,
    #[serde(default)]
    pub sharing: Sharing,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig {
            n_sizes: 100,
            draws: DEFAULT_DRAWS,
            seed: 0,
            corner: None,
            sharing: Sharing::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub ranking: String,
    pub mean: f64,
    /// Score reached or exceeded by 95% of the runs.
    pub quantile_95: f64,
    pub minimum: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRun {
    pub depth: u32,
    pub width: u32,
    pub candidates: usize,
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub summaries: Vec<SurveySummary>,
    pub runs: Vec<SurveyRun>,
    pub config: SurveyConfig,
}

impl SurveyReport {
    pub fn summary(&self, ranking: &str) -> Option<&SurveySummary> {
        self.summaries.iter().find(|s| s.ranking == ranking)
    }
}

/// Every (depth, width) pair legal in at least one spec, sorted.
pub fn legal_sizes(specs: &[CompilerSpec]) -> Vec<(u32, u32)> {
    let mut set = BTreeSet::new();
    for s in specs {
        for &d in &s.depth_values {
            for &w in &s.width_values {
                set.insert((d, w));
            }
        }
    }
    set.into_iter().collect()
}

/// Runs the optimizer for `n_sizes` memory sizes drawn uniformly from the
/// legal sizes and summarizes the reliability of each ranking.
pub fn reliability_survey(
    zoo: &Zoo,
    specs: &[CompilerSpec],
    tests: &TestSets,
    config: &SurveyConfig,
) -> Result<SurveyReport> {
    let sizes = legal_sizes(specs);
    if config.n_sizes == 0 || config.n_sizes > sizes.len() {
        return Err(Error::field(
            "n_sizes",
            format!("must lie in 1..={} for these compilers", sizes.len()),
        ));
    }
    let corner = match &config.corner {
        Some(c) => c.clone(),
        None => specs
            .first()
            .and_then(|s| s.corners.first())
            .map(|c| c.name.clone())
            .ok_or_else(|| Error::Empty("compiler specs".into()))?,
    };
    let mut rng = seed::rng(config.seed, &[0x5a]);
    let picked: Vec<(u32, u32)> = sample(&mut rng, sizes.len(), config.n_sizes)
        .into_iter()
        .map(|i| sizes[i])
        .collect();

    let runs = par::map_range(picked.len(), |i| -> Result<SurveyRun> {
        let (depth, width) = picked[i];
        let request = OptimizationRequest::new(depth, width, &corner);
        let results = optimize(&request, zoo, specs)?;
        let resample = ResampleConfig {
            draws: config.draws,
            seed: seed::derive(config.seed, &[i as u64]),
            sharing: config.sharing,
        };
        let report = ranking_reliability(&request, &results, zoo, specs, tests, &resample)?;
        Ok(SurveyRun {
            depth,
            width,
            candidates: results.len(),
            scores: report.rankings.iter().map(|r| r.score).collect(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let names = ["dynamic_power", "leakage", "area", "weighted_sum"];
    let summaries = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let v: Vec<f64> = runs.iter().filter_map(|r| r.scores[k]).collect();
            SurveySummary {
                ranking: name.to_string(),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                quantile_95: quantile(&v, 0.05).unwrap_or(f64::NAN),
                minimum: v.iter().copied().fold(f64::INFINITY, f64::min),
                runs: v.len(),
            }
        })
        .collect();
    Ok(SurveyReport {
        summaries,
        runs,
        config: config.clone(),
    })
}
