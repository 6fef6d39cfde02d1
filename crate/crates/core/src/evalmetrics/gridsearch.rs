use serde::{Deserialize, Serialize};

use super::cv::{assemble, plan, run_fold, CvConfig, CvResult, NnRegressor};
use crate::dataset::Observation;
use crate::error::Result;
use crate::neuralnet::{Activation, Architecture, OutputActivation, TrainConfig};
use crate::par;

/// Architecture grid. Combinations with `hidden_layers == skip_layers` and a
/// multiplier above `skip_multiplier_above` are skipped as too large.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub hidden_layers: Vec<usize>,
    pub multipliers: Vec<usize>,
    pub hidden_activations: Vec<Activation>,
    pub output_activations: Vec<OutputActivation>,
    pub skip_layers: Option<usize>,
    pub skip_multiplier_above: usize,
}

impl Grid {
    pub fn standard() -> Self {
        Grid {
            hidden_layers: vec![1, 2, 4, 6, 8],
            multipliers: vec![1, 2, 4, 6, 8, 10],
            hidden_activations: Activation::ALL.to_vec(),
            output_activations: OutputActivation::ALL.to_vec(),
            skip_layers: Some(8),
            skip_multiplier_above: 6,
        }
    }

    pub fn single(arch: Architecture) -> Self {
        Grid {
            hidden_layers: vec![arch.hidden_layers],
            multipliers: vec![arch.hidden_unit_multiplier],
            hidden_activations: vec![arch.hidden_activation],
            output_activations: vec![arch.output_activation],
            skip_layers: None,
            skip_multiplier_above: 0,
        }
    }

    pub fn skips(&self, layers: usize, multiplier: usize) -> bool {
        self.skip_layers == Some(layers) && multiplier > self.skip_multiplier_above
    }

    pub fn full_size(&self) -> usize {
        self.hidden_layers.len()
            * self.multipliers.len()
            * self.hidden_activations.len()
            * self.output_activations.len()
    }

    /// `(evaluated, skipped)` architectures in grid order.
    pub fn architectures(&self) -> (Vec<Architecture>, Vec<Architecture>) {
        let mut eval = Vec::new();
        let mut skipped = Vec::new();
        for &l in &self.hidden_layers {
            for &m in &self.multipliers {
                for &h in &self.hidden_activations {
                    for &o in &self.output_activations {
                        let a = Architecture {
                            hidden_layers: l,
                            hidden_unit_multiplier: m,
                            hidden_activation: h,
                            output_activation: o,
                        };
                        if self.skips(l, m) {
                            skipped.push(a);
                        } else {
                            eval.push(a);
                        }
                    }
                }
            }
        }
        (eval, skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub architecture: Architecture,
    pub mean_error: f64,
    pub fold_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub entries: Vec<GridEntry>,
    pub skipped: Vec<Architecture>,
    pub full_size: usize,
}

impl GridSearchResult {
    pub fn evaluated(&self) -> usize {
        self.entries.len()
    }

    pub fn best(&self) -> Option<&GridEntry> {
        self.entries.iter().min_by(|a, b| a.mean_error.total_cmp(&b.mean_error))
    }
}

/// Cross-validates every architecture of `grid`. All (architecture, fold)
/// jobs run in parallel; each is seeded from its identity, so the result
/// does not depend on scheduling.
pub fn grid_search(
    data: &[Observation],
    names: &[String],
    corners: usize,
    grid: &Grid,
    cv: &CvConfig,
    train: &TrainConfig,
) -> Result<GridSearchResult> {
    let plan = plan(data.len(), cv)?;
    let (archs, skipped) = grid.architectures();
    let regs: Vec<NnRegressor> = archs
        .iter()
        .map(|&arch| NnRegressor {
            arch,
            train: train.clone(),
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..regs.len())
        .flat_map(|a| (0..cv.folds).map(move |f| (a, f)))
        .collect();
    let mut outcomes = par::map(&jobs, |&(a, f)| run_fold(data, names, corners, &plan, f, &regs[a], cv.seed))
        .into_iter();
    let mut entries = Vec::with_capacity(regs.len());
    for reg in &regs {
        let folds = outcomes.by_ref().take(cv.folds).collect::<Result<Vec<_>>>()?;
        let CvResult {
            fold_errors, mean_error, ..
        } = assemble(data, names, corners, &plan, reg.arch.label(), folds)?;
        entries.push(GridEntry {
            architecture: reg.arch,
            mean_error,
            fold_errors,
        });
    }
    Ok(GridSearchResult {
        entries,
        skipped,
        full_size: grid.full_size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_cardinality() {
        let g = Grid::standard();
        let (eval, skipped) = g.architectures();
        assert_eq!(g.full_size(), 180);
        assert_eq!(eval.len() + skipped.len(), 180);
        assert_eq!(skipped.len(), 12);
        assert!(skipped
            .iter()
            .all(|a| a.hidden_layers == 8 && [8, 10].contains(&a.hidden_unit_multiplier)));
        for h in Activation::ALL {
            for o in OutputActivation::ALL {
                let n = skipped
                    .iter()
                    .filter(|a| a.hidden_activation == h && a.output_activation == o)
                    .count();
                assert_eq!(n, 2);
            }
        }
    }
}
