//! Versioned registry of frozen surrogate models, one per compiler version.

mod build;
mod record;

pub use build::{iterative_build, BuildConfig, BuildIteration, BuildLog, BuildOutcome};
pub use record::{ModelRecord, Prediction, TargetStat, TrainingMeta, FORMAT_VERSION};

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{fit_scalers, from_rows, to_rows, Observation, SplitDataset};
use crate::error::{Error, Result};
use crate::neuralnet::{train, Architecture, Network, TrainConfig};
use crate::paramspace::CompilerSpec;
use crate::seed;
use crate::synthcompiler::{read_table, write_table};

pub const INDEX_FILE: &str = "index.json";

/// Trains a model of `spec` on a split dataset and evaluates it on the test split.
pub fn fit_model(
    spec: &CompilerSpec,
    data: &SplitDataset,
    arch: Architecture,
    config: &TrainConfig,
) -> Result<ModelRecord> {
    let scalers = fit_scalers(&data.train)?;
    let (x, y) = scalers.matrices(&data.train);
    let (xv, yv) = scalers.matrices(&data.validation);
    let mut net = Network::init(arch, x.ncols(), y.ncols(), seed::derive(config.seed, &[0x696e]))?;
    let log = train(&mut net, &x, &y, &xv, &yv, config)?;
    let target_stats = (0..y.ncols())
        .map(|j| TargetStat::of(data.train.iter().map(|o| o.y[j])))
        .collect();
    let meta = TrainingMeta {
        dataset_size: data.train.len() + data.validation.len() + data.test.len(),
        train_size: data.train.len(),
        validation_size: data.validation.len(),
        test_size: data.test.len(),
        split_seed: data.split_seed,
        train_seed: config.seed,
        epochs_run: log.epochs_run,
        stopping_epoch: log.best_epoch,
        test_error: None,
        target_stats,
        below_target: false,
    };
    let mut record = ModelRecord::new(spec.clone(), net, scalers, meta)?;
    if !data.test.is_empty() {
        let report = record.error_report(&data.test)?;
        record.meta_mut()?.test_error = Some(report);
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub compiler_id: String,
    pub version: String,
    pub file: String,
    /// Held-out observations stored alongside the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Index {
    format_version: u32,
    entries: Vec<IndexEntry>,
}

type Key = (String, String);

/// Loaded models keyed by `(compiler_id, version)`, optionally backed by a directory.
#[derive(Debug, Clone, Default)]
pub struct Zoo {
    dir: Option<PathBuf>,
    models: HashMap<Key, Arc<ModelRecord>>,
    tests: HashMap<Key, Arc<Vec<Observation>>>,
}

pub fn file_name(compiler_id: &str, version: &str) -> String {
    format!("{compiler_id}@{version}.model.json")
}

pub fn test_file_name(compiler_id: &str, version: &str) -> String {
    format!("{compiler_id}@{version}.test.csv")
}

fn read_observations(spec: &CompilerSpec, path: &Path) -> Result<Vec<Observation>> {
    let file = std::fs::File::open(path)?;
    from_rows(spec, read_table(file, spec)?)
}

impl Zoo {
    pub fn in_memory() -> Self {
        Zoo::default()
    }

    /// Opens (or creates) a zoo directory and loads every indexed model.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut zoo = Zoo {
            dir: Some(dir.clone()),
            ..Zoo::default()
        };
        let index_path = dir.join(INDEX_FILE);
        if !index_path.exists() {
            return Ok(zoo);
        }
        let index: Index = serde_json::from_str(&std::fs::read_to_string(&index_path)?)?;
        for e in index.entries {
            let record = ModelRecord::load(dir.join(&e.file))?;
            if record.compiler_id() != e.compiler_id || record.version() != e.version {
                return Err(Error::Malformed(format!("{} does not hold {}@{}", e.file, e.compiler_id, e.version)));
            }
            let key = (e.compiler_id, e.version);
            if let Some(t) = &e.test_file {
                let obs = read_observations(record.spec(), &dir.join(t))?;
                zoo.tests.insert(key.clone(), Arc::new(obs));
            }
            zoo.models.insert(key, Arc::new(record));
        }
        Ok(zoo)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Adds a record, persisting it when the zoo is directory backed.
    /// An existing entry with the same key is replaced.
    pub fn insert(&mut self, record: ModelRecord) -> Result<()> {
        let key = (record.compiler_id().to_string(), record.version().to_string());
        if let Some(dir) = &self.dir {
            record.save(dir.join(file_name(&key.0, &key.1)))?;
        }
        self.tests.remove(&key);
        self.models.insert(key, Arc::new(record));
        self.write_index()
    }

    /// Adds a record together with its held-out observations.
    pub fn insert_with_test(&mut self, record: ModelRecord, test: Vec<Observation>) -> Result<()> {
        let key = (record.compiler_id().to_string(), record.version().to_string());
        if let Some(dir) = &self.dir {
            let file = std::fs::File::create(dir.join(test_file_name(&key.0, &key.1)))?;
            write_table(file, record.spec(), &to_rows(record.spec(), &test)?)?;
        }
        self.insert(record)?;
        self.tests.insert(key, Arc::new(test));
        self.write_index()
    }

    /// Held-out observations of a model, if any were stored.
    pub fn test_set(&self, compiler_id: &str, version: &str) -> Option<&Arc<Vec<Observation>>> {
        self.tests.get(&(compiler_id.to_string(), version.to_string()))
    }

    /// Every stored test set keyed by `id@version`.
    pub fn test_sets(&self) -> std::collections::BTreeMap<String, Vec<Observation>> {
        self.tests
            .iter()
            .map(|((id, v), t)| (format!("{id}@{v}"), t.as_ref().clone()))
            .collect()
    }

    fn write_index(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut entries: Vec<IndexEntry> = self
            .models
            .keys()
            .map(|(id, v)| IndexEntry {
                compiler_id: id.clone(),
                version: v.clone(),
                file: file_name(id, v),
                test_file: self
                    .tests
                    .contains_key(&(id.clone(), v.clone()))
                    .then(|| test_file_name(id, v)),
            })
            .collect();
        entries.sort_by(|a, b| (&a.compiler_id, &a.version).cmp(&(&b.compiler_id, &b.version)));
        let index = Index {
            format_version: FORMAT_VERSION,
            entries,
        };
        std::fs::write(dir.join(INDEX_FILE), serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }

    pub fn get(&self, compiler_id: &str, version: &str) -> Result<&Arc<ModelRecord>> {
        self.models
            .get(&(compiler_id.to_string(), version.to_string()))
            .ok_or_else(|| Error::ModelNotFound {
                compiler_id: compiler_id.into(),
                version: version.into(),
            })
    }

    pub fn get_spec(&self, spec: &CompilerSpec) -> Result<&Arc<ModelRecord>> {
        self.get(&spec.compiler_id, &spec.version)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Entries sorted by compiler id, then version.
    pub fn entries(&self) -> Vec<&Arc<ModelRecord>> {
        let mut v: Vec<_> = self.models.values().collect();
        v.sort_by(|a, b| (a.compiler_id(), a.version()).cmp(&(b.compiler_id(), b.version())));
        v
    }

    pub fn specs(&self) -> Vec<CompilerSpec> {
        self.entries().into_iter().map(|r| r.spec().clone()).collect()
    }
}
