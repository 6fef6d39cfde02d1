use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use memplan_core::fixtures::MASTER_SEED;
use memplan_core::modelzoo::Zoo;
use memplan_core::paramspace::CompilerSpec;
use memplan_core::synthcompiler::{CoefficientSet, DEFAULT_WORKERS};
use memplan_core::{Error, Result};

/// Paths and settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spec_dir: PathBuf,
    pub zoo_dir: PathBuf,
    pub data_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub quality_target: f64,
    pub bind: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec_dir: "compilers".into(),
            zoo_dir: "zoo".into(),
            data_dir: "data".into(),
            seed: MASTER_SEED,
            workers: DEFAULT_WORKERS,
            quality_target: 3.0,
            bind: "127.0.0.1:8080".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::field("workers", "must be at least 1"));
        }
        if !(self.quality_target.is_finite() && self.quality_target >= 0.0) {
            return Err(Error::field("quality_target", "must be a non-negative percentage"));
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<CompilerSpec>> {
        CompilerSpec::load_dir(&self.spec_dir)
    }

    /// The spec of `compiler`, optionally pinned to `version` (else the only or last one).
    pub fn spec(&self, compiler: &str, version: Option<&str>) -> Result<CompilerSpec> {
        let mut matching: Vec<CompilerSpec> = self
            .specs()?
            .into_iter()
            .filter(|s| s.compiler_id == compiler && version.is_none_or(|v| s.version == v))
            .collect();
        matching
            .pop()
            .ok_or_else(|| Error::UnknownCompiler(format!("{compiler}{}", version.map(|v| format!("@{v}")).unwrap_or_default())))
    }

    pub fn coefficients(&self, spec: &CompilerSpec) -> CoefficientSet {
        CoefficientSet::draw(spec, self.seed)
    }

    pub fn zoo(&self) -> Result<Zoo> {
        Zoo::open(&self.zoo_dir)
    }

    pub fn data_file(&self, spec: &CompilerSpec) -> PathBuf {
        self.data_dir.join(format!("{}.csv", spec.key()))
    }
}
