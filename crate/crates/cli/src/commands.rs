//! Command line definition and command implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use memplan_core::dataset::{from_rows, generate, sample_parametrizations, split, to_rows, Observation};
use memplan_core::evalmetrics::{
    baseline, cross_validate, feature_importance, grid_search, inference_timing, CvConfig, CvResult, Grid,
    NnRegressor, STANDARD_COUNTS,
};
use memplan_core::modelzoo::{fit_model, iterative_build, BuildConfig, ModelRecord, Zoo};
use memplan_core::neuralnet::{Activation, Architecture, OutputActivation, TrainConfig};
use memplan_core::optimizer::{optimize, verify_selection, CornerSelection, DynamicMode, OptimizationRequest, RankedResults, Weights};
use memplan_core::paramspace::{CompilerSpec, ParamValue, Parametrization, PortConfig, WORD_DEPTH, WORD_WIDTH};
use memplan_core::reliability::{
    ranking_reliability, reliability_survey, ResampleConfig, Sharing, SurveyConfig, DEFAULT_DRAWS,
};
use memplan_core::synthcompiler::{read_table, variable_names, write_table};
use memplan_core::{seed, Error, ErrorCategory, Result};

use crate::config::RunConfig;
use crate::service::{self, AppState, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "memplan", version, about = "Surrogate models and PPA optimization for memory compilers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags and environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "MEMPLAN_SPEC_DIR")]
    pub spec_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "MEMPLAN_ZOO_DIR")]
    pub zoo_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "MEMPLAN_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Master seed of the synthetic compilers and every derived seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parallel synthetic compiler jobs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print the machine-readable JSON result instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

impl GlobalArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_toml_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.spec_dir {
            c.spec_dir = v.clone();
        }
        if let Some(v) = &self.zoo_dir {
            c.zoo_dir = v.clone();
        }
        if let Some(v) = &self.data_dir {
            c.data_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        c.check()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompilerArgs {
    /// Compiler id.
    pub compiler: String,
    /// Compiler version; defaults to the last one found.
    #[arg(long)]
    pub version: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ArchArgs {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Hidden units as a multiple of the input dimension.
    #[arg(long, default_value_t = 8)]
    pub multiplier: usize,
    /// sigmoid, tanh or relu.
    #[arg(long, default_value = "sigmoid")]
    pub hidden: String,
    /// none or relu_shifted.
    #[arg(long, default_value = "none")]
    pub output: String,
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

impl ArchArgs {
    fn architecture(&self) -> Result<Architecture> {
        let arch = Architecture {
            hidden_layers: self.layers,
            hidden_unit_multiplier: self.multiplier,
            hidden_activation: parse_name::<Activation>("hidden", &self.hidden)?,
            output_activation: parse_name::<OutputActivation>("output", &self.output)?,
        };
        arch.check()?;
        Ok(arch)
    }

    fn train_config(&self, seed_value: u64) -> TrainConfig {
        let mut t = TrainConfig {
            seed: seed_value,
            ..TrainConfig::default()
        };
        if let Some(e) = self.max_epochs {
            t.max_epochs = e;
        }
        t
    }
}

#[derive(Debug, Clone, Args)]
pub struct RequestArgs {
    /// JSON optimization request; replaces every other request flag.
    #[arg(long, conflicts_with_all = ["depth", "width"])]
    pub request: Option<PathBuf>,
    #[arg(long, required_unless_present = "request")]
    pub depth: Option<u32>,
    #[arg(long, required_unless_present = "request")]
    pub width: Option<u32>,
    /// Corner for every dimension unless overridden below.
    #[arg(long, default_value = "typ")]
    pub corner: String,
    #[arg(long)]
    pub dynamic_corner: Option<String>,
    #[arg(long)]
    pub leakage_corner: Option<String>,
    #[arg(long)]
    pub access_corner: Option<String>,
    #[arg(long)]
    pub cycle_corner: Option<String>,
    #[arg(long)]
    pub port: Option<String>,
    /// Additional fixed parameter, `name=value`; repeatable.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    pub fix: Vec<String>,
    /// Minimum operating frequency in MHz.
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Weights of dynamic power, leakage and area, `a,b,c`.
    #[arg(long, value_delimiter = ',', value_name = "W,W,W")]
    pub weights: Option<Vec<f64>>,
    /// read or max_read_write.
    #[arg(long, default_value = "read")]
    pub dynamic_mode: String,
}

impl RequestArgs {
    pub fn request(&self) -> Result<OptimizationRequest> {
        if let Some(path) = &self.request {
            let text = std::fs::read_to_string(path)?;
            return serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())));
        }
        let (Some(depth), Some(width)) = (self.depth, self.width) else {
            return Err(Error::field("depth", "depth and width are required"));
        };
        let mut r = OptimizationRequest::new(depth, width, &self.corner);
        let pick = |o: &Option<String>| o.clone().unwrap_or_else(|| self.corner.clone());
        r.corners = CornerSelection {
            dynamic_power: pick(&self.dynamic_corner),
            leakage: pick(&self.leakage_corner),
            access_time: pick(&self.access_corner),
            cycle_time: pick(&self.cycle_corner),
        };
        if let Some(p) = &self.port {
            r.port_config = Some(p.parse::<PortConfig>()?);
        }
        for (k, v) in parse_assignments(&self.fix)? {
            r.fixed.insert(k, v);
        }
        r.frequency_mhz = self.frequency;
        if let Some(w) = &self.weights {
            if w.len() != 3 {
                return Err(Error::field("weights", "expected three comma-separated values"));
            }
            r.weights = Weights {
                dynamic_power: w[0],
                leakage: w[1],
                area: w[2],
            };
        }
        r.dynamic_mode = parse_name::<DynamicMode>("dynamic_mode", &self.dynamic_mode)?;
        Ok(r)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Samples legal parametrizations and compiles them with the synthetic compiler.
    GenData {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long, default_value_t = 2500)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trains one model on a generated data file and stores it in the zoo.
    Train {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        arch: ArchArgs,
    },
    /// Grows a data set in batches until the model meets the quality target.
    Build {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long, default_value_t = 500)]
        batch_size: usize,
        #[arg(long, default_value_t = 6000)]
        max_observations: usize,
        /// Overrides the configured quality target (median percentage bias).
        #[arg(long)]
        quality_target: Option<f64>,
        /// Also require every size bin to meet the target.
        #[arg(long)]
        require_size_bins: bool,
        #[command(flatten)]
        arch: ArchArgs,
    },
    /// Error report of a stored model on its held-out data or a data file.
    Eval {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Errors per memory size bin.
    SizeReport {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Cross-validates the architecture grid.
    GridSearch {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fresh observations generated when no data file is given.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        #[arg(long, default_value_t = 600)]
        max_epochs: usize,
        /// Rows of the ranked table printed in text mode.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Jacobian feature importance of a stored model.
    Importance {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Cross-validated polynomial baselines next to the network.
    Baselines {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 2500)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        folds: usize,
        /// Skip the network.
        #[arg(long)]
        no_network: bool,
        #[command(flatten)]
        arch: ArchArgs,
    },
    /// Ranks every legal configuration of every compiler.
    Optimize {
        #[command(flatten)]
        request: RequestArgs,
    },
    /// Compiles a selected configuration and compares it with the prediction.
    Verify {
        #[command(flatten)]
        target: CompilerArgs,
        /// Parameter value, `name=value`; repeatable; must cover every input.
        #[arg(long = "set", value_name = "NAME=VALUE", required = true)]
        set: Vec<String>,
    },
    /// Decision reliability of each ranking of an optimization.
    Reliability {
        #[command(flatten)]
        request: RequestArgs,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        /// independent or shared_per_distribution.
        #[arg(long, default_value = "independent")]
        sharing: String,
    },
    /// Reliability over many memory sizes.
    Survey {
        #[arg(long, default_value_t = 100)]
        n_sizes: usize,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        #[arg(long)]
        corner: Option<String>,
        #[arg(long, default_value = "independent")]
        sharing: String,
    },
    /// Inference time against batch size.
    Bench {
        #[command(flatten)]
        target: CompilerArgs,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Serves the zoo over HTTP.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

/// Result of one command: the JSON document and its text rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub text: String,
}

impl Output {
    fn new(key: &str, value: impl serde::Serialize, text: String) -> Result<Self> {
        let mut json = json!({ "schema_version": SCHEMA_VERSION });
        json[key] = serde_json::to_value(value)?;
        Ok(Output { json, text })
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            serde_json::to_string_pretty(&self.json).unwrap_or_default()
        } else {
            self.text.clone()
        }
    }
}

/// Process exit code of an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownCompiler(_) => 4,
        Error::ModelNotFound { .. } => 5,
        Error::AtIndex { source, .. } => exit_code(source),
        _ => match e.category() {
            ErrorCategory::Validation => 3,
            ErrorCategory::NotFound => 5,
            ErrorCategory::Malformed => 6,
            ErrorCategory::NotApplicable => 7,
            ErrorCategory::Internal => 1,
        },
    }
}

fn parse_name<T: DeserializeOwned>(field: &str, s: &str) -> Result<T> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| Error::field(field, format!("unknown value `{s}`")))
}

fn parse_assignments(items: &[String]) -> Result<BTreeMap<String, ParamValue>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), ParamValue::parse(v)))
                .ok_or_else(|| Error::field("fix", format!("`{s}` is not name=value")))
        })
        .collect()
}

fn parse_sharing(s: &str) -> Result<Sharing> {
    parse_name("sharing", s)
}

fn read_data(spec: &CompilerSpec, path: &Path) -> Result<Vec<Observation>> {
    let file = std::fs::File::open(path)?;
    from_rows(spec, read_table(file, spec)?)
}

fn model_and_spec<'a>(zoo: &'a Zoo, cfg: &RunConfig, t: &CompilerArgs) -> Result<(&'a ModelRecord, CompilerSpec)> {
    let spec = cfg.spec(&t.compiler, t.version.as_deref())?;
    Ok((zoo.get_spec(&spec)?, spec))
}

/// Observations from `data`, else the model's stored held-out set.
fn eval_data(zoo: &Zoo, spec: &CompilerSpec, data: &Option<PathBuf>) -> Result<Vec<Observation>> {
    match data {
        Some(p) => read_data(spec, p),
        None => zoo
            .test_set(&spec.compiler_id, &spec.version)
            .map(|t| t.as_ref().clone())
            .ok_or_else(|| Error::Empty(format!("no stored observations for {}; pass --data", spec.key()))),
    }
}

fn fresh_or_file(cfg: &RunConfig, spec: &CompilerSpec, data: &Option<PathBuf>, n: usize, tag: &str) -> Result<Vec<Observation>> {
    match data {
        Some(p) => read_data(spec, p),
        None => {
            let ps = sample_parametrizations(spec, n, seed::derive(cfg.seed, &[seed::hash_str(tag)]), &[])?;
            generate(spec, &cfg.coefficients(spec), ps, cfg.workers)
        }
    }
}

fn command_seed(cfg: &RunConfig, name: &str, spec: &CompilerSpec) -> u64 {
    seed::derive(cfg.seed, &[seed::hash_str(name), seed::hash_str(&spec.key())])
}

pub fn run(cli: &Cli) -> Result<Output> {
    let cfg = cli.global.resolve()?;
    match &cli.command {
        Command::GenData { target, n, out } => {
            let spec = cfg.spec(&target.compiler, target.version.as_deref())?;
            let ps = sample_parametrizations(&spec, *n, command_seed(&cfg, "gen-data", &spec), &[])?;
            let obs = generate(&spec, &cfg.coefficients(&spec), ps, cfg.workers)?;
            let path = out.clone().unwrap_or_else(|| cfg.data_file(&spec));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            write_table(std::fs::File::create(&path)?, &spec, &to_rows(&spec, &obs)?)?;
            let text = format!("wrote {} observations of {} to {}\n", obs.len(), spec.key(), path.display());
            Output::new("data", json!({ "compiler": spec.key(), "observations": obs.len(), "file": path }), text)
        }
        Command::Train { target, data, arch } => {
            let spec = cfg.spec(&target.compiler, target.version.as_deref())?;
            let path = data.clone().unwrap_or_else(|| cfg.data_file(&spec));
            let obs = read_data(&spec, &path)?;
            let parts = split(obs, command_seed(&cfg, "split", &spec));
            let train = arch.train_config(command_seed(&cfg, "train", &spec));
            let mut record = fit_model(&spec, &parts, arch.architecture()?, &train)?;
            record.freeze();
            let summary = model_summary(&record);
            let text = model_text(&record);
            cfg.zoo()?.insert_with_test(record, parts.test)?;
            Output::new("model", summary, text)
        }
        Command::Build {
            target,
            batch_size,
            max_observations,
            quality_target,
            require_size_bins,
            arch,
        } => {
            let spec = cfg.spec(&target.compiler, target.version.as_deref())?;
            let config = BuildConfig {
                quality_target: quality_target.unwrap_or(cfg.quality_target),
                batch_size: *batch_size,
                max_observations: *max_observations,
                architecture: arch.architecture()?,
                train: arch.train_config(0),
                seed: command_seed(&cfg, "build", &spec),
                workers: cfg.workers,
                require_size_bins: *require_size_bins,
            };
            let outcome = iterative_build(&spec, &cfg.coefficients(&spec), &config)?;
            let mut text = String::new();
            for it in &outcome.log.iterations {
                let _ = writeln!(
                    text,
                    "iteration {:>2}: {:>5} observations, worst dimension {:.3}%, worst size bin {:.3}%",
                    it.iteration,
                    it.observations,
                    it.dimension_errors.iter().copied().fold(0.0, f64::max),
                    it.max_bin_error
                );
            }
            text.push_str(&model_text(&outcome.record));
            let value = json!({ "model": model_summary(&outcome.record), "log": outcome.log });
            cfg.zoo()?.insert_with_test(outcome.record, outcome.test)?;
            Output::new("build", value, text)
        }
        Command::Eval { target, data } => {
            let zoo = cfg.zoo()?;
            let (model, spec) = model_and_spec(&zoo, &cfg, target)?;
            let report = model.error_report(&eval_data(&zoo, &spec, data)?)?;
            let mut text = format!("{} on {} observations\n", model.key(), report.observations);
            for d in &report.dimensions {
                let _ = writeln!(text, "  {:<14} {:>7.3}%", d.dimension.name(), d.error);
            }
            let _ = writeln!(text, "  {:<14} {:>7.3}%", "overall", report.overall);
            Output::new("report", report, text)
        }
        Command::SizeReport { target, data } => {
            let zoo = cfg.zoo()?;
            let (model, spec) = model_and_spec(&zoo, &cfg, target)?;
            let report = model.size_bin_report(&eval_data(&zoo, &spec, data)?)?;
            let mut text = format!("{}\n  {:>12} {:>12} {:>6} {:>8}\n", model.key(), "from bits", "to bits", "count", "error");
            for b in &report.bins {
                let _ = writeln!(text, "  {:>12.0} {:>12.0} {:>6} {:>7.3}%", b.lo, b.hi, b.count, b.error);
            }
            Output::new("size_bins", report, text)
        }
        Command::GridSearch {
            target,
            data,
            n,
            folds,
            max_epochs,
            top,
        } => {
            let spec = cfg.spec(&target.compiler, target.version.as_deref())?;
            let obs = fresh_or_file(&cfg, &spec, data, *n, "grid-search")?;
            let cv = CvConfig {
                folds: *folds,
                seed: command_seed(&cfg, "cv", &spec),
                ..CvConfig::default()
            };
            let train = TrainConfig {
                max_epochs: *max_epochs,
                ..TrainConfig::default()
            };
            let result = grid_search(&obs, &variable_names(&spec), spec.corners.len(), &Grid::standard(), &cv, &train)?;
            let mut ranked = result.entries.clone();
            ranked.sort_by(|a, b| a.mean_error.total_cmp(&b.mean_error));
            let mut text = format!(
                "{} architectures evaluated, {} skipped of {}\n",
                result.evaluated(),
                result.skipped.len(),
                result.full_size
            );
            for e in ranked.iter().take(*top) {
                let _ = writeln!(text, "  {:<28} {:>7.3}%", e.architecture.label(), e.mean_error);
            }
            Output::new("grid", result, text)
        }
        Command::Importance { target, data } => {
            let zoo = cfg.zoo()?;
            let (model, spec) = model_and_spec(&zoo, &cfg, target)?;
            let imp = feature_importance(model, &eval_data(&zoo, &spec, data)?)?;
            let mut text = format!("{:<16}", "input");
            for d in &imp.dimensions {
                let _ = write!(text, " {:>13}", d.name());
            }
            text.push('\n');
            for (name, row) in imp.inputs.iter().zip(&imp.values) {
                let _ = write!(text, "{name:<16}");
                for v in row {
                    let _ = write!(text, " {v:>13.3}");
                }
                text.push('\n');
            }
            Output::new("importance", imp, text)
        }
        Command::Baselines {
            target,
            data,
            n,
            degrees,
            folds,
            no_network,
            arch,
        } => {
            let spec = cfg.spec(&target.compiler, target.version.as_deref())?;
            let obs = fresh_or_file(&cfg, &spec, data, *n, "baselines")?;
            let names = variable_names(&spec);
            let cv = CvConfig {
                folds: *folds,
                seed: command_seed(&cfg, "cv", &spec),
                ..CvConfig::default()
            };
            let mut results: Vec<CvResult> = degrees
                .iter()
                .map(|&d| baseline(&obs, &names, spec.corners.len(), d, &cv))
                .collect::<Result<_>>()?;
            if !no_network {
                let reg = NnRegressor {
                    arch: arch.architecture()?,
                    train: arch.train_config(0),
                };
                results.push(cross_validate(&obs, &names, spec.corners.len(), &reg, &cv)?);
            }
            let mut text = String::new();
            for r in &results {
                let _ = writeln!(text, "  {:<28} {:>7.3}%", r.name, r.mean_error);
            }
            let rows: Vec<Value> = results
                .iter()
                .map(|r| json!({ "name": r.name, "mean_error": r.mean_error, "fold_errors": r.fold_errors, "report": r.report }))
                .collect();
            Output::new("baselines", rows, text)
        }
        Command::Optimize { request } => {
            let request = request.request()?;
            let zoo = cfg.zoo()?;
            let results = optimize(&request, &zoo, &cfg.specs()?)?;
            let text = ranking_text(&results);
            Output::new("results", results, text)
        }
        Command::Verify { target, set } => {
            let zoo = cfg.zoo()?;
            let (model, spec) = model_and_spec(&zoo, &cfg, target)?;
            let p = Parametrization {
                compiler_id: spec.compiler_id.clone(),
                version: spec.version.clone(),
                values: parse_assignments(set)?,
            };
            let report = verify_selection(&p, model, &cfg.coefficients(&spec))?;
            let mut text = format!("{:<24} {:>14} {:>14} {:>9}\n", "variable", "predicted", "compiled", "bias");
            for v in &report.variables {
                let bias = v.error.map_or("-".to_string(), |e| format!("{e:.3}%"));
                let _ = writeln!(text, "{:<24} {:>14.6} {:>14.6} {:>9}", v.name, v.predicted, v.actual, bias);
            }
            let _ = writeln!(text, "median {:.3}%, max {:.3}%", report.median_error, report.max_error);
            Output::new("verification", report, text)
        }
        Command::Reliability { request, draws, sharing } => {
            let request = request.request()?;
            let zoo = cfg.zoo()?;
            let specs = cfg.specs()?;
            let results = optimize(&request, &zoo, &specs)?;
            let config = ResampleConfig {
                draws: *draws,
                seed: cfg.seed,
                sharing: parse_sharing(sharing)?,
            };
            let report = ranking_reliability(&request, &results, &zoo, &specs, &zoo.test_sets(), &config)?;
            let mut text = String::new();
            for r in &report.rankings {
                let score = r.score.map_or("-".to_string(), |s| format!("{s:.3}"));
                let _ = writeln!(text, "  {:<14} {:>6} ({} candidates)", r.ranking, score, r.candidates);
            }
            Output::new("reliability", report, text)
        }
        Command::Survey {
            n_sizes,
            draws,
            corner,
            sharing,
        } => {
            let zoo = cfg.zoo()?;
            let config = SurveyConfig {
                n_sizes: *n_sizes,
                draws: *draws,
                seed: cfg.seed,
                corner: corner.clone(),
                sharing: parse_sharing(sharing)?,
            };
            let report = reliability_survey(&zoo, &cfg.specs()?, &zoo.test_sets(), &config)?;
            let mut text = format!("{:<14} {:>6} {:>9} {:>8} {:>5}\n", "ranking", "mean", "95% level", "minimum", "runs");
            for s in &report.summaries {
                let _ = writeln!(
                    text,
                    "{:<14} {:>6.3} {:>9.3} {:>8.3} {:>5}",
                    s.ranking, s.mean, s.quantile_95, s.minimum, s.runs
                );
            }
            Output::new("survey", report, text)
        }
        Command::Bench { target, repeats, counts } => {
            let zoo = cfg.zoo()?;
            let (model, spec) = model_and_spec(&zoo, &cfg, target)?;
            let counts = counts.clone().unwrap_or_else(|| STANDARD_COUNTS.to_vec());
            let table = inference_timing(model, &counts, *repeats, command_seed(&cfg, "bench", &spec))?;
            let mut text = format!("{:>8} {:>12} {:>10} {:>14}\n", "samples", "seconds", "scale", "per second");
            for r in &table.rows {
                let _ = writeln!(
                    text,
                    "{:>8} {:>12.6} {:>10.2} {:>14.0}",
                    r.samples, r.seconds, r.scale_factor, r.per_second
                );
            }
            Output::new("timing", table, text)
        }
        Command::Serve { bind } => {
            let state = AppState::new(cfg.zoo()?, cfg.specs()?);
            let bind = bind.clone().unwrap_or_else(|| cfg.bind.clone());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(state, &bind))?;
            Output::new("served", &bind, String::new())
        }
    }
}

fn model_summary(m: &ModelRecord) -> Value {
    json!({
        "key": m.key(),
        "architecture": m.architecture(),
        "meta": m.meta(),
    })
}

fn model_text(m: &ModelRecord) -> String {
    let meta = m.meta();
    let mut text = format!(
        "{} {}: {} observations, stopped at epoch {}\n",
        m.key(),
        m.architecture().label(),
        meta.dataset_size,
        meta.stopping_epoch
    );
    if let Some(r) = &meta.test_error {
        for d in &r.dimensions {
            let _ = writeln!(text, "  {:<14} {:>7.3}%", d.dimension.name(), d.error);
        }
    }
    text
}

fn ranking_text(r: &RankedResults) -> String {
    let mut text = String::new();
    for (name, list) in r.lists() {
        let _ = writeln!(text, "{name} ({} candidates)", list.len());
        for (i, e) in list.iter().take(5).enumerate() {
            let params: Vec<String> = e
                .parametrization
                .values
                .iter()
                .filter(|(k, _)| k.as_str() != WORD_DEPTH && k.as_str() != WORD_WIDTH)
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(text, "  {:>2}. {:<10} {:>14.6}  {}", i + 1, e.compiler, e.value, params.join(" "));
        }
    }
    let d = &r.diagnostics;
    let _ = writeln!(
        text,
        "{} candidates, {} below the frequency, {} compilers skipped",
        d.candidates_total,
        d.filtered_by_frequency,
        d.compilers_skipped.len()
    );
    text
}
