//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed. Pass a
//! substring as the first argument to run only matching criteria. The
//! process exits non-zero if any criterion fails.

mod common;

use std::cell::OnceCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use memplan_core::dataset::{fit_scalers, generate, sample_parametrizations, split, Observation, SplitDataset};
use memplan_core::evalmetrics::{
    ape, baseline, cross_validate, feature_importance, grid_search, inference_timing, spb, CvConfig, Grid,
    NnRegressor,
};
use memplan_core::fixtures::{self, MASTER_SEED};
use memplan_core::modelzoo::{file_name, fit_model, ModelRecord};
use memplan_core::neuralnet::{Activation, Architecture, TrainConfig};
use memplan_core::optimizer::OptimizationRequest;
use memplan_core::paramspace::{enumerate_solutions, Fixed};
use memplan_core::reliability::{
    decision_reliability, reliability_survey, ErrorDistribution, SurveyConfig,
};
use memplan_core::synthcompiler::{variable_names, CoefficientSet, Dimension};
use common::Check;

// tolerances
const E2E_OBSERVATIONS: usize = 2500;
const E2E_MAX_DIMENSION_ERROR: f64 = 5.0;
const E2E_MAX_RUNTIME: Duration = Duration::from_secs(15 * 60);
const SIZE_BIN_MAX_ERROR: f64 = 5.0;
const SIZE_BIN_FRESH_OBSERVATIONS: usize = 2000;
const GRADIENT_SEEDS: u64 = 100;
const GRADIENT_TOLERANCE: f64 = 1e-4;
const SCALING_TOLERANCE: f64 = 1e-9;
const MIN_PREDICTIONS_PER_SECOND: f64 = 150.0;
const MAX_BATCH_1000_FACTOR: f64 = 100.0;
const GRID_EVALUATED: usize = 180;
const GRID_OBSERVATIONS: usize = 400;
const GRID_MAX_EPOCHS: usize = 600;
const TWIN_DRAWS: usize = 10_000;
const TWIN_TOLERANCE: f64 = 0.05;
const SURVEY_SIZES: usize = 100;
const SURVEY_MIN_MEAN: f64 = 0.95;
const MAX_MODEL_BYTES: u64 = 200 * 1024;

struct E2e {
    data: SplitDataset,
    all: Vec<Observation>,
    model: ModelRecord,
    elapsed: Duration,
}

struct Ctx {
    e2e: OnceCell<E2e>,
}

impl Ctx {
    /// Default architecture trained on 2,500 fresh observations of `sram_a`.
    fn e2e(&self) -> &E2e {
        self.e2e.get_or_init(|| {
            let start = Instant::now();
            let spec = fixtures::spec("sram_a");
            let coeffs = CoefficientSet::draw(&spec, MASTER_SEED);
            let ps = sample_parametrizations(&spec, E2E_OBSERVATIONS, 11, &[]).unwrap();
            let all = generate(&spec, &coeffs, ps, 4).unwrap();
            let data = split(all.clone(), 12);
            let train = TrainConfig {
                seed: 13,
                ..TrainConfig::default()
            };
            let model = fit_model(&spec, &data, Architecture::default(), &train).unwrap();
            E2e {
                data,
                all,
                model,
                elapsed: start.elapsed(),
            }
        })
    }
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn end_to_end(ctx: &Ctx) -> Check {
    let e = ctx.e2e();
    let report = e.model.meta().test_error.clone().ok_or("no test report")?;
    let dims: Vec<String> = report
        .dimensions
        .iter()
        .map(|d| format!("{} {:.2}%", d.dimension.name(), d.error))
        .collect();
    let worst = report.max_dimension();
    verdict(
        worst <= E2E_MAX_DIMENSION_ERROR && e.elapsed <= E2E_MAX_RUNTIME,
        format!(
            "{} observations, {} test; {}; {:.0} s",
            e.all.len(),
            e.data.test.len(),
            dims.join(", "),
            e.elapsed.as_secs_f64()
        ),
    )
}

fn size_bins(_: &Ctx) -> Check {
    // the shipped sram_a model is the output of a bin-aware build
    let zoo = common::fixture_zoo();
    let model = zoo.get("sram_a", "1.0").map_err(|e| e.to_string())?;
    let spec = model.spec().clone();
    let coeffs = CoefficientSet::draw(&spec, MASTER_SEED);
    let ps = sample_parametrizations(&spec, SIZE_BIN_FRESH_OBSERVATIONS, 32, &[]).unwrap();
    let fresh = generate(&spec, &coeffs, ps, 4).unwrap();
    let report = model.size_bin_report(&fresh).map_err(|e| e.to_string())?;
    let bins: Vec<String> = report.bins.iter().map(|b| format!("{:.2}", b.error)).collect();
    verdict(
        report.max_error() <= SIZE_BIN_MAX_ERROR,
        format!(
            "{} trained on {} observations; {} fresh observations; bin errors [{}]%",
            model.key(),
            model.meta().dataset_size,
            fresh.len(),
            bins.join(", ")
        ),
    )
}

fn gradients(_: &Ctx) -> Check {
    common::gradient_check(GRADIENT_SEEDS, GRADIENT_TOLERANCE)
}

fn scaling(ctx: &Ctx) -> Check {
    let mut sets: Vec<Vec<Observation>> = vec![ctx.e2e().all.clone()];
    for spec in fixtures::library() {
        let coeffs = CoefficientSet::draw(&spec, MASTER_SEED);
        let ps = sample_parametrizations(&spec, 1000, 41, &[]).unwrap();
        sets.push(generate(&spec, &coeffs, ps, 4).unwrap());
    }
    let mut worst = 0.0f64;
    let mut n = 0;
    for obs in &sets {
        let sc = fit_scalers(&obs[..obs.len() / 2]).map_err(|e| e.to_string())?;
        for o in obs {
            for (v, s) in o.x.iter().zip(&sc.inputs).chain(o.y.iter().zip(&sc.targets)) {
                let (back, clamped) = s.inverse(s.transform(*v));
                if clamped {
                    return Err(format!("{v} clamped"));
                }
                worst = worst.max((back - v).abs() / v.abs().max(f64::MIN_POSITIVE));
                n += 1;
            }
        }
    }
    verdict(worst <= SCALING_TOLERANCE, format!("{n} values, max relative error {worst:.2e}"))
}

fn metrics(_: &Ctx) -> Check {
    let ok_ape = ape(150.0, 100.0).unwrap() == 50.0;
    let mut ok_spb = true;
    for y in [1e-9, 0.3, 1.0, 7.0, 123.456, 9.9e8] {
        ok_spb &= spb(2.0 * y, y).unwrap() == 100.0;
    }
    let values = [1e-6, 0.01, 0.5, 1.0, 1.7, 3.0, 42.0, 1e3, 1e6];
    let mut symmetric = true;
    let mut non_negative = true;
    let mut invariant = true;
    for &a in &values {
        for &b in &values {
            let s = spb(a, b).unwrap();
            symmetric &= s == spb(b, a).unwrap();
            non_negative &= s >= 0.0;
            for k in [0.25, 2.0, 1024.0, 2f64.powi(-30)] {
                invariant &= spb(k * a, k * b).unwrap() == s;
            }
        }
    }
    verdict(
        ok_ape && ok_spb && symmetric && non_negative && invariant,
        format!(
            "ape(150,100)=50 {ok_ape}; spb(2y,y)=100 {ok_spb}; symmetric {symmetric}; non-negative {non_negative}; scale-invariant {invariant}"
        ),
    )
}

fn enumeration(_: &Ctx) -> Check {
    let specs = fixtures::library();
    let fixed = Fixed::size(1024, 64);
    let one = enumerate_solutions(&specs[..1], &fixed).map_err(|e| e.to_string())?.solutions.len();
    let all = enumerate_solutions(&specs, &fixed).map_err(|e| e.to_string())?.solutions.len();
    verdict(one == 81 && all == 324, format!("one compiler {one}, four compilers {all}"))
}

fn oracle_requests() -> Vec<OptimizationRequest> {
    let mut mixed = OptimizationRequest::new(512, 48, "ss");
    mixed.corners.leakage = "ff".into();
    mixed.weights.area = 3.0;
    vec![OptimizationRequest::new(1024, 64, "typ"), mixed]
}

fn ranking_oracle(_: &Ctx) -> Check {
    let zoo = common::fixture_zoo();
    let specs = fixtures::library();
    let mut details = Vec::new();
    for r in oracle_requests() {
        details.push(common::ranking_oracle(&r, &zoo, &specs)?);
    }
    Ok(details.join("; "))
}

fn unit_invariance(_: &Ctx) -> Check {
    let zoo = common::fixture_zoo();
    let specs = fixtures::library();
    let mut details = Vec::new();
    for r in oracle_requests() {
        details.push(common::unit_invariance(&r, &zoo, &specs, &[1e-9, 0.001, 0.7, 13.0, 1e12])?);
    }
    Ok(details.join("; "))
}

fn throughput(ctx: &Ctx) -> Check {
    let t = inference_timing(&ctx.e2e().model, &[1, 1000], 11, 5).map_err(|e| e.to_string())?;
    let (one, thousand) = (t.row(1).unwrap(), t.row(1000).unwrap());
    verdict(
        one.per_second >= MIN_PREDICTIONS_PER_SECOND
            && thousand.per_second >= MIN_PREDICTIONS_PER_SECOND
            && thousand.scale_factor < MAX_BATCH_1000_FACTOR,
        format!(
            "batch 1: {:.0}/s; batch 1000: {:.0}/s, scale factor {:.1}",
            one.per_second, thousand.per_second, thousand.scale_factor
        ),
    )
}

fn grid(_: &Ctx) -> Check {
    let spec = fixtures::spec("sram_a");
    let coeffs = CoefficientSet::draw(&spec, MASTER_SEED);
    let ps = sample_parametrizations(&spec, GRID_OBSERVATIONS, 21, &[]).unwrap();
    let data = generate(&spec, &coeffs, ps, 4).unwrap();
    let train = TrainConfig {
        max_epochs: GRID_MAX_EPOCHS,
        ..TrainConfig::default()
    };
    let grid = Grid::standard();
    let r = grid_search(&data, &variable_names(&spec), spec.corners.len(), &grid, &CvConfig::default(), &train)
        .map_err(|e| e.to_string())?;
    let best = |a: Activation| {
        r.entries
            .iter()
            .filter(|e| e.architecture.hidden_activation == a)
            .min_by(|x, y| x.mean_error.total_cmp(&y.mean_error))
    };
    let (sig, relu) = (best(Activation::Sigmoid).unwrap(), best(Activation::Relu).unwrap());
    let overall = r.best().unwrap();
    verdict(
        r.evaluated() == GRID_EVALUATED && r.evaluated() + r.skipped.len() == grid.full_size() && sig.mean_error < relu.mean_error,
        format!(
            "{} evaluated + {} skipped of {} (required {GRID_EVALUATED} evaluated); best sigmoid {} {:.2}%, best relu {} {:.2}%, best overall {} {:.2}%",
            r.evaluated(),
            r.skipped.len(),
            grid.full_size(),
            sig.architecture.label(),
            sig.mean_error,
            relu.architecture.label(),
            relu.mean_error,
            overall.architecture.label(),
            overall.mean_error
        ),
    )
}

fn baselines(ctx: &Ctx) -> Check {
    let spec = fixtures::spec("sram_a");
    let data = &ctx.e2e().all;
    let names = variable_names(&spec);
    let cv = CvConfig::default();
    let linear = baseline(data, &names, spec.corners.len(), 1, &cv).map_err(|e| e.to_string())?;
    let nn = NnRegressor {
        arch: Architecture::default(),
        train: TrainConfig::default(),
    };
    let net = cross_validate(data, &names, spec.corners.len(), &nn, &cv).map_err(|e| e.to_string())?;
    verdict(
        net.mean_error < linear.mean_error,
        format!("3-fold CV: network {:.3}%, linear {:.3}%", net.mean_error, linear.mean_error),
    )
}

fn importance(ctx: &Ctx) -> Check {
    let e = ctx.e2e();
    let imp = feature_importance(&e.model, &e.data.test).map_err(|e| e.to_string())?;
    let expect = [
        ("periphery_vt", Dimension::Leakage, -1.0),
        ("periphery_vt", Dimension::CycleTime, 1.0),
        ("banks", Dimension::Area, 1.0),
        ("banks", Dimension::AccessTime, -1.0),
        ("size", Dimension::Area, 1.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (input, d, sign) in expect {
        let v = imp.get(input, d).ok_or(format!("no entry {input}/{}", d.name()))?;
        ok &= v * sign > 0.0;
        parts.push(format!("{input}->{} {v:+.3}", d.name()));
    }
    verdict(ok, parts.join(", "))
}

fn reliability(_: &Ctx) -> Check {
    let zero = ErrorDistribution::Normal { mean: 0.0, std: 0.0 };
    let degenerate = decision_reliability(&[1.0, 1.0, 1.5, 4.0], &vec![zero; 4], 1000, 1).map_err(|e| e.to_string())?;
    let twin = ErrorDistribution::Normal { mean: 0.0, std: 0.05 };
    let twins = decision_reliability(&[2.0, 2.0], &[twin.clone(), twin], TWIN_DRAWS, 2).map_err(|e| e.to_string())?;
    let sw = common::shapiro_golden();

    let zoo = common::fixture_zoo();
    let config = SurveyConfig {
        n_sizes: SURVEY_SIZES,
        seed: MASTER_SEED,
        ..SurveyConfig::default()
    };
    let survey = reliability_survey(&zoo, &fixtures::library(), &zoo.test_sets(), &config).map_err(|e| e.to_string())?;
    let means: Vec<String> = survey
        .summaries
        .iter()
        .map(|s| format!("{} {:.3} (95% level {:.3})", s.ranking, s.mean, s.quantile_95))
        .collect();
    let dims_ok = ["dynamic_power", "leakage", "area"]
        .iter()
        .all(|d| survey.summary(d).is_some_and(|s| s.mean >= SURVEY_MIN_MEAN));
    verdict(
        degenerate == 1.0 && (twins - 0.5).abs() <= TWIN_TOLERANCE && sw.is_ok() && dims_ok,
        format!(
            "degenerate {degenerate}; twins {twins:.4}; Shapiro-Wilk {}; survey of {} sizes: {}",
            sw.unwrap_or_else(|e| format!("FAILED {e}")),
            survey.runs.len(),
            means.join(", ")
        ),
    )
}

fn model_zoo(_: &Ctx) -> Check {
    let zoo = common::fixture_zoo();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut largest = 0;
    for m in zoo.entries() {
        let bytes = std::fs::metadata(zoo.dir().unwrap().join(file_name(m.compiler_id(), m.version())))
            .map_err(|e| e.to_string())?
            .len();
        largest = largest.max(bytes);
        let path = dir.path().join("m.json");
        m.save(&path).map_err(|e| e.to_string())?;
        let back = ModelRecord::load(&path).map_err(|e| e.to_string())?;
        let ps = sample_parametrizations(m.spec(), 200, 9, &[]).unwrap();
        if m.predict(&ps).unwrap() != back.predict(&ps).unwrap() {
            return Err(format!("{}: reloaded predictions differ", m.key()));
        }
    }
    let golden = common::golden_predictions(&zoo)?;
    verdict(
        zoo.len() == 4 && largest <= MAX_MODEL_BYTES,
        format!("{} models, largest file {largest} bytes, save/load bit-equal; {golden}", zoo.len()),
    )
}

type Criterion = (&'static str, fn(&Ctx) -> Check);

const CRITERIA: [Criterion; 14] = [
    ("end-to-end surrogate quality", end_to_end),
    ("size-bin stability", size_bins),
    ("gradient correctness", gradients),
    ("scaling round trip", scaling),
    ("metric properties", metrics),
    ("enumeration counts", enumeration),
    ("ranking oracle equivalence", ranking_oracle),
    ("weighted-ranking unit invariance", unit_invariance),
    ("throughput", throughput),
    ("grid search", grid),
    ("baseline ordering", baselines),
    ("feature-importance signs", importance),
    ("reliability", reliability),
    ("model zoo", model_zoo),
];

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let ctx = Ctx { e2e: OnceCell::new() };
    let mut failed = 0;
    for (name, check) in CRITERIA {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check(&ctx))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("PASS {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
