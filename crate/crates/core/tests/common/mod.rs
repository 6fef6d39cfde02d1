//! Checks shared by the focused integration tests and the acceptance run.
//! Each returns a one-line detail on success and the reason on failure.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::Array2;
use rand::Rng;
use serde::Deserialize;

use memplan_core::dataset::sample_parametrizations;
use memplan_core::fixtures;
use memplan_core::modelzoo::Zoo;
use memplan_core::neuralnet::{loss_mae, Activation, Architecture, Network, OutputActivation};
use memplan_core::optimizer::{
    dynamic_power, optimize, predict_candidates, weighted_rank_value, DimensionScalers, DynamicMode,
    OptimizationRequest, RankedEntry, ResolvedCorners, Standardizer,
};
use memplan_core::paramspace::{enumerate_solutions, CompilerSpec, Parametrization};
use memplan_core::reliability::shapiro_wilk;
use memplan_core::seed;
use memplan_core::synthcompiler::{compile, var_index, CoefficientSet, Dimension, PpaRecord};

pub type Check = Result<String, String>;

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn fixture_zoo() -> Zoo {
    Zoo::open(fixtures::dir().join("zoo")).expect("shipped fixture zoo loads")
}

fn read_json<T: for<'de> Deserialize<'de>>(name: &str) -> T {
    let text = std::fs::read_to_string(golden(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[derive(Deserialize)]
struct SwFile {
    cases: Vec<SwCase>,
}

#[derive(Deserialize)]
struct SwCase {
    name: String,
    samples: Vec<f64>,
    w: f64,
    p_value: f64,
}

/// Shapiro-Wilk against reference values: `|dW| <= 1e-3`, `|dp| <= 1e-2`.
pub fn shapiro_golden() -> Check {
    let file: SwFile = read_json("shapiro_wilk.json");
    let (mut dw, mut dp) = (0.0f64, 0.0f64);
    for c in &file.cases {
        let r = shapiro_wilk(&c.samples).map_err(|e| format!("{}: {e}", c.name))?;
        dw = dw.max((r.w - c.w).abs());
        dp = dp.max((r.p_value - c.p_value).abs());
        if (r.w - c.w).abs() > 1e-3 || (r.p_value - c.p_value).abs() > 1e-2 {
            return Err(format!(
                "{}: W {} vs {}, p {} vs {}",
                c.name, r.w, c.w, r.p_value, c.p_value
            ));
        }
    }
    Ok(format!("{} cases, max |dW| {dw:.2e}, max |dp| {dp:.2e}", file.cases.len()))
}

#[derive(Deserialize)]
struct PpaFile {
    cases: Vec<PpaCase>,
}

#[derive(Deserialize)]
struct PpaCase {
    spec: String,
    coefficients: CoefficientSet,
    parametrization: Parametrization,
    ppa: PpaRecord,
}

/// Synthetic compiler against independently computed PPA values.
pub fn synthetic_ppa_golden() -> Check {
    let file: PpaFile = read_json("synthetic_ppa.json");
    let mut worst = 0.0f64;
    for c in &file.cases {
        let spec = CompilerSpec::load(fixtures::dir().join(&c.spec)).map_err(|e| e.to_string())?;
        let got = compile(&spec, &c.coefficients, &c.parametrization).map_err(|e| e.to_string())?;
        if got.values.len() != c.ppa.values.len() {
            return Err(format!("{}: {} variables", c.spec, got.values.len()));
        }
        for (a, b) in got.values.iter().zip(&c.ppa.values) {
            let rel = (a - b).abs() / b.abs();
            worst = worst.max(rel);
            if rel > 1e-12 {
                return Err(format!("{}: {a} vs {b}", c.spec));
            }
        }
    }
    Ok(format!("{} cases, max relative deviation {worst:.1e}", file.cases.len()))
}

fn fd_architecture(s: u64) -> Architecture {
    Architecture {
        hidden_layers: 1 + (s % 3) as usize,
        hidden_unit_multiplier: 1 + (s / 3 % 3) as usize,
        hidden_activation: Activation::ALL[(s / 18 % 3) as usize],
        output_activation: OutputActivation::ALL[(s / 9 % 2) as usize],
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Backward pass and input Jacobian against central differences over `seeds`
/// random networks; relative error is measured in the Euclidean norm.
pub fn gradient_check(seeds: u64, tol: f64) -> Check {
    let h = 1e-6;
    let (mut worst_w, mut worst_x) = (0.0f64, 0.0f64);
    for s in 0..seeds {
        let arch = fd_architecture(s);
        let (nin, nout, rows) = (3, 4, 6);
        let mut net = Network::init(arch, nin, nout, s).map_err(|e| e.to_string())?;
        let mut rng = seed::rng(s, &[0xfd]);
        // zero biases put relu units exactly on their kink once a layer is inactive
        let jittered: Vec<f64> = net.params_flat().iter().map(|p| p + rng.random_range(-0.1..0.1)).collect();
        net.set_params_flat(&jittered).map_err(|e| e.to_string())?;
        let x = Array2::from_shape_fn((rows, nin), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((rows, nout), |_| rng.random_range(-1.0..1.0));
        let (_, g) = net.backward(&x, &y).map_err(|e| e.to_string())?;
        let analytic = g.flat();

        let theta = net.params_flat();
        let mut probe = net.clone();
        let mut loss_at = |t: &[f64]| {
            probe.set_params_flat(t).unwrap();
            loss_mae(&probe.forward(&x).unwrap(), &y)
        };
        let mut numeric = Vec::with_capacity(theta.len());
        let mut t = theta.clone();
        for i in 0..theta.len() {
            t[i] = theta[i] + h;
            let up = loss_at(&t);
            t[i] = theta[i] - h;
            let down = loss_at(&t);
            t[i] = theta[i];
            numeric.push((up - down) / (2.0 * h));
        }
        let diff = norm(analytic.iter().zip(&numeric).map(|(a, b)| a - b));
        let scale = norm(analytic.iter().copied()).max(norm(numeric.iter().copied())).max(1e-12);
        worst_w = worst_w.max(diff / scale);

        let x0: Vec<f64> = x.row(0).to_vec();
        let jac = net.input_jacobian(&x0).map_err(|e| e.to_string())?;
        let f = |v: &[f64]| net.forward(&Array2::from_shape_vec((1, nin), v.to_vec()).unwrap()).unwrap();
        let mut jd = Array2::<f64>::zeros((nout, nin));
        for j in 0..nin {
            let mut a = x0.clone();
            let mut b = x0.clone();
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (f(&a), f(&b));
            for o in 0..nout {
                jd[[o, j]] = (fa[[0, o]] - fb[[0, o]]) / (2.0 * h);
            }
        }
        let diff = norm((&jac - &jd).iter().copied());
        let scale = norm(jac.iter().copied()).max(norm(jd.iter().copied())).max(1e-12);
        worst_x = worst_x.max(diff / scale);
        if worst_w >= tol || worst_x >= tol {
            return Err(format!(
                "seed {s} ({}): weight gradient {worst_w:.2e}, input Jacobian {worst_x:.2e}",
                arch.label()
            ));
        }
    }
    Ok(format!("{seeds} networks, max relative error: weights {worst_w:.2e}, inputs {worst_x:.2e}"))
}

/// Stable insertion sort of `0..values.len()` by value.
fn insertion_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let mut pos = order.len();
        while pos > 0 && values[order[pos - 1]] > values[i] {
            pos -= 1;
        }
        order.insert(pos, i);
    }
    order
}

fn pooled(parts: &[(f64, f64, usize)]) -> (f64, f64) {
    let n: f64 = parts.iter().map(|p| p.2 as f64).sum();
    let mean = parts.iter().map(|p| p.0 * p.2 as f64).sum::<f64>() / n;
    let second = parts.iter().map(|p| p.2 as f64 * (p.1 * p.1 + p.0 * p.0)).sum::<f64>() / n;
    (mean, (second - mean * mean).sqrt())
}

/// Criterion values of every enumerated candidate, computed from single
/// predictions: `[dynamic, leakage, area, weighted]`.
fn oracle_values(
    request: &OptimizationRequest,
    zoo: &Zoo,
    specs: &[CompilerSpec],
) -> Result<(Vec<(String, Parametrization)>, Vec<[f64; 4]>, (f64, f64), (f64, f64), (f64, f64)), String> {
    let en = enumerate_solutions(specs, &request.to_fixed()).map_err(|e| e.to_string())?;
    let mut used: Vec<usize> = en.solutions.iter().map(|s| s.spec).collect();
    used.dedup();
    let (mut dy, mut le, mut ar) = (Vec::new(), Vec::new(), Vec::new());
    for &si in &used {
        let spec = &specs[si];
        let m = zoo.get_spec(spec).map_err(|e| e.to_string())?;
        let c = spec.corners.len();
        let stats = &m.meta().target_stats;
        let kd = spec.corner_index(&request.corners.dynamic_power).unwrap();
        let kl = spec.corner_index(&request.corners.leakage).unwrap();
        let st = |i: usize| (stats[i].mean, stats[i].std, stats[i].count);
        dy.push(st(var_index(Dimension::ReadPower, kd, c)));
        if request.dynamic_mode == DynamicMode::MaxReadWrite {
            dy.push(st(var_index(Dimension::WritePower, kd, c)));
        }
        le.push(st(var_index(Dimension::Leakage, kl, c)));
        ar.push(st(0));
    }
    let (sd, sl, sa) = (pooled(&dy), pooled(&le), pooled(&ar));
    let w = &request.weights;
    let mut ids = Vec::new();
    let mut vals = Vec::new();
    for s in &en.solutions {
        let spec = &specs[s.spec];
        let m = zoo.get_spec(spec).map_err(|e| e.to_string())?;
        let ppa = m.predict(std::slice::from_ref(&s.parametrization)).map_err(|e| e.to_string())?.remove(0);
        let kd = spec.corner_index(&request.corners.dynamic_power).unwrap();
        let kl = spec.corner_index(&request.corners.leakage).unwrap();
        let read = ppa.get(Dimension::ReadPower, kd);
        let d = match request.dynamic_mode {
            DynamicMode::Read => read,
            DynamicMode::MaxReadWrite => read.max(ppa.get(Dimension::WritePower, kd)),
        };
        let l = ppa.get(Dimension::Leakage, kl);
        let a = ppa.area();
        let ws = w.dynamic_power * (d - sd.0) / sd.1 + w.leakage * (l - sl.0) / sl.1 + w.area * (a - sa.0) / sa.1;
        ids.push((spec.key(), s.parametrization.clone()));
        vals.push([d, l, a, ws]);
    }
    Ok((ids, vals, sd, sl, sa))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1e-300)
}

/// Every list equals an independent stable sort of the candidates, and its
/// head is the linear-scan argmin. No frequency filter may be set.
pub fn ranking_oracle(request: &OptimizationRequest, zoo: &Zoo, specs: &[CompilerSpec]) -> Check {
    let results = optimize(request, zoo, specs).map_err(|e| e.to_string())?;
    let (ids, vals, sd, sl, sa) = oracle_values(request, zoo, specs)?;
    let sc = results.scalers.as_ref().ok_or("no scalers")?;
    for (mine, theirs, name) in [(sd, &sc.dynamic_power, "dynamic"), (sl, &sc.leakage, "leakage"), (sa, &sc.area, "area")] {
        if !close(theirs.mean, mine.0) || !close(theirs.std, mine.1) {
            return Err(format!("{name} scaler {theirs:?} vs ({}, {})", mine.0, mine.1));
        }
    }
    for (slot, (name, list)) in results.lists().into_iter().enumerate() {
        let v: Vec<f64> = vals.iter().map(|r| r[slot]).collect();
        let order = insertion_order(&v);
        if order.len() != list.len() {
            return Err(format!("{name}: {} entries, oracle {}", list.len(), order.len()));
        }
        for (rank, (&i, e)) in order.iter().zip(list).enumerate() {
            if (e.compiler.as_str(), &e.parametrization) != (ids[i].0.as_str(), &ids[i].1) {
                return Err(format!("{name}: rank {rank} differs"));
            }
            if !close(e.value, v[i]) {
                return Err(format!("{name}: rank {rank} value {} vs {}", e.value, v[i]));
            }
        }
        let mut argmin = 0;
        for i in 1..v.len() {
            if v[i] < v[argmin] {
                argmin = i;
            }
        }
        if list.first().map(|e| e.candidate) != Some(argmin) {
            return Err(format!("{name}: head is not the argmin"));
        }
    }
    Ok(format!("{} candidates, 4 lists", results.len()))
}

fn order_by(cands: &[f64]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..cands.len()).collect();
    o.sort_by(|&a, &b| cands[a].total_cmp(&cands[b]));
    o
}

fn scaled(s: &Standardizer, k: f64) -> Standardizer {
    Standardizer {
        mean: s.mean * k,
        std: s.std * k,
    }
}

/// Scaling one raw dimension and its scaler statistics by `k` keeps every list order.
pub fn unit_invariance(request: &OptimizationRequest, zoo: &Zoo, specs: &[CompilerSpec], factors: &[f64]) -> Check {
    let pred = predict_candidates(request, zoo, specs).map_err(|e| e.to_string())?;
    let results = optimize(request, zoo, specs).map_err(|e| e.to_string())?;
    let base = results.scalers.clone().ok_or("no scalers")?;
    let corners: Vec<ResolvedCorners> = pred
        .solutions
        .iter()
        .map(|(si, _, _)| ResolvedCorners::resolve(&specs[*si], &request.corners).unwrap())
        .collect();
    let keys = |ppas: &[PpaRecord], sc: &DimensionScalers| -> [Vec<f64>; 4] {
        let mut out: [Vec<f64>; 4] = Default::default();
        for (p, r) in ppas.iter().zip(&corners) {
            out[0].push(dynamic_power(p, r.dynamic_power, request.dynamic_mode));
            out[1].push(p.get(Dimension::Leakage, r.leakage));
            out[2].push(p.area());
            out[3].push(weighted_rank_value(p, sc, &request.weights, r, request.dynamic_mode));
        }
        out
    };
    let ppas: Vec<PpaRecord> = pred.solutions.iter().map(|s| s.2.clone()).collect();
    let reference: Vec<Vec<usize>> = keys(&ppas, &base).iter().map(|k| order_by(k)).collect();
    let heads: Vec<usize> = results.lists().iter().map(|(_, l)| l[0].candidate).collect();
    if reference.iter().zip(&heads).any(|(o, &h)| o[0] != h) {
        return Err("reference order disagrees with the optimizer".into());
    }
    let dims: [&[Dimension]; 3] = [
        &[Dimension::ReadPower, Dimension::WritePower],
        &[Dimension::Leakage],
        &[Dimension::Area],
    ];
    let mut checked = 0;
    for (di, group) in dims.iter().enumerate() {
        for &k in factors {
            let mut sc = base.clone();
            match di {
                0 => sc.dynamic_power = scaled(&sc.dynamic_power, k),
                1 => sc.leakage = scaled(&sc.leakage, k),
                _ => sc.area = scaled(&sc.area, k),
            }
            let moved: Vec<PpaRecord> = ppas
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    for &d in *group {
                        let c = q.corners;
                        for i in d.variables(c) {
                            q.values[i] *= k;
                        }
                    }
                    q
                })
                .collect();
            for (slot, key) in keys(&moved, &sc).iter().enumerate() {
                if order_by(key) != reference[slot] {
                    return Err(format!("list {slot} reordered after scaling dimension {di} by {k}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{} candidates, {checked} scaled orderings unchanged", ppas.len()))
}

pub fn entry_ids(list: &[RankedEntry]) -> Vec<(String, Parametrization)> {
    list.iter().map(|e| (e.compiler.clone(), e.parametrization.clone())).collect()
}

const GOLDEN: &str = "zoo_predictions.json";

pub type Golden = BTreeMap<String, Vec<(Parametrization, PpaRecord)>>;

/// Predictions of every shipped model at fixed parametrizations. Set
/// `MEMPLAN_BLESS=1` to rewrite the golden file after rebuilding the zoo.
pub fn golden_predictions(zoo: &Zoo) -> Check {
    let mut now = Golden::new();
    for m in zoo.entries() {
        let ps = sample_parametrizations(m.spec(), 16, 7, &[]).map_err(|e| e.to_string())?;
        let preds = m.predict(&ps).map_err(|e| e.to_string())?;
        now.insert(m.key(), ps.into_iter().zip(preds).collect());
    }
    let path = golden(GOLDEN);
    if std::env::var_os("MEMPLAN_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&now).unwrap() + "\n").map_err(|e| e.to_string())?;
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{GOLDEN}: {e}"))?;
    let stored: Golden = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if stored != now {
        return Err("predictions differ from the golden file".into());
    }
    Ok(format!("{} models x 16 predictions bit-identical", now.len()))
}

