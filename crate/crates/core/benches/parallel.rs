use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use memplan_core::dataset::{generate, sample_parametrizations, split, Observation};
use memplan_core::evalmetrics::feature_importance;
use memplan_core::fixtures;
use memplan_core::modelzoo::{fit_model, ModelRecord};
use memplan_core::neuralnet::{Architecture, TrainConfig};
use memplan_core::par;
use memplan_core::synthcompiler::CoefficientSet;

fn setup() -> (ModelRecord, Vec<Observation>) {
    let spec = fixtures::spec("sram_a");
    let coeffs = CoefficientSet::draw(&spec, fixtures::MASTER_SEED);
    let ps = sample_parametrizations(&spec, 4000, 1, &[]).unwrap();
    let obs = generate(&spec, &coeffs, ps, 1).unwrap();
    let data = split(obs.clone(), 2);
    let config = TrainConfig { max_epochs: 1, ..TrainConfig::default() };
    let model = fit_model(&spec, &data, Architecture::default(), &config).unwrap();
    (model, obs)
}

fn bench(c: &mut Criterion) {
    let (model, obs) = setup();
    let mut g = c.benchmark_group("predict");
    for n in [256usize, 4000] {
        let batch = &obs[..n];
        g.bench_with_input(BenchmarkId::new("parallel", n), &batch, |b, batch| {
            b.iter(|| model.predict_observations(batch).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &batch, |b, batch| {
            b.iter(|| par::sequential(|| model.predict_observations(batch).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("importance");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| feature_importance(&model, &obs).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| feature_importance(&model, &obs).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
