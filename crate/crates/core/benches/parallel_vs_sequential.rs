use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_inr::config::ModelConfig;
use ris_inr::dataset::{self, DatasetMeta, GridSpec, SplitFractions};
use ris_inr::eval::power_eval;
use ris_inr::inr::{InrModel, Mlp};
use ris_inr::oracle::{exhaustive_full, exhaustive_rank1};
use ris_inr::{Execution, GeometryConfig, ScenarioGeometry};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn meta(counts: [usize; 3]) -> DatasetMeta {
    DatasetMeta {
        seed: 0,
        geometry: GeometryConfig::default(),
        grid: GridSpec {
            counts,
            ..GridSpec::default()
        },
        split: SplitFractions::default(),
    }
}

fn labeling(c: &mut Criterion) {
    let m = meta([10, 10, 10]);
    let mut g = c.benchmark_group("generate_1000_points");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| dataset::generate(black_box(&m), exec).unwrap()));
    }
    g.finish();
}

fn exhaustive(c: &mut Criterion) {
    let geom = ScenarioGeometry::new(GeometryConfig {
        rows: 4,
        cols: 4,
        ..GeometryConfig::default()
    })
    .unwrap();
    let v = [1.2, 2.4, 0.8];
    let mut g = c.benchmark_group("exhaustive_4x4");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("full", name), &exec, |b, &e| {
            b.iter(|| exhaustive_full(&geom, black_box(v), 20, e).unwrap())
        });
    }
    g.finish();

    let geom = ScenarioGeometry::new(GeometryConfig::default()).unwrap();
    let mut g = c.benchmark_group("exhaustive_10x10");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("rank1", name), &exec, |b, &e| {
            b.iter(|| exhaustive_rank1(&geom, black_box(v), 24, e).unwrap())
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let data = dataset::generate(&meta([10, 10, 10]), Execution::Parallel).unwrap();
    let geom = data.meta.validate().unwrap();
    let mc = ModelConfig::default();
    let arch = mc.architecture(10, 10).unwrap();
    let net = Mlp::init(arch.mlp, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let model = InrModel::new(10, 10, arch.labels, arch.pe, net).unwrap();
    let mut g = c.benchmark_group("power_eval_1000_points");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| power_eval(&model, &geom, black_box(&data.samples), 7, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, labeling, exhaustive, evaluation);
criterion_main!(benches);
