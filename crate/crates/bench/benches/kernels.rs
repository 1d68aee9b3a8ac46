use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scal_core::datagen::{generate, SyntheticSpec};
use scal_core::influence::score_all;
use scal_core::ksc::{best_of_restarts, KscOptions};
use scal_core::kscc::{hungarian, run_kscc};
use scal_core::numkit::sym_eigen;
use scal_core::{Dataset, LabelStore};

fn random_symmetric(p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
    &a + &a.t()
}

fn dataset() -> Dataset {
    generate(&SyntheticSpec::noise_sweep(0.2, 0)).unwrap()
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("sym_eigen");
    for p in [10, 20, 50] {
        let s = random_symmetric(p, p as u64);
        g.bench_with_input(BenchmarkId::from_parameter(p), &s, |b, s| b.iter(|| sym_eigen(s.view()).unwrap()));
    }
    g.finish();
}

fn scoring_and_updates(c: &mut Criterion) {
    let data = dataset();
    let opts = KscOptions::new(10);
    let init = best_of_restarts(&data, 5, &opts, 5, 0).unwrap();
    let truth = data.true_classes.clone().unwrap();
    let mut labels = LabelStore::new();
    for id in (0..data.len()).step_by(20) {
        labels.insert(id, truth[id]).unwrap();
    }

    c.bench_function("score_all N=1000", |b| {
        b.iter(|| score_all(&data, &init.models, &init.clustering, &labels).unwrap())
    });
    c.bench_function("kscc N=1000, 50 labels", |b| {
        b.iter(|| run_kscc(&data, &init.clustering, &labels, &opts).unwrap())
    });
}

fn assignment(c: &mut Criterion) {
    let mut g = c.benchmark_group("hungarian");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in [5, 20, 50] {
        let cost = Array2::from_shape_fn((k, k), |_| rng.random::<f64>());
        g.bench_with_input(BenchmarkId::from_parameter(k), &cost, |b, m| b.iter(|| hungarian(m.view()).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = eigen, scoring_and_updates, assignment
}
criterion_main!(benches);
