use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dense_mimo::harness::config::db_to_linear;
use dense_mimo::harness::experiments::{fig2_point, trial_paths};
use dense_mimo::harness::{Experiment, ExperimentConfig};
use dense_mimo::par::{map_indexed, map_indexed_seq};
use dense_mimo::ArrayGeometry;

fn trials(c: &mut Criterion) {
    let config = ExperimentConfig::defaults_for(Experiment::Fig2);
    let gt = ArrayGeometry::with_separation(8, 1, 4).unwrap();
    let gr = ArrayGeometry::critical(4).unwrap();
    let gamma = db_to_linear(20.0);
    let one = |t: usize| {
        let paths = trial_paths(&config, t as u64, 8, 4).unwrap();
        fig2_point(&paths, &gt, &gr, gamma).unwrap().gap
    };
    let mut group = c.benchmark_group("fig2_trials");
    for n in [16usize, 64] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| b.iter(|| map_indexed(n, one)));
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_indexed_seq(n, one))
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
