use criterion::{criterion_group, criterion_main, Criterion};
use scenario_discard::experiments::{
    outer_probability_mc, Execution, Generator, OuterMcConfig, RandomSource, Scheme,
};
use scenario_discard::lp::Tolerances;
use scenario_discard::scenario::CascadeMode;

fn config() -> OuterMcConfig {
    OuterMcConfig {
        generator: Generator::Resource { d: 2, n: 2 },
        m: 100,
        scheme: Scheme::Cascade {
            ell: 2,
            mode: CascadeMode::Regularized,
        },
        epsilon: 0.1,
        trials: 64,
        inner_samples: 2000,
        source: RandomSource::new(30),
        tol: Tolerances::default(),
    }
}

fn outer_mc(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("outer_mc_resource");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| outer_probability_mc(&cfg, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| outer_probability_mc(&cfg, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, outer_mc);
criterion_main!(benches);
