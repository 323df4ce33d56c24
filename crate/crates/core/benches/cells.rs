use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sfnec::agents::AgentKind;
use sfnec::dnd::{Dnd, DEFAULT_DELTA};
use sfnec::harness::{run_cells, Execution, ExperimentSpec};

fn small_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::desk_scale("bench");
    spec.agents = AgentKind::ALL.to_vec();
    spec.seeds = (0..4).collect();
    spec.env.schedule.num_tasks = 2;
    spec.env.schedule.transitions_per_task = 500;
    spec
}

fn cells(c: &mut Criterion) {
    let cells = small_spec().cells().unwrap();
    let mut group = c.benchmark_group("run_cells");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| black_box(run_cells(&cells, exec))));
    }
    group.finish();
}

fn lookup(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut group = c.benchmark_group("dnd_lookup");
    for n in [1_000, 10_000] {
        let mut store = Dnd::new(112, 4, n, DEFAULT_DELTA).unwrap();
        for _ in 0..n {
            let key: Vec<f64> = (0..112).map(|_| rng.random()).collect();
            store.write(&key, &[0.0; 4], 1.0).unwrap();
        }
        let query: Vec<f64> = (0..112).map(|_| rng.random()).collect();
        group.bench_with_input(BenchmarkId::new("k20", n), &n, |b, _| {
            b.iter(|| black_box(store.lookup(&query, 20).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, cells, lookup);
criterion_main!(benches);
