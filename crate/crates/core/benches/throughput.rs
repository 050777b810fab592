use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use entnet::analysis::{link_matrix, CoincidenceParams};
use entnet::exec::Execution;
use entnet::plan::{build_plan, PlanSpec};
use entnet::report::default_links;
use entnet::sim::{run_scenario, Scenario};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn simulate(c: &mut Criterion) {
    let plan = build_plan(&PlanSpec::default()).unwrap();
    let mut group = c.benchmark_group("simulate_40_users_50ms");
    group.sample_size(10);
    for (name, mode) in MODES {
        let scenario = Scenario { execution: mode, ..Scenario::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &scenario, |b, sc| {
            b.iter(|| black_box(run_scenario(&plan, sc, 0.05, 7).unwrap()))
        });
    }
    group.finish();
}

fn analyse(c: &mut Criterion) {
    let plan = build_plan(&PlanSpec::default()).unwrap();
    let scenario = Scenario::default();
    let output = run_scenario(&plan, &scenario, 0.5, 7).unwrap();
    let links = default_links(&plan);
    let params = CoincidenceParams::default();
    let mut group = c.benchmark_group("link_matrix_38_links_500ms");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(link_matrix(&output, &plan, &scenario, &links, &params, mode).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, simulate, analyse);
criterion_main!(benches);
