//! Parallel vs sequential evaluation of every baseline over a few seeds.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use isac_core::baselines::{evaluate_all, BaselineKind};
use isac_core::env::{ACTIONS_PER_AGENT, FEATURES_PER_AGENT};
use isac_core::par::Execution;
use isac_core::rl::DdpgAgent;
use isac_core::Config;

fn bench_evaluation(c: &mut Criterion) {
    let cfg = Config::default();
    let n = cfg.scenario.n_agents;
    let agent = DdpgAgent::new(n * FEATURES_PER_AGENT, n * ACTIONS_PER_AGENT, cfg.ddpg.clone(), 0).expect("default hyperparameters");
    let seeds = [0, 1, 2, 3];
    let mut group = c.benchmark_group("evaluate_all");
    group.sample_size(10);
    for (name, mode) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        group.bench_function(name, |b| {
            b.iter(|| evaluate_all(black_box(&cfg), &BaselineKind::ALL, Some(&agent.actor), &seeds, 1, mode).expect("evaluation runs"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluation);
criterion_main!(benches);
