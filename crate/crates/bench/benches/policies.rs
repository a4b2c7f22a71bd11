use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reelpack::sim::run_replication;
use reelpack::solver::solve_single_reel_for;
use reelpack::{builtin_case, AugmentedState, Policy, RolloutParams, RviOptions, SimulationConfig};

fn decisions(c: &mut Criterion) {
    let inst = builtin_case(4, 5).unwrap();
    let bias = Arc::new(solve_single_reel_for(&inst, &RviOptions::default()).unwrap());
    let state = AugmentedState::new(vec![4200, 310, 2890, 1500, 0], 503, &inst).unwrap();
    let policies = [
        Policy::FirstFit,
        Policy::BestFit,
        Policy::Index(bias.clone()),
        Policy::Rollout {
            base: Box::new(Policy::Index(bias)),
            params: RolloutParams {
                rollouts: 16,
                horizon: 20,
            },
        },
    ];
    let mut group = c.benchmark_group("select");
    for policy in &policies {
        group.bench_function(policy.name(), |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            b.iter(|| policy.select(&inst, black_box(&state), &mut rng).unwrap())
        });
    }
    group.finish();
}

fn replications(c: &mut Criterion) {
    let inst = builtin_case(1, 3).unwrap();
    let bias = Arc::new(solve_single_reel_for(&inst, &RviOptions::default()).unwrap());
    let config = SimulationConfig {
        horizon: 100_000,
        replications: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("replication");
    group.throughput(Throughput::Elements(config.horizon));
    for policy in [
        Policy::Random,
        Policy::FirstFit,
        Policy::BestFit,
        Policy::Index(bias),
    ] {
        group.bench_with_input(
            BenchmarkId::from_parameter(policy.name()),
            &policy,
            |b, p| b.iter(|| run_replication(&inst, p, &config, 0).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, decisions, replications);
criterion_main!(benches);
