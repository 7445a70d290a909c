use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gtd_ist::envs::{ChainConfig, StarConfig};
use gtd_ist::harness::{run_experiment_with, AlgorithmSpec, EnvironmentConfig, Execution, ExperimentConfig, Init};
use gtd_ist::learners::AlgorithmKind;

fn chain() -> ExperimentConfig {
    let algorithms = vec![
        AlgorithmSpec::new(AlgorithmKind::Gtd, 0.1, 0.01, 0.0),
        AlgorithmSpec::new(AlgorithmKind::GtdIst, 0.1, 0.01, 1e-3),
        AlgorithmSpec::new(AlgorithmKind::Tdc, 0.1, 0.05, 0.0),
        AlgorithmSpec::new(AlgorithmKind::TdcIst, 0.1, 0.05, 1e-3),
    ];
    let mut cfg = ExperimentConfig::new(EnvironmentConfig::Chain(ChainConfig::default()), algorithms);
    cfg.episodes = 200;
    cfg.n_seeds = 8;
    cfg
}

fn star() -> ExperimentConfig {
    let algorithms = vec![
        AlgorithmSpec::new(AlgorithmKind::Gtd2, 0.01, 0.1, 0.0).with_init(Init::Ones),
        AlgorithmSpec::new(AlgorithmKind::Gtd2Ist, 0.01, 0.1, 1.0).with_init(Init::Ones),
    ];
    let mut cfg = ExperimentConfig::new(EnvironmentConfig::Star(StarConfig::default()), algorithms);
    cfg.episodes = 50;
    cfg.n_seeds = 8;
    cfg
}

fn execution(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, cfg) in [("chain", chain()), ("star", star())] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(name, format!("{exec:?}")), &cfg, |b, cfg| {
                b.iter(|| run_experiment_with(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, execution);
criterion_main!(benches);
