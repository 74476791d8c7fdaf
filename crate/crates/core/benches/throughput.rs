//! Loss-and-gradient throughput, sequential against rayon execution.
//!
//! Without the `parallel` feature both modes run on one thread, so compare
//! the two groups only in a default build.

use control_pinn::loss::{self, LossWeights};
use control_pinn::network::init_params;
use control_pinn::par::Execution;
use control_pinn::problems::{
    AnalyticalProblem, ControlProblem, HeatProblem, PredatorPreyOptions, PredatorPreyProblem,
};
use control_pinn::sampler::{sample_epoch, BatchSizes};
use control_pinn::trainer::TrainConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_problem<P: ControlProblem>(c: &mut Criterion, name: &str, problem: &P) {
    let cfg = TrainConfig::default();
    let params = init_params(cfg.architecture(problem), 0).expect("init");
    let batch = sample_epoch(problem.domain(), &BatchSizes::default(), 0, 0).expect("batch");
    let weights = LossWeights::default();
    let mut group = c.benchmark_group(format!("loss_gradient/{name}"));
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| loss::evaluate_with_gradient(&params, problem, &batch, &weights, exec).expect("loss"))
        });
    }
    group.finish();
}

fn throughput(c: &mut Criterion) {
    bench_problem(c, "analytical", &AnalyticalProblem::new());
    bench_problem(c, "heat", &HeatProblem::with_diffusivity(0.1).expect("heat"));
    bench_problem(
        c,
        "predator_prey",
        &PredatorPreyProblem::new(PredatorPreyOptions::default()).expect("predator-prey"),
    );
}

criterion_group!(benches, throughput);
criterion_main!(benches);
