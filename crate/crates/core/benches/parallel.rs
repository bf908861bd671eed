//! Compares the chunked collocation evaluation with rayon against the
//! sequential path on a flow-problem stage loss.

use criterion::{criterion_group, criterion_main, Criterion};
use shapeopt_core::geometry::CollocationSet;
use shapeopt_core::net::FieldNetwork;
use shapeopt_core::problems::{make_problem, ProblemOptions, StageKind};
use shapeopt_core::solver::StageEval;
use std::hint::black_box;

fn bench_loss_grad(c: &mut Criterion) {
    let problem = make_problem("stokes_pipe", &ProblemOptions::default()).unwrap();
    let domain = problem.initial_domain(400).unwrap();
    let colloc = CollocationSet::build(&domain, 1500, 1).unwrap();
    let nets: Vec<FieldNetwork> = (0..problem.fields.len())
        .map(|i| FieldNetwork::init(problem.default_arch(i), i as u64))
        .collect();
    let stage = problem.stage(StageKind::State).unwrap();
    let eval = StageEval::build(&problem, stage, &nets, &colloc, 100.0);
    let mut x = Vec::new();
    for &fid in &stage.active {
        x.extend_from_slice(&nets[fid].params);
    }
    let active = eval.split_params(&x);

    let mut group = c.benchmark_group("stokes_loss_grad");
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(eval.loss_and_grad(black_box(&active)).unwrap()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("single_thread_pool", |b| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        b.iter(|| pool.install(|| black_box(eval.loss_and_grad(black_box(&active)).unwrap())))
    });
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(eval.loss_and_grad(black_box(&active)).unwrap()))
    });
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let problem = make_problem("stokes_pipe", &ProblemOptions::default()).unwrap();
    let domain = problem.initial_domain(400).unwrap();
    c.bench_function("sample_interior_6000", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(shapeopt_core::geometry::sample_interior(&domain, 6000, seed).unwrap())
        })
    });
}

criterion_group!(benches, bench_loss_grad, bench_sampling);
criterion_main!(benches);
