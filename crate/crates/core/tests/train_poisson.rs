//! End-to-end solver checks on the Poisson disk with a constant source:
//! the manufactured solution is `y = (1 − ‖x‖²)/4`, so training accuracy is
//! measurable exactly.

use shapeopt_core::geometry::{
    BoundaryLoop, BoundaryPoint, CollocationSet, Domain2D, Marker, Orientation, Vec2,
};
use shapeopt_core::net::FieldNetwork;
use shapeopt_core::problems::{make_problem, ProblemOptions, StageKind};
use shapeopt_core::solver::{assemble_loss, train_stage, TrainerOptions};

fn disk_domain(n: usize) -> Domain2D {
    let pts: Vec<BoundaryPoint> = (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            BoundaryPoint::new(th.cos(), th.sin(), Marker::Free, true)
        })
        .collect();
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)]).unwrap()
}

#[test]
fn poisson_disk_reaches_manufactured_solution() {
    let opts = ProblemOptions {
        source_constant: Some(1.0),
        ..Default::default()
    };
    let problem = make_problem("poisson_model", &opts).unwrap();
    let domain = disk_domain(500);
    let colloc = CollocationSet::build(&domain, 1000, 17).unwrap();
    let mut nets: Vec<FieldNetwork> = (0..problem.fields.len())
        .map(|i| FieldNetwork::init(problem.default_arch(i), 100 + i as u64))
        .collect();
    let stage = problem.stage(StageKind::State).unwrap();
    let trainer = TrainerOptions::default();
    let report = train_stage(&problem, stage, &mut nets, &colloc, 100.0, &trainer).unwrap();
    println!(
        "state stage: loss {:.3e} after {} iterations ({:?})",
        report.final_loss, report.iterations, report.status
    );
    assert!(report.final_loss < 1e-3, "loss {}", report.final_loss);

    // Relative L2 error against the manufactured solution on a fresh probe.
    let probe = shapeopt_core::geometry::sample_interior(&domain, 1000, 555).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for p in &probe {
        let exact = (1.0 - p.position.norm_squared()) / 4.0;
        let got = nets[0].forward(p.position)[0];
        num += (got - exact) * (got - exact);
        den += exact * exact;
    }
    let rel = (num / den).sqrt();
    println!("relative L2 error {rel:.3e}");
    assert!(rel <= 1e-3, "relative L2 error {rel}");

    // Warm start: re-training on the same data converges almost immediately.
    let first_iters = report.iterations;
    let report2 = train_stage(&problem, stage, &mut nets, &colloc, 100.0, &trainer).unwrap();
    println!("warm restart: {} iterations", report2.iterations);
    assert!(
        report2.iterations <= first_iters / 10,
        "warm restart took {} of {} iterations",
        report2.iterations,
        first_iters
    );

    // Training left the loss consistent with a fresh assembly.
    let assembled = assemble_loss(&problem, stage, &nets, &colloc, 100.0).unwrap();
    assert!((assembled - report2.final_loss).abs() <= 1e-12);
}

#[test]
fn poisson_adjoint_is_same_pde() {
    // The adjoint stage solves −Δp = 1 with p = 0, the same manufactured
    // problem; a trained adjoint must match (1 − r²)/4 too.
    let opts = ProblemOptions {
        source_constant: Some(1.0),
        ..Default::default()
    };
    let problem = make_problem("poisson_model", &opts).unwrap();
    let domain = disk_domain(300);
    let colloc = CollocationSet::build(&domain, 800, 23).unwrap();
    let mut nets: Vec<FieldNetwork> = (0..problem.fields.len())
        .map(|i| FieldNetwork::init(problem.default_arch(i), 7 + i as u64))
        .collect();
    let stage = problem.stage(StageKind::Adjoint).unwrap();
    let report = train_stage(
        &problem,
        stage,
        &mut nets,
        &colloc,
        100.0,
        &TrainerOptions::default(),
    )
    .unwrap();
    assert!(report.final_loss < 1e-3, "loss {}", report.final_loss);
    let got = nets[1].forward(Vec2::new(0.0, 0.0))[0];
    assert!((got - 0.25).abs() < 5e-3, "p(0,0) = {got}");
}
