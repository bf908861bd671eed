//! End-to-end toy run: the unit circle flows to the ellipse with semi-axes
//! (1, 2/3) under the regularized descent field.

use shapeopt_core::driver::{run_optimization, RunConfig, RunStatus};
use shapeopt_core::oracle::hausdorff_to_ellipse;

const TOY: &str = r#"
[problem]
name = "toy_levelset"

[output]
dir = "target/test-runs/toy"
"#;

#[test]
fn toy_circle_flows_to_ellipse() {
    let (cfg, problem) = RunConfig::from_str_with_overrides(TOY, &[]).unwrap();
    let art = run_optimization(&cfg, &problem).unwrap();
    assert_eq!(art.status, RunStatus::Completed);
    for rec in &art.log.records {
        println!(
            "k={} J={:+.4} vol={:.4} alpha={:.3} reg_loss={:?}",
            rec.k,
            rec.objective,
            rec.volume,
            rec.alpha,
            rec.stage_losses.get("regularization")
        );
    }
    let h = hausdorff_to_ellipse(&art.final_domain.loops[0], 1.0, 2.0 / 3.0);
    println!("hausdorff to optimal ellipse: {h:.4}");
    assert!(h <= 0.05, "hausdorff {h}");
}
