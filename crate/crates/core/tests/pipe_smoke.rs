//! Quarter-count Stokes pipe smoke run: volume preservation at every
//! iteration and a decreasing dissipation trend.

use shapeopt_core::driver::{run_optimization, RunConfig, RunStatus};

const PIPE_SMOKE: &str = r#"
[problem]
name = "stokes_pipe"

[sampling]
interior = 1500
boundary = 362

[loop]
K = 6

[output]
dir = "target/test-runs/pipe-smoke"
"#;

#[test]
fn pipe_smoke_preserves_volume_and_reduces_dissipation() {
    let (cfg, problem) = RunConfig::from_str_with_overrides(PIPE_SMOKE, &[]).unwrap();
    let art = run_optimization(&cfg, &problem).unwrap();
    assert_eq!(art.status, RunStatus::Completed);
    let v0 = art.log.records[0].volume;
    for rec in &art.log.records {
        println!(
            "k={} J={:.5} vol={:.6} alpha={:.4} retries={} state_loss={:?} state_iters={:?}",
            rec.k,
            rec.objective,
            rec.volume,
            rec.alpha,
            rec.retries,
            rec.stage_losses.get("state"),
            rec.stage_iterations.get("state"),
        );
        assert!(
            (rec.volume - v0).abs() / v0 <= 1e-6,
            "volume drift {} at k={}",
            (rec.volume - v0).abs() / v0,
            rec.k
        );
    }
    let first = art.log.records.first().unwrap().objective;
    let last = art.log.records.last().unwrap().objective;
    println!("J: {first:.5} -> {last:.5} ({:+.2}%)", (last - first) / first * 100.0);
    assert!(last < first, "objective should decrease: {first} -> {last}");
}
