//! The outer optimization loop: state solve, adjoint solve, descent
//! regularization, boundary update with area restoration, resampling, and
//! step-size decay.

pub mod config;
pub mod runlog;

pub use config::{RunConfig, StageConfig};
pub use runlog::{
    BoundarySnapshot, IterationRecord, RetryCertificate, RunLog, RunSummary,
};

use crate::geometry::{
    area, correct_area, shoelace_normals, update_boundary, volume_project, zero_displacements,
    CollocationSet, Displacements, Domain2D,
};
use crate::net::FieldNetwork;
use crate::problems::{ProblemDefinition, StageKind};
use crate::solver::{objective_estimate, shape_gradient_samples, train_stage};
use crate::{GeometryError, TrainError};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Five halvings of the step still self-intersected at this iteration.
    GeometryAbort { iteration: usize },
}

pub struct RunArtifacts {
    pub log: RunLog,
    pub status: RunStatus,
    pub final_domain: Domain2D,
    /// One network per problem field, in field order.
    pub nets: Vec<FieldNetwork>,
    pub final_colloc: Option<CollocationSet>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-iteration sampling seed derived from the run seed.
pub fn derive_seed(run_seed: u64, k: usize) -> u64 {
    splitmix64(run_seed ^ splitmix64(k as u64 + 1))
}

/// Decayed step length `α0 · γ^k`.
pub fn step_schedule(alpha0: f64, gamma: f64, k: usize) -> f64 {
    alpha0 * gamma.powi(k as i32)
}

/// Forward-evaluate the descent network at every movable boundary point.
pub fn evaluate_descent(
    phi_net: &FieldNetwork,
    domain: &Domain2D,
) -> Result<Displacements, TrainError> {
    let mut disp = zero_displacements(domain);
    for (l, lp) in domain.loops.iter().enumerate() {
        for (i, pt) in lp.points.iter().enumerate() {
            if pt.movable {
                let v = phi_net.forward(pt.position);
                if !v[0].is_finite() || !v[1].is_finite() {
                    return Err(TrainError::NonFiniteDescent {
                        x: pt.position.x,
                        y: pt.position.y,
                    });
                }
                disp[l][i] = crate::geometry::Vec2::new(v[0], v[1]);
            }
        }
    }
    Ok(disp)
}

/// Unregularized descent datum `−g·n` at every movable point (ablation
/// path).
pub fn raw_descent(
    problem: &ProblemDefinition,
    nets: &[FieldNetwork],
    colloc: &CollocationSet,
    domain: &Domain2D,
) -> Displacements {
    let mut disp = zero_displacements(domain);
    for (idx, g) in shape_gradient_samples(problem, nets, colloc) {
        let s = &colloc.boundary[idx];
        if s.movable {
            disp[s.loop_id][s.point_id] = -s.normal * g;
        }
    }
    disp
}

/// Remove the weighted mean normal component of the displacement field over
/// all movable points, so the enclosed area is preserved to first order.
/// Uses the shoelace normals/weights, for which the discrete statement is
/// exact.
pub fn project_volume(
    domain: &Domain2D,
    disp: &mut Displacements,
) -> Result<(), GeometryError> {
    let mut phi_n = Vec::new();
    let mut weights = Vec::new();
    let mut handles = Vec::new();
    for (l, lp) in domain.loops.iter().enumerate() {
        if !lp.points.iter().any(|p| p.movable) {
            continue;
        }
        let sn = shoelace_normals(lp)?;
        for (i, pt) in lp.points.iter().enumerate() {
            if pt.movable {
                let (n, w) = sn[i];
                phi_n.push(disp[l][i].dot(&n));
                weights.push(w);
                handles.push((l, i, n));
            }
        }
    }
    if handles.is_empty() {
        return Ok(());
    }
    let projected = volume_project(&phi_n, &weights)?;
    for ((l, i, n), (proj, raw)) in handles.into_iter().zip(projected.iter().zip(&phi_n)) {
        disp[l][i] += n * (proj - raw);
    }
    Ok(())
}

/// Execute the full outer loop per the run configuration.
pub fn run_optimization(
    cfg: &RunConfig,
    problem: &ProblemDefinition,
) -> Result<RunArtifacts, DriverError> {
    let mut domain = problem.initial_domain(cfg.m_boundary)?;
    let v0 = area(&domain);
    let mut nets = init_networks(cfg, problem);
    let mut log = RunLog {
        provenance: serde_json::json!({
            "constants": problem.constants_json(),
            "config": serde_json::to_value(cfg).unwrap(),
            "target_volume": v0,
            "version": crate::VERSION,
        }),
        ..Default::default()
    };
    log.snapshots.push(BoundarySnapshot { iteration: 0, domain: domain.clone() });
    let mut alpha: Option<f64> = cfg.alpha0;
    let mut call_id = 0usize;
    let mut status = RunStatus::Completed;

    for k in 0..cfg.iterations {
        let colloc = CollocationSet::build(&domain, cfg.n_interior, derive_seed(cfg.seed, k))?;
        let mut stage_losses = BTreeMap::new();
        let mut stage_iterations = BTreeMap::new();
        let mut trained_ok = true;
        for stage in &problem.stages {
            if stage.kind == StageKind::Regularization && !cfg.regularization {
                continue;
            }
            let sc = cfg.stage_config(stage.kind);
            let saved: Vec<(usize, Vec<f64>)> = stage
                .active
                .iter()
                .map(|&fid| (fid, nets[fid].params.clone()))
                .collect();
            match train_stage(problem, stage, &mut nets, &colloc, sc.lambda, &sc.trainer_for(k)) {
                Ok(report) => {
                    stage_losses.insert(stage.kind.as_str().to_string(), report.final_loss);
                    stage_iterations
                        .insert(stage.kind.as_str().to_string(), report.iterations);
                    if cfg.trace {
                        log.solver_trace.push((
                            call_id,
                            stage.kind.as_str().to_string(),
                            report.trace,
                        ));
                    }
                    call_id += 1;
                }
                Err(TrainError::Divergence { .. }) => {
                    for (fid, params) in saved {
                        nets[fid].params = params;
                    }
                    if let Some(a) = alpha.as_mut() {
                        *a *= 0.5;
                    }
                    trained_ok = false;
                    break;
                }
                Err(other) => return Err(other.into()),
            }
        }
        let objective = objective_estimate(problem, &nets, &colloc);
        let volume = area(&domain);

        let mut disp = if !trained_ok {
            zero_displacements(&domain)
        } else if cfg.regularization {
            evaluate_descent(&nets[problem.descent_field], &domain)?
        } else {
            raw_descent(problem, &nets, &colloc, &domain)
        };

        if alpha.is_none() {
            // Scale the first step so the largest displacement is 2% of the
            // bounding-box diagonal.
            let (lo, hi) = domain.bounding_box();
            let diag = (hi - lo).norm();
            let maxd = disp
                .iter()
                .flatten()
                .map(|d| d.norm())
                .fold(0.0f64, f64::max);
            alpha = Some(if maxd > 0.0 { 0.02 * diag / maxd } else { 0.0 });
        }
        let mut alpha_k = alpha.unwrap_or(0.0);

        if problem.volume_constrained && trained_ok {
            project_volume(&domain, &mut disp)?;
        }

        let mut retries = 0usize;
        let mut certificates = Vec::new();
        let mut aborted = false;
        if trained_ok && alpha_k > 0.0 && domain.movable_count() > 0 {
            loop {
                let attempt = update_boundary(&domain, &disp, alpha_k).and_then(|d| {
                    if problem.volume_constrained {
                        correct_area(&d, v0)
                    } else {
                        Ok(d)
                    }
                });
                match attempt {
                    Ok(new_domain) => {
                        domain = new_domain;
                        break;
                    }
                    Err(GeometryError::SelfIntersection { loop_id, seg_a, seg_b }) => {
                        certificates.push(RetryCertificate {
                            alpha: alpha_k,
                            loop_id,
                            seg_a,
                            seg_b,
                        });
                        retries += 1;
                        alpha_k *= 0.5;
                        if retries > 5 {
                            aborted = true;
                            break;
                        }
                    }
                    Err(other) => return Err(other.into()),
                }
            }
        }

        log.records.push(IterationRecord {
            k,
            objective,
            volume,
            alpha: alpha_k,
            retries,
            stage_losses,
            stage_iterations,
            retry_certificates: certificates,
        });
        if aborted {
            status = RunStatus::GeometryAbort { iteration: k };
            break;
        }
        log.snapshots.push(BoundarySnapshot { iteration: k + 1, domain: domain.clone() });
        alpha = Some(cfg.gamma * alpha_k);
    }

    let mut final_colloc = None;
    if status == RunStatus::Completed {
        // Final state solve on the optimized domain to log J(Ω_K).
        let colloc =
            CollocationSet::build(&domain, cfg.n_interior, derive_seed(cfg.seed, cfg.iterations))?;
        let mut stage_losses = BTreeMap::new();
        let mut stage_iterations = BTreeMap::new();
        if let Some(stage) = problem.stage(StageKind::State) {
            let sc = cfg.stage_config(StageKind::State);
            let report = train_stage(
                problem,
                stage,
                &mut nets,
                &colloc,
                sc.lambda,
                &sc.trainer_for(cfg.iterations),
            )?;
            stage_losses.insert(stage.kind.as_str().to_string(), report.final_loss);
            stage_iterations.insert(stage.kind.as_str().to_string(), report.iterations);
            if cfg.trace {
                log.solver_trace
                    .push((call_id, stage.kind.as_str().to_string(), report.trace));
            }
        }
        let objective = objective_estimate(problem, &nets, &colloc);
        log.records.push(IterationRecord {
            k: cfg.iterations,
            objective,
            volume: area(&domain),
            alpha: 0.0,
            retries: 0,
            stage_losses,
            stage_iterations,
            retry_certificates: Vec::new(),
        });
        final_colloc = Some(colloc);
    }

    Ok(RunArtifacts { log, status, final_domain: domain, nets, final_colloc })
}

fn init_networks(cfg: &RunConfig, problem: &ProblemDefinition) -> Vec<FieldNetwork> {
    let mut nets = Vec::with_capacity(problem.fields.len());
    for fid in 0..problem.fields.len() {
        let mut arch = problem.default_arch(fid);
        // Config shape overrides: the first trained field of a stage takes
        // (blocks, width), the second takes (aux_blocks, aux_width).
        for stage in &problem.stages {
            if let Some(pos) = stage.active.iter().position(|&f| f == fid) {
                let sc = cfg.stage_config(stage.kind);
                let (blocks, width) = if pos == 0 {
                    (sc.blocks, sc.width)
                } else {
                    (sc.aux_blocks, sc.aux_width)
                };
                if let Some(b) = blocks {
                    arch.num_blocks = b;
                }
                if let Some(w) = width {
                    arch.hidden_width = w;
                }
            }
        }
        nets.push(FieldNetwork::init(arch, cfg.init_seed.wrapping_add(fid as u64)));
    }
    nets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_schedule_values() {
        assert_eq!(step_schedule(0.1, 0.95, 0), 0.1);
        assert!((step_schedule(0.1, 0.5, 3) - 0.0125).abs() < 1e-15);
        // Displacement budget is bounded by the geometric series.
        let total: f64 = (0..1000).map(|k| step_schedule(0.1, 0.9, k)).sum();
        assert!(total <= 0.1 / (1.0 - 0.9) + 1e-9);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..50).map(|k| derive_seed(1, k)).collect();
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
