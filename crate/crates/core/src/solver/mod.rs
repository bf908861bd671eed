//! Collocation loss assembly and stage training.
//!
//! A stage loss is `√((1/N)·Σ‖r_I‖² + (λ/M)·Σ‖r_B‖²)` over the interior and
//! boundary collocation points. Points are reduced in a canonical order
//! (sorted by position), in fixed-size chunks, so the result is bit-identical
//! under any thread count and any input permutation. Fields that are frozen
//! in a stage are evaluated once per collocation set and cached as plain
//! jets; only the trained fields are re-evaluated inside the optimizer loop.

pub mod bfgs;

pub use bfgs::{bfgs_minimize, BfgsResult, SolveStatus, TraceRecord, TrainerOptions};

use crate::batch;
use crate::fields::{adjoint_from_seeds, JetView, KernelCtx, SEEDS_PER_COMP};
use crate::geometry::CollocationSet;
use crate::jet::Jet;
use crate::net::{FieldNetwork, JetWorkspace};
use crate::problems::{ProblemDefinition, ResidualKernel, StageDef};
use crate::scalar::{Dual, MAX_SEEDS};
use crate::TrainError;
use arrayvec::ArrayVec;

/// The loss combination rule: root of the weighted mean squared residuals.
pub fn combine_loss(
    sum_q_interior: f64,
    n: usize,
    sum_q_boundary: f64,
    m: usize,
    lambda: f64,
) -> f64 {
    (sum_q_interior / n as f64 + lambda * sum_q_boundary / m as f64).sqrt()
}

#[derive(Clone, Debug)]
struct EvalPoint {
    ctx: KernelCtx,
    /// Jets of every layout component; entries of trained fields are
    /// refreshed from the networks at evaluation time.
    jets: Vec<Jet>,
}

#[derive(Clone, Debug)]
struct ActiveSlot {
    /// First component offset inside the kernel layout.
    comp_offset: usize,
    components: usize,
    param_offset: usize,
    param_len: usize,
}

/// Prepared per-(stage, collocation set) evaluation data.
pub struct StageEval<'p> {
    stage: &'p StageDef,
    pub lambda: f64,
    interior: Vec<EvalPoint>,
    boundary: Vec<EvalPoint>,
    active: Vec<ActiveSlot>,
    archs: Vec<crate::net::Architecture>,
    n_params: usize,
    layout_comps: usize,
    /// Component index → seed base for trained components, `None` if frozen.
    seed_base: Vec<Option<usize>>,
}

fn canonical_interior(colloc: &CollocationSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..colloc.interior.len()).collect();
    idx.sort_by(|&a, &b| {
        let pa = colloc.interior[a].position;
        let pb = colloc.interior[b].position;
        pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y))
    });
    idx
}

fn canonical_boundary(colloc: &CollocationSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..colloc.boundary.len()).collect();
    idx.sort_by(|&a, &b| {
        let sa = &colloc.boundary[a];
        let sb = &colloc.boundary[b];
        sa.position
            .x
            .total_cmp(&sb.position.x)
            .then(sa.position.y.total_cmp(&sb.position.y))
            .then(sa.marker.cmp(&sb.marker))
    });
    idx
}

impl<'p> StageEval<'p> {
    /// Precompute contexts and frozen-field jets for one stage on one
    /// collocation set. `nets` holds one network per problem field.
    pub fn build(
        problem: &'p ProblemDefinition,
        stage: &'p StageDef,
        nets: &[FieldNetwork],
        colloc: &CollocationSet,
        lambda: f64,
    ) -> Self {
        let mut comp_offsets = Vec::with_capacity(stage.fields.len());
        let mut layout_comps = 0;
        for &fid in &stage.fields {
            comp_offsets.push(layout_comps);
            layout_comps += problem.fields[fid].components;
        }
        let mut active = Vec::new();
        let mut archs = Vec::new();
        let mut seed_base = vec![None; layout_comps];
        let mut param_offset = 0;
        let mut seed = 0;
        for (pos, &fid) in stage.fields.iter().enumerate() {
            if stage.active.contains(&fid) {
                let comps = problem.fields[fid].components;
                for c in 0..comps {
                    seed_base[comp_offsets[pos] + c] = Some(seed);
                    seed += SEEDS_PER_COMP;
                }
                let plen = nets[fid].arch.param_count();
                active.push(ActiveSlot {
                    comp_offset: comp_offsets[pos],
                    components: comps,
                    param_offset,
                    param_len: plen,
                });
                archs.push(nets[fid].arch);
                param_offset += plen;
            }
        }
        assert!(seed <= MAX_SEEDS, "too many trained components in one stage");

        let frozen: Vec<(usize, usize)> = stage
            .fields
            .iter()
            .enumerate()
            .filter(|(_, fid)| !stage.active.contains(fid))
            .map(|(pos, &fid)| (pos, fid))
            .collect();
        let make_point = |ctx: KernelCtx| -> EvalPoint {
            let mut jets = vec![Jet::default(); layout_comps];
            for &(pos, fid) in &frozen {
                let vals = nets[fid].eval_jets(ctx.position);
                for (c, j) in vals.into_iter().enumerate() {
                    jets[comp_offsets[pos] + c] = j;
                }
            }
            EvalPoint { ctx, jets }
        };
        let interior: Vec<EvalPoint> = canonical_interior(colloc)
            .into_iter()
            .map(|i| make_point(KernelCtx::interior(colloc.interior[i].position)))
            .collect();
        let boundary: Vec<EvalPoint> = canonical_boundary(colloc)
            .into_iter()
            .map(|i| {
                let s = &colloc.boundary[i];
                make_point(KernelCtx::boundary(s.position, s.normal, s.marker))
            })
            .collect();
        StageEval {
            stage,
            lambda,
            interior,
            boundary,
            active,
            archs,
            n_params: param_offset,
            layout_comps,
            seed_base,
        }
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    /// Networks of the trained fields, in stage-active order, rebuilt from a
    /// flat parameter vector.
    pub fn split_params(&self, x: &[f64]) -> Vec<FieldNetwork> {
        self.active
            .iter()
            .zip(&self.archs)
            .map(|(slot, arch)| FieldNetwork {
                arch: *arch,
                params: x[slot.param_offset..slot.param_offset + slot.param_len].to_vec(),
            })
            .collect()
    }

    /// Loss only (no parameter gradient).
    pub fn loss(&self, active_nets: &[FieldNetwork]) -> Result<f64, TrainError> {
        let qi = self.sum_squares(&self.interior, active_nets)?;
        let qb = self.sum_squares(&self.boundary, active_nets)?;
        Ok(combine_loss(
            qi,
            self.interior.len(),
            qb,
            self.boundary.len(),
            self.lambda,
        ))
    }

    fn sum_squares(
        &self,
        points: &[EvalPoint],
        active_nets: &[FieldNetwork],
    ) -> Result<f64, TrainError> {
        let chunks = batch::map_chunks(points, |_, chunk| {
            let mut wss: Vec<JetWorkspace> =
                self.archs.iter().map(JetWorkspace::new).collect();
            let mut views: Vec<JetView<f64>> = Vec::with_capacity(self.layout_comps);
            let mut out: ArrayVec<f64, 4> = ArrayVec::new();
            let mut q = 0.0;
            let mut bad: Option<(f64, f64)> = None;
            for p in chunk {
                for (k, net) in active_nets.iter().enumerate() {
                    net.eval_jets_ws(p.ctx.position, &mut wss[k]);
                }
                views.clear();
                for ci in 0..self.layout_comps {
                    views.push(JetView::from_jet(&self.layout_jet(ci, p, &wss)));
                }
                self.stage_kernel(p).eval(&p.ctx, &views, &mut out);
                for r in out.iter() {
                    if !r.is_finite() && bad.is_none() {
                        bad = Some((p.ctx.position.x, p.ctx.position.y));
                    }
                    q += r * r;
                }
            }
            (q, bad)
        });
        let mut total = 0.0;
        for (q, bad) in chunks {
            if let Some((x, y)) = bad {
                return Err(TrainError::Divergence {
                    stage: self.stage.kind.as_str().into(),
                    x,
                    y,
                });
            }
            total += q;
        }
        Ok(total)
    }

    #[inline]
    fn layout_jet(&self, ci: usize, p: &EvalPoint, wss: &[JetWorkspace]) -> Jet {
        match self.seed_base[ci] {
            None => p.jets[ci],
            Some(_) => {
                for (k, slot) in self.active.iter().enumerate() {
                    if ci >= slot.comp_offset && ci < slot.comp_offset + slot.components {
                        return wss[k].out[ci - slot.comp_offset];
                    }
                }
                unreachable!("seeded component outside every active slot")
            }
        }
    }

    fn stage_kernel(&self, p: &EvalPoint) -> &ResidualKernel {
        if p.ctx.marker.is_some() {
            &self.stage.boundary
        } else {
            &self.stage.interior
        }
    }

    /// Loss and its gradient with respect to the concatenated parameters of
    /// the trained fields.
    pub fn loss_and_grad(
        &self,
        active_nets: &[FieldNetwork],
    ) -> Result<(f64, Vec<f64>), TrainError> {
        let (qi, gi) = self.sum_squares_grad(&self.interior, active_nets)?;
        let (qb, gb) = self.sum_squares_grad(&self.boundary, active_nets)?;
        let n = self.interior.len() as f64;
        let m = self.boundary.len() as f64;
        let loss = combine_loss(qi, self.interior.len(), qb, self.boundary.len(), self.lambda);
        let mut grad = vec![0.0; self.n_params];
        if loss > 0.0 {
            let scale = 0.5 / loss;
            for (g, (a, b)) in grad.iter_mut().zip(gi.iter().zip(&gb)) {
                *g = scale * (a / n + self.lambda * b / m);
            }
        }
        Ok((loss, grad))
    }

    fn sum_squares_grad(
        &self,
        points: &[EvalPoint],
        active_nets: &[FieldNetwork],
    ) -> Result<(f64, Vec<f64>), TrainError> {
        let chunks = batch::map_chunks(points, |_, chunk| {
            let mut wss: Vec<JetWorkspace> =
                self.archs.iter().map(JetWorkspace::new).collect();
            let mut grad = vec![0.0; self.n_params];
            let mut views: Vec<JetView<Dual>> = Vec::with_capacity(self.layout_comps);
            let mut out: ArrayVec<Dual, 4> = ArrayVec::new();
            let mut adj: ArrayVec<Jet, 2> = ArrayVec::new();
            let mut q = 0.0;
            let mut bad: Option<(f64, f64)> = None;
            for p in chunk {
                for (k, net) in active_nets.iter().enumerate() {
                    net.eval_jets_ws(p.ctx.position, &mut wss[k]);
                }
                views.clear();
                for ci in 0..self.layout_comps {
                    let jet = self.layout_jet(ci, p, &wss);
                    match self.seed_base[ci] {
                        Some(base) => views.push(JetView::seeded(&jet, base)),
                        None => views.push(JetView::from_constants(&jet)),
                    }
                }
                self.stage_kernel(p).eval(&p.ctx, &views, &mut out);
                let mut dq = [0.0f64; MAX_SEEDS];
                for r in out.iter() {
                    if !r.v.is_finite() && bad.is_none() {
                        bad = Some((p.ctx.position.x, p.ctx.position.y));
                    }
                    q += r.v * r.v;
                    for (slot, dr) in dq.iter_mut().zip(r.d.iter()) {
                        *slot += 2.0 * r.v * dr;
                    }
                }
                for (k, slot) in self.active.iter().enumerate() {
                    adj.clear();
                    for c in 0..slot.components {
                        let base = self.seed_base[slot.comp_offset + c]
                            .expect("active component must be seeded");
                        adj.push(adjoint_from_seeds(&dq, base));
                    }
                    active_nets[k].backward(
                        &mut wss[k],
                        &adj,
                        &mut grad[slot.param_offset..slot.param_offset + slot.param_len],
                    );
                }
            }
            (q, grad, bad)
        });
        let mut total_q = 0.0;
        let mut total_g = vec![0.0; self.n_params];
        for (q, g, bad) in chunks {
            if let Some((x, y)) = bad {
                return Err(TrainError::Divergence {
                    stage: self.stage.kind.as_str().into(),
                    x,
                    y,
                });
            }
            total_q += q;
            for (t, gi) in total_g.iter_mut().zip(&g) {
                *t += gi;
            }
        }
        Ok((total_q, total_g))
    }
}

/// Result of one stage solve.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub final_loss: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub trace: Vec<TraceRecord>,
}

/// Assemble the stage loss for the networks as they stand.
pub fn assemble_loss(
    problem: &ProblemDefinition,
    stage: &StageDef,
    nets: &[FieldNetwork],
    colloc: &CollocationSet,
    lambda: f64,
) -> Result<f64, TrainError> {
    let eval = StageEval::build(problem, stage, nets, colloc, lambda);
    let active: Vec<FieldNetwork> = stage.active.iter().map(|&fid| nets[fid].clone()).collect();
    eval.loss(&active)
}

/// Train the stage's fields in place, warm-starting from their current
/// parameters. Frozen fields are read once and never touched.
pub fn train_stage(
    problem: &ProblemDefinition,
    stage: &StageDef,
    nets: &mut [FieldNetwork],
    colloc: &CollocationSet,
    lambda: f64,
    opts: &TrainerOptions,
) -> Result<StageReport, TrainError> {
    let eval = StageEval::build(problem, stage, nets, colloc, lambda);
    let mut x0 = Vec::with_capacity(eval.param_count());
    for &fid in &stage.active {
        x0.extend_from_slice(&nets[fid].params);
    }
    let closure = |x: &[f64]| -> Result<(f64, Vec<f64>), TrainError> {
        let active = eval.split_params(x);
        eval.loss_and_grad(&active)
    };
    let res = bfgs_minimize(closure, x0, opts)?;
    let mut off = 0;
    for &fid in &stage.active {
        let len = nets[fid].params.len();
        nets[fid].params.copy_from_slice(&res.x[off..off + len]);
        off += len;
    }
    Ok(StageReport {
        final_loss: res.f,
        iterations: res.iterations,
        status: res.status,
        trace: res.trace,
    })
}

/// Monte-Carlo objective estimate: `Σ w_i · integrand(x_i)` over the
/// interior collocation points, reduced in canonical order.
pub fn objective_estimate(
    problem: &ProblemDefinition,
    nets: &[FieldNetwork],
    colloc: &CollocationSet,
) -> f64 {
    let order = canonical_interior(colloc);
    let pts: Vec<(KernelCtx, f64)> = order
        .into_iter()
        .map(|i| {
            let s = &colloc.interior[i];
            (KernelCtx::interior(s.position), s.weight)
        })
        .collect();
    let chunks = batch::map_chunks(&pts, |_, chunk| {
        let mut acc = 0.0;
        let mut views: Vec<JetView<f64>> = Vec::new();
        for (ctx, w) in chunk {
            views.clear();
            for &fid in &problem.objective_fields {
                for jet in nets[fid].eval_jets(ctx.position) {
                    views.push(JetView::from_jet(&jet));
                }
            }
            acc += w * problem.objective.eval(ctx, &views);
        }
        acc
    });
    chunks.into_iter().sum()
}

/// Shape-gradient kernel values at the free-boundary collocation points:
/// `(index into colloc.boundary, g)`.
pub fn shape_gradient_samples(
    problem: &ProblemDefinition,
    nets: &[FieldNetwork],
    colloc: &CollocationSet,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut views: Vec<JetView<f64>> = Vec::new();
    for (i, s) in colloc.boundary.iter().enumerate() {
        if s.marker != crate::geometry::Marker::Free {
            continue;
        }
        let ctx = KernelCtx::boundary(s.position, s.normal, s.marker);
        views.clear();
        for &fid in &problem.shape_gradient_fields {
            for jet in nets[fid].eval_jets(ctx.position) {
                views.push(JetView::from_jet(&jet));
            }
        }
        out.push((i, problem.shape_gradient.eval(&ctx, &views)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryLoop, BoundaryPoint, Domain2D, Marker, Orientation};
    use crate::net::Architecture;
    use crate::problems::{make_problem, ProblemOptions, StageKind};

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
    fn combine_loss_examples() {
        assert_eq!(combine_loss(0.0, 10, 0.0, 5, 100.0), 0.0);
        // Single interior residual of 3, no boundary contribution.
        assert_eq!(combine_loss(9.0, 1, 0.0, 1, 0.5), 3.0);
        // N=2 residuals {1,1}, M=1 residual {2}, λ=0.5 → √3.
        let l = combine_loss(2.0, 2, 4.0, 1, 0.5);
        assert!((l - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn loss_is_permutation_invariant_bitwise() {
        let problem = make_problem("toy_levelset", &ProblemOptions::default()).unwrap();
        let domain = disk_domain(64);
        let colloc = CollocationSet::build(&domain, 200, 11).unwrap();
        let mut shuffled = colloc.clone();
        shuffled.interior.reverse();
        shuffled.boundary.rotate_left(17);
        let nets = vec![FieldNetwork::init(problem.default_arch(0), 3)];
        let stage = &problem.stages[0];
        let a = assemble_loss(&problem, stage, &nets, &colloc, 100.0).unwrap();
        let b = assemble_loss(&problem, stage, &nets, &shuffled, 100.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn stage_gradient_matches_finite_differences() {
        let problem = make_problem("toy_levelset", &ProblemOptions::default()).unwrap();
        let domain = disk_domain(48);
        let colloc = CollocationSet::build(&domain, 120, 5).unwrap();
        let stage = &problem.stages[0];
        let nets = vec![FieldNetwork::init(Architecture::new(2, 6, 1), 21)];
        let eval = StageEval::build(&problem, stage, &nets, &colloc, 75.0);
        let x0 = nets[0].params.clone();
        let active = eval.split_params(&x0);
        let (f0, grad) = eval.loss_and_grad(&active).unwrap();
        assert!(f0 > 0.0);
        let h = 1e-6;
        let mut state = 0x243F6A8885A308D3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let dir: Vec<f64> = (0..x0.len()).map(|_| next()).collect();
            let nrm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            let xp: Vec<f64> = x0.iter().zip(&dir).map(|(x, d)| x + h * d / nrm).collect();
            let xm: Vec<f64> = x0.iter().zip(&dir).map(|(x, d)| x - h * d / nrm).collect();
            let fp = eval.loss(&eval.split_params(&xp)).unwrap();
            let fm = eval.loss(&eval.split_params(&xm)).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d / nrm).sum();
            assert!(
                (fd - an).abs() / fd.abs().max(1e-12) <= 1e-5,
                "fd {fd} vs analytic {an}"
            );
        }
    }

    /// Gradients flow only through trained fields: in a stage whose interior
    /// kernel never reads the frozen fields, translating the frozen nets
    /// leaves the trained field's interior gradient bit-identical.
    #[test]
    fn frozen_fields_are_data() {
        let problem = make_problem("poisson_model", &ProblemOptions::default()).unwrap();
        let domain = disk_domain(48);
        let colloc = CollocationSet::build(&domain, 120, 5).unwrap();
        let stage = problem.stage(StageKind::Regularization).unwrap();
        let mut nets: Vec<FieldNetwork> = (0..3)
            .map(|i| FieldNetwork::init(problem.default_arch(i), 40 + i as u64))
            .collect();
        let phi_params = nets[2].params.clone();
        // λ = 0 silences the boundary term, whose residual value legitimately
        // depends on the frozen data.
        let eval_a = StageEval::build(&problem, stage, &nets, &colloc, 0.0);
        let (_, ga) = eval_a
            .loss_and_grad(&eval_a.split_params(&phi_params))
            .unwrap();
        assert_eq!(ga.len(), nets[2].params.len());
        for p in nets[0].params.iter_mut() {
            *p += 1.23;
        }
        for p in nets[1].params.iter_mut() {
            *p -= 0.45;
        }
        let eval_b = StageEval::build(&problem, stage, &nets, &colloc, 0.0);
        let (_, gb) = eval_b
            .loss_and_grad(&eval_b.split_params(&phi_params))
            .unwrap();
        for (a, b) in ga.iter().zip(&gb) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn objective_estimate_of_unit_integrand_is_area() {
        // State-value objective with a constant-one network integrates to
        // the domain area exactly (weights sum to the area).
        let problem = make_problem("poisson_model", &ProblemOptions::default()).unwrap();
        let domain = disk_domain(128);
        let colloc = CollocationSet::build(&domain, 3000, 9).unwrap();
        let mut nets: Vec<FieldNetwork> = (0..3)
            .map(|i| FieldNetwork::zeros(problem.default_arch(i)))
            .collect();
        let n = nets[0].params.len();
        nets[0].params[n - 1] = 1.0;
        let j = objective_estimate(&problem, &nets, &colloc);
        let a = crate::geometry::area(&domain);
        assert!((j - a).abs() <= 1e-12 * a);
    }
}
