//! Residual field networks with sinusoid activation, and exact derivatives.
//!
//! A network maps spatial coordinates to field components:
//! input dense → sin → `num_blocks` × (dense → sin → dense → sin → skip add)
//! → linear output. Evaluation propagates second-order jets, so values,
//! jacobians, and laplacians come out of one pass with no internal finite
//! differences. Parameter gradients of jet-built losses use a hand-derived
//! reverse pass through the same trace.

use crate::fields::{adjoint_from_seeds, JetView, SEEDS_PER_COMP};
use crate::geometry::Vec2;
use crate::jet::Jet;
use crate::scalar::{Dual, Scalar, MAX_SEEDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_width: usize,
    pub num_blocks: usize,
}

impl Architecture {
    pub fn new(output_dim: usize, hidden_width: usize, num_blocks: usize) -> Self {
        Architecture { input_dim: 2, output_dim, hidden_width, num_blocks }
    }

    /// Input layer + two dense layers per block + linear output layer.
    pub fn param_count(&self) -> usize {
        let w = self.hidden_width;
        self.input_dim * w + w
            + self.num_blocks * 2 * (w * w + w)
            + w * self.output_dim
            + self.output_dim
    }

    #[inline]
    fn block_base(&self, i: usize) -> usize {
        let w = self.hidden_width;
        self.input_dim * w + w + i * 2 * (w * w + w)
    }

    #[inline]
    fn out_base(&self) -> usize {
        self.block_base(self.num_blocks)
    }
}

#[derive(Clone, Debug)]
pub struct FieldNetwork {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

/// Per-point forward trace; reused across points to avoid allocation.
#[derive(Clone, Debug)]
pub struct JetWorkspace {
    x: [Jet; 2],
    z0: Vec<Jet>,
    /// Activations entering block `i`; `acts[num_blocks]` feeds the output.
    acts: Vec<Vec<Jet>>,
    z1: Vec<Vec<Jet>>,
    tmid: Vec<Vec<Jet>>,
    z2: Vec<Vec<Jet>>,
    pub out: Vec<Jet>,
    adj_a: Vec<Jet>,
    adj_z: Vec<Jet>,
    adj_t: Vec<Jet>,
}

impl JetWorkspace {
    pub fn new(arch: &Architecture) -> Self {
        let w = arch.hidden_width;
        let b = arch.num_blocks;
        JetWorkspace {
            x: [Jet::default(); 2],
            z0: vec![Jet::default(); w],
            acts: vec![vec![Jet::default(); w]; b + 1],
            z1: vec![vec![Jet::default(); w]; b],
            tmid: vec![vec![Jet::default(); w]; b],
            z2: vec![vec![Jet::default(); w]; b],
            out: vec![Jet::default(); arch.output_dim],
            adj_a: vec![Jet::default(); w],
            adj_z: vec![Jet::default(); w],
            adj_t: vec![Jet::default(); w],
        }
    }
}

#[inline]
fn jet_dot(a: &Jet, b: &Jet) -> f64 {
    a.v * b.v + a.gx * b.gx + a.gy * b.gy + a.hxx * b.hxx + a.hxy * b.hxy + a.hyy * b.hyy
}

/// Reverse rule for `sin` applied to a jet: adjoint of the layer input given
/// the stored input jet and the adjoint of the output jet.
#[inline]
fn sin_backward(z: &Jet, adj: &Jet) -> Jet {
    let s = z.v.sin();
    let c = z.v.cos();
    Jet {
        v: c * adj.v
            - s * (z.gx * adj.gx + z.gy * adj.gy)
            - (s * z.hxx + c * z.gx * z.gx) * adj.hxx
            - (s * z.hxy + c * z.gx * z.gy) * adj.hxy
            - (s * z.hyy + c * z.gy * z.gy) * adj.hyy,
        gx: c * adj.gx - 2.0 * s * z.gx * adj.hxx - s * z.gy * adj.hxy,
        gy: c * adj.gy - 2.0 * s * z.gy * adj.hyy - s * z.gx * adj.hxy,
        hxx: c * adj.hxx,
        hxy: c * adj.hxy,
        hyy: c * adj.hyy,
    }
}

impl FieldNetwork {
    /// Fan-based uniform weights, zero biases; deterministic per seed.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; arch.param_count()];
        let w = arch.hidden_width;
        let mut fill = |params: &mut [f64], off: usize, rows: usize, cols: usize| {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            for p in params[off..off + rows * cols].iter_mut() {
                *p = (rng.gen::<f64>() * 2.0 - 1.0) * a;
            }
        };
        fill(&mut params, 0, w, arch.input_dim);
        for i in 0..arch.num_blocks {
            let base = arch.block_base(i);
            fill(&mut params, base, w, w);
            fill(&mut params, base + w * w + w, w, w);
        }
        fill(&mut params, arch.out_base(), arch.output_dim, w);
        FieldNetwork { arch, params }
    }

    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.param_count();
        FieldNetwork { arch, params: vec![0.0; n] }
    }

    /// Plain forward evaluation (values only).
    pub fn forward(&self, x: Vec2) -> Vec<f64> {
        let arch = &self.arch;
        let w = arch.hidden_width;
        let p = &self.params;
        let mut a = vec![0.0f64; w];
        let b0 = arch.input_dim * w;
        for j in 0..w {
            let z = p[j * 2] * x.x + p[j * 2 + 1] * x.y + p[b0 + j];
            a[j] = z.sin();
        }
        let mut t = vec![0.0f64; w];
        let mut s = vec![0.0f64; w];
        for i in 0..arch.num_blocks {
            let base = arch.block_base(i);
            let (w1, b1) = (base, base + w * w);
            let (w2, b2) = (base + w * w + w, base + 2 * w * w + w);
            for j in 0..w {
                let mut z = p[b1 + j];
                for k in 0..w {
                    z += p[w1 + j * w + k] * a[k];
                }
                t[j] = z.sin();
            }
            for j in 0..w {
                let mut z = p[b2 + j];
                for k in 0..w {
                    z += p[w2 + j * w + k] * t[k];
                }
                s[j] = z.sin();
            }
            for j in 0..w {
                a[j] += s[j];
            }
        }
        let ob = arch.out_base();
        let bb = ob + arch.output_dim * w;
        (0..arch.output_dim)
            .map(|o| {
                let mut y = p[bb + o];
                for k in 0..w {
                    y += p[ob + o * w + k] * a[k];
                }
                y
            })
            .collect()
    }

    /// Jet forward pass, recording the trace needed by [`Self::backward`].
    pub fn eval_jets_ws<'w>(&self, x: Vec2, ws: &'w mut JetWorkspace) -> &'w [Jet] {
        let arch = &self.arch;
        debug_assert_eq!(ws.out.len(), arch.output_dim);
        let w = arch.hidden_width;
        let p = &self.params;
        ws.x = [Jet::coord_x(x.x), Jet::coord_y(x.y)];
        let b0 = arch.input_dim * w;
        for j in 0..w {
            let z = ws.x[0]
                .scale(p[j * 2])
                .add(&ws.x[1].scale(p[j * 2 + 1]))
                .add(&Jet::constant(p[b0 + j]));
            ws.z0[j] = z;
            ws.acts[0][j] = z.sin();
        }
        for i in 0..arch.num_blocks {
            let base = arch.block_base(i);
            let (w1, b1) = (base, base + w * w);
            let (w2, b2) = (base + w * w + w, base + 2 * w * w + w);
            for j in 0..w {
                let mut z = Jet::constant(p[b1 + j]);
                for k in 0..w {
                    z = z.add(&ws.acts[i][k].scale(p[w1 + j * w + k]));
                }
                ws.z1[i][j] = z;
                ws.tmid[i][j] = z.sin();
            }
            for j in 0..w {
                let mut z = Jet::constant(p[b2 + j]);
                for k in 0..w {
                    z = z.add(&ws.tmid[i][k].scale(p[w2 + j * w + k]));
                }
                ws.z2[i][j] = z;
            }
            for j in 0..w {
                ws.acts[i + 1][j] = ws.acts[i][j].add(&ws.z2[i][j].sin());
            }
        }
        let ob = arch.out_base();
        let bb = ob + arch.output_dim * w;
        for o in 0..arch.output_dim {
            let mut y = Jet::constant(p[bb + o]);
            for k in 0..w {
                y = y.add(&ws.acts[arch.num_blocks][k].scale(p[ob + o * w + k]));
            }
            ws.out[o] = y;
        }
        &ws.out
    }

    /// Convenience jet evaluation with a fresh workspace.
    pub fn eval_jets(&self, x: Vec2) -> Vec<Jet> {
        let mut ws = JetWorkspace::new(&self.arch);
        self.eval_jets_ws(x, &mut ws);
        ws.out
    }

    /// Exact jacobian of the output with respect to the input coordinates.
    pub fn jacobian(&self, x: Vec2) -> Vec<[f64; 2]> {
        self.eval_jets(x).iter().map(|j| [j.gx, j.gy]).collect()
    }

    /// Exact laplacian of every output component.
    pub fn laplacian(&self, x: Vec2) -> Vec<f64> {
        self.eval_jets(x).iter().map(|j| j.laplacian()).collect()
    }

    /// Accumulate `dL/dparams` into `grad` given adjoints of the output jets
    /// for the point traced in `ws` (which must come from the matching
    /// [`Self::eval_jets_ws`] call).
    pub fn backward(&self, ws: &mut JetWorkspace, adj_out: &[Jet], grad: &mut [f64]) {
        let arch = &self.arch;
        debug_assert_eq!(adj_out.len(), arch.output_dim);
        debug_assert_eq!(grad.len(), arch.param_count());
        let w = arch.hidden_width;
        let p = &self.params;
        let ob = arch.out_base();
        let bb = ob + arch.output_dim * w;
        for k in 0..w {
            let mut adj = Jet::default();
            for o in 0..arch.output_dim {
                adj = adj.add(&adj_out[o].scale(p[ob + o * w + k]));
            }
            ws.adj_a[k] = adj;
        }
        for o in 0..arch.output_dim {
            for k in 0..w {
                grad[ob + o * w + k] += jet_dot(&adj_out[o], &ws.acts[arch.num_blocks][k]);
            }
            grad[bb + o] += adj_out[o].v;
        }
        for i in (0..arch.num_blocks).rev() {
            let base = arch.block_base(i);
            let (w1, b1) = (base, base + w * w);
            let (w2, b2) = (base + w * w + w, base + 2 * w * w + w);
            // Branch: s = sin(z2); skip adjoint stays in adj_a.
            for j in 0..w {
                ws.adj_z[j] = sin_backward(&ws.z2[i][j], &ws.adj_a[j]);
            }
            for j in 0..w {
                for k in 0..w {
                    grad[w2 + j * w + k] += jet_dot(&ws.adj_z[j], &ws.tmid[i][k]);
                }
                grad[b2 + j] += ws.adj_z[j].v;
            }
            for k in 0..w {
                let mut adj = Jet::default();
                for j in 0..w {
                    adj = adj.add(&ws.adj_z[j].scale(p[w2 + j * w + k]));
                }
                ws.adj_t[k] = adj;
            }
            for j in 0..w {
                ws.adj_z[j] = sin_backward(&ws.z1[i][j], &ws.adj_t[j]);
            }
            for j in 0..w {
                for k in 0..w {
                    grad[w1 + j * w + k] += jet_dot(&ws.adj_z[j], &ws.acts[i][k]);
                }
                grad[b1 + j] += ws.adj_z[j].v;
            }
            for k in 0..w {
                let mut extra = Jet::default();
                for j in 0..w {
                    extra = extra.add(&ws.adj_z[j].scale(p[w1 + j * w + k]));
                }
                ws.adj_a[k] = ws.adj_a[k].add(&extra);
            }
        }
        let b0 = arch.input_dim * w;
        for j in 0..w {
            let adj = sin_backward(&ws.z0[j], &ws.adj_a[j]);
            for k in 0..arch.input_dim {
                grad[j * arch.input_dim + k] += jet_dot(&adj, &ws.x[k]);
            }
            grad[b0 + j] += adj.v;
        }
    }

    pub fn write_checkpoint(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "fieldnet-v1 {} {} {} {}",
            self.arch.input_dim, self.arch.output_dim, self.arch.hidden_width, self.arch.num_blocks
        )?;
        for p in &self.params {
            // Shortest round-trip decimal: parses back to the identical bits.
            writeln!(f, "{p}")?;
        }
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> std::io::Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines
            .next()
            .ok_or_else(|| std::io::Error::other("empty checkpoint"))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "fieldnet-v1" {
            return Err(std::io::Error::other("bad checkpoint header"));
        }
        let nums: Vec<usize> = fields[1..]
            .iter()
            .map(|s| s.parse().map_err(std::io::Error::other))
            .collect::<Result<_, _>>()?;
        let arch = Architecture {
            input_dim: nums[0],
            output_dim: nums[1],
            hidden_width: nums[2],
            num_blocks: nums[3],
        };
        let mut params = Vec::with_capacity(arch.param_count());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            params.push(line.trim().parse::<f64>().map_err(std::io::Error::other)?);
        }
        if params.len() != arch.param_count() {
            return Err(std::io::Error::other(format!(
                "checkpoint has {} parameters, architecture wants {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(FieldNetwork { arch, params })
    }
}

/// A scalar loss of the form `Σᵢ term(i, jets(xᵢ)) + ridge/2 · ‖θ‖²`, where
/// the per-point term is any smooth expression of the active network's
/// output jets.
pub trait JetTerm {
    fn eval<S: Scalar>(&self, i: usize, jets: &[JetView<S>]) -> S;
}

/// Loss value and exact gradient with respect to the active network's
/// parameters. Frozen data inside `term` is captured by the term itself and
/// contributes no gradient.
pub fn loss_gradient<T: JetTerm>(
    net: &FieldNetwork,
    points: &[Vec2],
    term: &T,
    ridge: f64,
) -> (f64, Vec<f64>) {
    let n_comp = net.arch.output_dim;
    assert!(n_comp * SEEDS_PER_COMP <= MAX_SEEDS);
    let mut grad = vec![0.0; net.arch.param_count()];
    let mut ws = JetWorkspace::new(&net.arch);
    let mut loss = 0.0;
    let mut views: Vec<JetView<Dual>> = Vec::with_capacity(n_comp);
    let mut adj: Vec<Jet> = vec![Jet::default(); n_comp];
    for (i, &x) in points.iter().enumerate() {
        net.eval_jets_ws(x, &mut ws);
        views.clear();
        for (c, jet) in ws.out.iter().enumerate() {
            views.push(JetView::seeded(jet, c * SEEDS_PER_COMP));
        }
        let value = term.eval::<Dual>(i, &views);
        loss += value.v;
        for (c, a) in adj.iter_mut().enumerate() {
            *a = adjoint_from_seeds(&value.d, c * SEEDS_PER_COMP);
        }
        net.backward(&mut ws, &adj, &mut grad);
    }
    if ridge != 0.0 {
        loss += 0.5 * ridge * net.params.iter().map(|p| p * p).sum::<f64>();
        for (g, p) in grad.iter_mut().zip(&net.params) {
            *g += ridge * p;
        }
    }
    (loss, grad)
}
