//! Residual, objective, and shape-gradient kernels for the shipped
//! benchmarks.
//!
//! Every kernel reads field quantities through [`JetView`]s in a fixed
//! per-stage component layout (documented on each variant) and is generic
//! over the scalar type, so the same code yields residual values and their
//! derivatives with respect to the trained jets.

use crate::fields::{JetView, KernelCtx};
use crate::geometry::{Marker, Vec2};
use crate::scalar::Scalar;
use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

/// Maximum residual components a kernel emits at one point.
pub const MAX_RESIDUALS: usize = 4;

pub type Residuals<S> = ArrayVec<S, MAX_RESIDUALS>;

/// Polynomial velocity profile in `x2`, used for inflow data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub coeffs: Vec<f64>,
}

impl Profile {
    pub fn new(coeffs: &[f64]) -> Self {
        Profile { coeffs: coeffs.to_vec() }
    }

    pub fn eval(&self, x2: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x2 + c;
        }
        acc
    }
}

/// Level-set function of the unconstrained model problem:
/// `f(x1, x2) = x1² + (3 x2 / 2)² − 1`.
pub fn toy_levelset_f(p: Vec2) -> f64 {
    p.x * p.x + (1.5 * p.y) * (1.5 * p.y) - 1.0
}

/// Source options for the Poisson benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PoissonSource {
    /// The benchmark's reference source.
    Reference,
    /// Constant source, used by manufactured-solution checks.
    Constant(f64),
}

impl PoissonSource {
    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            PoissonSource::Reference => poisson_source(p),
            PoissonSource::Constant(c) => *c,
        }
    }
}

/// `f(x1, x2) = 2.5 (x1 + 0.4 − x2²)² + x1² + x2² − 1`.
pub fn poisson_source(p: Vec2) -> f64 {
    let t = p.x + 0.4 - p.y * p.y;
    2.5 * t * t + p.x * p.x + p.y * p.y - 1.0
}

/// Interior/boundary residual kernels. Component layouts are per stage:
/// the slice handed to `eval` contains the stage's participating field
/// components in declared order.
#[derive(Clone, Debug)]
pub enum ResidualKernel {
    /// `−Δy − f` over layout `[y]`.
    PoissonStateInterior { source: PoissonSource },
    /// Homogeneous Dirichlet: `y` over layout `[y]`.
    PoissonStateBoundary,
    /// `−Δp − 1` over layout `[p]`.
    PoissonAdjointInterior,
    /// `p` over layout `[p]`.
    PoissonAdjointBoundary,
    /// `−ΔΦ_i + Φ_i` over layout `[.., Φ1, Φ2]`; `phi` is the offset of Φ1.
    RegInterior { phi: usize },
    /// `∂nΦ_i + f(x) n_i` over layout `[Φ1, Φ2]` (whole boundary free).
    ToyRegBoundary,
    /// `∂nΦ_i + (∂n y)(∂n p) n_i` over layout `[y, p, Φ1, Φ2]`.
    PoissonRegBoundary,
    /// Stokes momentum + continuity over layout `[u1, u2, p]`:
    /// `(−∂x p + ν Δu1, −∂y p + ν Δu2, div u)`.
    StokesInterior { nu: f64 },
    /// Navier–Stokes momentum + continuity over layout `[u1, u2, p]`:
    /// adds the convective term `−(u·∇)u`.
    NavierStokesInterior { nu: f64 },
    /// Velocity/pressure boundary conditions shared by the flow problems,
    /// layout `[u1, u2, p]`: inlet `u − (u_in, 0)`, walls and free `u`,
    /// outlet `p n − ν ∂n u`.
    FlowStateBoundary { nu: f64, inflow: Profile },
    /// Dissipation-problem descent boundary, layout `[u1, u2, Φ1, Φ2]`:
    /// on the free boundary `∂nΦ_i + g n_i` with `g = g_sign · ν ‖∂n u‖²`,
    /// elsewhere `Φ_i`.
    DissipationRegBoundary { nu: f64, g_sign: f64 },
    /// Tracking-problem adjoint interior, layout `[u1, u2, λ1, λ2, q]`:
    /// `(−νΔλ − (∇λ)u + (∇u)ᵀλ + ∇q − (u − u_d), ∇·λ)`.
    TrackingAdjointInterior { nu: f64, inflow: Profile },
    /// Tracking-problem adjoint boundary, layout `[u1, u2, λ1, λ2, q]`:
    /// outlet `q n − ν ∂nλ − (u·n) λ`, elsewhere `λ`.
    TrackingAdjointBoundary { nu: f64 },
    /// Tracking-problem descent boundary, layout `[u1, u2, λ1, λ2, Φ1, Φ2]`:
    /// on the free boundary `∂nΦ_i + g n_i` with
    /// `g = g_sign (½‖u − u_d‖² + ν ∂n u · ∂n λ)`, elsewhere `Φ_i`.
    TrackingRegBoundary { nu: f64, inflow: Profile, g_sign: f64 },
}

impl ResidualKernel {
    pub fn eval<S: Scalar>(
        &self,
        ctx: &KernelCtx,
        c: &[JetView<S>],
        out: &mut Residuals<S>,
    ) {
        out.clear();
        let n = ctx.normal;
        match self {
            ResidualKernel::PoissonStateInterior { source } => {
                out.push(-c[0].lap() - S::constant(source.eval(ctx.position)));
            }
            ResidualKernel::PoissonStateBoundary => out.push(c[0].v),
            ResidualKernel::PoissonAdjointInterior => {
                out.push(-c[0].lap() - S::constant(1.0));
            }
            ResidualKernel::PoissonAdjointBoundary => out.push(c[0].v),
            ResidualKernel::RegInterior { phi } => {
                out.push(-c[*phi].lap() + c[*phi].v);
                out.push(-c[*phi + 1].lap() + c[*phi + 1].v);
            }
            ResidualKernel::ToyRegBoundary => {
                let f = toy_levelset_f(ctx.position);
                out.push(c[0].dn(n) + S::constant(f * n.x));
                out.push(c[1].dn(n) + S::constant(f * n.y));
            }
            ResidualKernel::PoissonRegBoundary => {
                let g = c[0].dn(n) * c[1].dn(n);
                out.push(c[2].dn(n) + g.scale(n.x));
                out.push(c[3].dn(n) + g.scale(n.y));
            }
            ResidualKernel::StokesInterior { nu } => {
                out.push(c[2].gx.scale(-1.0) + c[0].lap().scale(*nu));
                out.push(c[2].gy.scale(-1.0) + c[1].lap().scale(*nu));
                out.push(c[0].gx + c[1].gy);
            }
            ResidualKernel::NavierStokesInterior { nu } => {
                let conv_x = c[0].v * c[0].gx + c[1].v * c[0].gy;
                let conv_y = c[0].v * c[1].gx + c[1].v * c[1].gy;
                out.push(c[2].gx.scale(-1.0) - conv_x + c[0].lap().scale(*nu));
                out.push(c[2].gy.scale(-1.0) - conv_y + c[1].lap().scale(*nu));
                out.push(c[0].gx + c[1].gy);
            }
            ResidualKernel::FlowStateBoundary { nu, inflow } => {
                match ctx.marker.expect("boundary kernel needs a marker") {
                    Marker::Inlet => {
                        let uin = inflow.eval(ctx.position.y);
                        out.push(c[0].v - S::constant(uin));
                        out.push(c[1].v);
                    }
                    Marker::Outlet => {
                        out.push(c[2].v.scale(n.x) - c[0].dn(n).scale(*nu));
                        out.push(c[2].v.scale(n.y) - c[1].dn(n).scale(*nu));
                    }
                    _ => {
                        out.push(c[0].v);
                        out.push(c[1].v);
                    }
                }
            }
            ResidualKernel::DissipationRegBoundary { nu, g_sign } => {
                match ctx.marker.expect("boundary kernel needs a marker") {
                    Marker::Free => {
                        let du1 = c[0].dn(n);
                        let du2 = c[1].dn(n);
                        let g = (du1 * du1 + du2 * du2).scale(nu * g_sign);
                        out.push(c[2].dn(n) + g.scale(n.x));
                        out.push(c[3].dn(n) + g.scale(n.y));
                    }
                    _ => {
                        out.push(c[2].v);
                        out.push(c[3].v);
                    }
                }
            }
            ResidualKernel::TrackingAdjointInterior { nu, inflow } => {
                let ud1 = inflow.eval(ctx.position.y);
                // −νΔλ_i − ∇λ_i·u + Σ_j ∂u_j/∂x_i λ_j + ∂q/∂x_i − (u_i − u_d,i)
                let r1 = c[2].lap().scale(-nu)
                    - (c[2].gx * c[0].v + c[2].gy * c[1].v)
                    + (c[0].gx * c[2].v + c[1].gx * c[3].v)
                    + c[4].gx
                    - (c[0].v - S::constant(ud1));
                let r2 = c[3].lap().scale(-nu)
                    - (c[3].gx * c[0].v + c[3].gy * c[1].v)
                    + (c[0].gy * c[2].v + c[1].gy * c[3].v)
                    + c[4].gy
                    - c[1].v;
                out.push(r1);
                out.push(r2);
                out.push(c[2].gx + c[3].gy);
            }
            ResidualKernel::TrackingAdjointBoundary { nu } => {
                match ctx.marker.expect("boundary kernel needs a marker") {
                    Marker::Outlet => {
                        let un = c[0].v.scale(n.x) + c[1].v.scale(n.y);
                        out.push(
                            c[4].v.scale(n.x) - c[2].dn(n).scale(*nu) - un * c[2].v,
                        );
                        out.push(
                            c[4].v.scale(n.y) - c[3].dn(n).scale(*nu) - un * c[3].v,
                        );
                    }
                    _ => {
                        out.push(c[2].v);
                        out.push(c[3].v);
                    }
                }
            }
            ResidualKernel::TrackingRegBoundary { nu, inflow, g_sign } => {
                match ctx.marker.expect("boundary kernel needs a marker") {
                    Marker::Free => {
                        let ud1 = inflow.eval(ctx.position.y);
                        let d1 = c[0].v - S::constant(ud1);
                        let d2 = c[1].v;
                        let track = (d1 * d1 + d2 * d2).scale(0.5);
                        let visc = (c[0].dn(n) * c[2].dn(n) + c[1].dn(n) * c[3].dn(n))
                            .scale(*nu);
                        let g = (track + visc).scale(*g_sign);
                        out.push(c[4].dn(n) + g.scale(n.x));
                        out.push(c[5].dn(n) + g.scale(n.y));
                    }
                    _ => {
                        out.push(c[4].v);
                        out.push(c[5].v);
                    }
                }
            }
        }
    }
}

/// Objective-functional integrands (evaluated at interior points with plain
/// jets, over the problem's state-field layout).
#[derive(Clone, Debug)]
pub enum ObjectiveIntegrand {
    /// `f(x)` — no fields involved.
    LevelSet,
    /// `y` over layout `[y]`.
    StateValue,
    /// `ν ‖∇u‖_F²` over layout `[u1, u2]`.
    Dissipation { nu: f64 },
    /// `‖u − u_d‖²` over layout `[u1, u2]`.
    Tracking { inflow: Profile },
}

impl ObjectiveIntegrand {
    pub fn eval(&self, ctx: &KernelCtx, c: &[JetView<f64>]) -> f64 {
        match self {
            ObjectiveIntegrand::LevelSet => toy_levelset_f(ctx.position),
            ObjectiveIntegrand::StateValue => c[0].v,
            ObjectiveIntegrand::Dissipation { nu } => {
                nu * (c[0].gx * c[0].gx
                    + c[0].gy * c[0].gy
                    + c[1].gx * c[1].gx
                    + c[1].gy * c[1].gy)
            }
            ObjectiveIntegrand::Tracking { inflow } => {
                let d1 = c[0].v - inflow.eval(ctx.position.y);
                let d2 = c[1].v;
                d1 * d1 + d2 * d2
            }
        }
    }
}

/// Scalar boundary kernel `g` of the shape gradient on the free boundary:
/// the raw descent datum is `−g·n`.
#[derive(Clone, Debug)]
pub enum ShapeGradKernel {
    /// `g = f(x)`.
    LevelSet,
    /// `g = (∂n y)(∂n p)` over layout `[y, p]`.
    PoissonDnDn,
    /// `g = g_sign · ν ‖∂n u‖²` over layout `[u1, u2]`.
    Dissipation { nu: f64, g_sign: f64 },
    /// `g = g_sign (½‖u − u_d‖² + ν ∂n u · ∂n λ)` over `[u1, u2, λ1, λ2]`.
    Tracking { nu: f64, inflow: Profile, g_sign: f64 },
}

impl ShapeGradKernel {
    pub fn eval(&self, ctx: &KernelCtx, c: &[JetView<f64>]) -> f64 {
        let n = ctx.normal;
        match self {
            ShapeGradKernel::LevelSet => toy_levelset_f(ctx.position),
            ShapeGradKernel::PoissonDnDn => c[0].dn(n) * c[1].dn(n),
            ShapeGradKernel::Dissipation { nu, g_sign } => {
                let d1 = c[0].dn(n);
                let d2 = c[1].dn(n);
                g_sign * nu * (d1 * d1 + d2 * d2)
            }
            ShapeGradKernel::Tracking { nu, inflow, g_sign } => {
                let d1 = c[0].v - inflow.eval(ctx.position.y);
                let d2 = c[1].v;
                let track = 0.5 * (d1 * d1 + d2 * d2);
                let visc = nu * (c[0].dn(n) * c[2].dn(n) + c[1].dn(n) * c[3].dn(n));
                g_sign * (track + visc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    fn views(jets: &[Jet]) -> Vec<JetView<f64>> {
        jets.iter().map(JetView::from_jet).collect()
    }

    #[test]
    fn poisson_source_hand_values() {
        assert!((poisson_source(Vec2::new(0.0, 0.0)) - (-0.6)).abs() < 1e-15);
        assert!((poisson_source(Vec2::new(0.0, 1.0)) - 0.9).abs() < 1e-15);
        // Even in x2 at fixed x1.
        for &(x, y) in &[(0.3, 0.7), (-0.2, 1.3), (1.0, 0.25)] {
            let a = poisson_source(Vec2::new(x, y));
            let b = poisson_source(Vec2::new(x, -y));
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn zero_fields_leave_only_sources() {
        let zero = vec![Jet::default(); 5];
        let ctx = KernelCtx::interior(Vec2::new(0.2, -0.4));
        let mut out = Residuals::new();

        let k = ResidualKernel::PoissonStateInterior { source: PoissonSource::Reference };
        k.eval(&ctx, &views(&zero[..1]), &mut out);
        assert_eq!(out[0], -poisson_source(Vec2::new(0.2, -0.4)));

        ResidualKernel::PoissonAdjointInterior.eval(&ctx, &views(&zero[..1]), &mut out);
        assert_eq!(out[0], -1.0);

        ResidualKernel::RegInterior { phi: 0 }.eval(&ctx, &views(&zero[..2]), &mut out);
        assert_eq!(out.as_slice(), &[0.0, 0.0]);

        ResidualKernel::StokesInterior { nu: 0.3 }.eval(&ctx, &views(&zero[..3]), &mut out);
        assert_eq!(out.as_slice(), &[0.0, 0.0, 0.0]);

        ResidualKernel::NavierStokesInterior { nu: 0.3 }.eval(&ctx, &views(&zero[..3]), &mut out);
        assert_eq!(out.as_slice(), &[0.0, 0.0, 0.0]);

        let adj = ResidualKernel::TrackingAdjointInterior {
            nu: 0.02,
            inflow: Profile::new(&[2.5, 0.0, -2.5]),
        };
        adj.eval(&ctx, &views(&zero), &mut out);
        // u ≡ 0 leaves +u_d in the adjoint right-hand side.
        let ud = 2.5 - 2.5 * 0.16;
        assert!((out[0] - ud).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn inlet_residual_of_zero_velocity_is_minus_inflow() {
        let inflow = Profile::new(&[0.0, 4.0, -4.0]); // 4(1−x2)x2
        let k = ResidualKernel::FlowStateBoundary { nu: 0.0025, inflow };
        let ctx = KernelCtx::boundary(
            Vec2::new(0.0, 0.5),
            Vec2::new(-1.0, 0.0),
            Marker::Inlet,
        );
        let zero = vec![Jet::default(); 3];
        let mut out = Residuals::new();
        k.eval(&ctx, &views(&zero), &mut out);
        assert!((out[0] - (-1.0)).abs() < 1e-15); // u_in(0.5) = 1
        assert_eq!(out[1], 0.0);
    }

    /// Poiseuille flow `u = (4(1−x2)x2, 0)`, `p = −8νx1` solves the Stokes
    /// system exactly; residuals must vanish and the wall shear is ±4.
    #[test]
    fn poiseuille_stub_zeroes_stokes_residuals() {
        let nu = 1.0 / 400.0;
        let stub = |x: Vec2| -> Vec<Jet> {
            let u1 = Jet {
                v: 4.0 * (1.0 - x.y) * x.y,
                gx: 0.0,
                gy: 4.0 - 8.0 * x.y,
                hxx: 0.0,
                hxy: 0.0,
                hyy: -8.0,
            };
            let u2 = Jet::default();
            let p = Jet { v: -8.0 * nu * x.x, gx: -8.0 * nu, ..Default::default() };
            vec![u1, u2, p]
        };
        let k = ResidualKernel::StokesInterior { nu };
        let mut out = Residuals::new();
        for &(x, y) in &[(0.1, 0.2), (0.8, 0.9), (0.5, 0.5), (0.33, 0.77)] {
            let ctx = KernelCtx::interior(Vec2::new(x, y));
            k.eval(&ctx, &views(&stub(Vec2::new(x, y))), &mut out);
            for r in out.iter() {
                assert!(r.abs() < 1e-12, "residual {r} at ({x}, {y})");
            }
        }
        // Wall x2 = 0 with n = (0, −1): ∂n u = (−4, 0); |g| = 16ν under the
        // dissipation kernel (descent-consistent sign is negative).
        let ctx = KernelCtx::boundary(Vec2::new(0.5, 0.0), Vec2::new(0.0, -1.0), Marker::Free);
        let jets = stub(Vec2::new(0.5, 0.0));
        let du1 = JetView::from_jet(&jets[0]).dn(ctx.normal);
        assert!((du1 - (-4.0)).abs() < 1e-14);
        let g = ShapeGradKernel::Dissipation { nu, g_sign: -1.0 }
            .eval(&ctx, &views(&jets[..2]));
        assert!((g - (-16.0 * nu)).abs() < 1e-13);
    }

    /// At `u = u_d`, `λ = 0`, `q = 0` the tracking adjoint residual and the
    /// shape-gradient kernel both vanish (a converged configuration).
    #[test]
    fn tracking_fixed_point() {
        let inflow = Profile::new(&[2.5, 0.0, -2.5]);
        let nu = 0.02;
        let stub = |x: Vec2| -> Vec<Jet> {
            let u1 = Jet {
                v: 2.5 * (1.0 + x.y) * (1.0 - x.y),
                gy: -5.0 * x.y,
                hyy: -5.0,
                ..Default::default()
            };
            vec![u1, Jet::default(), Jet::default(), Jet::default(), Jet::default()]
        };
        let k = ResidualKernel::TrackingAdjointInterior { nu, inflow: inflow.clone() };
        let mut out = Residuals::new();
        for &(x, y) in &[(0.0, 0.0), (0.5, -0.5), (-0.7, 0.3)] {
            let ctx = KernelCtx::interior(Vec2::new(x, y));
            k.eval(&ctx, &views(&stub(Vec2::new(x, y))), &mut out);
            for r in out.iter() {
                assert!(r.abs() < 1e-14);
            }
        }
        let ctx = KernelCtx::boundary(Vec2::new(0.2, 1.0), Vec2::new(0.0, 1.0), Marker::Free);
        let jets = stub(Vec2::new(0.2, 1.0));
        let g = ShapeGradKernel::Tracking { nu, inflow, g_sign: 1.0 }
            .eval(&ctx, &views(&jets[..4]));
        assert!(g.abs() < 1e-14);
    }

    /// Constant velocity kills the convective term: the NS momentum residual
    /// reduces to −∇p.
    #[test]
    fn constant_velocity_drops_convection() {
        let c = 1.7;
        let jets = vec![
            Jet::constant(c),
            Jet::default(),
            Jet { v: 0.3, gx: 2.0, gy: -1.0, ..Default::default() },
        ];
        let k = ResidualKernel::NavierStokesInterior { nu: 0.02 };
        let ctx = KernelCtx::interior(Vec2::new(0.1, 0.1));
        let mut out = Residuals::new();
        k.eval(&ctx, &views(&jets), &mut out);
        assert!((out[0] - (-2.0)).abs() < 1e-15);
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn objective_integrands() {
        let ctx = KernelCtx::interior(Vec2::new(1.0, 0.0));
        // Toy integrand is f itself; f(1, 0) = 0 (on the optimal boundary).
        assert_eq!(ObjectiveIntegrand::LevelSet.eval(&ctx, &[]), 0.0);
        let u = vec![
            Jet { v: 1.0, gx: 0.5, gy: -0.5, ..Default::default() },
            Jet { v: 0.0, gx: 0.25, gy: 0.0, ..Default::default() },
        ];
        let d = ObjectiveIntegrand::Dissipation { nu: 2.0 }.eval(&ctx, &views(&u));
        assert!((d - 2.0 * (0.25 + 0.25 + 0.0625)).abs() < 1e-15);
    }
}
