//! Generic views over field jets for residual kernels.
//!
//! A kernel is written once over [`Scalar`] and reads field quantities
//! through [`JetView`]s. Instantiated with `f64` the views are plain jet
//! components; instantiated with [`Dual`] the components of the fields being
//! trained carry derivative seeds, so one kernel evaluation yields the
//! residual and its partials with respect to every active jet entry.

use crate::geometry::{Marker, Vec2};
use crate::jet::Jet;
use crate::scalar::{Dual, Scalar};

/// Jet components of one field component at one point, over a generic scalar.
#[derive(Clone, Copy, Debug)]
pub struct JetView<S: Scalar> {
    pub v: S,
    pub gx: S,
    pub gy: S,
    pub hxx: S,
    pub hxy: S,
    pub hyy: S,
}

/// Number of scalars seeded per active field component.
pub const SEEDS_PER_COMP: usize = 6;

impl<S: Scalar> JetView<S> {
    pub fn lap(&self) -> S {
        self.hxx + self.hyy
    }

    /// Normal derivative `∇(·) · n`.
    pub fn dn(&self, n: Vec2) -> S {
        self.gx.scale(n.x) + self.gy.scale(n.y)
    }

    pub fn from_constants(j: &Jet) -> Self {
        JetView {
            v: S::constant(j.v),
            gx: S::constant(j.gx),
            gy: S::constant(j.gy),
            hxx: S::constant(j.hxx),
            hxy: S::constant(j.hxy),
            hyy: S::constant(j.hyy),
        }
    }
}

impl JetView<Dual> {
    /// View with every component seeded starting at `base`.
    pub fn seeded(j: &Jet, base: usize) -> Self {
        JetView {
            v: Dual::seeded(j.v, base),
            gx: Dual::seeded(j.gx, base + 1),
            gy: Dual::seeded(j.gy, base + 2),
            hxx: Dual::seeded(j.hxx, base + 3),
            hxy: Dual::seeded(j.hxy, base + 4),
            hyy: Dual::seeded(j.hyy, base + 5),
        }
    }
}

impl JetView<f64> {
    pub fn from_jet(j: &Jet) -> Self {
        JetView { v: j.v, gx: j.gx, gy: j.gy, hxx: j.hxx, hxy: j.hxy, hyy: j.hyy }
    }
}

/// Adjoint jet recovered from the dual derivatives of a point's loss term.
pub fn adjoint_from_seeds(d: &[f64], base: usize) -> Jet {
    Jet {
        v: d[base],
        gx: d[base + 1],
        gy: d[base + 2],
        hxx: d[base + 3],
        hxy: d[base + 4],
        hyy: d[base + 5],
    }
}

/// Flat list of field-component views in a stage's declared order.
pub struct Comps<'a, S: Scalar>(pub &'a [JetView<S>]);

impl<'a, S: Scalar> Comps<'a, S> {
    #[inline]
    pub fn at(&self, i: usize) -> &JetView<S> {
        &self.0[i]
    }
}

/// Evaluation context handed to kernels at each collocation point.
#[derive(Clone, Copy, Debug)]
pub struct KernelCtx {
    pub position: Vec2,
    /// Unit outward normal; zero for interior points.
    pub normal: Vec2,
    pub marker: Option<Marker>,
}

impl KernelCtx {
    pub fn interior(position: Vec2) -> Self {
        KernelCtx { position, normal: Vec2::zeros(), marker: None }
    }

    pub fn boundary(position: Vec2, normal: Vec2, marker: Marker) -> Self {
        KernelCtx { position, normal, marker: Some(marker) }
    }
}
