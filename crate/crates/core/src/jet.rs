//! Second-order 2D jets: value, gradient, and Hessian of a scalar quantity
//! with respect to the spatial coordinates.
//!
//! Network evaluation propagates jets through every layer, so spatial
//! derivatives up to the laplacian are exact (no internal finite
//! differences). Jets are also constructed directly from closed-form fields
//! in tests and the manufactured-solution registry.

/// Value, first, and second spatial derivatives at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub gx: f64,
    pub gy: f64,
    pub hxx: f64,
    pub hxy: f64,
    pub hyy: f64,
}

impl Jet {
    /// Jet of the coordinate function `x1` at (x, y).
    #[inline]
    pub fn coord_x(x: f64) -> Self {
        Jet { v: x, gx: 1.0, ..Default::default() }
    }

    /// Jet of the coordinate function `x2` at (x, y).
    #[inline]
    pub fn coord_y(y: f64) -> Self {
        Jet { v: y, gy: 1.0, ..Default::default() }
    }

    /// Jet of a constant.
    #[inline]
    pub fn constant(v: f64) -> Self {
        Jet { v, ..Default::default() }
    }

    #[inline]
    pub fn laplacian(&self) -> f64 {
        self.hxx + self.hyy
    }

    /// Componentwise sum (linearity of differentiation).
    #[inline]
    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            gx: self.gx + o.gx,
            gy: self.gy + o.gy,
            hxx: self.hxx + o.hxx,
            hxy: self.hxy + o.hxy,
            hyy: self.hyy + o.hyy,
        }
    }

    #[inline]
    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            v: self.v * k,
            gx: self.gx * k,
            gy: self.gy * k,
            hxx: self.hxx * k,
            hxy: self.hxy * k,
            hyy: self.hyy * k,
        }
    }

    /// Chain rule for `sin` applied to this jet.
    #[inline]
    pub fn sin(&self) -> Jet {
        let s = self.v.sin();
        let c = self.v.cos();
        Jet {
            v: s,
            gx: c * self.gx,
            gy: c * self.gy,
            hxx: c * self.hxx - s * self.gx * self.gx,
            hxy: c * self.hxy - s * self.gx * self.gy,
            hyy: c * self.hyy - s * self.gy * self.gy,
        }
    }

    /// Product rule (used by analytic stubs, not by network evaluation).
    #[inline]
    pub fn mul(&self, o: &Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            gx: self.gx * o.v + self.v * o.gx,
            gy: self.gy * o.v + self.v * o.gy,
            hxx: self.hxx * o.v + 2.0 * self.gx * o.gx + self.v * o.hxx,
            hxy: self.hxy * o.v + self.gx * o.gy + self.gy * o.gx + self.v * o.hxy,
            hyy: self.hyy * o.v + 2.0 * self.gy * o.gy + self.v * o.hyy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.gx.is_finite()
            && self.gy.is_finite()
            && self.hxx.is_finite()
            && self.hxy.is_finite()
            && self.hyy.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_jet_matches_analytic() {
        // g(x, y) = sin(x² y) — hand derivatives.
        let (x, y) = (0.7, -0.3);
        let arg = Jet::coord_x(x).mul(&Jet::coord_x(x)).mul(&Jet::coord_y(y));
        let g = arg.sin();
        let a = x * x * y;
        assert!((g.v - a.sin()).abs() < 1e-15);
        assert!((g.gx - a.cos() * 2.0 * x * y).abs() < 1e-14);
        assert!((g.gy - a.cos() * x * x).abs() < 1e-14);
        // d²/dx² = cos(a)·2y − sin(a)·(2xy)²
        let hxx = a.cos() * 2.0 * y - a.sin() * (2.0 * x * y).powi(2);
        assert!((g.hxx - hxx).abs() < 1e-13);
        let hxy = a.cos() * 2.0 * x - a.sin() * (2.0 * x * y) * (x * x);
        assert!((g.hxy - hxy).abs() < 1e-13);
        let hyy = -a.sin() * (x * x) * (x * x);
        assert!((g.hyy - hyy).abs() < 1e-13);
    }
}
