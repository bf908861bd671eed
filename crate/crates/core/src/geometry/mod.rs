//! Domains represented purely by oriented loops of marked boundary points.
//!
//! The outer loop is stored counterclockwise (positive signed area), hole
//! loops clockwise (negative signed area). With that convention, rotating a
//! loop tangent by −π/2 always yields the normal that points out of the
//! material: away from the outer loop, into a hole.

mod sampling;

pub use sampling::{sample_interior, BoundarySample, CollocationSet, InteriorSample};

use crate::GeometryError;
use serde::{Deserialize, Serialize};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Role of a boundary segment. Only `free` points may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Inlet,
    Outlet,
    Wall,
    Free,
    Plain,
}

impl Marker {
    pub fn as_str(&self) -> &'static str {
        match self {
            Marker::Inlet => "inlet",
            Marker::Outlet => "outlet",
            Marker::Wall => "wall",
            Marker::Free => "free",
            Marker::Plain => "plain",
        }
    }

    pub fn parse(s: &str) -> Option<Marker> {
        Some(match s {
            "inlet" => Marker::Inlet,
            "outlet" => Marker::Outlet,
            "wall" => Marker::Wall,
            "free" => Marker::Free,
            "plain" => Marker::Plain,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Outer,
    Hole,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub position: Vec2,
    pub marker: Marker,
    pub movable: bool,
}

impl BoundaryPoint {
    pub fn new(x: f64, y: f64, marker: Marker, movable: bool) -> Self {
        BoundaryPoint { position: Vec2::new(x, y), marker, movable }
    }

    pub fn fixed(x: f64, y: f64, marker: Marker) -> Self {
        Self::new(x, y, marker, false)
    }
}

/// A closed, simple polyline of boundary points. The segment from the last
/// point back to the first is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub points: Vec<BoundaryPoint>,
    pub orientation: Orientation,
}

/// One outer loop plus zero or more disjoint hole loops strictly inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain2D {
    pub loops: Vec<BoundaryLoop>,
}

/// A maximal contiguous run of equal-marker points along a loop.
#[derive(Clone, Copy, Debug)]
pub struct MarkerRun {
    pub marker: Marker,
    /// Index of the first point of the run.
    pub start: usize,
    /// Number of points in the run.
    pub len: usize,
}

impl BoundaryLoop {
    pub fn new(points: Vec<BoundaryPoint>, orientation: Orientation) -> Self {
        BoundaryLoop { points, orientation }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, i: usize) -> Vec2 {
        self.points[i].position
    }

    /// Shoelace signed area; positive for counterclockwise loops.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.points[i].position;
            let b = self.points[(i + 1) % n].position;
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n].position - self.points[i].position).norm())
            .sum()
    }

    /// Decompose the loop into maximal contiguous equal-marker runs, starting
    /// from the first marker transition (or from point 0 if there is none).
    pub fn marker_runs(&self) -> Vec<MarkerRun> {
        let n = self.points.len();
        let first_transition = (0..n)
            .find(|&i| self.points[(i + n - 1) % n].marker != self.points[i].marker);
        let start0 = match first_transition {
            Some(i) => i,
            None => {
                return vec![MarkerRun { marker: self.points[0].marker, start: 0, len: n }];
            }
        };
        let mut runs = Vec::new();
        let mut run_start = start0;
        let mut run_len = 1;
        for k in 1..=n {
            let i = (start0 + k) % n;
            if k < n && self.points[i].marker == self.points[run_start].marker {
                run_len += 1;
            } else {
                runs.push(MarkerRun {
                    marker: self.points[run_start].marker,
                    start: run_start,
                    len: run_len,
                });
                run_start = i;
                run_len = 1;
            }
        }
        runs
    }

    fn validate(&self, loop_id: usize) -> Result<(), GeometryError> {
        let n = self.points.len();
        if n < 3 {
            return Err(GeometryError::Degenerate(format!(
                "loop {loop_id} has {n} points (need at least 3)"
            )));
        }
        for p in &self.points {
            if !p.position.x.is_finite() || !p.position.y.is_finite() {
                return Err(GeometryError::NonFinite(loop_id));
            }
            if p.movable && p.marker != Marker::Free {
                return Err(GeometryError::Precondition(format!(
                    "movable point with marker {} in loop {loop_id}",
                    p.marker.as_str()
                )));
            }
        }
        for i in 0..n {
            let a = self.points[i].position;
            let b = self.points[(i + 1) % n].position;
            if (b - a).norm() < 1e-14 {
                return Err(GeometryError::Degenerate(format!(
                    "coincident adjacent points {i}/{} in loop {loop_id}",
                    (i + 1) % n
                )));
            }
        }
        if let Some((i, j)) = first_self_intersection(self) {
            return Err(GeometryError::SelfIntersection { loop_id, seg_a: i, seg_b: j });
        }
        let area = self.signed_area();
        match self.orientation {
            Orientation::Outer if area <= 0.0 => return Err(GeometryError::Orientation(loop_id)),
            Orientation::Hole if area >= 0.0 => return Err(GeometryError::Orientation(loop_id)),
            _ => {}
        }
        Ok(())
    }
}

impl Domain2D {
    pub fn new(loops: Vec<BoundaryLoop>) -> Result<Self, GeometryError> {
        let domain = Domain2D { loops };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let outer_count = self
            .loops
            .iter()
            .filter(|l| l.orientation == Orientation::Outer)
            .count();
        if outer_count != 1 {
            return Err(GeometryError::OuterCount(outer_count));
        }
        for (id, lp) in self.loops.iter().enumerate() {
            lp.validate(id)?;
        }
        let outer_id = self
            .loops
            .iter()
            .position(|l| l.orientation == Orientation::Outer)
            .unwrap();
        let outer = &self.loops[outer_id];
        for (id, lp) in self.loops.iter().enumerate() {
            if id == outer_id {
                continue;
            }
            for p in &lp.points {
                if !point_in_polygon(&[outer], p.position) {
                    return Err(GeometryError::HoleOutside(id));
                }
            }
        }
        for a in 0..self.loops.len() {
            for b in (a + 1)..self.loops.len() {
                if loops_intersect(&self.loops[a], &self.loops[b]) {
                    return Err(GeometryError::LoopsIntersect(a, b));
                }
                // Pairwise-disjoint holes: neither may sit inside the other.
                if self.loops[a].orientation == Orientation::Hole
                    && self.loops[b].orientation == Orientation::Hole
                    && (point_in_polygon(&[&self.loops[a]], self.loops[b].points[0].position)
                        || point_in_polygon(&[&self.loops[b]], self.loops[a].points[0].position))
                {
                    return Err(GeometryError::LoopsIntersect(a, b));
                }
            }
        }
        Ok(())
    }

    pub fn outer(&self) -> &BoundaryLoop {
        self.loops
            .iter()
            .find(|l| l.orientation == Orientation::Outer)
            .expect("validated domain has an outer loop")
    }

    /// Axis-aligned bounding box of the outer loop as (min, max).
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.outer().points {
            lo.x = lo.x.min(p.position.x);
            lo.y = lo.y.min(p.position.y);
            hi.x = hi.x.max(p.position.x);
            hi.y = hi.y.max(p.position.y);
        }
        (lo, hi)
    }

    pub fn movable_count(&self) -> usize {
        self.loops
            .iter()
            .map(|l| l.points.iter().filter(|p| p.movable).count())
            .sum()
    }
}

/// Signed-area sum over loops (holes subtract). Strictly positive for a valid
/// domain.
pub fn area(domain: &Domain2D) -> f64 {
    domain.loops.iter().map(|l| l.signed_area()).sum()
}

/// Even-odd point-in-domain test. Points within `1e-12` of any boundary
/// segment are reported not-contained.
pub fn contains(domain: &Domain2D, p: Vec2) -> bool {
    let loops: Vec<&BoundaryLoop> = domain.loops.iter().collect();
    if near_boundary(&loops, p, 1e-12) {
        return false;
    }
    point_in_polygon(&loops, p)
}

fn near_boundary(loops: &[&BoundaryLoop], p: Vec2, tol: f64) -> bool {
    for lp in loops {
        let n = lp.points.len();
        for i in 0..n {
            let a = lp.points[i].position;
            let b = lp.points[(i + 1) % n].position;
            if point_segment_distance(p, a, b) < tol {
                return true;
            }
        }
    }
    false
}

/// Crossing-parity test over every segment of the given loops.
fn point_in_polygon(loops: &[&BoundaryLoop], p: Vec2) -> bool {
    let mut inside = false;
    for lp in loops {
        let n = lp.points.len();
        for i in 0..n {
            let a = lp.points[i].position;
            let b = lp.points[(i + 1) % n].position;
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x_int = a.x + t * (b.x - a.x);
                if p.x < x_int {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotate by −π/2: maps a loop tangent to the out-of-material normal under
/// this crate's orientation convention.
#[inline]
pub fn rotate_cw(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// Proper segment intersection test including collinear overlap and
/// endpoint touching.
pub fn segments_intersect(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> bool {
    let d1 = cross(b2 - b1, a1 - b1);
    let d2 = cross(b2 - b1, a2 - b1);
    let d3 = cross(a2 - a1, b1 - a1);
    let d4 = cross(a2 - a1, b2 - a1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, p: Vec2, q: Vec2, r: Vec2| -> bool {
        d == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(d1, b1, b2, a1) || on(d2, b1, b2, a2) || on(d3, a1, a2, b1) || on(d4, a1, a2, b2)
}

/// First pair of non-adjacent segments of the loop that intersect, if any.
pub fn first_self_intersection(lp: &BoundaryLoop) -> Option<(usize, usize)> {
    let n = lp.points.len();
    for i in 0..n {
        let a1 = lp.points[i].position;
        let a2 = lp.points[(i + 1) % n].position;
        for j in (i + 2)..n {
            // Skip the wrap-around neighbor of segment 0.
            if i == 0 && j == n - 1 {
                continue;
            }
            let b1 = lp.points[j].position;
            let b2 = lp.points[(j + 1) % n].position;
            if segments_intersect(a1, a2, b1, b2) {
                return Some((i, j));
            }
        }
    }
    None
}

fn loops_intersect(a: &BoundaryLoop, b: &BoundaryLoop) -> bool {
    let na = a.points.len();
    let nb = b.points.len();
    for i in 0..na {
        let a1 = a.points[i].position;
        let a2 = a.points[(i + 1) % na].position;
        for j in 0..nb {
            let b1 = b.points[j].position;
            let b2 = b.points[(j + 1) % nb].position;
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

/// Unit outward normal at every point of the loop: the centered-difference
/// tangent `p_{i+1} − p_{i−1}` rotated to point out of the material.
pub fn outward_normals(lp: &BoundaryLoop) -> Result<Vec<Vec2>, GeometryError> {
    let n = lp.points.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = lp.points[(i + 1) % n].position - lp.points[(i + n - 1) % n].position;
        let norm = t.norm();
        if norm < 1e-14 {
            return Err(GeometryError::Degenerate(format!(
                "centered tangent vanishes at point {i}"
            )));
        }
        out.push(rotate_cw(t / norm));
    }
    Ok(out)
}

/// Per-point (unit normal, weight) pairs such that moving point `i` by a
/// displacement `d` changes the loop's signed area by exactly
/// `Σ w_i · (d_i · n_i)`. The weight is half the neighbor chord length.
pub fn shoelace_normals(lp: &BoundaryLoop) -> Result<Vec<(Vec2, f64)>, GeometryError> {
    let n = lp.points.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = lp.points[(i + 1) % n].position - lp.points[(i + n - 1) % n].position;
        let norm = t.norm();
        if norm < 1e-14 {
            return Err(GeometryError::Degenerate(format!(
                "centered tangent vanishes at point {i}"
            )));
        }
        out.push((rotate_cw(t / norm), 0.5 * norm));
    }
    Ok(out)
}

/// Displacements for every loop/point of a domain; zero entries for points
/// that must not move.
pub type Displacements = Vec<Vec<Vec2>>;

pub fn zero_displacements(domain: &Domain2D) -> Displacements {
    domain
        .loops
        .iter()
        .map(|l| vec![Vec2::zeros(); l.points.len()])
        .collect()
}

/// Move every movable point by `alpha · phi` and re-validate. Non-movable
/// points are byte-identical in the output.
pub fn update_boundary(
    domain: &Domain2D,
    phi: &Displacements,
    alpha: f64,
) -> Result<Domain2D, GeometryError> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(GeometryError::Precondition(format!(
            "step length must be finite and non-negative (got {alpha})"
        )));
    }
    let mut loops = domain.loops.clone();
    for (l, lp) in loops.iter_mut().enumerate() {
        for (i, pt) in lp.points.iter_mut().enumerate() {
            if pt.movable {
                let d = phi[l][i];
                if !d.x.is_finite() || !d.y.is_finite() {
                    return Err(GeometryError::Precondition(format!(
                        "non-finite displacement at loop {l} point {i}"
                    )));
                }
                pt.position += d * alpha;
            }
        }
    }
    Domain2D::new(loops)
}

/// Remove the weighted mean of the normal components so the first-order area
/// change along the boundary vanishes.
pub fn volume_project(phi_n: &[f64], weights: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if phi_n.is_empty() || phi_n.len() != weights.len() {
        return Err(GeometryError::Precondition(
            "volume projection needs matching, non-empty component and weight slices".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 || weights.iter().any(|w| *w <= 0.0) {
        return Err(GeometryError::Precondition("weights must be positive".into()));
    }
    let mean = phi_n
        .iter()
        .zip(weights)
        .map(|(p, w)| p * w)
        .sum::<f64>()
        / wsum;
    Ok(phi_n.iter().map(|p| p - mean).collect())
}

/// Shift every movable point along its shoelace normal by the `delta` that
/// restores `area(domain) = target`. The shifted area is an exact quadratic
/// in `delta`, so Newton converges in a couple of steps.
pub fn correct_area(domain: &Domain2D, target: f64) -> Result<Domain2D, GeometryError> {
    let a0 = area(domain);
    if !(target > 0.0) {
        return Err(GeometryError::Precondition(format!(
            "target area must be positive (got {target})"
        )));
    }
    // Direction field: shoelace normals at movable points, zero elsewhere.
    let mut dirs: Displacements = zero_displacements(domain);
    let mut lin = 0.0;
    let mut quad = 0.0;
    for (l, lp) in domain.loops.iter().enumerate() {
        let sn = shoelace_normals(lp)?;
        for (i, pt) in lp.points.iter().enumerate() {
            if pt.movable {
                dirs[l][i] = sn[i].0;
            }
        }
        let n = lp.points.len();
        for i in 0..n {
            let j = (i + 1) % n;
            lin += 0.5
                * (cross(dirs[l][i], lp.points[j].position)
                    + cross(lp.points[i].position, dirs[l][j]));
            quad += 0.5 * cross(dirs[l][i], dirs[l][j]);
        }
    }
    if lin.abs() < 1e-14 {
        return Err(GeometryError::Precondition(
            "area correction has no movable boundary to act on".into(),
        ));
    }
    let mut delta = 0.0;
    for _ in 0..10 {
        let a = a0 + lin * delta + quad * delta * delta;
        let da = lin + 2.0 * quad * delta;
        let next = delta - (a - target) / da;
        delta = next;
        if (a0 + lin * delta + quad * delta * delta - target).abs() <= 1e-10 * target.abs() {
            break;
        }
    }
    let scaled: Displacements = dirs
        .iter()
        .map(|l| l.iter().map(|d| d * delta).collect())
        .collect();
    update_boundary(domain, &scaled, 1.0)
}

/// Redistribute points at equal arc length within each contiguous marker
/// run. `counts[i]` is the requested point count of run `i` in
/// [`BoundaryLoop::marker_runs`] order; run-start corner points are kept
/// exactly. A single-run (uniform marker) loop keeps its first point.
pub fn resample_boundary(
    lp: &BoundaryLoop,
    counts: &[usize],
) -> Result<BoundaryLoop, GeometryError> {
    let runs = lp.marker_runs();
    if counts.len() != runs.len() {
        return Err(GeometryError::Precondition(format!(
            "expected {} run counts, got {}",
            runs.len(),
            counts.len()
        )));
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(GeometryError::Precondition(
            "each marker run needs at least 2 points".into(),
        ));
    }
    let n = lp.points.len();
    let mut new_points = Vec::with_capacity(counts.iter().sum());
    for (run, &count) in runs.iter().zip(counts) {
        // Polyline of the run: from its corner through its points to the
        // next run's corner (or all the way around for a single run).
        let span = run.len + if runs.len() == 1 { 0 } else { 1 };
        let mut verts = Vec::with_capacity(span + 1);
        for k in 0..span {
            verts.push(lp.points[(run.start + k) % n].position);
        }
        if runs.len() == 1 {
            verts.push(lp.points[run.start].position); // close the loop
        }
        let seg_len: Vec<f64> = verts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let total: f64 = seg_len.iter().sum();
        if total < 1e-12 {
            return Err(GeometryError::Degenerate(format!(
                "marker run starting at point {} has near-zero length",
                run.start
            )));
        }
        let corner = &lp.points[run.start];
        new_points.push(corner.clone());
        let mut seg = 0;
        let mut seg_start_arc = 0.0;
        for j in 1..count {
            let target = total * j as f64 / count as f64;
            while seg + 1 < seg_len.len() && seg_start_arc + seg_len[seg] < target {
                seg_start_arc += seg_len[seg];
                seg += 1;
            }
            let t = ((target - seg_start_arc) / seg_len[seg]).clamp(0.0, 1.0);
            let pos = verts[seg] + (verts[seg + 1] - verts[seg]) * t;
            new_points.push(BoundaryPoint {
                position: pos,
                marker: run.marker,
                movable: run.marker == Marker::Free,
            });
        }
    }
    let out = BoundaryLoop::new(new_points, lp.orientation);
    out.validate(0)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_loop(cx: f64, cy: f64, r: f64, n: usize, ccw: bool) -> BoundaryLoop {
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let th = if ccw { th } else { -th };
            pts.push(BoundaryPoint::new(
                cx + r * th.cos(),
                cy + r * th.sin(),
                Marker::Free,
                true,
            ));
        }
        BoundaryLoop::new(
            pts,
            if ccw { Orientation::Outer } else { Orientation::Hole },
        )
    }

    fn unit_square(n_per_edge: usize) -> BoundaryLoop {
        let mut pts = Vec::new();
        let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        for e in 0..4 {
            let (x0, y0) = corners[e];
            let (x1, y1) = corners[(e + 1) % 4];
            for k in 0..n_per_edge {
                let t = k as f64 / n_per_edge as f64;
                pts.push(BoundaryPoint::new(
                    x0 + t * (x1 - x0),
                    y0 + t * (y1 - y0),
                    Marker::Free,
                    true,
                ));
            }
        }
        BoundaryLoop::new(pts, Orientation::Outer)
    }

    fn square_domain() -> Domain2D {
        Domain2D::new(vec![unit_square(2)]).unwrap()
    }

    #[test]
    fn triangle_area() {
        let tri = BoundaryLoop::new(
            vec![
                BoundaryPoint::fixed(0.0, 0.0, Marker::Plain),
                BoundaryPoint::fixed(1.0, 0.0, Marker::Plain),
                BoundaryPoint::fixed(0.0, 1.0, Marker::Plain),
            ],
            Orientation::Outer,
        );
        let d = Domain2D::new(vec![tri]).unwrap();
        assert_eq!(area(&d), 0.5);
    }

    #[test]
    fn square_with_hole_area() {
        let outer = unit_square(2);
        let mut hole_pts = Vec::new();
        // Clockwise square hole of side 0.5 centered at (0.5, 0.5).
        for &(x, y) in &[(0.25, 0.25), (0.25, 0.75), (0.75, 0.75), (0.75, 0.25)] {
            hole_pts.push(BoundaryPoint::fixed(x, y, Marker::Plain));
        }
        let hole = BoundaryLoop::new(hole_pts, Orientation::Hole);
        let d = Domain2D::new(vec![outer, hole]).unwrap();
        assert!((area(&d) - 0.75).abs() < 1e-15);
        assert!(!contains(&d, Vec2::new(0.5, 0.5)));
        assert!(contains(&d, Vec2::new(0.1, 0.1)));
    }

    #[test]
    fn polygon_area_matches_exact_formula() {
        let n = 512;
        let d = Domain2D::new(vec![circle_loop(0.0, 0.0, 1.0, n, true)]).unwrap();
        let exact = n as f64 / 2.0 * (2.0 * std::f64::consts::PI / n as f64).sin();
        assert!((area(&d) - exact).abs() < 1e-12);
        assert!((area(&d) - std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn contains_unit_square() {
        let d = square_domain();
        assert!(contains(&d, Vec2::new(0.5, 0.5)));
        assert!(!contains(&d, Vec2::new(2.0, 0.0)));
        // Boundary point is conservatively excluded.
        assert!(!contains(&d, Vec2::new(0.0, 0.5)));
    }

    #[test]
    fn normals_on_circle_and_square() {
        let lp = circle_loop(0.0, 0.0, 1.0, 256, true);
        let ns = outward_normals(&lp).unwrap();
        // Point 0 is exactly (1, 0).
        assert!((ns[0] - Vec2::new(1.0, 0.0)).norm() < 1e-3);

        let sq = unit_square(2); // midpoints on each edge
        let ns = outward_normals(&sq).unwrap();
        // Point 1 is the bottom-edge midpoint.
        assert!((ns[1] - Vec2::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn hole_normals_point_into_hole() {
        let outer = circle_loop(0.0, 0.0, 3.0, 64, true);
        let hole = circle_loop(0.0, 0.0, 1.0, 256, false);
        let ns = outward_normals(&hole).unwrap();
        // Point 0 of the hole is (1, 0); out of the material means toward
        // the hole center here.
        assert!((ns[0] - Vec2::new(-1.0, 0.0)).norm() < 1e-3);
        Domain2D::new(vec![outer, hole]).unwrap();
    }

    #[test]
    fn convex_normals_point_away_from_centroid() {
        let lp = circle_loop(0.3, -0.2, 1.7, 128, true);
        let ns = outward_normals(&lp).unwrap();
        let centroid = lp
            .points
            .iter()
            .fold(Vec2::zeros(), |a, p| a + p.position)
            / lp.points.len() as f64;
        for (p, n) in lp.points.iter().zip(&ns) {
            assert!(n.dot(&(p.position - centroid)) > 0.0);
        }
    }

    #[test]
    fn area_invariant_under_rigid_motion() {
        let lp = circle_loop(0.0, 0.0, 1.3, 200, true);
        let d = Domain2D::new(vec![lp]).unwrap();
        let a0 = area(&d);
        let (s, c) = 0.83_f64.sin_cos();
        let moved: Vec<BoundaryPoint> = d.loops[0]
            .points
            .iter()
            .map(|p| {
                let q = Vec2::new(
                    c * p.position.x - s * p.position.y + 4.2,
                    s * p.position.x + c * p.position.y - 1.7,
                );
                BoundaryPoint { position: q, ..p.clone() }
            })
            .collect();
        let d2 = Domain2D::new(vec![BoundaryLoop::new(moved, Orientation::Outer)]).unwrap();
        assert!((area(&d2) - a0).abs() <= 1e-12 * a0.abs());
    }

    #[test]
    fn update_boundary_identity_and_dilation() {
        let d = Domain2D::new(vec![circle_loop(0.0, 0.0, 1.0, 128, true)]).unwrap();
        let zero = zero_displacements(&d);
        let same = update_boundary(&d, &zero, 0.5).unwrap();
        for (p, q) in d.loops[0].points.iter().zip(&same.loops[0].points) {
            assert_eq!(p.position, q.position);
        }
        // Radial field phi(x) = x dilates: area scales by (1 + α)².
        let phi: Displacements = vec![d.loops[0].points.iter().map(|p| p.position).collect()];
        let grown = update_boundary(&d, &phi, 0.1).unwrap();
        let ratio = area(&grown) / area(&d);
        assert!((ratio - 1.21).abs() < 1e-3);
        // Inverse update restores positions.
        let mut inv = grown.clone();
        for (i, pt) in inv.loops[0].points.iter_mut().enumerate() {
            pt.position -= phi[0][i] * 0.1;
        }
        for (p, q) in inv.loops[0].points.iter().zip(&d.loops[0].points) {
            assert!((p.position - q.position).norm() < 1e-12);
        }
    }

    #[test]
    fn update_rejects_self_intersection() {
        // Fold the square's bottom midpoint far above the top edge.
        let mut sq = unit_square(2);
        for p in sq.points.iter_mut() {
            p.movable = false;
            p.marker = Marker::Wall;
        }
        sq.points[1].marker = Marker::Free;
        sq.points[1].movable = true;
        let d = Domain2D::new(vec![sq]).unwrap();
        let mut phi = zero_displacements(&d);
        phi[0][1] = Vec2::new(0.0, 3.0);
        let err = update_boundary(&d, &phi, 1.0).unwrap_err();
        match err {
            GeometryError::SelfIntersection { .. } => {}
            other => panic!("expected self-intersection, got {other:?}"),
        }
    }

    #[test]
    fn small_steps_keep_convex_loops_simple() {
        let d = Domain2D::new(vec![circle_loop(0.0, 0.0, 1.0, 64, true)]).unwrap();
        let min_seg = (d.loops[0].position(1) - d.loops[0].position(0)).norm();
        // Random-ish bounded displacement field.
        let phi: Displacements = vec![d.loops[0]
            .points
            .iter()
            .enumerate()
            .map(|(i, _)| Vec2::new((i as f64 * 1.3).sin(), (i as f64 * 0.7).cos()))
            .collect()];
        let alpha = min_seg / 4.0 / 2.0_f64.sqrt(); // max displacement < min segment / 4
        let updated = update_boundary(&d, &phi, alpha).unwrap();
        assert!(first_self_intersection(&updated.loops[0]).is_none());
    }

    #[test]
    fn volume_project_examples() {
        let w = [1.0, 1.0, 2.0];
        let constant = volume_project(&[3.0, 3.0, 3.0], &w).unwrap();
        assert!(constant.iter().all(|v| v.abs() < 1e-15));

        let balanced = volume_project(&[1.0, -1.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((balanced[0] - 1.0).abs() < 1e-15);
        assert!((balanced[1] + 1.0).abs() < 1e-15);

        let projected = volume_project(&[1.0, -1.0], &[1.0, 3.0]).unwrap();
        assert!((projected[0] - 1.5).abs() < 1e-15);
        assert!((projected[1] + 0.5).abs() < 1e-15);

        // Zero weighted mean and idempotence.
        let again = volume_project(&projected, &[1.0, 3.0]).unwrap();
        let mean: f64 = projected
            .iter()
            .zip(&[1.0, 3.0])
            .map(|(p, w)| p * w)
            .sum::<f64>()
            / 4.0;
        assert!(mean.abs() <= 1e-12);
        for (a, b) in projected.iter().zip(&again) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projected_update_second_order_drift() {
        // With shoelace normals and weights, the projected normal field moves
        // the area only at O(α²).
        let d = Domain2D::new(vec![circle_loop(0.0, 0.0, 1.0, 256, true)]).unwrap();
        let sn = shoelace_normals(&d.loops[0]).unwrap();
        let raw: Vec<f64> = (0..sn.len()).map(|i| (3.0 * i as f64 * 0.017).sin() + 0.4).collect();
        let weights: Vec<f64> = sn.iter().map(|(_, w)| *w).collect();
        let proj = volume_project(&raw, &weights).unwrap();
        let a0 = area(&d);
        let mut prev_drift = f64::INFINITY;
        for &alpha in &[0.04, 0.02, 0.01] {
            let phi: Displacements =
                vec![sn.iter().zip(&proj).map(|((n, _), p)| n * *p).collect()];
            let upd = update_boundary(&d, &phi, alpha).unwrap();
            let drift = (area(&upd) - a0).abs() / a0;
            // Quadratic: halving alpha divides drift by about 4.
            assert!(drift < 1.1 * alpha * alpha, "drift {drift} at alpha {alpha}");
            assert!(drift < prev_drift);
            prev_drift = drift;
        }
    }

    #[test]
    fn correct_area_hits_target() {
        let d = Domain2D::new(vec![circle_loop(0.0, 0.0, 1.0, 128, true)]).unwrap();
        let target = area(&d) * 1.05;
        let fixed = correct_area(&d, target).unwrap();
        assert!((area(&fixed) - target).abs() <= 1e-10 * target);
    }

    #[test]
    fn resample_square_with_marked_edges() {
        let mut sq = unit_square(1); // 4 corner points only
        let markers = [Marker::Inlet, Marker::Wall, Marker::Outlet, Marker::Free];
        for (p, m) in sq.points.iter_mut().zip(markers) {
            p.marker = m;
            p.movable = false;
        }
        let out = resample_boundary(&sq, &[4, 4, 4, 4]).unwrap();
        assert_eq!(out.points.len(), 16);
        // Quarter-edge spacing everywhere.
        let n = out.points.len();
        for i in 0..n {
            let a = out.points[i].position;
            let b = out.points[(i + 1) % n].position;
            assert!(((b - a).norm() - 0.25).abs() < 1e-12);
        }
        assert!((out.perimeter() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn resample_closed_single_run() {
        let lp = circle_loop(0.0, 0.0, 1.0, 37, true);
        let total = lp.perimeter();
        let out = resample_boundary(&lp, &[24]).unwrap();
        assert_eq!(out.points.len(), 24);
        // Arc-length position of each new point along the original polyline
        // must be j·L/k.
        let n_orig = lp.points.len();
        let verts: Vec<Vec2> = (0..=n_orig).map(|i| lp.position(i % n_orig)).collect();
        let arc_of = |p: Vec2| -> f64 {
            let mut best = (f64::INFINITY, 0.0);
            let mut acc = 0.0;
            for w in verts.windows(2) {
                let d = point_segment_distance(p, w[0], w[1]);
                if d < best.0 {
                    let seg = w[1] - w[0];
                    let t = ((p - w[0]).dot(&seg) / seg.norm_squared()).clamp(0.0, 1.0);
                    best = (d, acc + t * seg.norm());
                }
                acc += (w[1] - w[0]).norm();
            }
            best.1
        };
        for (j, pt) in out.points.iter().enumerate() {
            let expect = total * j as f64 / 24.0;
            assert!(
                (arc_of(pt.position) - expect).abs() < 1e-9 * total,
                "point {j} off its arc slot"
            );
        }
    }

    #[test]
    fn resample_preserves_perimeter_of_dense_loop() {
        // Random star-convex loop sampled densely; re-equidistributing the
        // same point count moves the perimeter only at second order.
        let n = 8192;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = 1.0 + 0.23 * (3.0 * th).sin() + 0.11 * (7.0 * th + 1.0).cos();
            pts.push(BoundaryPoint::new(r * th.cos(), r * th.sin(), Marker::Free, true));
        }
        let lp = BoundaryLoop::new(pts, Orientation::Outer);
        let before = lp.perimeter();
        let out = resample_boundary(&lp, &[n]).unwrap();
        let after = out.perimeter();
        assert!(
            ((after - before) / before).abs() < 1e-6,
            "perimeter drift {}",
            (after - before) / before
        );
    }

    #[test]
    fn marker_runs_wrap_around() {
        // free points straddling index 0: runs must join across the seam.
        let mut sq = unit_square(2);
        for p in sq.points.iter_mut() {
            p.marker = Marker::Wall;
            p.movable = false;
        }
        sq.points[7].marker = Marker::Free;
        sq.points[0].marker = Marker::Free;
        sq.points[1].marker = Marker::Free;
        let runs = sq.marker_runs();
        assert_eq!(runs.len(), 2);
        let free_run = runs.iter().find(|r| r.marker == Marker::Free).unwrap();
        assert_eq!(free_run.start, 7);
        assert_eq!(free_run.len, 3);
    }
}
