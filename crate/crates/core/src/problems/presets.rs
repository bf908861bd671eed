//! Preset wiring and initial-geometry builders.

use super::kernels::{
    ObjectiveIntegrand, PoissonSource, Profile, ResidualKernel, ShapeGradKernel,
};
use super::{
    FieldDef, InitialGeometry, PresetDefaults, ProblemDefinition, ProblemOptions, StageDef,
    StageKind,
};
use crate::geometry::{BoundaryLoop, BoundaryPoint, Domain2D, Marker, Orientation, Vec2};
use crate::{ConfigError, GeometryError};

pub const PRESET_NAMES: [&str; 7] = [
    "toy_levelset",
    "poisson_model",
    "stokes_pipe",
    "stokes_obstacle_1",
    "stokes_obstacle_2",
    "ns_channel_convex",
    "ns_channel_concave",
];

/// Sign applied to the dissipation shape-gradient kernel `ν‖∂n u‖²`.
/// Pinned against the finite-difference shape-derivative oracle: for the
/// energy-dissipation objective with no-slip walls, pushing a wall outward
/// lowers the objective, so the gradient kernel is negative.
pub(crate) const DISSIPATION_G_SIGN: f64 = -1.0;

/// Sign of the tracking shape-gradient kernel (checked by the same oracle).
pub(crate) const TRACKING_G_SIGN: f64 = 1.0;

// Pipe geometry: unit-width channel whose centerline rises by `PIPE_RISE`
// over a smoothstep bend of length `PIPE_BEND`. With vertical cross-sections
// of width 1, the enclosed area is exactly the total x-extent.
const PIPE_AREA: f64 = 6.3562;
const PIPE_RISE: f64 = 0.7;
const PIPE_BEND: f64 = 4.2;
/// Fraction of boundary points placed on the pipe's free bend walls.
const PIPE_FREE_FRACTION: f64 = 450.0 / 1450.0;
/// Fraction of boundary points on the free obstacle circle.
const OBSTACLE_FREE_FRACTION_1: f64 = 600.0 / 3800.0;
const OBSTACLE_FREE_FRACTION_2: f64 = 600.0 / 4400.0;
/// Fraction of boundary points on the channel's free bump.
const CHANNEL_FREE_FRACTION: f64 = 75.0 / 424.0;
const CHANNEL_BUMP: f64 = 0.35;

pub(crate) fn make(
    name: &str,
    opts: &ProblemOptions,
) -> Result<ProblemDefinition, ConfigError> {
    match name {
        "toy_levelset" => Ok(toy(opts)),
        "poisson_model" => poisson(opts),
        "stokes_pipe" => Ok(stokes(
            "stokes_pipe",
            opts.nu.unwrap_or(1.0 / 400.0),
            Profile::new(&[0.0, 4.0, -4.0]),
            InitialGeometry::Pipe,
            PresetDefaults {
                n_interior: 6000,
                m_boundary: 1450,
                outer_iterations: 20,
                gamma: 0.95,
                alpha0: None,
                lambda: 100.0,
            },
            (3, 20),
            (3, 15),
        )),
        "stokes_obstacle_1" => Ok(stokes(
            "stokes_obstacle_1",
            opts.nu.unwrap_or(1.0 / 80.0),
            Profile::new(&[1.0, 0.0, -1.0]),
            InitialGeometry::ObstacleChannel { two_obstacles: false },
            PresetDefaults {
                n_interior: 6000,
                m_boundary: 3800,
                outer_iterations: 30,
                gamma: 0.95,
                alpha0: None,
                lambda: 100.0,
            },
            (2, 15),
            (2, 15),
        )),
        "stokes_obstacle_2" => Ok(stokes(
            "stokes_obstacle_2",
            opts.nu.unwrap_or(1.0 / 80.0),
            Profile::new(&[1.0, 0.0, -1.0]),
            InitialGeometry::ObstacleChannel { two_obstacles: true },
            PresetDefaults {
                n_interior: 6000,
                m_boundary: 4400,
                outer_iterations: 100,
                gamma: 0.95,
                alpha0: None,
                lambda: 100.0,
            },
            (2, 15),
            (2, 15),
        )),
        "ns_channel_convex" => Ok(ns_channel(
            "ns_channel_convex",
            opts.nu.unwrap_or(1.0 / 50.0),
            CHANNEL_BUMP,
            PresetDefaults {
                n_interior: 4000,
                m_boundary: 424,
                outer_iterations: 10,
                gamma: 0.95,
                alpha0: None,
                lambda: 100.0,
            },
        )),
        "ns_channel_concave" => Ok(ns_channel(
            "ns_channel_concave",
            opts.nu.unwrap_or(1.0 / 50.0),
            -CHANNEL_BUMP,
            PresetDefaults {
                n_interior: 8000,
                m_boundary: 849,
                outer_iterations: 20,
                gamma: 0.95,
                alpha0: None,
                lambda: 100.0,
            },
        )),
        other => Err(ConfigError::UnknownProblem(other.into())),
    }
}

fn toy(_opts: &ProblemOptions) -> ProblemDefinition {
    ProblemDefinition {
        name: "toy_levelset",
        fields: vec![FieldDef {
            name: "descent",
            components: 2,
            default_blocks: 2,
            default_width: 10,
        }],
        stages: vec![StageDef {
            kind: StageKind::Regularization,
            fields: vec![0],
            active: vec![0],
            interior: ResidualKernel::RegInterior { phi: 0 },
            boundary: ResidualKernel::ToyRegBoundary,
        }],
        objective: ObjectiveIntegrand::LevelSet,
        objective_fields: vec![],
        shape_gradient: ShapeGradKernel::LevelSet,
        shape_gradient_fields: vec![],
        descent_field: 0,
        volume_constrained: false,
        nu: None,
        inflow: None,
        defaults: PresetDefaults {
            n_interior: 2000,
            m_boundary: 256,
            outer_iterations: 5,
            gamma: 0.8,
            alpha0: Some(0.45),
            lambda: 100.0,
        },
        geometry: InitialGeometry::Circle { r: 1.0 },
    }
}

fn poisson(opts: &ProblemOptions) -> Result<ProblemDefinition, ConfigError> {
    let source = match opts.source_constant {
        Some(c) => PoissonSource::Constant(c),
        None => PoissonSource::Reference,
    };
    let geometry = match opts.initial_shape.as_deref().unwrap_or("circle") {
        "circle" => InitialGeometry::Circle { r: 1.0 },
        "ellipse" => InitialGeometry::Ellipse { a: 1.2, b: 5.0 / 6.0 },
        "rectangle" => InitialGeometry::Rectangle { hx: 1.0, hy: 0.8 },
        other => {
            return Err(ConfigError::Invalid {
                key: "problem.initial".into(),
                reason: format!("unknown initial shape `{other}`"),
            })
        }
    };
    let dim = |name| FieldDef { name, components: 1, default_blocks: 2, default_width: 10 };
    Ok(ProblemDefinition {
        name: "poisson_model",
        fields: vec![
            dim("state"),
            dim("adjoint"),
            FieldDef { name: "descent", components: 2, default_blocks: 2, default_width: 10 },
        ],
        stages: vec![
            StageDef {
                kind: StageKind::State,
                fields: vec![0],
                active: vec![0],
                interior: ResidualKernel::PoissonStateInterior { source },
                boundary: ResidualKernel::PoissonStateBoundary,
            },
            StageDef {
                kind: StageKind::Adjoint,
                fields: vec![1],
                active: vec![1],
                interior: ResidualKernel::PoissonAdjointInterior,
                boundary: ResidualKernel::PoissonAdjointBoundary,
            },
            StageDef {
                kind: StageKind::Regularization,
                fields: vec![0, 1, 2],
                active: vec![2],
                interior: ResidualKernel::RegInterior { phi: 2 },
                boundary: ResidualKernel::PoissonRegBoundary,
            },
        ],
        objective: ObjectiveIntegrand::StateValue,
        objective_fields: vec![0],
        shape_gradient: ShapeGradKernel::PoissonDnDn,
        shape_gradient_fields: vec![0, 1],
        descent_field: 2,
        volume_constrained: false,
        nu: None,
        inflow: None,
        defaults: PresetDefaults {
            n_interior: 1000,
            m_boundary: 500,
            outer_iterations: 50,
            gamma: 0.95,
            alpha0: None,
            lambda: 100.0,
        },
        geometry,
    })
}

#[allow(clippy::too_many_arguments)]
fn stokes(
    name: &'static str,
    nu: f64,
    inflow: Profile,
    geometry: InitialGeometry,
    defaults: PresetDefaults,
    velocity_net: (usize, usize),
    pressure_net: (usize, usize),
) -> ProblemDefinition {
    ProblemDefinition {
        name,
        fields: vec![
            FieldDef {
                name: "velocity",
                components: 2,
                default_blocks: velocity_net.0,
                default_width: velocity_net.1,
            },
            FieldDef {
                name: "pressure",
                components: 1,
                default_blocks: pressure_net.0,
                default_width: pressure_net.1,
            },
            FieldDef {
                name: "descent",
                components: 2,
                default_blocks: velocity_net.0,
                default_width: velocity_net.1,
            },
        ],
        stages: vec![
            StageDef {
                kind: StageKind::State,
                fields: vec![0, 1],
                active: vec![0, 1],
                interior: ResidualKernel::StokesInterior { nu },
                boundary: ResidualKernel::FlowStateBoundary { nu, inflow: inflow.clone() },
            },
            // Self-adjoint objective: no adjoint stage.
            StageDef {
                kind: StageKind::Regularization,
                fields: vec![0, 2],
                active: vec![2],
                interior: ResidualKernel::RegInterior { phi: 2 },
                boundary: ResidualKernel::DissipationRegBoundary {
                    nu,
                    g_sign: DISSIPATION_G_SIGN,
                },
            },
        ],
        objective: ObjectiveIntegrand::Dissipation { nu },
        objective_fields: vec![0],
        shape_gradient: ShapeGradKernel::Dissipation { nu, g_sign: DISSIPATION_G_SIGN },
        shape_gradient_fields: vec![0],
        descent_field: 2,
        volume_constrained: true,
        nu: Some(nu),
        inflow: Some(inflow),
        defaults,
        geometry,
    }
}

fn ns_channel(name: &'static str, nu: f64, bump: f64, defaults: PresetDefaults) -> ProblemDefinition {
    let inflow = Profile::new(&[2.5, 0.0, -2.5]);
    ProblemDefinition {
        name,
        fields: vec![
            FieldDef { name: "velocity", components: 2, default_blocks: 3, default_width: 20 },
            FieldDef { name: "pressure", components: 1, default_blocks: 3, default_width: 15 },
            FieldDef { name: "adjoint", components: 2, default_blocks: 3, default_width: 20 },
            FieldDef { name: "adjoint_pressure", components: 1, default_blocks: 3, default_width: 15 },
            FieldDef { name: "descent", components: 2, default_blocks: 3, default_width: 20 },
        ],
        stages: vec![
            StageDef {
                kind: StageKind::State,
                fields: vec![0, 1],
                active: vec![0, 1],
                interior: ResidualKernel::NavierStokesInterior { nu },
                boundary: ResidualKernel::FlowStateBoundary { nu, inflow: inflow.clone() },
            },
            StageDef {
                kind: StageKind::Adjoint,
                fields: vec![0, 2, 3],
                active: vec![2, 3],
                interior: ResidualKernel::TrackingAdjointInterior {
                    nu,
                    inflow: inflow.clone(),
                },
                boundary: ResidualKernel::TrackingAdjointBoundary { nu },
            },
            StageDef {
                kind: StageKind::Regularization,
                fields: vec![0, 2, 4],
                active: vec![4],
                interior: ResidualKernel::RegInterior { phi: 4 },
                boundary: ResidualKernel::TrackingRegBoundary {
                    nu,
                    inflow: inflow.clone(),
                    g_sign: TRACKING_G_SIGN,
                },
            },
        ],
        objective: ObjectiveIntegrand::Tracking { inflow: inflow.clone() },
        objective_fields: vec![0],
        shape_gradient: ShapeGradKernel::Tracking { nu, inflow: inflow.clone(), g_sign: TRACKING_G_SIGN },
        shape_gradient_fields: vec![0, 2],
        descent_field: 4,
        volume_constrained: false,
        nu: Some(nu),
        inflow: Some(inflow),
        defaults,
        geometry: InitialGeometry::BumpChannel { bump },
    }
}

// ---------------------------------------------------------------------------
// Geometry builders
// ---------------------------------------------------------------------------

pub(crate) fn build_geometry(
    geom: &InitialGeometry,
    m: usize,
) -> Result<Domain2D, GeometryError> {
    match geom {
        InitialGeometry::Circle { r } => circle_domain(*r, m),
        InitialGeometry::Ellipse { a, b } => ellipse_domain(*a, *b, m),
        InitialGeometry::Rectangle { hx, hy } => rectangle_domain(*hx, *hy, m),
        InitialGeometry::Pipe => pipe_domain(m),
        InitialGeometry::ObstacleChannel { two_obstacles } => obstacle_domain(*two_obstacles, m),
        InitialGeometry::BumpChannel { bump } => bump_channel_domain(*bump, m),
    }
}

/// Largest-remainder split of `total` proportional to `weights`, each part
/// at least `min_each`.
fn distribute(total: usize, weights: &[f64], min_each: usize) -> Vec<usize> {
    let wsum: f64 = weights.iter().sum();
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|w| ((w / wsum) * total as f64).floor() as usize)
        .collect();
    let mut rem: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| ((w / wsum) * total as f64 - counts[i] as f64, i))
        .collect();
    rem.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut assigned: usize = counts.iter().sum();
    for &(_, i) in rem.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    // Enforce minimums by stealing from the largest part.
    loop {
        assigned = counts.iter().sum();
        debug_assert_eq!(assigned, total);
        let Some(short) = counts.iter().position(|&c| c < min_each) else {
            break;
        };
        let biggest = (0..counts.len())
            .max_by_key(|&i| counts[i])
            .expect("non-empty weights");
        if counts[biggest] <= min_each {
            break;
        }
        counts[biggest] -= 1;
        counts[short] += 1;
    }
    counts
}

fn circle_domain(r: f64, m: usize) -> Result<Domain2D, GeometryError> {
    let pts: Vec<BoundaryPoint> = (0..m)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            BoundaryPoint::new(r * th.cos(), r * th.sin(), Marker::Free, true)
        })
        .collect();
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)])
}

fn ellipse_domain(a: f64, b: f64, m: usize) -> Result<Domain2D, GeometryError> {
    let pts: Vec<BoundaryPoint> = (0..m)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            BoundaryPoint::new(a * th.cos(), b * th.sin(), Marker::Free, true)
        })
        .collect();
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)])
}

fn rectangle_domain(hx: f64, hy: f64, m: usize) -> Result<Domain2D, GeometryError> {
    let corners = [
        Vec2::new(-hx, -hy),
        Vec2::new(hx, -hy),
        Vec2::new(hx, hy),
        Vec2::new(-hx, hy),
    ];
    let lengths: Vec<f64> = (0..4)
        .map(|i| (corners[(i + 1) % 4] - corners[i]).norm())
        .collect();
    let counts = distribute(m, &lengths, 2);
    let mut pts = Vec::with_capacity(m);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for k in 0..counts[e] {
            let t = k as f64 / counts[e] as f64;
            let p = a + (b - a) * t;
            pts.push(BoundaryPoint::new(p.x, p.y, Marker::Free, true));
        }
    }
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)])
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn pipe_bottom(x: f64) -> f64 {
    let x0 = (PIPE_AREA - PIPE_BEND) / 2.0;
    PIPE_RISE * smoothstep((x - x0) / PIPE_BEND)
}

/// Unit-width pipe with a smoothstep bend; free walls along the bend.
fn pipe_domain(m: usize) -> Result<Domain2D, GeometryError> {
    let total = PIPE_AREA;
    let x0 = (total - PIPE_BEND) / 2.0;
    let x1 = x0 + PIPE_BEND;
    let nf_total = (m as f64 * PIPE_FREE_FRACTION).round() as usize;
    let nf_bottom = nf_total / 2;
    let nf_top = nf_total - nf_bottom;
    // Fixed sections: bottom-left, bottom-right, outlet, top-right,
    // top-left, inlet (in traversal order), weighted by length.
    let rest = m - nf_total;
    let fixed = distribute(rest, &[x0, total - x1, 1.0, total - x1, x0, 1.0], 3);
    let (n_bl, n_br, n_out, n_tr, n_tl, n_in) =
        (fixed[0], fixed[1], fixed[2], fixed[3], fixed[4], fixed[5]);

    let mut pts: Vec<BoundaryPoint> = Vec::with_capacity(m);
    let wall = |x: f64, y: f64| BoundaryPoint::fixed(x, y, Marker::Wall);
    // Bottom-left wall [0, x0], inclusive of the bend junction.
    for k in 0..n_bl {
        let x = x0 * k as f64 / (n_bl - 1) as f64;
        pts.push(wall(x, pipe_bottom(x)));
    }
    // Bottom free bend (x0, x1), movable.
    for j in 1..=nf_bottom {
        let x = x0 + PIPE_BEND * j as f64 / (nf_bottom + 1) as f64;
        pts.push(BoundaryPoint::new(x, pipe_bottom(x), Marker::Free, true));
    }
    // Bottom-right wall [x1, total).
    for k in 0..n_br {
        let x = x1 + (total - x1) * k as f64 / n_br as f64;
        pts.push(wall(x, pipe_bottom(x)));
    }
    // Outlet [(total, rise), (total, rise + 1)); the corner stays a wall point.
    for k in 0..n_out {
        let y = PIPE_RISE + k as f64 / n_out as f64;
        let marker = if k == 0 { Marker::Wall } else { Marker::Outlet };
        pts.push(BoundaryPoint::fixed(total, y, marker));
    }
    // Top-right wall [(total, rise+1) .. (x1, y_t(x1))], inclusive.
    for k in 0..n_tr {
        let x = total - (total - x1) * k as f64 / (n_tr - 1) as f64;
        pts.push(wall(x, pipe_bottom(x) + 1.0));
    }
    // Top free bend (x1, x0) traversed right to left.
    for j in 1..=nf_top {
        let x = x1 - PIPE_BEND * j as f64 / (nf_top + 1) as f64;
        pts.push(BoundaryPoint::new(x, pipe_bottom(x) + 1.0, Marker::Free, true));
    }
    // Top-left wall [x0, 0).
    for k in 0..n_tl {
        let x = x0 - x0 * k as f64 / n_tl as f64;
        pts.push(wall(x, pipe_bottom(x) + 1.0));
    }
    // Inlet [(0, 1), (0, 0)).
    for k in 0..n_in {
        let y = 1.0 - k as f64 / n_in as f64;
        pts.push(BoundaryPoint::fixed(0.0, y, Marker::Inlet));
    }
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)])
}

fn box_loop(
    lo: Vec2,
    hi: Vec2,
    n_bottom: usize,
    n_outlet: usize,
    n_top: usize,
    n_inlet: usize,
) -> Vec<BoundaryPoint> {
    let mut pts = Vec::new();
    for k in 0..n_bottom {
        let x = lo.x + (hi.x - lo.x) * k as f64 / n_bottom as f64;
        pts.push(BoundaryPoint::fixed(x, lo.y, Marker::Wall));
    }
    for k in 0..n_outlet {
        let y = lo.y + (hi.y - lo.y) * k as f64 / n_outlet as f64;
        let marker = if k == 0 { Marker::Wall } else { Marker::Outlet };
        pts.push(BoundaryPoint::fixed(hi.x, y, marker));
    }
    for k in 0..n_top {
        let x = hi.x - (hi.x - lo.x) * k as f64 / n_top as f64;
        pts.push(BoundaryPoint::fixed(x, hi.y, Marker::Wall));
    }
    for k in 0..n_inlet {
        let y = hi.y - (hi.y - lo.y) * k as f64 / n_inlet as f64;
        let marker = if k == 0 { Marker::Inlet } else { Marker::Inlet };
        pts.push(BoundaryPoint::fixed(lo.x, y, marker));
    }
    pts
}

fn circle_hole(cx: f64, cy: f64, r: f64, n: usize, marker: Marker, movable: bool) -> BoundaryLoop {
    let pts: Vec<BoundaryPoint> = (0..n)
        .map(|i| {
            let th = -2.0 * std::f64::consts::PI * i as f64 / n as f64;
            BoundaryPoint::new(cx + r * th.cos(), cy + r * th.sin(), marker, movable)
        })
        .collect();
    BoundaryLoop::new(pts, Orientation::Hole)
}

/// Channel `[−2, 2] × [−1, 1]` with one free circular obstacle (case I) or a
/// free plus a mirrored fixed obstacle (case II).
fn obstacle_domain(two_obstacles: bool, m: usize) -> Result<Domain2D, GeometryError> {
    let fraction = if two_obstacles {
        OBSTACLE_FREE_FRACTION_2
    } else {
        OBSTACLE_FREE_FRACTION_1
    };
    let n_free = (m as f64 * fraction).round() as usize;
    let r = 0.5;
    let circ = 2.0 * std::f64::consts::PI * r;
    let rest = m - n_free;
    let (box_counts, n_fixed_circle) = if two_obstacles {
        let c = distribute(rest, &[4.0, 2.0, 4.0, 2.0, circ], 3);
        ((c[0], c[1], c[2], c[3]), c[4])
    } else {
        let c = distribute(rest, &[4.0, 2.0, 4.0, 2.0], 3);
        ((c[0], c[1], c[2], c[3]), 0)
    };
    let outer = BoundaryLoop::new(
        box_loop(
            Vec2::new(-2.0, -1.0),
            Vec2::new(2.0, 1.0),
            box_counts.0,
            box_counts.1,
            box_counts.2,
            box_counts.3,
        ),
        Orientation::Outer,
    );
    let mut loops = vec![outer];
    if two_obstacles {
        loops.push(circle_hole(0.5, -0.3, r, n_free, Marker::Free, true));
        loops.push(circle_hole(-0.5, 0.3, r, n_fixed_circle, Marker::Wall, false));
    } else {
        loops.push(circle_hole(0.0, 0.0, r, n_free, Marker::Free, true));
    }
    Domain2D::new(loops)
}

/// Quadratic Bezier over the free piece of the channel's top boundary.
fn bump_curve(t: f64, bump: f64) -> Vec2 {
    // Traversed right to left: P0 = (0.5, 1), P1 = (0, 1 + bump), P2 = (−0.5, 1).
    let p0 = Vec2::new(0.5, 1.0);
    let p1 = Vec2::new(0.0, 1.0 + bump);
    let p2 = Vec2::new(-0.5, 1.0);
    p0 * ((1.0 - t) * (1.0 - t)) + p1 * (2.0 * t * (1.0 - t)) + p2 * (t * t)
}

/// `[−1, 1]²` channel whose top middle is replaced by a Bezier bump.
fn bump_channel_domain(bump: f64, m: usize) -> Result<Domain2D, GeometryError> {
    let nf = (m as f64 * CHANNEL_FREE_FRACTION).round() as usize;
    let rest = m - nf;
    // bottom, outlet, top-right wall, bump junction handled inside top pieces,
    // top-left wall, inlet.
    let c = distribute(rest, &[2.0, 2.0, 0.5, 0.5, 2.0], 2);
    let (n_bottom, n_outlet, n_tr, n_tl, n_inlet) = (c[0], c[1], c[2], c[3], c[4]);
    let mut pts = Vec::with_capacity(m);
    for k in 0..n_bottom {
        let x = -1.0 + 2.0 * k as f64 / n_bottom as f64;
        pts.push(BoundaryPoint::fixed(x, -1.0, Marker::Wall));
    }
    for k in 0..n_outlet {
        let y = -1.0 + 2.0 * k as f64 / n_outlet as f64;
        let marker = if k == 0 { Marker::Wall } else { Marker::Outlet };
        pts.push(BoundaryPoint::fixed(1.0, y, marker));
    }
    // Top-right wall [(1, 1) .. (0.5, 1)], junction included as wall.
    for k in 0..n_tr {
        let x = 1.0 - 0.5 * k as f64 / n_tr as f64;
        pts.push(BoundaryPoint::fixed(x, 1.0, Marker::Wall));
    }
    pts.push(BoundaryPoint::fixed(0.5, 1.0, Marker::Wall));
    // Free bump interior.
    for j in 1..=nf {
        let t = j as f64 / (nf + 1) as f64;
        let p = bump_curve(t, bump);
        pts.push(BoundaryPoint::new(p.x, p.y, Marker::Free, true));
    }
    // Top-left wall [(−0.5, 1) .. (−1, 1)), junction included as wall.
    for k in 0..n_tl {
        let x = -0.5 - 0.5 * k as f64 / n_tl as f64;
        pts.push(BoundaryPoint::fixed(x, 1.0, Marker::Wall));
    }
    for k in 0..n_inlet {
        let y = 1.0 - 2.0 * k as f64 / n_inlet as f64;
        pts.push(BoundaryPoint::fixed(-1.0, y, Marker::Inlet));
    }
    Domain2D::new(vec![BoundaryLoop::new(pts, Orientation::Outer)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::area;

    #[test]
    fn pipe_area_is_exact_by_construction() {
        let d = pipe_domain(1450).unwrap();
        // Vertical slicing of matched top/bottom grids keeps the polygon
        // area within discretization error of the target.
        assert!((area(&d) - PIPE_AREA).abs() / PIPE_AREA < 5e-3);
    }

    #[test]
    fn distribute_conserves_total() {
        let c = distribute(100, &[1.0, 2.0, 3.0], 2);
        assert_eq!(c.iter().sum::<usize>(), 100);
        assert!(c.iter().all(|&x| x >= 2));
        let c = distribute(10, &[1.0, 1000.0], 3);
        assert_eq!(c.iter().sum::<usize>(), 10);
        assert!(c[0] >= 3);
    }

    #[test]
    fn bump_channel_has_pinned_junctions() {
        let d = bump_channel_domain(0.35, 424).unwrap();
        let lp = &d.loops[0];
        for p in &lp.points {
            if (p.position - Vec2::new(0.5, 1.0)).norm() < 1e-12
                || (p.position - Vec2::new(-0.5, 1.0)).norm() < 1e-12
            {
                assert!(!p.movable);
                assert_eq!(p.marker, Marker::Wall);
            }
            if p.movable {
                assert!(p.position.x.abs() < 0.5);
            }
        }
    }
}
