//! Mesh-free PDE-constrained shape optimization.
//!
//! Shapes are closed loops of marked boundary points; no mesh is ever built.
//! The state, adjoint, and descent-regularization equations of a benchmark
//! problem are solved on collocation points by small residual networks with
//! sinusoid activation, trained with BFGS under a strong Wolfe line search.
//! Each outer iteration evaluates the regularized descent field at the movable
//! boundary points, advances them, optionally restores the enclosed area, and
//! resamples the interior collocation set.
//!
//! Crate layout:
//! - [`geometry`]: boundary-point domains, point-in-polygon tests, sampling,
//!   boundary updates, and the area-preserving projection.
//! - [`net`]: residual field networks and exact input-derivatives (value,
//!   jacobian, laplacian) plus parameter gradients of collocation losses.
//! - [`problems`]: the residual-kernel catalog for the shipped benchmarks.
//! - [`solver`]: collocation loss assembly and the BFGS/strong-Wolfe trainer.
//! - [`driver`]: the outer optimization loop, run configuration, and run logs.
//! - [`oracle`]: independent brute-force checks (finite-difference shape
//!   derivatives, manufactured solutions, smoothness reports).
//!
//! The `parallel` feature (on by default) evaluates collocation batches with
//! rayon; reductions always happen in a canonical order, so results are
//! bit-identical with and without it.

pub mod batch;
pub mod driver;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod net;
pub mod oracle;
pub mod problems;
pub mod scalar;
pub mod solver;

pub use geometry::{BoundaryLoop, BoundaryPoint, CollocationSet, Domain2D, Marker};
pub use net::{Architecture, FieldNetwork};
pub use problems::ProblemDefinition;

/// Library version string, embedded in run provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors produced by geometry construction and boundary updates.
#[derive(Debug, Clone, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate loop: {0}")]
    Degenerate(String),
    #[error("loop {loop_id} self-intersects: segment {seg_a} crosses segment {seg_b}")]
    SelfIntersection {
        loop_id: usize,
        seg_a: usize,
        seg_b: usize,
    },
    #[error("loops {0} and {1} intersect")]
    LoopsIntersect(usize, usize),
    #[error("hole loop {0} is not strictly inside the outer loop")]
    HoleOutside(usize),
    #[error("domain must have exactly one outer loop (found {0})")]
    OuterCount(usize),
    #[error("loop orientation does not match its signed area (loop {0})")]
    Orientation(usize),
    #[error("non-finite coordinate in loop {0}")]
    NonFinite(usize),
    #[error("interior sampling acceptance rate below 1e-4 after {0} candidates; domain looks empty")]
    EmptyDomain(u64),
    #[error("{0}")]
    Precondition(String),
}

/// Errors produced while training field networks.
#[derive(Debug, Clone, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss at point ({x}, {y}) during {stage}")]
    Divergence { stage: String, x: f64, y: f64 },
    #[error("non-finite descent value at boundary point ({x}, {y})")]
    NonFiniteDescent { x: f64, y: f64 },
}

/// Errors produced while parsing or validating run configuration.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown problem preset `{0}`")]
    UnknownProblem(String),
    #[error("override `{0}` does not name an existing config key")]
    UnknownOverride(String),
}
