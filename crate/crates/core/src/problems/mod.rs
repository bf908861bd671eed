//! Benchmark catalog: fields, solve stages, kernels, and initial geometry
//! for each shipped problem.

pub mod kernels;
mod presets;

pub use kernels::{
    poisson_source, toy_levelset_f, ObjectiveIntegrand, PoissonSource, Profile,
    ResidualKernel, ShapeGradKernel,
};
pub use presets::PRESET_NAMES;

use crate::geometry::Domain2D;
use crate::net::Architecture;
use crate::{ConfigError, GeometryError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    State,
    Adjoint,
    Regularization,
}

impl StageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageKind::State => "state",
            StageKind::Adjoint => "adjoint",
            StageKind::Regularization => "regularization",
        }
    }
}

/// One neural field of the problem.
#[derive(Clone, Debug)]
pub struct FieldDef {
    pub name: &'static str,
    pub components: usize,
    pub default_blocks: usize,
    pub default_width: usize,
}

/// One training stage: which fields participate (in kernel layout order),
/// which of them train, and the residual kernels.
#[derive(Clone, Debug)]
pub struct StageDef {
    pub kind: StageKind,
    pub fields: Vec<usize>,
    pub active: Vec<usize>,
    pub interior: ResidualKernel,
    pub boundary: ResidualKernel,
}

/// Paper-pinned default run settings for a preset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresetDefaults {
    pub n_interior: usize,
    pub m_boundary: usize,
    pub outer_iterations: usize,
    pub gamma: f64,
    /// `None` scales the first step so the largest initial displacement is
    /// 2% of the bounding-box diagonal.
    pub alpha0: Option<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum InitialGeometry {
    Circle { r: f64 },
    Ellipse { a: f64, b: f64 },
    Rectangle { hx: f64, hy: f64 },
    Pipe,
    ObstacleChannel { two_obstacles: bool },
    BumpChannel { bump: f64 },
}

/// A fully wired benchmark: everything the outer loop needs.
#[derive(Clone, Debug)]
pub struct ProblemDefinition {
    pub name: &'static str,
    pub fields: Vec<FieldDef>,
    pub stages: Vec<StageDef>,
    pub objective: ObjectiveIntegrand,
    /// Field layout for the objective integrand.
    pub objective_fields: Vec<usize>,
    pub shape_gradient: ShapeGradKernel,
    /// Field layout for the shape-gradient kernel.
    pub shape_gradient_fields: Vec<usize>,
    /// Field id of the descent field Φ.
    pub descent_field: usize,
    pub volume_constrained: bool,
    pub nu: Option<f64>,
    pub inflow: Option<Profile>,
    pub defaults: PresetDefaults,
    pub(crate) geometry: InitialGeometry,
}

/// Constant overrides applied on top of a preset.
#[derive(Clone, Debug, Default)]
pub struct ProblemOptions {
    pub nu: Option<f64>,
    /// Replace the Poisson source with a constant (manufactured solutions).
    pub source_constant: Option<f64>,
    /// Initial shape variant where the preset offers several
    /// (`circle`, `ellipse`, `rectangle`).
    pub initial_shape: Option<String>,
}

impl ProblemDefinition {
    pub fn field(&self, id: usize) -> &FieldDef {
        &self.fields[id]
    }

    pub fn field_id(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn default_arch(&self, id: usize) -> Architecture {
        let f = &self.fields[id];
        Architecture::new(f.components, f.default_width, f.default_blocks)
    }

    pub fn stage(&self, kind: StageKind) -> Option<&StageDef> {
        self.stages.iter().find(|s| s.kind == kind)
    }

    /// Build the preset's initial domain with about `m` boundary points.
    pub fn initial_domain(&self, m: usize) -> Result<Domain2D, GeometryError> {
        presets::build_geometry(&self.geometry, m)
    }

    /// Constants serialized into run provenance headers.
    pub fn constants_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "nu": self.nu,
            "inflow": self.inflow.as_ref().map(|p| p.coeffs.clone()),
            "volume_constrained": self.volume_constrained,
            "fields": self.fields.iter().map(|f| serde_json::json!({
                "name": f.name,
                "components": f.components,
                "blocks": f.default_blocks,
                "width": f.default_width,
            })).collect::<Vec<_>>(),
        })
    }

    /// One catalog line: name, fields, constants, volume flag.
    pub fn catalog_line(&self) -> String {
        let fields: Vec<&str> = self.fields.iter().map(|f| f.name).collect();
        let mut line = format!("{} fields=[{}]", self.name, fields.join(","));
        if let Some(nu) = self.nu {
            line.push_str(&format!(" ν={nu}"));
        }
        if let Some(p) = &self.inflow {
            line.push_str(&format!(" inflow={:?}", p.coeffs));
        }
        line.push_str(&format!(" volume_constrained={}", self.volume_constrained));
        line
    }
}

/// Wire up a preset by name, applying constant overrides.
pub fn make_problem(name: &str, opts: &ProblemOptions) -> Result<ProblemDefinition, ConfigError> {
    presets::make(name, opts)
}
