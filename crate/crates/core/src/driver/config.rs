//! Run configuration: TOML sections `[problem]`, `[network.*]`, `[loop]`,
//! `[sampling]`, `[output]`, with `--set key=value` overrides applied to the
//! document before deserialization. Unset fields fall back to the preset's
//! defaults, so a resolved config is fully explicit and round-trips.

use crate::problems::{make_problem, ProblemDefinition, ProblemOptions, StageKind};
use crate::solver::TrainerOptions;
use crate::ConfigError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_constant: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aux_blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aux_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warm_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_change_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ls_max_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawNetworks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<RawNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjoint: Option<RawNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descent: Option<RawNetwork>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawLoop {
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regularization: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    #[serde(skip_serializing_if = "Option::is_none")]
    interior: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init_seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    #[serde(default)]
    network: RawNetworks,
    #[serde(default, rename = "loop")]
    run_loop: RawLoop,
    #[serde(default)]
    sampling: RawSampling,
    #[serde(default)]
    output: RawOutput,
}

/// Per-stage trainer settings plus the stage's network shape and boundary
/// weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageConfig {
    pub blocks: Option<usize>,
    pub width: Option<usize>,
    pub aux_blocks: Option<usize>,
    pub aux_width: Option<usize>,
    pub lambda: f64,
    pub max_iterations: usize,
    pub warm_iterations: usize,
    pub trainer: TrainerOptions,
}

impl StageConfig {
    fn resolve(raw: Option<&RawNetwork>, lambda_default: f64) -> Self {
        let r = raw.cloned().unwrap_or_default();
        let base = TrainerOptions::default();
        let max_iterations = r.max_iterations.unwrap_or(500);
        StageConfig {
            blocks: r.blocks,
            width: r.width,
            aux_blocks: r.aux_blocks,
            aux_width: r.aux_width,
            lambda: r.lambda.unwrap_or(lambda_default),
            max_iterations,
            warm_iterations: r.warm_iterations.unwrap_or(150),
            trainer: TrainerOptions {
                max_iterations,
                grad_tol: r.grad_tol.unwrap_or(base.grad_tol),
                loss_change_tol: r.loss_change_tol.unwrap_or(base.loss_change_tol),
                c1: r.c1.unwrap_or(base.c1),
                c2: r.c2.unwrap_or(base.c2),
                ls_max_steps: r.ls_max_steps.unwrap_or(base.ls_max_steps),
            },
        }
    }

    /// Trainer options for outer iteration `k` (warm starts train shorter).
    pub fn trainer_for(&self, k: usize) -> TrainerOptions {
        TrainerOptions {
            max_iterations: if k == 0 {
                self.max_iterations
            } else {
                self.warm_iterations
            },
            ..self.trainer
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem_name: String,
    pub initial: Option<String>,
    pub nu: Option<f64>,
    pub source_constant: Option<f64>,
    pub state: StageConfig,
    pub adjoint: StageConfig,
    pub descent: StageConfig,
    /// Outer iteration count K.
    pub iterations: usize,
    /// Initial step; `None` means auto-scale from the first descent field.
    pub alpha0: Option<f64>,
    pub gamma: f64,
    /// Ablation switch: `false` moves points along the raw `−g·n` datum.
    pub regularization: bool,
    pub n_interior: usize,
    pub m_boundary: usize,
    pub seed: u64,
    pub init_seed: u64,
    pub out_dir: PathBuf,
    pub trace: bool,
}

impl RunConfig {
    /// Parse a TOML document, apply dotted-path overrides, resolve against
    /// the preset's defaults, and validate.
    pub fn from_str_with_overrides(
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<(RunConfig, ProblemDefinition), ConfigError> {
        let mut doc: toml::Value =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for (key, value) in overrides {
            apply_override(&mut doc, key, value)?;
        }
        let raw: RawConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn load(
        path: &Path,
        overrides: &[(String, String)],
    ) -> Result<(RunConfig, ProblemDefinition), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_str_with_overrides(&text, overrides)
    }

    fn resolve(raw: RawConfig) -> Result<(RunConfig, ProblemDefinition), ConfigError> {
        let opts = ProblemOptions {
            nu: raw.problem.nu,
            source_constant: raw.problem.source_constant,
            initial_shape: raw.problem.initial.clone(),
        };
        let problem = make_problem(&raw.problem.name, &opts)?;
        let d = &problem.defaults;
        let cfg = RunConfig {
            problem_name: raw.problem.name.clone(),
            initial: raw.problem.initial,
            nu: raw.problem.nu,
            source_constant: raw.problem.source_constant,
            state: StageConfig::resolve(raw.network.state.as_ref(), d.lambda),
            adjoint: StageConfig::resolve(raw.network.adjoint.as_ref(), d.lambda),
            descent: StageConfig::resolve(raw.network.descent.as_ref(), d.lambda),
            iterations: raw.run_loop.k.unwrap_or(d.outer_iterations),
            alpha0: raw.run_loop.alpha0.or(d.alpha0),
            gamma: raw.run_loop.gamma.unwrap_or(d.gamma),
            regularization: raw.run_loop.regularization.unwrap_or(true),
            n_interior: raw.sampling.interior.unwrap_or(d.n_interior),
            m_boundary: raw.sampling.boundary.unwrap_or(d.m_boundary),
            seed: raw.sampling.seed.unwrap_or(1),
            init_seed: raw.sampling.init_seed.unwrap_or(2),
            out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("runs/out")),
            trace: raw.output.trace.unwrap_or(false),
        };
        cfg.validate()?;
        Ok((cfg, problem))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| {
            Err(ConfigError::Invalid { key: key.into(), reason })
        };
        if self.iterations < 1 {
            return bad("loop.K", format!("must be at least 1 (got {})", self.iterations));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("loop.gamma", format!("must lie in (0, 1) (got {})", self.gamma));
        }
        if let Some(a) = self.alpha0 {
            if !(a >= 0.0) || !a.is_finite() {
                return bad("loop.alpha0", format!("must be finite and non-negative (got {a})"));
            }
        }
        if self.n_interior < 1 {
            return bad("sampling.interior", "need at least one interior point".into());
        }
        if self.m_boundary < 8 {
            return bad("sampling.boundary", "need at least 8 boundary points".into());
        }
        for (name, s) in [
            ("network.state", &self.state),
            ("network.adjoint", &self.adjoint),
            ("network.descent", &self.descent),
        ] {
            if !(s.trainer.c1 > 0.0 && s.trainer.c1 < s.trainer.c2 && s.trainer.c2 < 1.0) {
                return bad(name, format!("need 0 < c1 < c2 < 1 (got {}, {})", s.trainer.c1, s.trainer.c2));
            }
            if s.lambda <= 0.0 {
                return bad(name, format!("lambda must be positive (got {})", s.lambda));
            }
        }
        Ok(())
    }

    pub fn stage_config(&self, kind: StageKind) -> &StageConfig {
        match kind {
            StageKind::State => &self.state,
            StageKind::Adjoint => &self.adjoint,
            StageKind::Regularization => &self.descent,
        }
    }

    /// Serialize back into the section layout accepted by the parser.
    pub fn to_toml_string(&self) -> String {
        let net = |s: &StageConfig| RawNetwork {
            blocks: s.blocks,
            width: s.width,
            aux_blocks: s.aux_blocks,
            aux_width: s.aux_width,
            lambda: Some(s.lambda),
            max_iterations: Some(s.max_iterations),
            warm_iterations: Some(s.warm_iterations),
            grad_tol: Some(s.trainer.grad_tol),
            loss_change_tol: Some(s.trainer.loss_change_tol),
            c1: Some(s.trainer.c1),
            c2: Some(s.trainer.c2),
            ls_max_steps: Some(s.trainer.ls_max_steps),
        };
        let raw = RawConfig {
            problem: RawProblem {
                name: self.problem_name.clone(),
                initial: self.initial.clone(),
                nu: self.nu,
                source_constant: self.source_constant,
            },
            network: RawNetworks {
                state: Some(net(&self.state)),
                adjoint: Some(net(&self.adjoint)),
                descent: Some(net(&self.descent)),
            },
            run_loop: RawLoop {
                k: Some(self.iterations),
                alpha0: self.alpha0,
                gamma: Some(self.gamma),
                regularization: Some(self.regularization),
            },
            sampling: RawSampling {
                interior: Some(self.n_interior),
                boundary: Some(self.m_boundary),
                seed: Some(self.seed),
                init_seed: Some(self.init_seed),
            },
            output: RawOutput {
                dir: Some(self.out_dir.clone()),
                trace: Some(self.trace),
            },
        };
        toml::to_string(&raw).expect("config serializes")
    }
}

fn apply_override(doc: &mut toml::Value, key: &str, value: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::UnknownOverride(key.into()));
    }
    let parsed: toml::Value = value
        .parse::<i64>()
        .map(toml::Value::Integer)
        .or_else(|_| value.parse::<f64>().map(toml::Value::Float))
        .or_else(|_| value.parse::<bool>().map(toml::Value::Boolean))
        .unwrap_or_else(|_| toml::Value::String(value.to_string()));
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| ConfigError::UnknownOverride(key.into()))?;
        cur = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| ConfigError::UnknownOverride(key.into()))?;
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
[problem]
name = "toy_levelset"

[loop]
K = 5

[sampling]
seed = 1
"#;

    #[test]
    fn defaults_come_from_preset() {
        let (cfg, problem) = RunConfig::from_str_with_overrides(TOY, &[]).unwrap();
        assert_eq!(cfg.iterations, 5);
        assert_eq!(cfg.n_interior, problem.defaults.n_interior);
        assert_eq!(cfg.gamma, problem.defaults.gamma);
        assert!(cfg.regularization);
    }

    #[test]
    fn overrides_reach_the_document() {
        let ov = vec![
            ("loop.K".to_string(), "9".to_string()),
            ("sampling.seed".to_string(), "7".to_string()),
            ("loop.regularization".to_string(), "false".to_string()),
        ];
        let (cfg, _) = RunConfig::from_str_with_overrides(TOY, &ov).unwrap();
        assert_eq!(cfg.iterations, 9);
        assert_eq!(cfg.seed, 7);
        assert!(!cfg.regularization);
    }

    #[test]
    fn unknown_override_key_is_rejected() {
        let ov = vec![("loop.nonsense".to_string(), "1".to_string())];
        assert!(RunConfig::from_str_with_overrides(TOY, &ov).is_err());
    }

    #[test]
    fn zero_iterations_violates_validation() {
        let ov = vec![("loop.K".to_string(), "0".to_string())];
        let err = RunConfig::from_str_with_overrides(TOY, &ov).unwrap_err();
        match err {
            ConfigError::Invalid { key, .. } => assert_eq!(key, "loop.K"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_effective_config() {
        let ov = vec![("network.state.width".to_string(), "12".to_string())];
        let (cfg, _) = RunConfig::from_str_with_overrides(TOY, &ov).unwrap();
        let text = cfg.to_toml_string();
        let (cfg2, _) = RunConfig::from_str_with_overrides(&text, &[]).unwrap();
        assert_eq!(cfg, cfg2);
    }
}
