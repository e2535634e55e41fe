//! Run configuration, read from JSON.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys are rejected so that typos do not silently fall back.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wave_core::continuation::{ContinuationOptions, HomotopyPlan, Stage};
use wave_core::{build_grid, Grid, ModelParams, NewtonOptions, NonlinearitySpec, ReactionKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub d: f64,
    #[serde(rename = "D")]
    pub line_d: f64,
    pub mu: f64,
    #[serde(rename = "L")]
    pub depth: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            line_d: 4.0,
            mu: 1.0,
            depth: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindConfig {
    SmoothCubic,
    PiecewiseLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub kind: KindConfig,
    pub theta: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            kind: KindConfig::SmoothCubic,
            theta: 0.3,
        }
    }
}

/// Uniform grid on `[x_left, x_right] × [-L, 0]`.
///
/// The default extents follow the decay rates at the default parameters:
/// `|x_left| ≥ 8 max(d, D)/c` and room for the slow right tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_left: -130.0,
            x_right: 100.0,
            nx: 2301,
            ny: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub min_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        let o = NewtonOptions::default();
        Self {
            tol_residual: o.tol_residual,
            max_iters: o.max_iters,
            damping: o.damping,
            min_step: o.min_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageConfig {
    A,
    B,
    C,
}

impl From<StageConfig> for Stage {
    fn from(s: StageConfig) -> Self {
        match s {
            StageConfig::A => Stage::A,
            StageConfig::B => Stage::B,
            StageConfig::C => Stage::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub epsilon0: f64,
    pub target_s: f64,
    pub target_eps: f64,
    pub stop_after: StageConfig,
    pub initial_step: f64,
    pub min_step: f64,
    pub grow: f64,
    pub fast_iters: usize,
    pub max_speed_jump: f64,
    pub enforce_extent: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        let o = ContinuationOptions::default();
        let p = HomotopyPlan::default();
        Self {
            epsilon0: p.epsilon0,
            target_s: p.target_s,
            target_eps: p.target_eps,
            stop_after: StageConfig::C,
            initial_step: o.initial_step,
            min_step: o.min_step,
            grow: o.grow,
            fast_iters: o.fast_iters,
            max_speed_jump: o.max_speed_jump,
            enforce_extent: o.enforce_extent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Every record.
    All,
    /// First record and the last record of each stage.
    Endpoints,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a checkpoint every this many records (stage ends always get one).
    pub checkpoint_every: usize,
    pub profiles: ProfileMode,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("wave_out"),
            checkpoint_every: 1,
            profiles: ProfileMode::Endpoints,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolScanConfig {
    pub xi_max: f64,
    pub n: usize,
    /// Speed in the symbol is `c₀ + c₁ε`.
    pub c0: f64,
    pub c1: f64,
    /// One scan and one CSV per value.
    pub epsilons: Vec<f64>,
}

impl Default for SymbolScanConfig {
    fn default() -> Self {
        Self {
            xi_max: 50.0,
            n: 10_001,
            c0: 1.0,
            c1: 0.0,
            epsilons: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub nonlinearity: NonlinearityConfig,
    pub grid: GridConfig,
    pub newton: NewtonConfig,
    pub continuation: ContinuationConfig,
    /// Bisection tolerance of the one-dimensional shooting speed.
    pub shooting_tol: f64,
    pub output: OutputConfig,
    pub symbol_scan: SymbolScanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            grid: GridConfig::default(),
            newton: NewtonConfig::default(),
            continuation: ContinuationConfig::default(),
            shooting_tol: 1e-12,
            output: OutputConfig::default(),
            symbol_scan: SymbolScanConfig::default(),
        }
    }
}

/// Core objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: ModelParams,
    pub spec: NonlinearitySpec,
    pub grid: Grid,
    pub newton: NewtonOptions,
    pub opts: ContinuationOptions,
    pub plan: HomotopyPlan,
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Replaces the output directory when `WAVE_OUT` is set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os("WAVE_OUT") {
            self.output.dir = PathBuf::from(dir);
        }
    }

    /// SHA-256 of the canonical JSON form.
    ///
    /// The output directory and the last stage to run are left out: neither
    /// changes the records, and resuming a run cut short by `stop_after` is
    /// the main use of checkpoints.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(out) = value.get_mut("output").and_then(|o| o.as_object_mut()) {
            out.remove("dir");
        }
        if let Some(cont) = value.get_mut("continuation").and_then(|o| o.as_object_mut()) {
            cont.remove("stop_after");
        }
        let canonical = serde_json::to_string(&value).expect("value serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn setup(&self) -> CliResult<Setup> {
        let p = &self.params;
        let params = ModelParams::new(p.d, p.line_d, p.mu, p.depth)?;
        let kind = match self.nonlinearity.kind {
            KindConfig::SmoothCubic => ReactionKind::SmoothCubic,
            KindConfig::PiecewiseLinear => ReactionKind::PiecewiseLinearOracle,
        };
        let spec = NonlinearitySpec::new(kind, self.nonlinearity.theta)?;
        let g = &self.grid;
        let grid = build_grid(&params, g.x_left, g.x_right, g.nx, g.ny)?;
        let n = &self.newton;
        let newton = NewtonOptions {
            tol_residual: n.tol_residual,
            max_iters: n.max_iters,
            damping: n.damping,
            min_step: n.min_step,
        };
        newton.validate()?;
        let c = &self.continuation;
        let opts = ContinuationOptions {
            initial_step: c.initial_step,
            min_step: c.min_step,
            grow: c.grow,
            fast_iters: c.fast_iters,
            max_speed_jump: c.max_speed_jump,
            enforce_extent: c.enforce_extent,
        };
        opts.validate()?;
        let plan = HomotopyPlan {
            target_s: c.target_s,
            epsilon0: c.epsilon0,
            target_eps: c.target_eps,
            stop_after: c.stop_after.into(),
        };
        plan.validate()?;
        if !(self.shooting_tol > 0.0) {
            return Err(CliError::Validation(format!(
                "shooting_tol = {} must be > 0",
                self.shooting_tol
            )));
        }
        if self.output.checkpoint_every == 0 {
            return Err(CliError::Validation("output.checkpoint_every must be >= 1".into()));
        }
        Ok(Setup {
            params,
            spec,
            grid,
            newton,
            opts,
            plan,
        })
    }

    /// Sets one named model quantity, for parameter sweeps.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> CliResult<()> {
        match name {
            "d" => self.params.d = value,
            "D" => self.params.line_d = value,
            "mu" => self.params.mu = value,
            "L" => self.params.depth = value,
            "theta" => self.nonlinearity.theta = value,
            _ => {
                return Err(CliError::Validation(format!(
                    "cannot sweep `{name}`; use one of d, D, mu, L, theta"
                )))
            }
        }
        Ok(())
    }
}
