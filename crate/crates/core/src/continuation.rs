//! Natural-parameter continuation along the homotopy
//! `Wentzell(0) → Wentzell(1) → Exchange(ε₀) → Exchange(1)`.
//!
//! Stage A raises `s` from 0, stage B hands the `s = 1` state over to the
//! exchange system at a small `ε₀`, and stage C raises `ε`. Each new
//! parameter value starts from a secant prediction through the two latest
//! states; failed or suspicious steps are halved and retried.
//!
//! The speed is a single-valued function of the parameter, so no arclength
//! parametrisation is used. A step that collapses below the minimum aborts
//! with [`Error::StepCollapse`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::diagnostics::{run_all_with_cmax, DiagnosticsReport};
use crate::grid::{dof_layout, Grid};
use crate::model::{c_max, ModelParams, NonlinearitySpec};
use crate::solver::{newton_solve, NewtonOptions};
use crate::state::{HomotopyFamily, WaveState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    /// Wentzell family, `s` increasing.
    A,
    /// Handoff to the exchange family at `ε₀`.
    B,
    /// Exchange family, `ε` increasing.
    C,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::A => "A",
            Stage::B => "B",
            Stage::C => "C",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Stage::A),
            "B" => Some(Stage::B),
            "C" => Some(Stage::C),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// Step multiplier after a fast convergence.
    pub grow: f64,
    /// Newton iterations at or below which the step grows.
    pub fast_iters: usize,
    /// Largest accepted relative change of `c` between records.
    pub max_speed_jump: f64,
    /// Abort when the grid is too short for the current decay rates.
    pub enforce_extent: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            min_step: 1e-4,
            grow: 1.5,
            fast_iters: 4,
            max_speed_jump: 0.2,
            enforce_extent: true,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "min_step",
                value: self.min_step,
                reason: "must be > 0",
            });
        }
        if !(self.initial_step >= self.min_step) {
            return Err(Error::InvalidParameter {
                name: "initial_step",
                value: self.initial_step,
                reason: "must be >= min_step",
            });
        }
        if !(self.grow >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "grow",
                value: self.grow,
                reason: "must be >= 1",
            });
        }
        if !(self.max_speed_jump > 0.0) {
            return Err(Error::InvalidParameter {
                name: "max_speed_jump",
                value: self.max_speed_jump,
                reason: "must be > 0",
            });
        }
        Ok(())
    }
}

/// Everything needed to take the next step, and to restart from a checkpoint
/// with identical results.
#[derive(Debug, Clone, PartialEq)]
pub struct Cursor {
    pub current: WaveState,
    /// Previous accepted state of the same family, for the secant predictor.
    pub previous: Option<WaveState>,
    /// Next step size to try.
    pub step: f64,
}

impl Cursor {
    pub fn start(state: WaveState, opts: &ContinuationOptions) -> Self {
        Self {
            current: state,
            previous: None,
            step: opts.initial_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationRecord {
    pub stage: Stage,
    pub family: HomotopyFamily,
    pub c: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub diagnostics: DiagnosticsReport,
    pub checkpoint_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPath {
    pub records: Vec<ContinuationRecord>,
    /// Cursor after the last record.
    pub cursor: Cursor,
}

impl ContinuationPath {
    pub fn last(&self) -> Option<&ContinuationRecord> {
        self.records.last()
    }

    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &ContinuationRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }
}

/// Receives every accepted record together with the cursor that follows it
/// and may return a checkpoint reference to store in the record.
pub trait RecordSink {
    fn accept(
        &mut self,
        record: &ContinuationRecord,
        cursor: &Cursor,
    ) -> core::result::Result<Option<String>, String>;
}

/// Sink that keeps nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _: &ContinuationRecord, _: &Cursor) -> core::result::Result<Option<String>, String> {
        Ok(None)
    }
}

impl<F> RecordSink for F
where
    F: FnMut(&ContinuationRecord, &Cursor) -> core::result::Result<Option<String>, String>,
{
    fn accept(
        &mut self,
        record: &ContinuationRecord,
        cursor: &Cursor,
    ) -> core::result::Result<Option<String>, String> {
        self(record, cursor)
    }
}

/// Problem data shared by every step of a path.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub params: &'a ModelParams,
    pub spec: &'a NonlinearitySpec,
    pub grid: &'a Grid,
    pub newton: &'a NewtonOptions,
    pub opts: &'a ContinuationOptions,
}

/// `x_right ≥ 8/γ_pred` and `|x_left| ≥ 8 max(d, D)/c`.
pub fn check_extent(
    grid: &Grid,
    params: &ModelParams,
    c: f64,
    gamma_pred: f64,
    parameter: f64,
) -> Result<()> {
    let left_need = 8.0 * params.max_diffusivity() / c;
    if -grid.x_left < left_need {
        return Err(Error::ExtentTooSmall {
            parameter,
            reason: format!("|x_left| = {} < 8 max(d, D)/c = {left_need}", -grid.x_left),
        });
    }
    if gamma_pred.is_finite() && gamma_pred > 0.0 {
        let right_need = 8.0 / gamma_pred;
        if grid.x_right < right_need {
            return Err(Error::ExtentTooSmall {
                parameter,
                reason: format!("x_right = {} < 8/gamma_pred = {right_need}", grid.x_right),
            });
        }
    }
    Ok(())
}

struct Driver<'a, 'p, S: RecordSink> {
    pb: Problem<'p>,
    cmax: f64,
    sink: &'a mut S,
    records: Vec<ContinuationRecord>,
}

impl<S: RecordSink> Driver<'_, '_, S> {
    fn emit(&mut self, stage: Stage, state: &WaveState, residual: f64, iterations: usize, cursor: &Cursor) -> Result<()> {
        let pb = self.pb;
        let diagnostics = run_all_with_cmax(state, pb.params, pb.spec, pb.grid, self.cmax);
        if pb.opts.enforce_extent {
            check_extent(pb.grid, pb.params, state.c, diagnostics.gamma_pred, state.family.parameter())?;
        }
        let mut record = ContinuationRecord {
            stage,
            family: state.family,
            c: state.c,
            residual_norm: residual,
            iterations,
            diagnostics,
            checkpoint_ref: None,
        };
        record.checkpoint_ref = self.sink.accept(&record, cursor).map_err(Error::Sink)?;
        log::info!(
            "stage {} param {:.6} c {:.12} iters {}",
            stage.as_str(),
            state.family.parameter(),
            state.c,
            iterations
        );
        self.records.push(record);
        Ok(())
    }

    /// Secant extrapolation of `(ψ, φ, c)` to `target`.
    fn predict(&self, cursor: &Cursor, target: f64) -> WaveState {
        let cur = &cursor.current;
        let family = cur.family.with_parameter(target);
        let prev = match &cursor.previous {
            Some(p) if p.family.same_kind(&cur.family) && p.family.parameter() != cur.family.parameter() => p,
            _ => {
                return WaveState {
                    family,
                    ..cur.clone()
                }
            }
        };
        let layout = dof_layout(self.pb.grid, cur.family);
        let t = (target - cur.family.parameter()) / (cur.family.parameter() - prev.family.parameter());
        let a = cur.to_unknowns(&layout);
        let b = prev.to_unknowns(&layout);
        let u: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (x - y)).collect();
        WaveState::from_unknowns(&u, &layout, family)
    }

    /// Steps the cursor's parameter up to `target`, emitting each accepted
    /// state under `stage`.
    fn march(&mut self, stage: Stage, mut cursor: Cursor, target: f64) -> Result<Cursor> {
        let pb = self.pb;
        loop {
            let p = cursor.current.family.parameter();
            if p >= target {
                return Ok(cursor);
            }
            let mut step = cursor.step;
            let sol = loop {
                let remaining = target - p;
                let (next, used) = if step >= remaining { (target, remaining) } else { (p + step, step) };
                let predicted = self.predict(&cursor, next);
                let cause = match newton_solve(&predicted, pb.params, pb.spec, pb.grid, pb.newton) {
                    Ok(sol) => {
                        let jump = (sol.state.c - cursor.current.c).abs();
                        if jump <= pb.opts.max_speed_jump * cursor.current.c {
                            break sol;
                        }
                        format!("speed jump {jump} exceeds {} c", pb.opts.max_speed_jump)
                    }
                    Err(e) => e.to_string(),
                };
                log::debug!("step {used} from {p} rejected: {cause}");
                step = 0.5 * used;
                if step < pb.opts.min_step {
                    return Err(Error::StepCollapse {
                        parameter: p,
                        min_step: pb.opts.min_step,
                        cause,
                    });
                }
            };
            // `step` is the unclamped size that succeeded
            let next_step = if sol.iterations <= pb.opts.fast_iters {
                step * pb.opts.grow
            } else {
                step
            };
            cursor = Cursor {
                previous: Some(cursor.current),
                current: sol.state,
                step: next_step,
            };
            let state = cursor.current.clone();
            self.emit(stage, &state, sol.residual_norm, sol.iterations, &cursor)?;
        }
    }
}

fn check_target(current: f64, target: f64) -> Result<()> {
    if target < current {
        return Err(Error::ParameterNotMonotone { current, target });
    }
    Ok(())
}

fn new_driver<'a, 'p, S: RecordSink>(pb: Problem<'p>, sink: &'a mut S) -> Result<Driver<'a, 'p, S>> {
    pb.opts.validate()?;
    pb.newton.validate()?;
    pb.params.validate()?;
    pb.spec.validate()?;
    Ok(Driver {
        pb,
        cmax: c_max(pb.params, pb.spec),
        sink,
        records: Vec::new(),
    })
}

fn residual_of(state: &WaveState, pb: &Problem) -> Result<f64> {
    let r = crate::residual::assemble_residual(state, pb.params, pb.spec, pb.grid)?;
    Ok(crate::solver::residual_norm(&r))
}

fn family_march<S: RecordSink>(
    start: Cursor,
    pb: Problem,
    stage: Stage,
    target: f64,
    emit_start: bool,
    sink: &mut S,
) -> Result<ContinuationPath> {
    check_target(start.current.family.parameter(), target)?;
    start.current.family.with_parameter(target).validate()?;
    let mut driver = new_driver(pb, sink)?;
    if emit_start {
        let res = residual_of(&start.current, &pb)?;
        let state = start.current.clone();
        driver.emit(stage, &state, res, 0, &start)?;
    }
    let cursor = driver.march(stage, start, target)?;
    Ok(ContinuationPath {
        records: driver.records,
        cursor,
    })
}

/// Raises `s` from the start state's value to `target_s`.
///
/// The start state is emitted as the first record.
pub fn continue_wentzell<S: RecordSink>(
    start: Cursor,
    pb: Problem,
    target_s: f64,
    sink: &mut S,
) -> Result<ContinuationPath> {
    if start.current.family.is_exchange() {
        return Err(Error::WrongFamily);
    }
    family_march(start, pb, Stage::A, target_s, true, sink)
}

/// Raises `ε` from the start state's value to `target_eps`.
///
/// The start state is emitted as the first record when `emit_start` is set.
pub fn continue_exchange<S: RecordSink>(
    start: Cursor,
    pb: Problem,
    target_eps: f64,
    emit_start: bool,
    sink: &mut S,
) -> Result<ContinuationPath> {
    if !start.current.family.is_exchange() {
        return Err(Error::WrongFamily);
    }
    family_march(start, pb, Stage::C, target_eps, emit_start, sink)
}

/// Exchange-family predictor from a Wentzell state:
/// `μφ = ψ(·, 0) + ε₀ d ∂ᵧψ(·, 0)`, the exchange condition solved for `φ`.
///
/// `∂ᵧψ` uses the same one-sided difference as the boundary rows.
pub fn handoff_to_system(
    state: &WaveState,
    params: &ModelParams,
    grid: &Grid,
    epsilon0: f64,
) -> Result<WaveState> {
    if state.family.is_exchange() {
        return Err(Error::WrongFamily);
    }
    if !(0.0..=0.1).contains(&epsilon0) {
        return Err(Error::InvalidParameter {
            name: "epsilon0",
            value: epsilon0,
            reason: "must lie in [0, 0.1]",
        });
    }
    state.check_shape(grid)?;
    let top = grid.ny - 1;
    let at = |i: usize, j: usize| state.psi[grid.node(i, j)];
    let phi = (0..grid.nx)
        .map(|i| {
            let dy = (3.0 * at(i, top) - 4.0 * at(i, top - 1) + at(i, top - 2)) / (2.0 * grid.hy);
            (at(i, top) + epsilon0 * params.d * dy) / params.mu
        })
        .collect();
    Ok(WaveState {
        c: state.c,
        psi: state.psi.clone(),
        phi: Some(phi),
        family: HomotopyFamily::Exchange { epsilon: epsilon0 },
    })
}

/// Targets of a full homotopy run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyPlan {
    pub target_s: f64,
    pub epsilon0: f64,
    pub target_eps: f64,
    /// Last stage to execute.
    pub stop_after: Stage,
}

impl Default for HomotopyPlan {
    fn default() -> Self {
        Self {
            target_s: 1.0,
            epsilon0: 0.05,
            target_eps: 1.0,
            stop_after: Stage::C,
        }
    }
}

impl HomotopyPlan {
    pub fn validate(&self) -> Result<()> {
        HomotopyFamily::Wentzell { s: self.target_s }.validate()?;
        if !(self.epsilon0 > 0.0 && self.epsilon0 <= 0.1) {
            return Err(Error::InvalidParameter {
                name: "epsilon0",
                value: self.epsilon0,
                reason: "must lie in (0, 0.1]",
            });
        }
        HomotopyFamily::Exchange { epsilon: self.target_eps }.validate()?;
        check_target(self.epsilon0, self.target_eps)
    }
}

/// Newton-corrects the handoff predictor at `ε₀` and emits it as stage B.
fn stage_b<S: RecordSink>(wentzell: &WaveState, pb: Problem, plan: &HomotopyPlan, sink: &mut S) -> Result<ContinuationPath> {
    let mut driver = new_driver(pb, sink)?;
    let predicted = handoff_to_system(wentzell, pb.params, pb.grid, plan.epsilon0)?;
    let sol = newton_solve(&predicted, pb.params, pb.spec, pb.grid, pb.newton)?;
    let cursor = Cursor::start(sol.state, pb.opts);
    let state = cursor.current.clone();
    driver.emit(Stage::B, &state, sol.residual_norm, sol.iterations, &cursor)?;
    Ok(ContinuationPath {
        records: driver.records,
        cursor,
    })
}

fn extend(path: &mut ContinuationPath, next: ContinuationPath) {
    path.records.extend(next.records);
    path.cursor = next.cursor;
}

/// Runs the stages that follow `stage` (exclusive) or resume it, according
/// to where the cursor stands.
fn drive<S: RecordSink>(
    mut path: ContinuationPath,
    stage: Stage,
    pb: Problem,
    plan: &HomotopyPlan,
    sink: &mut S,
) -> Result<ContinuationPath> {
    let mut stage = stage;
    loop {
        let next = match stage {
            Stage::A => {
                let target = plan.target_s;
                if path.cursor.current.family.parameter() < target {
                    let more = family_march(path.cursor.clone(), pb, Stage::A, target, false, sink)?;
                    extend(&mut path, more);
                }
                Stage::B
            }
            Stage::B => {
                let b = stage_b(&path.cursor.current, pb, plan, sink)?;
                extend(&mut path, b);
                Stage::C
            }
            Stage::C => {
                let more = family_march(path.cursor.clone(), pb, Stage::C, plan.target_eps, false, sink)?;
                extend(&mut path, more);
                return Ok(path);
            }
        };
        if stage >= plan.stop_after {
            return Ok(path);
        }
        stage = next;
    }
}

/// Full path from a converged `Wentzell(0)` state.
pub fn run_homotopy<S: RecordSink>(
    start: WaveState,
    pb: Problem,
    plan: &HomotopyPlan,
    sink: &mut S,
) -> Result<ContinuationPath> {
    plan.validate()?;
    let path = continue_wentzell(Cursor::start(start, pb.opts), pb, plan.target_s, sink)?;
    if plan.stop_after == Stage::A {
        return Ok(path);
    }
    drive(path, Stage::B, pb, plan, sink)
}

/// Continues a path from a cursor saved at a record of `stage`.
///
/// Only records after the saved one are emitted, and they are identical to
/// those of an uninterrupted run.
pub fn resume_homotopy<S: RecordSink>(
    cursor: Cursor,
    stage: Stage,
    pb: Problem,
    plan: &HomotopyPlan,
    sink: &mut S,
) -> Result<ContinuationPath> {
    plan.validate()?;
    let expect_exchange = stage != Stage::A;
    if cursor.current.family.is_exchange() != expect_exchange {
        return Err(Error::WrongFamily);
    }
    let path = ContinuationPath {
        records: Vec::new(),
        cursor,
    };
    let (from, stage) = match stage {
        Stage::A => (path, Stage::A),
        // stage B is a single record; what follows it is stage C
        Stage::B | Stage::C => (path, Stage::C),
    };
    if stage > plan.stop_after {
        return Ok(from);
    }
    drive(from, stage, pb, plan, sink)
}
