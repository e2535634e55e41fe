//! Damped Newton for the bordered system and the one-dimensional shooting
//! solver that provides the starting wave.

use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::grid::{dof_layout, Grid};
use crate::linalg::linear_solve;
use crate::model::{lipschitz_constant, ModelParams, NonlinearitySpec};
use crate::residual::{assemble_jacobian, assemble_residual};
use crate::state::{HomotopyFamily, WaveState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on `‖R‖∞`.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Backtracking factor applied to the step length on Armijo failure.
    pub damping: f64,
    /// Smallest step length tried before giving up.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_iters: 50,
            damping: 0.5,
            min_step: 1e-8,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol_residual",
                value: self.tol_residual,
                reason: "must be > 0",
            });
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter {
                name: "damping",
                value: self.damping,
                reason: "must lie in (0, 1)",
            });
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "min_step",
                value: self.min_step,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub state: WaveState,
    pub iterations: usize,
    pub residual_norm: f64,
}

pub fn residual_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

const ARMIJO_SLOPE: f64 = 1e-4;

/// Newton's method with Armijo backtracking on `‖R‖∞`.
///
/// Every accepted step strictly decreases the residual norm. The result is
/// deterministic for given inputs.
pub fn newton_solve(
    init: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    opts.validate()?;
    init.family.validate()?;
    init.check_shape(grid)?;
    let peclet = grid.peclet(init.c.abs(), params.d);
    if peclet >= 2.0 {
        log::warn!("cell Peclet number c*hx/d = {peclet:.3} >= 2; centred convection may oscillate");
    }

    let family = init.family;
    let layout = dof_layout(grid, family);
    let mut u = init.to_unknowns(&layout);
    let mut state = init.clone();
    let mut r = assemble_residual(&state, params, spec, grid)?;
    let mut norm = residual_norm(&r);

    for it in 0..=opts.max_iters {
        if norm <= opts.tol_residual {
            if state.c <= 0.0 {
                return Err(Error::NegativeSpeed(state.c));
            }
            return Ok(NewtonSolution {
                state,
                iterations: it,
                residual_norm: norm,
            });
        }
        if it == opts.max_iters {
            break;
        }
        let jac = assemble_jacobian(&state, params, spec, grid)?;
        let delta = linear_solve(&jac, &r)?;

        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a - lambda * b).collect();
            let trial_state = WaveState::from_unknowns(&trial, &layout, family);
            let trial_r = assemble_residual(&trial_state, params, spec, grid)?;
            let trial_norm = residual_norm(&trial_r);
            if trial_norm < (1.0 - ARMIJO_SLOPE * lambda) * norm {
                u = trial;
                state = trial_state;
                r = trial_r;
                norm = trial_norm;
                break;
            }
            lambda *= opts.damping;
            if lambda < opts.min_step {
                return Err(Error::StepUnderflow {
                    lambda,
                    residual: norm,
                });
            }
        }
    }
    Err(Error::MaxItersExceeded {
        iterations: opts.max_iters,
        residual: norm,
    })
}

/// Travelling front of `-d ψ'' + c ψ' = f(ψ)` on the line, normalised so
/// that `ψ(0) = θ`.
///
/// For `x ≤ 0` the profile is exactly `θ e^{(c/d) x}`; on `[0, x_end]` it is
/// a cubic Hermite interpolant of the shooting trajectory; beyond `x_end` it
/// follows the linearised tail `1 - (1 - ψ_end) e^{-γ (x - x_end)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneDimWave {
    pub c: f64,
    pub theta: f64,
    pub d: f64,
    pub xs: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    /// Decay rate of `1 - ψ` at `+∞`.
    pub tail_rate: f64,
}

impl OneDimWave {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.theta * exp(self.c / self.d * x);
        }
        let n = self.xs.len();
        let x_end = self.xs[n - 1];
        if x >= x_end {
            return 1.0 - (1.0 - self.psi[n - 1]) * exp(-self.tail_rate * (x - x_end));
        }
        let k = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(k) => return self.psi[k],
            Err(k) => k - 1,
        };
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.psi[k] + h10 * h * self.dpsi[k] + h01 * self.psi[k + 1] + h11 * h * self.dpsi[k + 1]
    }

    /// Position where the profile takes `value ∈ (0, 1)`.
    pub fn position_of(&self, value: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.eval(lo) > value {
            lo *= 2.0;
        }
        while self.eval(hi) < value {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < value {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Embeds the front y-uniformly in the strip as a `Wentzell(0)` state.
    ///
    /// The profile is translated so that it meets the phase condition at
    /// `x = shift` (use `0` for the anchor), and the Dirichlet values at the
    /// ends of the grid are imposed exactly.
    pub fn embed(&self, grid: &Grid, shift: f64) -> WaveState {
        let mid = self.position_of(0.5 * (1.0 + self.theta));
        let row: Vec<f64> = (0..grid.nx)
            .map(|i| match i {
                0 => 0.0,
                i if i == grid.nx - 1 => 1.0,
                i => self.eval(grid.x(i) - shift + mid),
            })
            .collect();
        let mut psi = Vec::with_capacity(grid.n_nodes());
        for _ in 0..grid.ny {
            psi.extend_from_slice(&row);
        }
        WaveState {
            c: self.c,
            psi,
            phi: None,
            family: HomotopyFamily::Wentzell { s: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
    Undecided,
}

struct Trajectory {
    xs: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
}

const MAX_SHOT_STEPS: usize = 20_000_000;
const RECORD_STRIDE: usize = 4;
const RECORD_STOP: f64 = 1e-7;

/// RK4 integration from `ψ(0) = θ, ψ'(0) = cθ/d` until the trajectory either
/// crosses 1 while increasing or turns back below 1.
fn shoot(
    c: f64,
    d: f64,
    spec: &NonlinearitySpec,
    h: f64,
    mut record: Option<&mut Trajectory>,
) -> Shot {
    let rhs = |y: [f64; 2]| -> [f64; 2] { [y[1], (c * y[1] - spec.eval_from_right(y[0]).0) / d] };
    let th = spec.theta;
    let mut y = [th, c * th / d];
    if let Some(t) = record.as_deref_mut() {
        t.xs.push(0.0);
        t.psi.push(y[0]);
        t.dpsi.push(y[1]);
    }
    for step in 1..=MAX_SHOT_STEPS {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for q in 0..2 {
            y[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        if let Some(t) = record.as_deref_mut() {
            if y[1] <= 0.0 || y[0] >= 1.0 {
                return Shot::Undecided;
            }
            if step % RECORD_STRIDE == 0 || 1.0 - y[0] <= RECORD_STOP {
                t.xs.push(step as f64 * h);
                t.psi.push(y[0]);
                t.dpsi.push(y[1]);
            }
            if 1.0 - y[0] <= RECORD_STOP {
                return Shot::Undecided;
            }
            continue;
        }
        if y[0] > 1.0 && y[1] > 0.0 {
            return Shot::Overshoot;
        }
        if y[1] <= 0.0 {
            return Shot::Undershoot;
        }
    }
    Shot::Undecided
}

/// Decay rate of `1 - ψ` at `+∞` for the one-dimensional front:
/// root of `d γ² + c γ + f'(1) = 0`.
pub fn one_dim_tail_rate(c: f64, d: f64, fprime1: f64) -> f64 {
    (sqrt(c * c - 4.0 * d * fprime1) - c) / (2.0 * d)
}

/// Speed and profile of the one-dimensional ignition front by shooting.
///
/// The left tail `θ e^{(c/d) x}` is exact because `f` vanishes below `θ`, so
/// the trajectory starts at `x = 0` on that tail. The speed is bisected
/// between undershoot (`ψ'` vanishes below 1) and overshoot (`ψ` crosses 1
/// while increasing) until the bracket is narrower than `tol`.
///
/// The upper end of the initial bracket is `2 √(d K)` with
/// `K = max(Lip f, sup f(u)/u)`; for a continuous `f` this is the usual
/// `2 √(d Lip f)`, and it remains a valid bound for the discontinuous oracle.
pub fn solve_1d_ignition_shooting(d: f64, spec: &NonlinearitySpec, tol: f64) -> Result<OneDimWave> {
    spec.validate()?;
    if !(d > 0.0) {
        return Err(Error::InvalidParameter {
            name: "d",
            value: d,
            reason: "must be > 0",
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be > 0",
        });
    }
    let growth = lipschitz_constant(spec).max(spec.linear_growth_bound());
    let c_hi = 2.0 * sqrt(d * growth);
    let h = 1e-3 * d / c_hi;

    let mut hi = c_hi;
    if shoot(hi, d, spec, h, None) != Shot::Overshoot {
        return Err(Error::BracketNotFound { lo: 0.0, hi });
    }
    // halve towards 0; very small speeds need very long trajectories
    let mut lo = 0.5 * hi;
    loop {
        match shoot(lo, d, spec, h, None) {
            Shot::Undershoot => break,
            Shot::Overshoot if lo > tol => {
                hi = lo;
                lo *= 0.5;
            }
            _ => return Err(Error::BracketNotFound { lo, hi }),
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match shoot(mid, d, spec, h, None) {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
            }
        }
    }
    let c = 0.5 * (lo + hi);

    let mut traj = Trajectory {
        xs: Vec::new(),
        psi: Vec::new(),
        dpsi: Vec::new(),
    };
    shoot(c, d, spec, h, Some(&mut traj));
    Ok(OneDimWave {
        c,
        theta: spec.theta,
        d,
        xs: traj.xs,
        psi: traj.psi,
        dpsi: traj.dpsi,
        tail_rate: one_dim_tail_rate(c, d, spec.slope_at_one()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_closed_form_speeds() {
        for (theta, expected) in [(0.25, 1.5), (0.04, 4.8)] {
            let spec = NonlinearitySpec::piecewise_linear(theta).unwrap();
            let wave = solve_1d_ignition_shooting(1.0, &spec, 1e-8).unwrap();
            assert!((wave.c - expected).abs() < 1e-6, "theta={theta}: c={}", wave.c);
        }
    }

    #[test]
    fn closed_form_oracle_algebra() {
        // c²·4θ/(1-θ)² = 4 at the matching speed
        for theta in [0.25, 0.04] {
            let c: f64 = (1.0 - theta) / sqrt(theta);
            assert!((c * c * 4.0 * theta / ((1.0 - theta) * (1.0 - theta)) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_is_monotone_with_exact_left_tail() {
        let spec = NonlinearitySpec::smooth_cubic(0.3).unwrap();
        let wave = solve_1d_ignition_shooting(1.0, &spec, 1e-9).unwrap();
        assert!(wave.c > 0.0 && wave.c <= 2.0 * sqrt(lipschitz_constant(&spec)));
        assert_eq!(wave.eval(0.0), 0.3);
        let x = -3.0;
        assert!((wave.eval(x) - 0.3 * exp(wave.c * x)).abs() < 1e-15);
        let mut prev = wave.eval(-20.0);
        for k in 1..4000 {
            let v = wave.eval(-20.0 + k as f64 * 0.025);
            // strict until 1 - ψ reaches rounding level
            assert!(v > prev || (v >= prev && 1.0 - v < 1e-12), "not increasing at step {k}");
            prev = v;
        }
        assert!(wave.eval(200.0) > 1.0 - 1e-12);
    }

    #[test]
    fn invalid_tolerance_rejected() {
        let spec = NonlinearitySpec::smooth_cubic(0.3).unwrap();
        assert!(solve_1d_ignition_shooting(1.0, &spec, 0.0).is_err());
        assert!(solve_1d_ignition_shooting(-1.0, &spec, 1e-6).is_err());
    }

    #[test]
    fn newton_options_validation() {
        let bad = NewtonOptions {
            damping: 1.0,
            ..NewtonOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
