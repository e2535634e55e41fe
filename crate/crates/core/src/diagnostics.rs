//! Runtime checks of the a-priori properties of travelling waves.
//!
//! Every converged state should satisfy
//!
//! - `0 ≤ ψ, μφ ≤ 1` ([`check_bounds`]),
//! - `∂ₓψ ≥ 0` and `φ' ≥ 0` ([`check_monotonicity`]),
//! - `inf ψ ≤ μφ ≤ sup ψ` for the exchange system ([`check_sandwich`]),
//! - `c (L + s/μ) = ∬ f(ψ)`, with `s = 1` for the exchange system
//!   ([`speed_identity`]),
//! - `ψ ≤ θ e^{r (x - x_θ)}` left of the ignition point with
//!   `r = c / max(d, D)` ([`left_decay_bound`]),
//! - `1 - ψ ~ e^{-γx}` at `+∞` with `γ` from the dispersion relation
//!   ([`dispersion_root`], [`fit_right_decay`]),
//! - `0 < c < c_max`.
//!
//! Checks report and never abort; [`run_all`] folds them into a
//! [`DiagnosticsReport`].

use libm::{exp, log, sqrt, tanh};

use crate::grid::Grid;
use crate::model::{c_max, ModelParams, NonlinearitySpec};
use crate::state::{HomotopyFamily, WaveState};
use crate::{Error, Result};

pub const BOUNDS_TOL: f64 = 1e-8;
pub const MONOTONE_TOL: f64 = 1e-6;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const LEFT_DECAY_TOL: f64 = 1e-8;

/// Fitting window for the right tail: `FIT_LOW < 1 - ψ < FIT_HIGH`.
pub const FIT_LOW: f64 = 1e-8;
pub const FIT_HIGH: f64 = 1e-2;
/// Nodes kept clear of the right Dirichlet end when fitting.
pub const FIT_MARGIN_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    /// Strip node `j * nx + i`.
    Psi,
    /// Line node `i`; values are reported as `μφ`.
    Phi,
}

/// Worst node of a check: the one closest to (or furthest past) the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offender {
    pub field: Field,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub ok: bool,
    pub worst: Option<Offender>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Details {
    pub bounds: Option<Offender>,
    pub monotone: Option<Offender>,
    pub sandwich: Option<Offender>,
    pub left_decay: Option<Offender>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub bounds_ok: bool,
    pub monotone_ok: bool,
    /// `None` for the Wentzell family.
    pub sandwich_ok: Option<bool>,
    pub left_decay_ok: bool,
    /// `|c_est - c| / c`.
    pub speed_identity_gap: f64,
    /// NaN when the fitting window is empty.
    pub gamma_fit: f64,
    /// NaN when the dispersion relation has no root.
    pub gamma_pred: f64,
    /// Root of the relation built with `f'(1)/2`; a lower bound on the decay.
    pub gamma_lower: f64,
    pub gamma_lim: f64,
    pub cmax_margin: f64,
    pub min_psi: f64,
    pub max_psi: f64,
    /// Minimum forward-difference quotient of ψ in x over all rows.
    pub min_dx_psi: f64,
    pub details: Details,
}

impl DiagnosticsReport {
    /// All invariant checks pass and `0 < c < c_max`.
    pub fn invariants_ok(&self, c: f64) -> bool {
        self.bounds_ok
            && self.monotone_ok
            && self.sandwich_ok.unwrap_or(true)
            && c > 0.0
            && self.cmax_margin > 0.0
    }

    /// `γ_fit` exceeds the lower bound and is within `rel` of `γ_pred`;
    /// `None` when either rate is unavailable.
    pub fn right_decay_ok(&self, rel: f64) -> Option<bool> {
        if !self.gamma_fit.is_finite() || !self.gamma_pred.is_finite() {
            return None;
        }
        let close = (self.gamma_fit - self.gamma_pred).abs() <= rel * self.gamma_pred;
        Some(close && self.gamma_fit > self.gamma_lower)
    }
}

fn mu_phi<'a>(state: &'a WaveState, mu: f64) -> impl Iterator<Item = f64> + 'a {
    state.phi.iter().flatten().map(move |&p| mu * p)
}

/// `-1e-8 ≤ ψ ≤ 1 + 1e-8`, and the same for `μφ` when present.
pub fn check_bounds(state: &WaveState, params: &ModelParams) -> Fragment {
    let excess = |v: f64| (-v).max(v - 1.0);
    let mut worst: Option<(f64, Offender)> = None;
    let mut visit = |field, index, value| {
        let e = excess(value);
        if worst.is_none_or(|(w, _)| e > w) {
            worst = Some((e, Offender { field, index, value }));
        }
    };
    for (k, &v) in state.psi.iter().enumerate() {
        visit(Field::Psi, k, v);
    }
    for (k, v) in mu_phi(state, params.mu).enumerate() {
        visit(Field::Phi, k, v);
    }
    Fragment {
        ok: worst.is_none_or(|(e, _)| e <= BOUNDS_TOL),
        worst: worst.map(|w| w.1),
    }
}

/// Forward differences of every row of ψ and of φ are `≥ -1e-6`.
///
/// The offender value is the most negative forward difference.
pub fn check_monotonicity(state: &WaveState, grid: &Grid) -> Fragment {
    let mut worst: Option<Offender> = None;
    let mut visit = |field, index, value: f64| {
        if worst.is_none_or(|w| value < w.value) {
            worst = Some(Offender { field, index, value });
        }
    };
    for j in 0..grid.ny {
        let row = state.row(grid, j);
        for i in 0..grid.nx - 1 {
            visit(Field::Psi, grid.node(i, j), row[i + 1] - row[i]);
        }
    }
    if let Some(phi) = &state.phi {
        for (i, w) in phi.windows(2).enumerate() {
            visit(Field::Phi, i, w[1] - w[0]);
        }
    }
    Fragment {
        ok: worst.is_none_or(|w| w.value >= -MONOTONE_TOL),
        worst,
    }
}

/// `min ψ - 1e-8 ≤ μφ ≤ max ψ + 1e-8` on the line.
pub fn check_sandwich(state: &WaveState, params: &ModelParams) -> Result<Fragment> {
    if !state.family.is_exchange() || state.phi.is_none() {
        return Err(Error::WrongFamily);
    }
    let lo = state.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = state.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut worst: Option<(f64, Offender)> = None;
    for (index, value) in mu_phi(state, params.mu).enumerate() {
        let e = (lo - value).max(value - hi);
        if worst.is_none_or(|(w, _)| e > w) {
            worst = Some((
                e,
                Offender {
                    field: Field::Phi,
                    index,
                    value,
                },
            ));
        }
    }
    Ok(Fragment {
        ok: worst.is_none_or(|(e, _)| e <= SANDWICH_TOL),
        worst: worst.map(|w| w.1),
    })
}

/// Trapezoidal `∬ f(ψ)` over the truncated strip.
pub fn reaction_integral(state: &WaveState, spec: &NonlinearitySpec, grid: &Grid) -> f64 {
    let weight = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for j in 0..grid.ny {
        let row = state.row(grid, j);
        let wy = weight(j, grid.ny);
        for (i, &v) in row.iter().enumerate() {
            total += wy * weight(i, grid.nx) * spec.value(v);
        }
    }
    total * grid.hx * grid.hy
}

/// Speed recovered from the integral identity
/// `c (L + s/μ) = ∬ f(ψ)`; the exchange system uses `s = 1` at every `ε`.
pub fn speed_identity(
    state: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
) -> f64 {
    let s = match state.family {
        HomotopyFamily::Wentzell { s } => s,
        HomotopyFamily::Exchange { .. } => 1.0,
    };
    reaction_integral(state, spec, grid) / (params.depth + s / params.mu)
}

/// Left-tail supersolution bound `ψ(x, y) ≤ θ e^{r (x - x_θ)} + 1e-8` for
/// `x ≤ x_θ`, with `r = c / max(d, D)` and `x_θ` the rightmost node where
/// `max_y ψ ≤ θ`.
pub fn left_decay_bound(
    state: &WaveState,
    params: &ModelParams,
    theta: f64,
    grid: &Grid,
) -> Result<Fragment> {
    let column_max = |i: usize| {
        (0..grid.ny)
            .map(|j| state.psi[grid.node(i, j)])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut i_theta = None;
    for i in 0..grid.nx {
        if column_max(i) <= theta {
            i_theta = Some(i);
        } else {
            break;
        }
    }
    // the Dirichlet column alone does not count as a crossing
    let i_theta = match i_theta {
        Some(i) if i > 0 => i,
        _ => return Err(Error::ThresholdNotCrossed),
    };
    let r = state.c / params.max_diffusivity();
    let x_theta = grid.x(i_theta);
    let mut worst: Option<(f64, Offender)> = None;
    for i in 0..=i_theta {
        let bound = theta * exp(r * (grid.x(i) - x_theta));
        for j in 0..grid.ny {
            let k = grid.node(i, j);
            let e = state.psi[k] - bound;
            if worst.is_none_or(|(w, _)| e > w) {
                worst = Some((
                    e,
                    Offender {
                        field: Field::Psi,
                        index: k,
                        value: state.psi[k],
                    },
                ));
            }
        }
    }
    Ok(Fragment {
        ok: worst.is_none_or(|(e, _)| e <= LEFT_DECAY_TOL),
        worst: worst.map(|w| w.1),
    })
}

/// Inputs of the dispersion relation for the decay of `1 - ψ` at `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionQuery {
    pub c: f64,
    pub params: ModelParams,
    pub family: HomotopyFamily,
    /// `f'(1) < 0`.
    pub fprime1: f64,
}

impl DispersionQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.fprime1 < 0.0) {
            return Err(Error::InvalidParameter {
                name: "fprime1",
                value: self.fprime1,
                reason: "must be < 0",
            });
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.c,
                reason: "must be > 0",
            });
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRoot {
    pub gamma: f64,
    /// Positive zero of `β(γ)`; the root lies in `(0, γ_lim]`.
    pub gamma_lim: f64,
}

/// `γ_lim` for the linearisation `slope · (1 - ψ)`:
/// positive root of `dγ² + cγ + slope = 0`.
fn gamma_lim_for(c: f64, d: f64, slope: f64) -> f64 {
    (sqrt(c * c - 4.0 * d * slope) - c) / (2.0 * d)
}

/// `γ_lim = (√(c² - 4d f'(1)) - c) / (2d)`.
pub fn gamma_lim(c: f64, d: f64, fprime1: f64) -> f64 {
    gamma_lim_for(c, d, fprime1)
}

/// `γ_lim` when the linearisation is halved:
/// `(√(c² - 2d f'(1)) - c) / (2d)`.
pub fn gamma_lim_half(c: f64, d: f64, fprime1: f64) -> f64 {
    gamma_lim_for(c, d, 0.5 * fprime1)
}

/// Bisection for the decay rate with linearisation slope `slope` (negative).
///
/// With `β(γ) = √(-slope/d - γ(γ + c/d))` the relations are
///
/// ```text
/// Wentzell(s):  s (Dγ² + cγ) = μ d β tanh(βL)
/// Exchange(ε):  Dγ² + cγ     = μ d β tanh(βL) / (1 + ε d β tanh(βL))
/// ```
fn dispersion_root_for(q: &DispersionQuery, slope: f64) -> Result<DispersionRoot> {
    q.validate()?;
    let p = &q.params;
    let c = q.c;
    let lim = gamma_lim_for(c, p.d, slope);
    let g = |gamma: f64| {
        let b2 = -slope / p.d - gamma * (gamma + c / p.d);
        let beta = sqrt(b2.max(0.0));
        let bt = p.d * beta * tanh(beta * p.depth);
        let line = p.line_d * gamma * gamma + c * gamma;
        match q.family {
            HomotopyFamily::Wentzell { s } => s * line - p.mu * bt,
            HomotopyFamily::Exchange { epsilon } => line - p.mu * bt / (1.0 + epsilon * bt),
        }
    };
    if let HomotopyFamily::Wentzell { s } = q.family {
        if s == 0.0 {
            return Ok(DispersionRoot {
                gamma: lim,
                gamma_lim: lim,
            });
        }
    }
    let (mut lo, mut hi) = (0.0, lim);
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::NoRoot { gamma_lim: lim });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DispersionRoot {
        gamma: 0.5 * (lo + hi),
        gamma_lim: lim,
    })
}

/// Decay rate of `1 - ψ` at `+∞` predicted by the linearisation at `ψ = 1`.
///
/// At `s = 0` the relation degenerates and the one-dimensional rate `γ_lim`
/// is returned.
pub fn dispersion_root(q: &DispersionQuery) -> Result<DispersionRoot> {
    dispersion_root_for(q, q.fprime1)
}

/// Same relation with `f'(1)/2`: the rate of the supersolution
/// `C e^{-γx} cosh(β(y + L))`, which bounds the true decay from below.
pub fn dispersion_root_half(q: &DispersionQuery) -> Result<DispersionRoot> {
    dispersion_root_for(q, 0.5 * q.fprime1)
}

/// Decay rate of `1 - ψ` along `y = -L` by least squares on
/// `log(1 - ψ)` over the nodes with `1e-8 < 1 - ψ < 1e-2` that lie at least
/// five cells from the right end.
pub fn fit_right_decay(state: &WaveState, grid: &Grid) -> Result<f64> {
    let row = state.row(grid, 0);
    let last = grid.nx.saturating_sub(1 + FIT_MARGIN_NODES);
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in row.iter().enumerate().take(last + 1) {
        let gap = 1.0 - v;
        if gap > FIT_LOW && gap < FIT_HIGH {
            let (x, y) = (grid.x(i), log(gap));
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
    }
    if n < 2.0 {
        return Err(Error::WindowEmpty);
    }
    let det = n * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::WindowEmpty);
    }
    Ok(-(n * sxy - sx * sy) / det)
}

/// Sup distance between `ψ_a` sampled at fractional node offset `shift` and
/// `ψ_b`, over the nodes where both are defined.
fn shifted_distance(a: &WaveState, b: &WaveState, grid: &Grid, shift: f64) -> f64 {
    let nx = grid.nx as isize;
    let base = libm::floor(shift);
    let frac = shift - base;
    let k = base as isize;
    let mut worst: f64 = 0.0;
    for j in 0..grid.ny {
        let ra = a.row(grid, j);
        let rb = b.row(grid, j);
        for i in 0..nx {
            let ia = i + k;
            let needs_next = frac > 0.0;
            if ia < 0 || ia >= nx || (needs_next && ia + 1 >= nx) {
                continue;
            }
            let ia = ia as usize;
            let va = if needs_next {
                (1.0 - frac) * ra[ia] + frac * ra[ia + 1]
            } else {
                ra[ia]
            };
            worst = worst.max((va - rb[i as usize]).abs());
        }
    }
    worst
}

/// Shift `r` minimising `sup |ψ_a(· + r) - ψ_b|` and the minimum.
///
/// Integer node shifts up to half the grid are scanned, then the best one is
/// refined by a parabola through its neighbours; ψ_a is interpolated linearly
/// at the refined shift, which is kept only if it lowers the distance.
pub fn translation_collapse(a: &WaveState, b: &WaveState, grid: &Grid) -> Result<(f64, f64)> {
    let n = grid.n_nodes();
    if a.psi.len() != n
        || b.psi.len() != n
        || !a.family.same_kind(&b.family)
        || a.family.parameter() != b.family.parameter()
    {
        return Err(Error::GridMismatch);
    }
    let max_shift = (grid.nx / 2) as isize;
    let dist = |k: isize| shifted_distance(a, b, grid, k as f64);
    let mut best = (0isize, dist(0));
    for k in 1..=max_shift {
        for kk in [k, -k] {
            let v = dist(kk);
            if v < best.1 {
                best = (kk, v);
            }
        }
    }
    let (k, g0) = best;
    let mut shift = k as f64;
    let mut value = g0;
    if k.abs() < max_shift {
        let (gm, gp) = (dist(k - 1), dist(k + 1));
        let curv = gm - 2.0 * g0 + gp;
        if curv > 0.0 {
            let delta = (0.5 * (gm - gp) / curv).clamp(-0.5, 0.5);
            if delta != 0.0 {
                let refined = shifted_distance(a, b, grid, k as f64 + delta);
                if refined < value {
                    shift = k as f64 + delta;
                    value = refined;
                }
            }
        }
    }
    Ok((shift * grid.hx, value))
}

/// All checks on one state.
pub fn run_all(
    state: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
) -> DiagnosticsReport {
    run_all_with_cmax(state, params, spec, grid, c_max(params, spec))
}

/// [`run_all`] with a precomputed `c_max`.
pub fn run_all_with_cmax(
    state: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
    cmax: f64,
) -> DiagnosticsReport {
    let bounds = check_bounds(state, params);
    let monotone = check_monotonicity(state, grid);
    let sandwich = check_sandwich(state, params).ok();
    let left = left_decay_bound(state, params, spec.theta, grid).ok();
    let c = state.c;
    let gap = (speed_identity(state, params, spec, grid) - c).abs() / c;
    let q = DispersionQuery {
        c,
        params: *params,
        family: state.family,
        fprime1: spec.slope_at_one(),
    };
    let pred = dispersion_root(&q).ok();
    let lower = dispersion_root_half(&q).map(|r| r.gamma).unwrap_or(f64::NAN);
    let gamma_fit = fit_right_decay(state, grid).unwrap_or(f64::NAN);
    let min_psi = state.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let max_psi = state.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_dx_psi = (0..grid.ny)
        .flat_map(|j| state.row(grid, j).windows(2).map(|w| w[1] - w[0]))
        .fold(f64::INFINITY, f64::min)
        / grid.hx;
    DiagnosticsReport {
        bounds_ok: bounds.ok,
        monotone_ok: monotone.ok,
        sandwich_ok: sandwich.map(|f| f.ok),
        left_decay_ok: left.is_some_and(|f| f.ok),
        speed_identity_gap: gap,
        gamma_fit,
        gamma_pred: pred.map_or(f64::NAN, |r| r.gamma),
        gamma_lower: lower,
        gamma_lim: pred.map_or(f64::NAN, |r| r.gamma_lim),
        cmax_margin: cmax - c,
        min_psi,
        max_psi,
        min_dx_psi,
        details: Details {
            bounds: bounds.worst,
            monotone: monotone.worst,
            sandwich: sandwich.and_then(|f| f.worst),
            left_decay: left.and_then(|f| f.worst),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 4.0, 1.0, 1.0).unwrap()
    }

    fn grid() -> Grid {
        Grid::new(-10.0, 10.0, 1.0, 201, 5).unwrap()
    }

    fn state_from(g: &Grid, f: impl Fn(f64, f64) -> f64) -> WaveState {
        let mut psi = Vec::with_capacity(g.n_nodes());
        for j in 0..g.ny {
            for i in 0..g.nx {
                psi.push(f(g.x(i), g.y(j)));
            }
        }
        WaveState {
            c: 1.0,
            psi,
            phi: None,
            family: HomotopyFamily::Wentzell { s: 1.0 },
        }
    }

    fn tanh_state(g: &Grid) -> WaveState {
        state_from(g, |x, _| 0.5 * (1.0 + tanh(x)))
    }

    #[test]
    fn bounds_pass_and_fail() {
        let g = grid();
        let s = state_from(&g, |_, _| 0.5);
        assert!(check_bounds(&s, &params()).ok);
        let mut bad = s.clone();
        bad.psi[37] = 1.2;
        let f = check_bounds(&bad, &params());
        assert!(!f.ok);
        let w = f.worst.unwrap();
        assert_eq!((w.field, w.index, w.value), (Field::Psi, 37, 1.2));
    }

    #[test]
    fn bounds_include_the_line() {
        let g = grid();
        let mut s = state_from(&g, |_, _| 0.5);
        s.family = HomotopyFamily::Exchange { epsilon: 0.5 };
        s.phi = Some(vec![0.5; g.nx]);
        let p = ModelParams::new(1.0, 4.0, 2.5, 1.0).unwrap();
        let f = check_bounds(&s, &p);
        assert!(!f.ok);
        assert_eq!(f.worst.unwrap().field, Field::Phi);
        assert_eq!(f.worst.unwrap().value, 1.25);
    }

    #[test]
    fn monotone_tanh_passes_inverted_pair_fails() {
        let g = grid();
        let s = tanh_state(&g);
        assert!(check_monotonicity(&s, &g).ok);
        let mut bad = s.clone();
        let k = g.node(100, 2);
        bad.psi.swap(k, k + 1);
        let f = check_monotonicity(&bad, &g);
        assert!(!f.ok);
        assert_eq!(f.worst.unwrap().index, k);
    }

    #[test]
    fn sandwich() {
        let g = grid();
        let mut s = tanh_state(&g);
        assert_eq!(check_sandwich(&s, &params()), Err(Error::WrongFamily));
        s.family = HomotopyFamily::Exchange { epsilon: 0.1 };
        s.phi = Some(s.top_trace(&g).to_vec());
        assert!(check_sandwich(&s, &params()).unwrap().ok);
        let hi = s.psi.iter().copied().fold(0.0, f64::max);
        s.phi.as_mut().unwrap()[50] = hi + 1e-6;
        assert!(!check_sandwich(&s, &params()).unwrap().ok);
    }

    #[test]
    fn speed_identity_vanishes_below_threshold() {
        let g = grid();
        let s = state_from(&g, |x, _| 0.1 * (1.0 + tanh(x)));
        let spec = NonlinearitySpec::smooth_cubic(0.3).unwrap();
        assert_eq!(speed_identity(&s, &params(), &spec, &g), 0.0);
    }

    #[test]
    fn speed_identity_of_a_constant_reaction() {
        // ψ ≡ (1 + θ)/2 gives f constant, so the trapezoid rule is exact
        let g = grid();
        let spec = NonlinearitySpec::smooth_cubic(0.3).unwrap();
        let v = 0.65;
        let s = state_from(&g, |_, _| v);
        let area = 20.0 * 1.0;
        let expect = spec.value(v) * area / (1.0 + 1.0);
        assert!((speed_identity(&s, &params(), &spec, &g) - expect).abs() < 1e-14);
    }

    #[test]
    fn left_decay_exact_tail() {
        // D ≤ d makes r = c/d, the exact rate of the one-dimensional tail
        let p = ModelParams::new(1.0, 0.5, 1.0, 1.0).unwrap();
        let g = grid();
        let theta = 0.3;
        let mut s = state_from(&g, |x, _| if x <= 0.0 { theta * exp(0.7 * x) } else { 0.9 });
        s.c = 0.7;
        let f = left_decay_bound(&s, &p, theta, &g).unwrap();
        assert!(f.ok);
        let slow = state_from(&g, |x, _| if x <= 0.0 { theta * exp(0.5 * x) } else { 0.9 });
        let slow = WaveState { c: 0.7, ..slow };
        assert!(!left_decay_bound(&slow, &p, theta, &g).unwrap().ok);
    }

    #[test]
    fn left_decay_needs_a_crossing() {
        let g = grid();
        let s = state_from(&g, |_, _| 0.9);
        assert_eq!(
            left_decay_bound(&s, &params(), 0.3, &g),
            Err(Error::ThresholdNotCrossed)
        );
    }

    fn query(family: HomotopyFamily) -> DispersionQuery {
        DispersionQuery {
            c: 1.0,
            params: ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap(),
            family,
            fprime1: -1.0,
        }
    }

    #[test]
    fn dispersion_unit_example() {
        let r = dispersion_root(&query(HomotopyFamily::Wentzell { s: 1.0 })).unwrap();
        assert!(r.gamma > 0.33 && r.gamma < 0.35, "{}", r.gamma);
        assert!((r.gamma_lim - (sqrt(5.0) - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dispersion_s_zero_is_one_dimensional() {
        let q = DispersionQuery {
            c: 0.8,
            params: params(),
            family: HomotopyFamily::Wentzell { s: 0.0 },
            fprime1: -0.49,
        };
        let r = dispersion_root(&q).unwrap();
        let expect = (-0.8 + sqrt(0.64 + 4.0 * 0.49)) / 2.0;
        assert!((r.gamma - expect).abs() < 1e-15);
    }

    #[test]
    fn half_convention_bounds_the_true_rate() {
        for family in [
            HomotopyFamily::Wentzell { s: 0.4 },
            HomotopyFamily::Exchange { epsilon: 0.7 },
        ] {
            let q = query(family);
            let full = dispersion_root(&q).unwrap();
            let half = dispersion_root_half(&q).unwrap();
            assert!(half.gamma < full.gamma);
            assert!((half.gamma_lim - gamma_lim_half(1.0, 1.0, -1.0)).abs() < 1e-15);
            assert!((half.gamma_lim - (sqrt(3.0) - 1.0) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dispersion_rejects_bad_queries() {
        let mut q = query(HomotopyFamily::Wentzell { s: 1.0 });
        q.fprime1 = 0.0;
        assert!(dispersion_root(&q).is_err());
        q.fprime1 = -1.0;
        q.c = 0.0;
        assert!(dispersion_root(&q).is_err());
    }

    #[test]
    fn fit_exact_exponential() {
        let g = Grid::new(-2.0, 12.0, 1.0, 141, 3).unwrap();
        let s = state_from(&g, |x, _| 1.0 - exp(-2.0 * x));
        let gamma = fit_right_decay(&s, &g).unwrap();
        assert!((gamma - 2.0).abs() < 1e-6, "{gamma}");
    }

    #[test]
    fn fit_window_empty() {
        let g = grid();
        let s = state_from(&g, |_, _| 0.5);
        assert_eq!(fit_right_decay(&s, &g), Err(Error::WindowEmpty));
    }

    #[test]
    fn collapse_identity() {
        let g = grid();
        let s = tanh_state(&g);
        assert_eq!(translation_collapse(&s, &s, &g).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn collapse_rejects_mismatch() {
        let g = grid();
        let a = tanh_state(&g);
        let mut b = a.clone();
        b.family = HomotopyFamily::Wentzell { s: 0.5 };
        assert_eq!(translation_collapse(&a, &b, &g), Err(Error::GridMismatch));
        b.family = a.family;
        b.psi.pop();
        assert_eq!(translation_collapse(&a, &b, &g), Err(Error::GridMismatch));
    }
}
