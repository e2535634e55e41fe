//! Physical constants of the strip/line system and the ignition nonlinearity.

use libm::sqrt;

use crate::{Error, Result};

/// Physical constants of the strip `ℝ × (-L, 0)` and the line `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Diffusivity `d` inside the strip.
    pub d: f64,
    /// Diffusivity `D` on the line.
    pub line_d: f64,
    /// Exchange ratio `μ`.
    pub mu: f64,
    /// Strip depth `L`.
    pub depth: f64,
}

impl ModelParams {
    pub fn new(d: f64, line_d: f64, mu: f64, depth: f64) -> Result<Self> {
        let params = Self {
            d,
            line_d,
            mu,
            depth,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("d", self.d),
            ("D", self.line_d),
            ("mu", self.mu),
            ("L", self.depth),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        Ok(())
    }

    /// `max(d, D)`, the diffusivity that controls the left tail.
    pub fn max_diffusivity(&self) -> f64 {
        self.d.max(self.line_d)
    }
}

/// Shape of the reaction term on its active interval `(θ, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionKind {
    /// `f(u) = (u - θ)² (1 - u)`.
    SmoothCubic,
    /// `f(u) = 1 - u`. Discontinuous at `θ`; only used as a test fixture
    /// because its one-dimensional front speed has a closed form.
    PiecewiseLinearOracle,
}

/// Ignition nonlinearity `f` with threshold `θ`.
///
/// `f` vanishes on `[0, θ]` and at `1`. It is extended by zero for `u < 0`
/// and by its tangent at `1` for `u > 1`, so it is negative there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearitySpec {
    pub kind: ReactionKind,
    pub theta: f64,
}

const LIP_SAMPLES: usize = 1_000_000;

impl NonlinearitySpec {
    pub fn new(kind: ReactionKind, theta: f64) -> Result<Self> {
        let spec = Self { kind, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn smooth_cubic(theta: f64) -> Result<Self> {
        Self::new(ReactionKind::SmoothCubic, theta)
    }

    pub fn piecewise_linear(theta: f64) -> Result<Self> {
        Self::new(ReactionKind::PiecewiseLinearOracle, theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: self.theta,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(())
    }

    /// `f'(1)`, the slope of the tangent extension (always negative).
    pub fn slope_at_one(&self) -> f64 {
        match self.kind {
            ReactionKind::SmoothCubic => {
                let a = 1.0 - self.theta;
                -a * a
            }
            ReactionKind::PiecewiseLinearOracle => -1.0,
        }
    }

    /// Branch formula of `f` and `f'` valid for `θ ≤ u ≤ 1`.
    fn active(&self, u: f64) -> (f64, f64) {
        let th = self.theta;
        match self.kind {
            ReactionKind::SmoothCubic => {
                let a = u - th;
                let b = 1.0 - u;
                (a * a * b, 2.0 * a * b - a * a)
            }
            ReactionKind::PiecewiseLinearOracle => (1.0 - u, -1.0),
        }
    }

    /// `f(u)` and the one-sided derivative `f'(u)`; at `u = θ` the right
    /// derivative is returned.
    pub fn eval(&self, u: f64) -> (f64, f64) {
        if u < self.theta {
            (0.0, 0.0)
        } else if u == self.theta {
            (0.0, self.active(u).1)
        } else if u <= 1.0 {
            self.active(u)
        } else {
            let slope = self.slope_at_one();
            (slope * (u - 1.0), slope)
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    /// Like [`eval`](Self::eval) but takes the right limit at `u = θ`.
    ///
    /// Trajectories that leave `θ` with positive slope see this branch, which
    /// matters for the discontinuous oracle.
    pub fn eval_from_right(&self, u: f64) -> (f64, f64) {
        if (self.theta..=1.0).contains(&u) {
            self.active(u)
        } else {
            self.eval(u)
        }
    }

    /// `sup_{u ∈ (θ, 1]} f(u) / u` with the right limit at `θ`.
    ///
    /// Bounds the one-dimensional front speed by `2 √(d K)`; equals at most
    /// `Lip f` whenever `f` is continuous.
    pub fn linear_growth_bound(&self) -> f64 {
        let n = 100_000;
        let th = self.theta;
        (0..=n)
            .map(|k| {
                let u = th + (1.0 - th) * k as f64 / n as f64;
                self.eval_from_right(u).0 / u
            })
            .fold(0.0, f64::max)
    }
}

/// `sup_{u ∈ [0, 1]} |f'(u)|`, one-sided at kinks.
///
/// Dense sampling followed by golden-section refinement around the best
/// sample, so any reaction kind works without a symbolic derivative.
pub fn lipschitz_constant(spec: &NonlinearitySpec) -> f64 {
    let slope = |u: f64| spec.eval(u).1.abs();
    let n = LIP_SAMPLES;
    let h = 1.0 / (n - 1) as f64;
    let (mut best_k, mut best) = (0usize, slope(0.0));
    for k in 1..n {
        let v = slope(k as f64 * h);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let lo = best_k.saturating_sub(1) as f64 * h;
    let hi = ((best_k + 1).min(n - 1) as f64 * h).min(1.0);
    best.max(golden_max(slope, lo, hi, 1e-14))
}

fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while b - a > tol {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = g(x1);
        }
    }
    g1.max(g2).max(g(a)).max(g(b))
}

/// Upper bound on the wave speed from the exponential supersolution
/// `(e^{rx}, μ e^{rx})`, given `Lip f`.
pub fn c_max_from_lip(params: &ModelParams, lip: f64) -> f64 {
    let (d, big_d) = (params.d, params.line_d);
    if big_d <= 2.0 * d {
        2.0 * sqrt(d * lip)
    } else {
        sqrt(big_d * big_d / (big_d - d) * lip)
    }
}

pub fn c_max(params: &ModelParams, spec: &NonlinearitySpec) -> f64 {
    c_max_from_lip(params, lipschitz_constant(spec))
}
