//! Fourier-side checks of the Wentzell boundary operator and the modified
//! Bessel kernel `K₀`.
//!
//! On the top boundary, the linearised handoff problem is solved by a Fourier
//! multiplier whose denominator is
//!
//! ```text
//! F(ξ) = d β sinh(βL) (1 + ε D ξ²/μ + i ε (c₀ + c₁ε) ξ/μ)
//!        + (D ξ²/μ + i (c₀ + c₁ε) ξ/μ) cosh(βL),      β = √(ξ² + 1).
//! ```
//!
//! [`scan_symbol_zero_free`] checks that `F` does not vanish on the real axis.
//! [`bessel_k0`] evaluates `K₀` by quadrature; `K₀(|x|)/π` integrates to one,
//! which makes `(1/(dε)) K₀(|x|/(dε)) / π` an approximation to the identity.

use alloc::vec::Vec;
use libm::{acosh, cosh, exp, log, sinh, sqrt};
use num_complex::Complex64;

use crate::model::ModelParams;
use crate::quad::integrate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolQuery {
    pub xi: f64,
    pub epsilon: f64,
    pub c0: f64,
    pub c1: f64,
    pub params: ModelParams,
}

pub fn wentzell_symbol_denominator(q: &SymbolQuery) -> Complex64 {
    let p = &q.params;
    let xi = q.xi;
    let beta = sqrt(xi * xi + 1.0);
    let speed = q.c0 + q.c1 * q.epsilon;
    let line = Complex64::new(p.line_d * xi * xi / p.mu, speed * xi / p.mu);
    let strip = p.d * beta * sinh(beta * p.depth);
    (Complex64::new(1.0, 0.0) + line * q.epsilon) * strip + line * cosh(beta * p.depth)
}

/// Frequencies `ξ_k` of a uniform scan of `[-xi_max, xi_max]` with `n` points.
pub fn scan_frequencies(xi_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = 2.0 * xi_max / (n.max(2) - 1) as f64;
    (0..n).map(move |k| -xi_max + k as f64 * step)
}

/// `(ξ, F(ξ))` over a uniform scan.
pub fn symbol_samples(
    params: &ModelParams,
    epsilon: f64,
    c0: f64,
    c1: f64,
    xi_max: f64,
    n: usize,
) -> Vec<(f64, Complex64)> {
    scan_frequencies(xi_max, n)
        .map(|xi| {
            let q = SymbolQuery {
                xi,
                epsilon,
                c0,
                c1,
                params: *params,
            };
            (xi, wentzell_symbol_denominator(&q))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolScan {
    pub min_abs: f64,
    pub argmin: f64,
}

impl SymbolScan {
    pub fn zero_free(&self) -> bool {
        self.min_abs > 0.0
    }
}

/// Minimum of `|F|` over `n ≥ 2` uniform frequencies in `[-xi_max, xi_max]`.
pub fn scan_symbol_zero_free(
    params: &ModelParams,
    epsilon: f64,
    c0: f64,
    c1: f64,
    xi_max: f64,
    n: usize,
) -> Result<SymbolScan> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "need at least 2 frequencies",
        });
    }
    if !(xi_max > 0.0) {
        return Err(Error::InvalidParameter {
            name: "xi_max",
            value: xi_max,
            reason: "must be > 0",
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be >= 0",
        });
    }
    let mut best = SymbolScan {
        min_abs: f64::INFINITY,
        argmin: 0.0,
    };
    for (xi, f) in symbol_samples(params, epsilon, c0, c1, xi_max, n) {
        let a = f.norm();
        if a < best.min_abs {
            best = SymbolScan { min_abs: a, argmin: xi };
        }
    }
    Ok(best)
}

/// Below this the integrand `e^{-x (cosh t - 1)}` is dropped.
const K0_CUTOFF: f64 = 1e-16;

/// `K₀(x) = ∫₀^∞ e^{-x cosh t} dt` by adaptive quadrature.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError("K0 needs a finite x > 0"));
    }
    let t_max = acosh(1.0 - log(K0_CUTOFF) / x);
    let (scaled, _) = integrate(|t| exp(-x * (cosh(t) - 1.0)), 0.0, t_max, 1e-17, 1e-13);
    Ok(exp(-x) * scaled)
}

/// `∫_ℝ kernel(|x|) dx` on the log scale `x = e^u`, split where `x = scale`.
fn even_kernel_mass(kernel: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let center = log(scale);
    let g = |u: f64| {
        let x = exp(u);
        kernel(x) * x
    };
    let (left, _) = integrate(g, center - 40.0, center, 1e-15, 1e-13);
    let (right, _) = integrate(g, center, center + log(60.0), 1e-15, 1e-13);
    2.0 * (left + right)
}

/// `∫_ℝ K₀(|x|) dx`, which equals `π`.
pub fn bessel_k0_integral() -> f64 {
    even_kernel_mass(|x| bessel_k0(x).unwrap_or(0.0), 1.0)
}

/// Mass of the kernel `(1/(dε)) (1/π) K₀(|x|/(dε))`, which concentrates at
/// the origin as `ε → 0` and has unit mass for every `ε > 0`.
pub fn identity_kernel_mass(d: f64, epsilon: f64) -> f64 {
    let a = d * epsilon;
    let kernel = |x: f64| bessel_k0(x / a).unwrap_or(0.0) / (a * core::f64::consts::PI);
    even_kernel_mass(kernel, a)
}
