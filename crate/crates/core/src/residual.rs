//! Discrete travelling-wave residual and its analytic Jacobian.
//!
//! Rows follow the unknown layout of [`DofLayout`]: one row per strip node,
//! one per line node (exchange family), and a final phase row that closes the
//! system for the speed `c`:
//!
//! * interior nodes: `-d Δₕψ + c Dₓψ - f(ψ)` with the 5-point Laplacian and
//!   centred `Dₓ`;
//! * `y = -L`: `-d ∂ᵧψ` with the 3-point one-sided difference
//!   `(-3ψ₀ + 4ψ₁ - ψ₂) / 2hy`. This is what eliminating the ghost value
//!   `ψ₋₁` from a second-order centred Neumann condition produces once the
//!   interior equation at the boundary is dropped;
//! * `y = 0`: `d ∂ᵧψ` (one-sided `(3ψ_N - 4ψ_{N-1} + ψ_{N-2}) / 2hy`) minus
//!   `(s/μ)(D ∂ₓₓψ - c ∂ₓψ)` for Wentzell, or minus `(μφ - ψ)/ε` for the
//!   exchange system;
//! * line nodes: `-D φ'' + c φ' - (ψ(·,0) - μφ)/ε`;
//! * `x = x_left` and `x = x_right`: Dirichlet `ψ = 0, μφ = 0` and
//!   `ψ = 1, μφ = 1`;
//! * phase row: `ψ(0, -L/2) - (1 + θ)/2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{dof_layout, Grid};
use crate::model::{ModelParams, NonlinearitySpec};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::state::{HomotopyFamily, WaveState};
use crate::Result;

/// Target value of `ψ` at the anchor node.
pub fn phase_value(spec: &NonlinearitySpec) -> f64 {
    0.5 * (1.0 + spec.theta)
}

struct Coeffs {
    d: f64,
    ax: f64,
    ay: f64,
    inv_2hx: f64,
    inv_2hy: f64,
    inv_hx2: f64,
}

impl Coeffs {
    fn new(params: &ModelParams, grid: &Grid) -> Self {
        Self {
            d: params.d,
            ax: params.d / (grid.hx * grid.hx),
            ay: params.d / (grid.hy * grid.hy),
            inv_2hx: 0.5 / grid.hx,
            inv_2hy: 0.5 / grid.hy,
            inv_hx2: 1.0 / (grid.hx * grid.hx),
        }
    }
}

pub fn assemble_residual(
    state: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
) -> Result<Vec<f64>> {
    state.check_shape(grid)?;
    let layout = dof_layout(grid, state.family);
    let (nx, ny) = (grid.nx, grid.ny);
    let top = ny - 1;
    let k = Coeffs::new(params, grid);
    let c = state.c;
    let psi = &state.psi;
    let at = |i: usize, j: usize| psi[j * nx + i];
    let mut r = vec![0.0; layout.total];

    for j in 0..ny {
        r[j * nx] = at(0, j);
        r[j * nx + nx - 1] = at(nx - 1, j) - 1.0;
    }
    for i in 1..nx - 1 {
        // bottom: -d ∂ᵧψ
        r[i] = k.d * k.inv_2hy * (3.0 * at(i, 0) - 4.0 * at(i, 1) + at(i, 2));
        for j in 1..top {
            let p = at(i, j);
            let lap_x = at(i + 1, j) - 2.0 * p + at(i - 1, j);
            let lap_y = at(i, j + 1) - 2.0 * p + at(i, j - 1);
            let dx = (at(i + 1, j) - at(i - 1, j)) * k.inv_2hx;
            r[j * nx + i] = -k.ax * lap_x - k.ay * lap_y + c * dx - spec.value(p);
        }
        let dy_top = k.inv_2hy * (3.0 * at(i, top) - 4.0 * at(i, top - 1) + at(i, top - 2));
        let row = top * nx + i;
        match (state.family, &state.phi) {
            (HomotopyFamily::Wentzell { s }, _) => {
                let p = at(i, top);
                let dxx = (at(i + 1, top) - 2.0 * p + at(i - 1, top)) * k.inv_hx2;
                let dx = (at(i + 1, top) - at(i - 1, top)) * k.inv_2hx;
                r[row] = k.d * dy_top - s / params.mu * (params.line_d * dxx - c * dx);
            }
            (HomotopyFamily::Exchange { epsilon }, Some(phi)) => {
                r[row] = k.d * dy_top - (params.mu * phi[i] - at(i, top)) / epsilon;
            }
            (HomotopyFamily::Exchange { .. }, None) => unreachable!("checked by check_shape"),
        }
    }

    if let (HomotopyFamily::Exchange { epsilon }, Some(phi), Some(off)) =
        (state.family, &state.phi, layout.line_offset)
    {
        let mu = params.mu;
        r[off] = mu * phi[0];
        r[off + nx - 1] = mu * phi[nx - 1] - 1.0;
        for i in 1..nx - 1 {
            let dxx = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * k.inv_hx2;
            let dx = (phi[i + 1] - phi[i - 1]) * k.inv_2hx;
            r[off + i] = -params.line_d * dxx + c * dx - (at(i, top) - mu * phi[i]) / epsilon;
        }
    }

    r[layout.c_index] = psi[grid.anchor()] - phase_value(spec);
    Ok(r)
}

/// Exact derivative of [`assemble_residual`] with respect to the unknown
/// vector, bordered by the `∂/∂c` column and the phase row.
pub fn assemble_jacobian(
    state: &WaveState,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
) -> Result<SparseMatrix> {
    state.check_shape(grid)?;
    let layout = dof_layout(grid, state.family);
    let (nx, ny) = (grid.nx, grid.ny);
    let top = ny - 1;
    let k = Coeffs::new(params, grid);
    let c = state.c;
    let ci = layout.c_index;
    let psi = &state.psi;
    let at = |i: usize, j: usize| psi[j * nx + i];
    let node = |i: usize, j: usize| j * nx + i;
    let mut b = TripletBuilder::with_capacity(layout.total, layout.total, 7 * layout.total);

    for j in 0..ny {
        b.push(node(0, j), node(0, j), 1.0);
        b.push(node(nx - 1, j), node(nx - 1, j), 1.0);
    }
    let w = k.d * k.inv_2hy;
    for i in 1..nx - 1 {
        let row = node(i, 0);
        b.push(row, node(i, 0), 3.0 * w);
        b.push(row, node(i, 1), -4.0 * w);
        b.push(row, node(i, 2), w);

        for j in 1..top {
            let row = node(i, j);
            let fp = spec.eval(at(i, j)).1;
            b.push(row, row, 2.0 * k.ax + 2.0 * k.ay - fp);
            b.push(row, node(i + 1, j), -k.ax + c * k.inv_2hx);
            b.push(row, node(i - 1, j), -k.ax - c * k.inv_2hx);
            b.push(row, node(i, j + 1), -k.ay);
            b.push(row, node(i, j - 1), -k.ay);
            b.push(row, ci, (at(i + 1, j) - at(i - 1, j)) * k.inv_2hx);
        }

        let row = node(i, top);
        b.push(row, node(i, top - 1), -4.0 * w);
        b.push(row, node(i, top - 2), w);
        match state.family {
            HomotopyFamily::Wentzell { s } => {
                let g = s / params.mu;
                let dd = params.line_d * k.inv_hx2;
                b.push(row, row, 3.0 * w + 2.0 * g * dd);
                b.push(row, node(i + 1, top), -g * (dd - c * k.inv_2hx));
                b.push(row, node(i - 1, top), -g * (dd + c * k.inv_2hx));
                b.push(row, ci, g * (at(i + 1, top) - at(i - 1, top)) * k.inv_2hx);
            }
            HomotopyFamily::Exchange { epsilon } => {
                let off = layout.line_offset.expect("exchange layout");
                b.push(row, row, 3.0 * w + 1.0 / epsilon);
                b.push(row, off + i, -params.mu / epsilon);
            }
        }
    }

    if let (HomotopyFamily::Exchange { epsilon }, Some(phi), Some(off)) =
        (state.family, &state.phi, layout.line_offset)
    {
        let mu = params.mu;
        let dd = params.line_d * k.inv_hx2;
        b.push(off, off, mu);
        b.push(off + nx - 1, off + nx - 1, mu);
        for i in 1..nx - 1 {
            let row = off + i;
            b.push(row, row, 2.0 * dd + mu / epsilon);
            b.push(row, row + 1, -dd + c * k.inv_2hx);
            b.push(row, row - 1, -dd - c * k.inv_2hx);
            b.push(row, node(i, top), -1.0 / epsilon);
            b.push(row, ci, (phi[i + 1] - phi[i - 1]) * k.inv_2hx);
        }
    }

    b.push(ci, grid.anchor(), 1.0);
    Ok(b.build(1))
}

/// Centred finite-difference check of the Jacobian along `v`.
///
/// Returns `(‖(R(u + hv) - R(u - hv))/2h - Jv‖∞, ‖Jv‖∞)`.
pub fn jacobian_fd_error(
    state: &WaveState,
    v: &[f64],
    h: f64,
    params: &ModelParams,
    spec: &NonlinearitySpec,
    grid: &Grid,
) -> Result<(f64, f64)> {
    let layout = dof_layout(grid, state.family);
    if v.len() != layout.total {
        return Err(crate::Error::ShapeMismatch(alloc::format!(
            "direction has {} entries, expected {}",
            v.len(),
            layout.total
        )));
    }
    let u = state.to_unknowns(&layout);
    let shifted = |sign: f64| {
        let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + sign * h * b).collect();
        assemble_residual(&WaveState::from_unknowns(&w, &layout, state.family), params, spec, grid)
    };
    let plus = shifted(1.0)?;
    let minus = shifted(-1.0)?;
    let jv = assemble_jacobian(state, params, spec, grid)?.mul_vec(v);
    let err = plus
        .iter()
        .zip(&minus)
        .zip(&jv)
        .map(|((p, m), j)| ((p - m) / (2.0 * h) - j).abs())
        .fold(0.0, f64::max);
    let norm = jv.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    Ok((err, norm))
}
