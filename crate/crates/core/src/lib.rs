//! Travelling waves for a reaction–diffusion strip bounded by a line of fast
//! diffusion.
//!
//! The crate computes the propagation speed `c` and the profiles `(ψ, φ)` of
//!
//! ```text
//!   -d Δψ + c ∂ₓψ = f(ψ)               in ℝ × (-L, 0)
//!   d ∂ᵧψ = (μφ - ψ) / ε                on y = 0
//!   -D φ'' + c φ' = (ψ - μφ) / ε        on the line y = 0
//!   ∂ᵧψ = 0                             on y = -L
//! ```
//!
//! by a chain of continuations: a one-dimensional ignition front is embedded in
//! the strip, the Wentzell boundary parameter `s` is raised from 0 to 1, the
//! result is handed off to the exchange system at a small `ε₀`, and `ε` is then
//! raised to 1. Every converged state can be checked against the a-priori
//! properties of the continuous problem (see [`diagnostics`]).
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line driver live in the companion `wave` crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point of those checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod continuation;
pub mod diagnostics;
mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod residual;
pub mod solver;
pub mod sparse;
pub mod state;

pub use error::{Error, Result};
pub use grid::{build_grid, dof_layout, DofLayout, Grid};
pub use model::{c_max, lipschitz_constant, ModelParams, NonlinearitySpec, ReactionKind};
pub use residual::{assemble_jacobian, assemble_residual, jacobian_fd_error};
pub use solver::{newton_solve, solve_1d_ignition_shooting, NewtonOptions, OneDimWave};
pub use sparse::SparseMatrix;
pub use state::{HomotopyFamily, WaveState};
