//! Homotopy family tags and travelling-wave candidates.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::{DofLayout, Grid};
use crate::{Error, Result};

/// Which problem is being solved.
///
/// `Wentzell { s }` replaces the line by the boundary condition
/// `d ∂ᵧψ = s (D ∂ₓₓψ - c ∂ₓψ) / μ`; `Exchange { epsilon }` keeps the line
/// field with the exchange term divided by `ε` (`ε = 1` is the physical
/// system). The reparametrisation `M = 1/ε` is available through
/// [`HomotopyFamily::inverse_epsilon`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomotopyFamily {
    Wentzell { s: f64 },
    Exchange { epsilon: f64 },
}

impl HomotopyFamily {
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::Wentzell { s } => s,
            Self::Exchange { epsilon } => epsilon,
        }
    }

    /// Same family with a different parameter value.
    pub fn with_parameter(&self, value: f64) -> Self {
        match self {
            Self::Wentzell { .. } => Self::Wentzell { s: value },
            Self::Exchange { .. } => Self::Exchange { epsilon: value },
        }
    }

    pub fn is_exchange(&self) -> bool {
        matches!(self, Self::Exchange { .. })
    }

    pub fn same_kind(&self, other: &Self) -> bool {
        self.is_exchange() == other.is_exchange()
    }

    pub fn inverse_epsilon(&self) -> Option<f64> {
        match *self {
            Self::Exchange { epsilon } => Some(1.0 / epsilon),
            Self::Wentzell { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Wentzell { s } if !(0.0..=1.0).contains(&s) => Err(Error::InvalidParameter {
                name: "s",
                value: s,
                reason: "must lie in [0, 1]",
            }),
            Self::Exchange { epsilon } if !(epsilon > 0.0 && epsilon <= 1.0) => {
                Err(Error::InvalidParameter {
                    name: "epsilon",
                    value: epsilon,
                    reason: "must lie in (0, 1]",
                })
            }
            _ => Ok(()),
        }
    }
}

/// One travelling-wave candidate on a [`Grid`].
///
/// `psi` is stored row-major with `x` fastest (`psi[j * nx + i]`, `j = 0` at
/// `y = -L`). `phi` holds the line field and is present iff the family is
/// `Exchange`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub c: f64,
    pub psi: Vec<f64>,
    pub phi: Option<Vec<f64>>,
    pub family: HomotopyFamily,
}

impl WaveState {
    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        let n = grid.nx * grid.ny;
        if self.psi.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "psi has {} values, grid has {n} nodes",
                self.psi.len()
            )));
        }
        match (&self.phi, self.family.is_exchange()) {
            (Some(phi), true) if phi.len() != grid.nx => Err(Error::ShapeMismatch(format!(
                "phi has {} values, grid has {} columns",
                phi.len(),
                grid.nx
            ))),
            (None, true) => Err(Error::ShapeMismatch("exchange state without phi".into())),
            (Some(_), false) => Err(Error::ShapeMismatch("wentzell state carries phi".into())),
            _ => Ok(()),
        }
    }

    /// Flattens into the unknown vector described by `layout`.
    pub fn to_unknowns(&self, layout: &DofLayout) -> Vec<f64> {
        let mut u = Vec::with_capacity(layout.total);
        u.extend_from_slice(&self.psi);
        if let Some(phi) = &self.phi {
            u.extend_from_slice(phi);
        }
        u.push(self.c);
        u
    }

    pub fn from_unknowns(u: &[f64], layout: &DofLayout, family: HomotopyFamily) -> Self {
        let psi = u[layout.strip_offset..layout.strip_offset + layout.strip_len].to_vec();
        let phi = layout
            .line_offset
            .map(|off| u[off..off + layout.nx].to_vec());
        Self {
            c: u[layout.c_index],
            psi,
            phi,
            family,
        }
    }

    /// `ψ(·, 0)`, the trace on the top boundary.
    pub fn top_trace<'a>(&'a self, grid: &Grid) -> &'a [f64] {
        let start = (grid.ny - 1) * grid.nx;
        &self.psi[start..start + grid.nx]
    }

    /// Row `j` of `ψ` (fixed `y`).
    pub fn row<'a>(&'a self, grid: &Grid, j: usize) -> &'a [f64] {
        &self.psi[j * grid.nx..(j + 1) * grid.nx]
    }

    /// Bilinear transfer onto another grid of the same depth.
    ///
    /// Points outside the source extent take the nearest end value, and the
    /// Dirichlet values of the target ends are imposed.
    pub fn resample(&self, from: &Grid, to: &Grid) -> Result<Self> {
        self.check_shape(from)?;
        if from.depth != to.depth {
            return Err(Error::ShapeMismatch(format!(
                "depth {} cannot be resampled to depth {}",
                from.depth, to.depth
            )));
        }
        // fractional index in the source, clamped to its range
        let locate = |pos: f64, start: f64, h: f64, n: usize| {
            let t = ((pos - start) / h).clamp(0.0, (n - 1) as f64);
            let k = (t as usize).min(n - 2);
            (k, t - k as f64)
        };
        let xs: Vec<(usize, f64)> = (0..to.nx)
            .map(|i| locate(to.x(i), from.x_left, from.hx, from.nx))
            .collect();
        let mut psi = Vec::with_capacity(to.n_nodes());
        for j in 0..to.ny {
            let (jj, ty) = locate(to.y(j), -from.depth, from.hy, from.ny);
            let lo = self.row(from, jj);
            let hi = self.row(from, jj + 1);
            for (i, &(ii, tx)) in xs.iter().enumerate() {
                let v = if i == 0 {
                    0.0
                } else if i == to.nx - 1 {
                    1.0
                } else {
                    let a = lo[ii] + tx * (lo[ii + 1] - lo[ii]);
                    let b = hi[ii] + tx * (hi[ii + 1] - hi[ii]);
                    a + ty * (b - a)
                };
                psi.push(v);
            }
        }
        let phi = self.phi.as_ref().map(|phi| {
            let last = phi[phi.len() - 1];
            xs.iter()
                .enumerate()
                .map(|(i, &(ii, tx))| match i {
                    0 => 0.0,
                    i if i == to.nx - 1 => last,
                    _ => phi[ii] + tx * (phi[ii + 1] - phi[ii]),
                })
                .collect()
        });
        Ok(Self {
            c: self.c,
            psi,
            phi,
            family: self.family,
        })
    }
}
