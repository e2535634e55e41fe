//! Truncated computational domain and degree-of-freedom layout.

use crate::model::ModelParams;
use crate::state::HomotopyFamily;
use crate::{Error, Result};

/// Uniform tensor grid on `[x_left, x_right] × [-L, 0]`.
///
/// Nodes are `x_i = x_left + i hx` and `y_j = -L + j hy`; the anchor
/// `(0, -L/2)` used by the phase condition is always a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_left: f64,
    pub x_right: f64,
    pub depth: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub anchor_i: usize,
    pub anchor_j: usize,
}

const MIN_NX: usize = 3;
const MIN_NY: usize = 2;

impl Grid {
    pub fn new(x_left: f64, x_right: f64, depth: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_left < 0.0 && x_right > 0.0 && x_left.is_finite() && x_right.is_finite()) {
            return Err(Error::BadExtent { x_left, x_right });
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::InvalidParameter {
                name: "L",
                value: depth,
                reason: "must be finite and > 0",
            });
        }
        if nx < MIN_NX {
            return Err(Error::InvalidParameter {
                name: "nx",
                value: nx as f64,
                reason: "need at least 3 nodes in x",
            });
        }
        if ny < MIN_NY {
            return Err(Error::InvalidParameter {
                name: "ny",
                value: ny as f64,
                reason: "need at least 2 nodes in y",
            });
        }
        let hx = (x_right - x_left) / (nx - 1) as f64;
        let hy = depth / (ny - 1) as f64;

        let ai = -x_left / hx;
        let anchor_i = libm::round(ai);
        if (ai - anchor_i).abs() > 1e-9 * ai.max(1.0) {
            return Err(Error::AnchorNotOnGrid { axis: "x" });
        }
        if !(ny - 1).is_multiple_of(2) {
            return Err(Error::AnchorNotOnGrid { axis: "y" });
        }
        Ok(Self {
            x_left,
            x_right,
            depth,
            nx,
            ny,
            hx,
            hy,
            anchor_i: anchor_i as usize,
            anchor_j: (ny - 1) / 2,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.anchor_i {
            0.0
        } else {
            self.x_left + i as f64 * self.hx
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.depth + j as f64 * self.hy
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn anchor(&self) -> usize {
        self.node(self.anchor_i, self.anchor_j)
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Same extents with both spacings halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(
            self.x_left,
            self.x_right,
            self.depth,
            2 * (self.nx - 1) + 1,
            2 * (self.ny - 1) + 1,
        )
    }

    /// Same extents with both spacings doubled, if the node counts allow it.
    pub fn coarsened(&self) -> Result<Self> {
        Self::new(
            self.x_left,
            self.x_right,
            self.depth,
            (self.nx - 1) / 2 + 1,
            (self.ny - 1) / 2 + 1,
        )
    }

    /// Cell Péclet number `c hx / d` of the centred convection term.
    pub fn peclet(&self, c: f64, d: f64) -> f64 {
        c * self.hx / d
    }
}

pub fn build_grid(
    params: &ModelParams,
    x_left: f64,
    x_right: f64,
    nx: usize,
    ny: usize,
) -> Result<Grid> {
    Grid::new(x_left, x_right, params.depth, nx, ny)
}

/// Position of each unknown block inside the flat unknown vector.
///
/// Strip field first (`x` fastest), then the line field for the exchange
/// family, then `c` last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub exchange: bool,
    pub nx: usize,
    pub ny: usize,
    pub strip_offset: usize,
    pub strip_len: usize,
    pub line_offset: Option<usize>,
    pub c_index: usize,
    pub total: usize,
}

impl DofLayout {
    pub fn for_dims(nx: usize, ny: usize, family: HomotopyFamily) -> Self {
        let strip_len = nx * ny;
        let exchange = family.is_exchange();
        let line_offset = exchange.then_some(strip_len);
        let c_index = strip_len + if exchange { nx } else { 0 };
        Self {
            exchange,
            nx,
            ny,
            strip_offset: 0,
            strip_len,
            line_offset,
            c_index,
            total: c_index + 1,
        }
    }
}

pub fn dof_layout(grid: &Grid, family: HomotopyFamily) -> DofLayout {
    DofLayout::for_dims(grid.nx, grid.ny, family)
}
