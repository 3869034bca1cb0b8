//! Multidimensional vertex solver for the Maxwell block.
//!
//! At every vertex the four surrounding cell states (or their diagonal
//! second-order traces) define `E_z~` and `B_z~` through a local
//! Lax-Friedrichs solver with unit wave speed. Edge fluxes of the normal
//! curl terms are averages of the two vertex values on the edge; the
//! remaining slots use 1-D Rusanov fluxes. Because every vertex value is
//! computed once and shared by the four edges around it, the discrete
//! divergence of the flux updates telescopes to zero.

use super::{em_of, Em, Order, IBX, IBY, IBZ, IEX, IEY, IEZ};
use crate::es_flux::minmod;
use crate::grid::{FieldArray, Grid2D, VertexArray};
use crate::state::Cell;

/// The four states meeting at a vertex: SW = (i, j), SE = (i+1, j),
/// NE = (i+1, j+1), NW = (i, j+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerStates {
    pub sw: Em,
    pub se: Em,
    pub ne: Em,
    pub nw: Em,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexEmValues {
    pub ez: f64,
    pub bz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    Sw,
    Se,
    Ne,
    Nw,
}

/// Diagonal trace of a corner cell toward the vertex.
///
/// `stencil` holds the three cells on the diagonal through the corner cell,
/// ordered so the last one lies beyond the vertex.
#[inline]
pub fn diagonal_minmod(stencil: [&Em; 3]) -> Em {
    let mut out = *stencil[1];
    for k in 0..8 {
        out[k] += 0.5 * minmod(stencil[0][k], stencil[1][k], stencil[2][k]);
    }
    out
}

/// Vertex values from four corner states (cell values or diagonal traces).
#[inline]
pub fn vertex_values(c: &CornerStates) -> VertexEmValues {
    let avg4 = |k: usize| 0.25 * (c.sw[k] + c.se[k] + c.ne[k] + c.nw[k]);
    let east = |k: usize| 0.5 * (c.se[k] + c.ne[k]);
    let west = |k: usize| 0.5 * (c.sw[k] + c.nw[k]);
    let north = |k: usize| 0.5 * (c.nw[k] + c.ne[k]);
    let south = |k: usize| 0.5 * (c.sw[k] + c.se[k]);
    VertexEmValues {
        ez: avg4(IEZ) + 0.5 * ((east(IBY) - west(IBY)) - (north(IBX) - south(IBX))),
        bz: avg4(IBZ) + 0.5 * ((north(IEX) - south(IEX)) - (east(IEY) - west(IEY))),
    }
}

pub fn vertex_values_o1(c: &CornerStates) -> VertexEmValues {
    vertex_values(c)
}

pub fn vertex_values_o2(hat: &CornerStates) -> VertexEmValues {
    vertex_values(hat)
}

/// Corner states of vertex `(a, b)`, which sits between cells `a - 1, a`
/// and `b - 1, b`.
pub fn corner_states(u: &FieldArray<Cell>, a: usize, b: usize, order: Order) -> CornerStates {
    let (a, b) = (a as isize, b as isize);
    let at = |i: isize, j: isize| em_of(u.get(i, j));
    match order {
        Order::First => CornerStates {
            sw: at(a - 1, b - 1),
            se: at(a, b - 1),
            ne: at(a, b),
            nw: at(a - 1, b),
        },
        Order::Second => CornerStates {
            sw: diagonal_minmod([&at(a - 2, b - 2), &at(a - 1, b - 1), &at(a, b)]),
            se: diagonal_minmod([&at(a + 1, b - 2), &at(a, b - 1), &at(a - 1, b)]),
            ne: diagonal_minmod([&at(a + 1, b + 1), &at(a, b), &at(a - 1, b - 1)]),
            nw: diagonal_minmod([&at(a - 2, b + 1), &at(a - 1, b), &at(a, b - 1)]),
        },
    }
}

/// Fills the vertex arrays; `u` must have its ghosts filled.
pub fn compute_vertex_values(u: &FieldArray<Cell>, grid: &Grid2D, order: Order, ez: &mut VertexArray, bz: &mut VertexArray) {
    for b in 0..=grid.ny {
        for a in 0..=grid.nx {
            let v = vertex_values(&corner_states(u, a, b, order));
            ez.set(a, b, v.ez);
            bz.set(a, b, v.bz);
        }
    }
}

/// Flux through an x-edge from its two vertex values and the 1-D traces
/// `m` (left) and `p` (right).
#[inline]
pub fn edge_flux_x(ez_top: f64, ez_bot: f64, bz_top: f64, bz_bot: f64, m: &Em, p: &Em) -> Em {
    [
        0.0,
        -0.5 * (ez_top + ez_bot),
        0.5 * (m[IEY] + p[IEY]) - 0.5 * (p[IBZ] - m[IBZ]),
        0.0,
        0.5 * (bz_top + bz_bot),
        -0.5 * (m[IBY] + p[IBY]) - 0.5 * (p[IEZ] - m[IEZ]),
        0.0,
        0.0,
    ]
}

/// Flux through a y-edge from its two vertex values and the 1-D traces
/// `m` (below) and `p` (above).
#[inline]
pub fn edge_flux_y(ez_right: f64, ez_left: f64, bz_right: f64, bz_left: f64, m: &Em, p: &Em) -> Em {
    [
        0.5 * (ez_right + ez_left),
        0.0,
        -0.5 * (m[IEX] + p[IEX]) - 0.5 * (p[IBZ] - m[IBZ]),
        -0.5 * (bz_right + bz_left),
        0.0,
        0.5 * (m[IBX] + p[IBX]) - 0.5 * (p[IEZ] - m[IEZ]),
        0.0,
        0.0,
    ]
}
