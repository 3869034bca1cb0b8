//! Uniform Cartesian mesh, ghost-padded cell arrays and vertex arrays.
//!
//! Cells are addressed by signed indices `(i, j)` with `0 <= i < nx` in the
//! interior and `-ghost <= i < nx + ghost` overall. Vertices are addressed by
//! `(a, b)` with `0 <= a <= nx`, `0 <= b <= ny`; vertex `(a, b)` sits at
//! `(x0 + a dx, y0 + b dy)`, i.e. between cells `a - 1` and `a`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{Cell, BX, BY, ELECTRON, EX, EY, EZ, ION};

/// Ghost layers; diagonal second-order stencils reach two cells out.
pub const GHOST: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least one cell per direction (got {nx}x{ny})")]
    Empty { nx: usize, ny: usize },
    #[error("domain bounds must be increasing: [{lo}, {hi}]")]
    Bounds { lo: f64, hi: f64 },
    #[error("ghost width {0} is below the required 2")]
    GhostTooSmall(usize),
    #[error("unknown boundary kind '{0}' (expected periodic, neumann or conducting_wall)")]
    UnknownBoundary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Zero-order extrapolation.
    Neumann,
    /// Perfect conductor: normal B, tangential E and normal momentum are odd.
    ConductingWall,
}

impl FromStr for Boundary {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "neumann" | "outflow" => Ok(Boundary::Neumann),
            "conducting_wall" | "wall" => Ok(Boundary::ConductingWall),
            _ => Err(GridError::UnknownBoundary(s.to_string())),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Boundary::Periodic => "periodic",
            Boundary::Neumann => "neumann",
            Boundary::ConductingWall => "conducting_wall",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub dx: f64,
    pub dy: f64,
    pub ghost: usize,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
}

impl Grid2D {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        bc_x: Boundary,
        bc_y: Boundary,
    ) -> Result<Self, GridError> {
        Self::with_ghost(nx, ny, (x0, x1), (y0, y1), bc_x, bc_y, GHOST)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_ghost(
        nx: usize,
        ny: usize,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        bc_x: Boundary,
        bc_y: Boundary,
        ghost: usize,
    ) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 {
            return Err(GridError::Empty { nx, ny });
        }
        if !(x1 > x0) {
            return Err(GridError::Bounds { lo: x0, hi: x1 });
        }
        if !(y1 > y0) {
            return Err(GridError::Bounds { lo: y0, hi: y1 });
        }
        if ghost < GHOST {
            return Err(GridError::GhostTooSmall(ghost));
        }
        Ok(Grid2D {
            nx,
            ny,
            x0,
            y0,
            x1,
            y1,
            dx: (x1 - x0) / nx as f64,
            dy: (y1 - y0) / ny as f64,
            ghost,
            bc_x,
            bc_y,
        })
    }

    /// One cell in y: the y-direction is treated as invariant.
    #[inline]
    pub fn is_1d(&self) -> bool {
        self.ny == 1
    }

    #[inline]
    pub fn cell_center(&self, i: isize, j: isize) -> (f64, f64) {
        (
            self.x0 + (i as f64 + 0.5) * self.dx,
            self.y0 + (j as f64 + 0.5) * self.dy,
        )
    }

    #[inline]
    pub fn vertex(&self, a: usize, b: usize) -> (f64, f64) {
        (self.x0 + a as f64 * self.dx, self.y0 + b as f64 * self.dy)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Same domain and boundaries, different resolution.
    pub fn refined(&self, nx: usize, ny: usize) -> Result<Self, GridError> {
        Self::with_ghost(
            nx,
            ny,
            (self.x0, self.x1),
            (self.y0, self.y1),
            self.bc_x,
            self.bc_y,
            self.ghost,
        )
    }
}

/// Dense ghost-padded cell-centered array.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldArray<T> {
    data: Vec<T>,
    nx: usize,
    ny: usize,
    ghost: usize,
    stride: usize,
}

impl<T: Copy> FieldArray<T> {
    pub fn new(grid: &Grid2D, fill: T) -> Self {
        let stride = grid.nx + 2 * grid.ghost;
        let rows = grid.ny + 2 * grid.ghost;
        FieldArray {
            data: vec![fill; stride * rows],
            nx: grid.nx,
            ny: grid.ny,
            ghost: grid.ghost,
            stride,
        }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn ghost(&self) -> usize {
        self.ghost
    }

    /// Padded row length.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let g = self.ghost as isize;
        debug_assert!(i >= -g && i < self.nx as isize + g, "i = {i} out of range");
        debug_assert!(j >= -g && j < self.ny as isize + g, "j = {j} out of range");
        ((j + g) as usize) * self.stride + (i + g) as usize
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> &T {
        &self.data[self.index(i, j)]
    }

    #[inline]
    pub fn get_mut(&mut self, i: isize, j: isize) -> &mut T {
        let k = self.index(i, j);
        &mut self.data[k]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, v: T) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Iterator over interior `(i, j, &value)` in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = (isize, isize, &T)> + '_ {
        (0..self.ny as isize).flat_map(move |j| (0..self.nx as isize).map(move |i| (i, j, self.get(i, j))))
    }

    pub fn map_interior<F: FnMut(isize, isize, &mut T)>(&mut self, mut f: F) {
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                let k = self.index(i, j);
                f(i, j, &mut self.data[k]);
            }
        }
    }
}

/// Scalar values on the `(nx + 1) x (ny + 1)` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexArray {
    data: Vec<f64>,
    nx: usize,
    ny: usize,
}

impl VertexArray {
    pub fn new(grid: &Grid2D) -> Self {
        VertexArray {
            data: vec![0.0; (grid.nx + 1) * (grid.ny + 1)],
            nx: grid.nx,
            ny: grid.ny,
        }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[b * (self.nx + 1) + a]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.data[b * (self.nx + 1) + a] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows of length `nx + 1`, `b = 0..=ny`.
    pub fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        let w = self.nx + 1;
        self.data.chunks_mut(w)
    }
}

/// Components that change sign under reflection through a wall with the
/// given normal: normal momentum of both species, normal B, tangential E.
fn odd_components(normal: Axis) -> [usize; 5] {
    match normal {
        Axis::X => [ION + 1, ELECTRON + 1, BX, EY, EZ],
        Axis::Y => [ION + 2, ELECTRON + 2, BY, EX, EZ],
    }
}

#[inline]
fn reflect(c: &Cell, odd: &[usize; 5]) -> Cell {
    let mut r = *c;
    for &k in odd {
        r[k] = -r[k];
    }
    r
}

/// Source index for ghost `k` along a direction with `n` interior cells.
/// Returns the interior index and whether the value is mirrored.
#[inline]
fn ghost_source(k: isize, n: isize, bc: Boundary) -> (isize, bool) {
    match bc {
        Boundary::Periodic => (k.rem_euclid(n), false),
        Boundary::Neumann => (k.clamp(0, n - 1), false),
        Boundary::ConductingWall => {
            if k < 0 {
                ((-k - 1).min(n - 1), true)
            } else {
                ((2 * n - 1 - k).max(0), true)
            }
        }
    }
}

/// Populate ghost layers of a cell array from its interior.
///
/// Works for conserved and primitive arrays alike since both share the slot
/// layout (the odd slots are the same in both). The x-direction is filled
/// first for interior rows, then the y-direction for full padded rows so the
/// corner ghosts are consistent.
pub fn fill_ghosts(field: &mut FieldArray<Cell>, grid: &Grid2D) {
    let g = field.ghost() as isize;
    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    let odd_x = odd_components(Axis::X);
    let odd_y = odd_components(Axis::Y);

    for j in 0..ny {
        for k in (-g..0).chain(nx..nx + g) {
            let (src, mirrored) = ghost_source(k, nx, grid.bc_x);
            let v = *field.get(src, j);
            let v = if mirrored { reflect(&v, &odd_x) } else { v };
            field.set(k, j, v);
        }
    }
    for k in (-g..0).chain(ny..ny + g) {
        let (src, mirrored) = ghost_source(k, ny, grid.bc_y);
        for i in -g..nx + g {
            let v = *field.get(i, src);
            let v = if mirrored { reflect(&v, &odd_y) } else { v };
            field.set(i, k, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::NCOMP;

    fn tagged(grid: &Grid2D) -> FieldArray<Cell> {
        let mut f = FieldArray::new(grid, [f64::NAN; NCOMP]);
        f.map_interior(|i, j, c| {
            for (k, v) in c.iter_mut().enumerate() {
                *v = 1000.0 * j as f64 + 10.0 * i as f64 + 0.01 * k as f64 + 1.0;
            }
        });
        f
    }

    #[test]
    fn periodic_wraps_indices() {
        let grid = Grid2D::new(4, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic).unwrap();
        let mut f = tagged(&grid);
        fill_ghosts(&mut f, &grid);
        for j in 0..3 {
            assert_eq!(f.get(-1, j), f.get(3, j));
            assert_eq!(f.get(-2, j), f.get(2, j));
            assert_eq!(f.get(4, j), f.get(0, j));
        }
        assert_eq!(f.get(-1, -1), f.get(3, 2));
    }

    #[test]
    fn neumann_copies_nearest_interior() {
        let grid = Grid2D::new(4, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Neumann, Boundary::Neumann).unwrap();
        let mut f = tagged(&grid);
        fill_ghosts(&mut f, &grid);
        for j in 0..3 {
            assert_eq!(f.get(-1, j), f.get(0, j));
            assert_eq!(f.get(-2, j), f.get(0, j));
            assert_eq!(f.get(5, j), f.get(3, j));
        }
    }

    #[test]
    fn conducting_wall_mirrors_with_sign_flips() {
        let grid = Grid2D::new(4, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::ConductingWall).unwrap();
        let mut f = tagged(&grid);
        fill_ghosts(&mut f, &grid);
        for i in 0..4 {
            let inner = *f.get(i, 0);
            let ghost = *f.get(i, -1);
            assert_eq!(ghost[ION + 2], -inner[ION + 2]);
            assert_eq!(ghost[ELECTRON + 2], -inner[ELECTRON + 2]);
            assert_eq!(ghost[BY], -inner[BY]);
            assert_eq!(ghost[EX], -inner[EX]);
            assert_eq!(ghost[EZ], -inner[EZ]);
            assert_eq!(ghost[ION], inner[ION]);
            assert_eq!(ghost[BX], inner[BX]);
            // second layer mirrors the second interior row
            assert_eq!(f.get(i, -2)[ION], f.get(i, 1)[ION]);
            assert_eq!(f.get(i, 4)[BY], -f.get(i, 1)[BY]);
        }
    }

    #[test]
    fn ghost_fill_is_idempotent() {
        for bc in [Boundary::Periodic, Boundary::Neumann, Boundary::ConductingWall] {
            let grid = Grid2D::new(5, 4, (0.0, 1.0), (0.0, 2.0), bc, bc).unwrap();
            let mut f = tagged(&grid);
            fill_ghosts(&mut f, &grid);
            let once = f.clone();
            fill_ghosts(&mut f, &grid);
            assert_eq!(once, f);
        }
    }

    #[test]
    fn periodic_ghosts_are_copies_of_interior_values() {
        let grid = Grid2D::new(3, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic).unwrap();
        let mut f = tagged(&grid);
        fill_ghosts(&mut f, &grid);
        let interior: Vec<Cell> = f.interior().map(|(_, _, c)| *c).collect();
        let g = grid.ghost as isize;
        for j in -g..3 + g {
            for i in -g..3 + g {
                assert!(interior.contains(f.get(i, j)));
            }
        }
    }

    #[test]
    fn vertex_index_set_is_full_lattice() {
        let grid = Grid2D::new(6, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic).unwrap();
        let v = VertexArray::new(&grid);
        assert_eq!(v.len(), 7 * 4);
        let (x, y) = grid.vertex(6, 3);
        assert!((x - 1.0).abs() < 1e-15 && (y - 1.0).abs() < 1e-15);
        let (cx, cy) = grid.cell_center(0, 0);
        assert!((cx - 1.0 / 12.0).abs() < 1e-15 && (cy - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(Grid2D::new(0, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic).is_err());
        assert!(Grid2D::new(3, 3, (1.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic).is_err());
        assert!(Grid2D::with_ghost(3, 3, (0.0, 1.0), (0.0, 1.0), Boundary::Periodic, Boundary::Periodic, 1).is_err());
        assert_eq!(
            "reflecting".parse::<Boundary>(),
            Err(GridError::UnknownBoundary("reflecting".into()))
        );
    }
}
