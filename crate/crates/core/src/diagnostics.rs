//! Vertex divergences, divergence-error norms, entropy totals, convergence
//! errors and the reconnected-flux functional.

use thiserror::Error;

use crate::fluid::{species_entropy, GasParams};
use crate::grid::{FieldArray, Grid2D, VertexArray};
use crate::state::{Cell, SpeciesPrimitive, ELECTRON, EX, EY, ION};
use crate::stepper::StageCurrents;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("stage current cache is missing for the electric residual")]
    MissingStageCurrents,
}

/// Discrete divergence at every vertex of the 2-vector stored in slots
/// `ix`, `iy`. Vertex `(a, b)` uses cells `a - 1, a` and `b - 1, b`, so the
/// ghost layers must be filled.
pub fn vertex_divergence(field: &FieldArray<Cell>, grid: &Grid2D, ix: usize, iy: usize) -> VertexArray {
    let mut out = VertexArray::new(grid);
    vertex_divergence_into(field, grid, |c| (c[ix], c[iy]), &mut out);
    out
}

/// Same operator for an arbitrary cell-to-vector map.
pub fn vertex_divergence_into<T, F>(field: &FieldArray<T>, grid: &Grid2D, f: F, out: &mut VertexArray)
where
    T: Copy,
    F: Fn(&T) -> (f64, f64),
{
    let (hx, hy) = (0.5 / grid.dx, 0.5 / grid.dy);
    for b in 0..=grid.ny {
        for a in 0..=grid.nx {
            let (i, j) = (a as isize, b as isize);
            let (sw, se) = (f(field.get(i - 1, j - 1)), f(field.get(i, j - 1)));
            let (nw, ne) = (f(field.get(i - 1, j)), f(field.get(i, j)));
            let dx = ((ne.0 - nw.0) + (se.0 - sw.0)) * hx;
            let dy = ((ne.1 - se.1) + (nw.1 - sw.1)) * hy;
            out.set(a, b, dx + dy);
        }
    }
}

/// Per-vertex Gauss-law defect of one step,
/// `div E(n+1) - div E(n) + dt/2 scale (div J_a + div J_b)`, where `J_a`, `J_b`
/// are the currents of the two source evaluations of the step.
pub fn electric_residual(
    new: &FieldArray<Cell>,
    old: &FieldArray<Cell>,
    currents: Option<&StageCurrents>,
    dt: f64,
    scale: f64,
    grid: &Grid2D,
) -> Result<VertexArray, DiagnosticsError> {
    let cur = currents.ok_or(DiagnosticsError::MissingStageCurrents)?;
    let mut r = vertex_divergence(new, grid, EX, EY);
    let d_old = vertex_divergence(old, grid, EX, EY);
    let ja = vertex_divergence(&cur.first, grid, EX, EY);
    let jb = vertex_divergence(&cur.second, grid, EX, EY);
    let k = 0.5 * dt * scale;
    for (idx, v) in r.as_mut_slice().iter_mut().enumerate() {
        *v += k * (ja.as_slice()[idx] + jb.as_slice()[idx]) - d_old.as_slice()[idx];
    }
    Ok(r)
}

/// One row of the norms file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub div_b_l1: f64,
    pub div_b_l2: f64,
    pub div_e_res_l1: f64,
    pub div_e_res_l2: f64,
    pub total_entropy: f64,
    /// Reconnected flux, for the reconnection case only.
    pub psi_flux: Option<f64>,
}

/// `(L1, L2)` norms over vertices `1..=nx, 1..=ny`, normalized by `nx ny`.
pub fn div_norms(v: &VertexArray) -> (f64, f64) {
    let (nx, ny) = (v.nx(), v.ny());
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for b in 1..=ny {
        for a in 1..=nx {
            let x = v.get(a, b);
            l1 += x.abs();
            l2 += x * x;
        }
    }
    let n = (nx * ny) as f64;
    (l1 / n, (l2 / n).sqrt())
}

/// `dx dy sum (eta_i + eta_e)` over the interior of a primitive array.
pub fn total_entropy(prim: &FieldArray<Cell>, grid: &Grid2D, gi: &GasParams, ge: &GasParams) -> f64 {
    let mut sum = 0.0;
    for (_, _, c) in prim.interior() {
        let wi = SpeciesPrimitive::from_slice(&c[ION..ION + 5]);
        let we = SpeciesPrimitive::from_slice(&c[ELECTRON..ELECTRON + 5]);
        sum += species_entropy(&wi, gi).0 + species_entropy(&we, ge).0;
    }
    sum * grid.dx * grid.dy
}

/// Cell-averaged L1 difference against `exact(x, y)`.
pub fn convergence_error<F: Fn(f64, f64) -> f64>(values: &FieldArray<f64>, grid: &Grid2D, exact: F) -> f64 {
    let mut sum = 0.0;
    for (i, j, v) in values.interior() {
        let (x, y) = grid.cell_center(i, j);
        sum += (v - exact(x, y)).abs();
    }
    sum / grid.n_cells() as f64
}

/// Observed order between successive refinements by a factor of two.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `(1 / 2 B0) int |B_y(x, 0)| dx`, using the mean of the two cell rows
/// straddling `y = 0`; a row whose center lies on `y = 0` is used alone.
pub fn reconnected_flux(by: impl Fn(isize, isize) -> f64, grid: &Grid2D, b0: f64) -> f64 {
    let t = -grid.y0 / grid.dy;
    let below = t.floor();
    let frac = t - below;
    let rows: Vec<isize> = if (frac - 0.5).abs() < 1e-9 {
        vec![below as isize]
    } else {
        let upper = t.round() as isize;
        vec![upper - 1, upper]
    };
    let mut total = 0.0;
    for &j in &rows {
        let j = j.clamp(0, grid.ny as isize - 1);
        for i in 0..grid.nx as isize {
            total += by(i, j).abs() * grid.dx;
        }
    }
    total / rows.len() as f64 / (2.0 * b0)
}
