//! Maxwell discretizations.
//!
//! The electromagnetic block of a cell is handled as an 8-vector
//! `(B_x, B_y, B_z, E_x, E_y, E_z, psi, phi)`, which is the contiguous tail
//! of the cell layout.

pub mod baselines;
pub mod multid;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::es_flux::minmod;
use crate::grid::{Axis, FieldArray, Grid2D, VertexArray};
use crate::state::{Cell, BX};

pub type Em = [f64; 8];

pub const IBX: usize = 0;
pub const IBY: usize = 1;
pub const IBZ: usize = 2;
pub const IEX: usize = 3;
pub const IEY: usize = 4;
pub const IEZ: usize = 5;
pub const IPSI: usize = 6;
pub const IPHI: usize = 7;

#[inline]
pub fn em_of(c: &Cell) -> Em {
    let mut e = [0.0; 8];
    e.copy_from_slice(&c[BX..BX + 8]);
    e
}

#[derive(Debug, Error, PartialEq)]
pub enum MaxwellError {
    #[error("unknown Maxwell scheme '{0}' (expected multid, phm or no_treatment)")]
    UnknownScheme(String),
    #[error("PHM speeds must be at least 1 (kappa={kappa}, xi={xi})")]
    BadPhmSpeeds { kappa: f64, xi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxwellScheme {
    /// Vertex-based multidimensional solver.
    #[serde(rename = "multid")]
    MultiD,
    /// Perfectly hyperbolic Maxwell with 1-D Rusanov fluxes.
    Phm,
    /// Plain 1-D Rusanov fluxes.
    NoTreatment,
}

impl FromStr for MaxwellScheme {
    type Err = MaxwellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "multid" | "multi_d" => Ok(MaxwellScheme::MultiD),
            "phm" => Ok(MaxwellScheme::Phm),
            "no_treatment" | "notreatment" | "none" => Ok(MaxwellScheme::NoTreatment),
            _ => Err(MaxwellError::UnknownScheme(s.to_string())),
        }
    }
}

impl fmt::Display for MaxwellScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaxwellScheme::MultiD => "multid",
            MaxwellScheme::Phm => "phm",
            MaxwellScheme::NoTreatment => "no_treatment",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhmParams {
    pub kappa: f64,
    pub xi: f64,
}

impl Default for PhmParams {
    fn default() -> Self {
        PhmParams { kappa: 1.0, xi: 1.0 }
    }
}

impl PhmParams {
    pub fn new(kappa: f64, xi: f64) -> Result<Self, MaxwellError> {
        if !(kappa >= 1.0 && xi >= 1.0) {
            return Err(MaxwellError::BadPhmSpeeds { kappa, xi });
        }
        Ok(PhmParams { kappa, xi })
    }

    pub fn max_speed(&self) -> f64 {
        1.0f64.max(self.kappa).max(self.xi)
    }
}

/// Spatial reconstruction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(n: u8) -> Option<Self> {
        match n {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            _ => None,
        }
    }
}

/// Physical Maxwell flux, with the PHM coupling terms when `phm` is given.
pub fn physical_flux(e: &Em, axis: Axis, phm: Option<&PhmParams>) -> Em {
    let mut f = match axis {
        Axis::X => [0.0, -e[IEZ], e[IEY], 0.0, e[IBZ], -e[IBY], 0.0, 0.0],
        Axis::Y => [e[IEZ], 0.0, -e[IEX], -e[IBZ], 0.0, e[IBX], 0.0, 0.0],
    };
    if let Some(p) = phm {
        let (b, ef) = match axis {
            Axis::X => (IBX, IEX),
            Axis::Y => (IBY, IEY),
        };
        f[b] += p.kappa * e[IPSI];
        f[ef] += p.xi * e[IPHI];
        f[IPSI] = p.kappa * e[b];
        f[IPHI] = p.xi * e[ef];
    }
    f
}

/// MinMod traces on both sides of the face between `s[1]` and `s[2]`.
#[inline]
pub fn traces(s: [&Em; 4], order: Order) -> (Em, Em) {
    let mut minus = *s[1];
    let mut plus = *s[2];
    if order == Order::Second {
        for k in 0..8 {
            minus[k] += 0.5 * minmod(s[0][k], s[1][k], s[2][k]);
            plus[k] -= 0.5 * minmod(s[1][k], s[2][k], s[3][k]);
        }
    }
    (minus, plus)
}

/// Buffers reused across stages.
#[derive(Debug, Clone)]
pub struct MaxwellWorkspace {
    pub ez: VertexArray,
    pub bz: VertexArray,
    /// x-face fluxes, `(nx + 1) * ny`, face `a` between cells `a - 1` and `a`.
    fx: Vec<Em>,
    /// y-face fluxes, `nx * (ny + 1)`.
    fy: Vec<Em>,
}

impl MaxwellWorkspace {
    pub fn new(grid: &Grid2D) -> Self {
        MaxwellWorkspace {
            ez: VertexArray::new(grid),
            bz: VertexArray::new(grid),
            fx: vec![[0.0; 8]; (grid.nx + 1) * grid.ny],
            fy: vec![[0.0; 8]; grid.nx * (grid.ny + 1)],
        }
    }
}

/// Whether the y-sweep can be skipped: one cell in y with data that is
/// identical across the y-faces.
#[inline]
pub fn skip_y(grid: &Grid2D) -> bool {
    grid.is_1d() && grid.bc_y != crate::grid::Boundary::ConductingWall
}

/// Adds `-(div F)` of the Maxwell fluxes to the EM slots of `rhs`.
///
/// `u` must have its ghost layers filled.
pub fn accumulate_rhs(
    scheme: MaxwellScheme,
    order: Order,
    phm: &PhmParams,
    u: &FieldArray<Cell>,
    grid: &Grid2D,
    ws: &mut MaxwellWorkspace,
    rhs: &mut FieldArray<Cell>,
) {
    let (nx, ny) = (grid.nx, grid.ny);
    if scheme == MaxwellScheme::MultiD {
        multid::compute_vertex_values(u, grid, order, &mut ws.ez, &mut ws.bz);
    }
    let phm_opt = (scheme == MaxwellScheme::Phm).then_some(phm);
    let y_active = !skip_y(grid);

    for j in 0..ny {
        for a in 0..=nx {
            let i = a as isize;
            let jj = j as isize;
            let s = [
                &em_of(u.get(i - 2, jj)),
                &em_of(u.get(i - 1, jj)),
                &em_of(u.get(i, jj)),
                &em_of(u.get(i + 1, jj)),
            ];
            let (m, p) = traces(s, order);
            ws.fx[j * (nx + 1) + a] = match scheme {
                MaxwellScheme::MultiD => {
                    multid::edge_flux_x(ws.ez.get(a, j + 1), ws.ez.get(a, j), ws.bz.get(a, j + 1), ws.bz.get(a, j), &m, &p)
                }
                _ => baselines::rusanov_flux(&m, &p, Axis::X, phm_opt),
            };
        }
    }
    if y_active {
        for b in 0..=ny {
            for i in 0..nx {
                let ii = i as isize;
                let jb = b as isize;
                let s = [
                    &em_of(u.get(ii, jb - 2)),
                    &em_of(u.get(ii, jb - 1)),
                    &em_of(u.get(ii, jb)),
                    &em_of(u.get(ii, jb + 1)),
                ];
                let (m, p) = traces(s, order);
                ws.fy[b * nx + i] = match scheme {
                    MaxwellScheme::MultiD => {
                        multid::edge_flux_y(ws.ez.get(i + 1, b), ws.ez.get(i, b), ws.bz.get(i + 1, b), ws.bz.get(i, b), &m, &p)
                    }
                    _ => baselines::rusanov_flux(&m, &p, Axis::Y, phm_opt),
                };
            }
        }
    }
    let (idx, idy) = (1.0 / grid.dx, 1.0 / grid.dy);
    for j in 0..ny {
        for i in 0..nx {
            let fl = &ws.fx[j * (nx + 1) + i];
            let fr = &ws.fx[j * (nx + 1) + i + 1];
            let c = rhs.get_mut(i as isize, j as isize);
            for k in 0..8 {
                c[BX + k] -= (fr[k] - fl[k]) * idx;
            }
            if y_active {
                let fb = &ws.fy[j * nx + i];
                let ft = &ws.fy[(j + 1) * nx + i];
                for k in 0..8 {
                    c[BX + k] -= (ft[k] - fb[k]) * idy;
                }
            }
        }
    }
}
