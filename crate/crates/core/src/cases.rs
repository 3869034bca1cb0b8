//! Initial-condition catalog and per-case defaults.

use std::f64::consts::PI;

use thiserror::Error;

use crate::config::{CaseId, ConfigError, OutputConfig, SchemeConfig};
use crate::fluid::{conserved_from_primitive, FluidError, GasParams};
use crate::grid::{fill_ghosts, Boundary, FieldArray, Grid2D, GridError, VertexArray};
use crate::maxwell::{MaxwellScheme, Order, PhmParams};
use crate::sources::{Manufactured, NewtonParams, SourceModel, SourceParams};
use crate::state::{Cell, SpeciesPrimitive, BX, BY, ELECTRON, EX, EY, EZ, ION, NCOMP};
use crate::stepper::{Integrator, PlasmaOperator, Solver};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("inadmissible initial state in cell ({i}, {j}): {source}")]
    Initial { i: isize, j: isize, source: FluidError },
    #[error(transparent)]
    Fluid(#[from] FluidError),
}

/// Desk-scale defaults keep every case within minutes on one core; paper
/// scale restores the published resolutions and end times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseValues {
    pub b0: f64,
    pub psi0: f64,
    pub pressure_coefficient: f64,
    pub drift_sign: f64,
    pub diffusivity: f64,
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub case: CaseId,
    pub scheme: MaxwellScheme,
    pub integrator: Integrator,
    pub order: Order,
    pub cfl: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub bc: (Boundary, Boundary),
    pub gamma: (f64, f64),
    pub sources: SourceParams,
    pub phm: Option<PhmParams>,
    pub newton: NewtonParams,
    pub values: CaseValues,
    pub max_steps: Option<usize>,
    pub output: OutputConfig,
}

struct Defaults {
    x: (f64, f64),
    y: (f64, f64),
    bc: (Boundary, Boundary),
    gamma: f64,
    r_i: f64,
    r_e: f64,
    eta: f64,
    scale: f64,
    t_start: f64,
    paper: (usize, usize, f64),
    desk: (usize, usize, f64),
}

fn defaults(case: CaseId) -> Defaults {
    use Boundary::*;
    let r4pi = (4.0 * PI).sqrt();
    let unit = (0.0, 1.0);
    match case {
        CaseId::Accuracy1d => Defaults {
            x: unit,
            y: unit,
            bc: (Periodic, Periodic),
            gamma: 5.0 / 3.0,
            r_i: 1.0,
            r_e: -2.0,
            eta: 0.0,
            scale: 1.0,
            t_start: 0.0,
            paper: (256, 1, 2.0),
            desk: (256, 1, 2.0),
        },
        CaseId::Briowu => Defaults {
            x: (-0.5, 0.5),
            y: unit,
            bc: (Neumann, Periodic),
            gamma: 2.0,
            r_i: 1e3 / r4pi,
            r_e: -1e3 / r4pi,
            eta: 0.0,
            scale: 4.0 * PI,
            t_start: 0.0,
            paper: (400, 1, 0.4),
            desk: (400, 1, 0.4),
        },
        CaseId::CurrentSheet => Defaults {
            x: (-1.5, 1.5),
            y: unit,
            bc: (Neumann, Periodic),
            gamma: 4.0 / 3.0,
            r_i: 1e3,
            r_e: -1e3,
            eta: 0.01,
            scale: 1.0,
            t_start: 1.0,
            paper: (400, 1, 9.0),
            desk: (400, 1, 9.0),
        },
        CaseId::Smooth2d => Defaults {
            x: unit,
            y: unit,
            bc: (Periodic, Periodic),
            gamma: 5.0 / 3.0,
            r_i: 1.0,
            r_e: -2.0,
            eta: 0.0,
            scale: 1.0,
            t_start: 0.0,
            paper: (100, 100, 10.0),
            desk: (64, 64, 0.5),
        },
        CaseId::OrszagTang => Defaults {
            x: unit,
            y: unit,
            bc: (Periodic, Periodic),
            gamma: 5.0 / 3.0,
            r_i: 1e3 / r4pi,
            r_e: -1e3 / r4pi,
            eta: 0.0,
            scale: 4.0 * PI,
            t_start: 0.0,
            paper: (200, 200, 1.0),
            desk: (64, 64, 1.0),
        },
        CaseId::Blast => Defaults {
            x: (-6.0, 6.0),
            y: (-6.0, 6.0),
            bc: (Neumann, Neumann),
            gamma: 4.0 / 3.0,
            r_i: 1e3,
            r_e: -1e3,
            eta: 0.0,
            scale: 4.0 * PI,
            t_start: 0.0,
            paper: (200, 200, 4.0),
            desk: (100, 100, 1.0),
        },
        CaseId::Gem => Defaults {
            x: (-4.0 * PI, 4.0 * PI),
            y: (-2.0 * PI, 2.0 * PI),
            bc: (Periodic, ConductingWall),
            gamma: 4.0 / 3.0,
            r_i: 1.0,
            r_e: -25.0,
            eta: 0.01,
            scale: 1.0,
            t_start: 0.0,
            paper: (512, 256, 100.0),
            desk: (128, 64, 40.0),
        },
    }
}

/// Stable CFL numbers used when the configuration does not set one.
pub fn default_cfl(case: CaseId, integrator: Integrator) -> f64 {
    match (case.is_1d(), integrator) {
        (true, _) => 0.8,
        (false, Integrator::Imex) => 0.45,
        (false, Integrator::Explicit) => 0.2,
    }
}

impl Setup {
    pub fn resolve(cfg: &SchemeConfig, scale: Scale) -> Result<Setup, ConfigError> {
        let d = defaults(cfg.test_case);
        let (nx, ny, t_end) = match scale {
            Scale::Desk => d.desk,
            Scale::Paper => d.paper,
        };
        let ny = if cfg.test_case.is_1d() {
            if cfg.ny.is_some_and(|n| n != 1) {
                return Err(ConfigError::Invalid {
                    key: "ny",
                    reason: format!("{} is one-dimensional", cfg.test_case),
                });
            }
            1
        } else {
            cfg.ny.unwrap_or(ny)
        };
        let r_i = cfg.sources.r_i.unwrap_or(d.r_i);
        // symmetric cases keep r_e = -r_i when only r_i is overridden
        let r_e = cfg.sources.r_e.unwrap_or(if d.r_e == -d.r_i { -r_i } else { d.r_e });
        let eta = cfg.sources.eta.unwrap_or(d.eta);
        let manufactured = match cfg.test_case {
            CaseId::Accuracy1d => Some(Manufactured::Accuracy1d),
            CaseId::Smooth2d => Some(Manufactured::Smooth2d),
            _ => None,
        };
        let order = Order::from_int(cfg.fluid_order).ok_or(ConfigError::Invalid {
            key: "fluid_order",
            reason: cfg.fluid_order.to_string(),
        })?;
        let t_end = cfg.t_end.unwrap_or(t_end);
        if t_end <= d.t_start {
            return Err(ConfigError::Invalid {
                key: "t_end",
                reason: format!("{t_end} does not exceed the start time {}", d.t_start),
            });
        }
        Ok(Setup {
            case: cfg.test_case,
            scheme: cfg.scheme,
            integrator: cfg.integrator,
            order,
            cfl: cfg.cfl.unwrap_or_else(|| default_cfl(cfg.test_case, cfg.integrator)),
            t_start: d.t_start,
            t_end,
            nx: cfg.nx.unwrap_or(nx),
            ny,
            x_range: d.x,
            y_range: d.y,
            bc: d.bc,
            gamma: (d.gamma, d.gamma),
            sources: SourceParams {
                r_i,
                r_e,
                eta,
                maxwell_source_scale: cfg.sources.maxwell_source_scale.unwrap_or(d.scale),
                manufactured,
            },
            phm: (cfg.scheme == MaxwellScheme::Phm).then_some(cfg.phm),
            newton: cfg.newton,
            values: CaseValues {
                b0: cfg.case.b0.unwrap_or(match cfg.test_case {
                    CaseId::Blast => 0.1,
                    _ => 1.0,
                }),
                psi0: cfg.case.psi0.unwrap_or(0.1),
                pressure_coefficient: cfg.case.pressure_coefficient.unwrap_or(5.0 / (24.0 * PI)),
                drift_sign: cfg.case.drift_sign.unwrap_or(-1.0),
                diffusivity: cfg.case.diffusivity.unwrap_or(if eta > 0.0 { eta } else { 0.01 }),
            },
            max_steps: cfg.max_steps,
            output: cfg.output.clone(),
        })
    }

    pub fn grid(&self) -> Result<Grid2D, GridError> {
        Grid2D::new(self.nx, self.ny, self.x_range, self.y_range, self.bc.0, self.bc.1)
    }

    pub fn model(&self) -> Result<SourceModel, FluidError> {
        SourceModel::new(self.sources, self.gamma.0, self.gamma.1, self.phm)
    }

    pub fn solver(&self) -> Result<Solver, CaseError> {
        let grid = self.grid()?;
        let model = self.model()?;
        let u = initial_state(self, &grid, &model)?;
        let op = PlasmaOperator::new(grid, model, self.scheme, self.order, self.newton);
        Ok(Solver::new(op, self.integrator, self.cfl, u, self.t_start))
    }

    /// Exact ion density for the manufactured cases.
    pub fn exact_density(&self, x: f64, y: f64, t: f64) -> Option<f64> {
        match self.case {
            CaseId::Accuracy1d => Some(2.0 + (2.0 * PI * (x - 0.5 * t)).sin()),
            CaseId::Smooth2d => Some(2.0 + (2.0 * PI * (x + y - 0.5 * t)).sin()),
            _ => None,
        }
    }

    /// Resistive diffusion profile of the current sheet.
    pub fn sheet_field(&self, x: f64, t: f64) -> f64 {
        self.values.b0 * libm::erf(x / (2.0 * (self.values.diffusivity * t).sqrt()))
    }
}

/// Cell contents before conversion: both species' primitives and the fields.
struct Pointwise {
    wi: SpeciesPrimitive,
    we: SpeciesPrimitive,
    b: [f64; 3],
    e: [f64; 3],
}

impl Pointwise {
    fn neutral(w: SpeciesPrimitive, b: [f64; 3], e: [f64; 3]) -> Self {
        Pointwise { wi: w, we: w, b, e }
    }
}

fn sech2(y: f64) -> f64 {
    let c = y.cosh();
    1.0 / (c * c)
}

fn pointwise(s: &Setup, x: f64, y: f64) -> Pointwise {
    let tau = 2.0 * PI;
    let v = &s.values;
    match s.case {
        CaseId::Accuracy1d => {
            let sn = (tau * x).sin();
            Pointwise::neutral(SpeciesPrimitive::new(2.0 + sn, 0.5, 0.0, 0.0, 1.0), [0.0, 2.0 * sn, 0.0], [0.0, 0.0, -sn])
        }
        CaseId::Briowu => {
            let (rho, p, by) = if x < 0.0 {
                (0.5, 0.5, (4.0 * PI).sqrt())
            } else {
                (0.0625, 0.05, -(4.0 * PI).sqrt())
            };
            Pointwise::neutral(SpeciesPrimitive::new(rho, 0.0, 0.0, 0.0, p), [PI.sqrt(), by, 0.0], [0.0; 3])
        }
        CaseId::CurrentSheet => {
            let (rho, dif) = (0.5, v.diffusivity);
            let uz = v.b0 / (s.sources.r_i * rho * (PI * dif).sqrt()) * (-x * x / (4.0 * dif)).exp();
            Pointwise {
                wi: SpeciesPrimitive::new(rho, 0.0, 0.0, uz, 25.0),
                we: SpeciesPrimitive::new(rho, 0.0, 0.0, -uz, 25.0),
                b: [0.0, s.sheet_field(x, s.t_start), 0.0],
                e: [0.0; 3],
            }
        }
        CaseId::Smooth2d => {
            let sn = (tau * (x + y)).sin();
            Pointwise::neutral(
                SpeciesPrimitive::new(2.0 + sn, 0.25, 0.25, 0.0, 1.0),
                [-2.0 * sn, 2.0 * sn, 0.0],
                [0.0, 0.0, -sn],
            )
        }
        CaseId::OrszagTang => {
            let w = SpeciesPrimitive::new(25.0 / (72.0 * PI), -0.5 * (tau * y).sin(), 0.5 * (tau * x).sin(), 0.0, 5.0 / (24.0 * PI));
            let b = [-(tau * y).sin(), (2.0 * tau * x).sin(), 0.0];
            // E = -u_i x B with u and B in the plane
            let ez = -(w.ux * b[1] - w.uy * b[0]);
            Pointwise::neutral(w, b, [0.0, 0.0, ez])
        }
        CaseId::Blast => {
            let r = (x * x + y * y).sqrt();
            let (rho_in, p_in, rho_out, p_out) = (1e-2, 1.0, 1e-4, 5e-4);
            let f = ((r - 0.8) / 0.2).clamp(0.0, 1.0);
            let rho = rho_in + f * (rho_out - rho_in);
            let p = p_in + f * (p_out - p_in);
            Pointwise::neutral(SpeciesPrimitive::new(0.5 * rho, 0.0, 0.0, 0.0, 0.5 * p), [v.b0, 0.0, 0.0], [0.0; 3])
        }
        CaseId::Gem => {
            let s2 = sech2(y);
            let n = s2 + 0.2;
            let uz = v.drift_sign * v.b0 * s2 / (2.0 * n);
            let p = 0.2 + v.b0 * v.b0 * s2 / 4.0 * v.pressure_coefficient;
            let mass_ratio = (s.sources.r_i / s.sources.r_e).abs();
            Pointwise {
                wi: SpeciesPrimitive::new(n, 0.0, 0.0, uz, p),
                we: SpeciesPrimitive::new(mass_ratio * n, 0.0, 0.0, -uz, p),
                // the field comes from the vector potential below
                b: [0.0; 3],
                e: [0.0; 3],
            }
        }
    }
}

/// GEM flux function `A_z` with `B = curl(A_z z)`, at the grid vertices.
pub fn gem_potential(s: &Setup, grid: &Grid2D) -> VertexArray {
    let (lx, ly) = (grid.x1 - grid.x0, grid.y1 - grid.y0);
    let (b0, psi0) = (s.values.b0, s.values.psi0);
    let mut a = VertexArray::new(grid);
    for vb in 0..=grid.ny {
        for va in 0..=grid.nx {
            let (x, y) = grid.vertex(va, vb);
            let sheet = b0 * y.cosh().ln();
            let bump = b0 * psi0 * (PI * x / lx).cos() * (PI * y / ly).cos();
            a.set(va, vb, sheet + bump);
        }
    }
    a
}

/// Cell-centered initial conserved state with ghosts filled.
pub fn initial_state(s: &Setup, grid: &Grid2D, model: &SourceModel) -> Result<FieldArray<Cell>, CaseError> {
    let mut u = FieldArray::new(grid, [0.0; NCOMP]);
    let (gi, ge): (&GasParams, &GasParams) = (&model.gas_i, &model.gas_e);
    let potential = (s.case == CaseId::Gem).then(|| gem_potential(s, grid));
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let (x, y) = grid.cell_center(i, j);
            let p = pointwise(s, x, y);
            let c = u.get_mut(i, j);
            let ci = conserved_from_primitive(&p.wi, gi).map_err(|source| CaseError::Initial { i, j, source })?;
            let ce = conserved_from_primitive(&p.we, ge).map_err(|source| CaseError::Initial { i, j, source })?;
            c[ION..ION + 5].copy_from_slice(&ci.to_array());
            c[ELECTRON..ELECTRON + 5].copy_from_slice(&ce.to_array());
            c[BX..BX + 3].copy_from_slice(&p.b);
            c[EX] = p.e[0];
            c[EY] = p.e[1];
            c[EZ] = p.e[2];
            if let Some(a) = &potential {
                let (ia, jb) = (i as usize, j as usize);
                let (sw, se) = (a.get(ia, jb), a.get(ia + 1, jb));
                let (nw, ne) = (a.get(ia, jb + 1), a.get(ia + 1, jb + 1));
                c[BX] = ((nw + ne) - (sw + se)) / (2.0 * grid.dy);
                c[BY] = -((ne + se) - (nw + sw)) / (2.0 * grid.dx);
            }
        }
    }
    fill_ghosts(&mut u, grid);
    Ok(u)
}
