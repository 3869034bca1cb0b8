//! Time-step control and the two update schemes: the two-stage SSP
//! Runge-Kutta method and an L-stable two-stage IMEX method whose implicit
//! part is the cell-local source.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::es_flux::{es_flux_o1, es_flux_o2, SideState};
use crate::fluid::{max_wave_speed, primitive_from_conserved_guess, FluidError, GasParams};
use crate::grid::{fill_ghosts, Axis, FieldArray, Grid2D};
use crate::maxwell::{self, skip_y, MaxwellScheme, MaxwellWorkspace, Order, PhmParams};
use crate::sources::{implicit_stage_solve, NewtonParams, SourceError, SourceModel};
use crate::state::{Cell, EmState, SpeciesConserved, SpeciesPrimitive, ELECTRON, EX, ION, NCOMP};

/// Implicit weight of the IMEX scheme, `1 - 1/sqrt(2)`.
pub const IMEX_BETA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("primitive recovery failed in cell ({i}, {j}) for the {species}: {source}")]
    Recovery {
        i: isize,
        j: isize,
        species: &'static str,
        source: FluidError,
    },
    #[error("source evaluation failed in cell ({i}, {j}): {source}")]
    Source { i: isize, j: isize, source: SourceError },
    #[error("implicit solve failed in cell ({i}, {j}) during stage {stage}: {source}")]
    Stiff {
        i: isize,
        j: isize,
        stage: usize,
        source: SourceError,
    },
    #[error("non-finite wave speed in cell ({i}, {j})")]
    WaveSpeed { i: isize, j: isize },
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown integrator '{0}' (expected explicit or imex)")]
pub struct UnknownIntegrator(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Explicit,
    Imex,
}

impl FromStr for Integrator {
    type Err = UnknownIntegrator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" | "exp" | "ssprk2" => Ok(Integrator::Explicit),
            "imex" => Ok(Integrator::Imex),
            _ => Err(UnknownIntegrator(s.to_string())),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Explicit => "explicit",
            Integrator::Imex => "imex",
        })
    }
}

/// A system `dU/dt = L(U) + S(U)` with a stiff local part `S`.
pub trait SplitOperator {
    type Field: Clone;
    type Error;

    /// `L(u)`; may refresh ghost data of `u`.
    fn explicit(&mut self, u: &mut Self::Field, t: f64, out: &mut Self::Field) -> Result<(), Self::Error>;
    /// `S(u)`.
    fn source(&mut self, u: &Self::Field, t: f64, out: &mut Self::Field) -> Result<(), Self::Error>;
    /// Solves `U = rhs + coeff S(U)`; `stage` is reported on failure.
    fn implicit(&mut self, rhs: &Self::Field, coeff: f64, t: f64, stage: usize, out: &mut Self::Field) -> Result<(), Self::Error>;
    /// `out = sum c_k f_k`.
    fn combine(out: &mut Self::Field, terms: &[(f64, &Self::Field)]);
}

/// `U1 = U0 + dt (L + S)(U0)`, `U2 = U1 + dt (L + S)(U1)`, `U = (U0 + U2) / 2`.
pub fn ssp_rk2_step<O: SplitOperator>(op: &mut O, u0: &mut O::Field, t: f64, dt: f64) -> Result<O::Field, O::Error> {
    let mut l = u0.clone();
    let mut s = u0.clone();
    op.explicit(u0, t, &mut l)?;
    op.source(u0, t, &mut s)?;
    let mut u1 = u0.clone();
    O::combine(&mut u1, &[(1.0, u0), (dt, &l), (dt, &s)]);
    op.explicit(&mut u1, t + dt, &mut l)?;
    op.source(&u1, t + dt, &mut s)?;
    let mut u2 = u1.clone();
    O::combine(&mut u2, &[(1.0, &u1), (dt, &l), (dt, &s)]);
    let mut out = u2.clone();
    O::combine(&mut out, &[(0.5, u0), (0.5, &u2)]);
    Ok(out)
}

/// Two implicit stages with weight `beta` on the source, then the trapezoidal
/// combination of both stage operators.
pub fn imex_step<O: SplitOperator>(op: &mut O, un: &O::Field, t: f64, dt: f64) -> Result<O::Field, O::Error> {
    let b = IMEX_BETA;
    let (t1, t2) = (t + b * dt, t + (1.0 - b) * dt);
    let mut u1 = un.clone();
    op.implicit(un, b * dt, t1, 1, &mut u1)?;
    let mut l1 = un.clone();
    let mut s1 = un.clone();
    op.explicit(&mut u1, t1, &mut l1)?;
    op.source(&u1, t1, &mut s1)?;
    let mut rhs = un.clone();
    O::combine(&mut rhs, &[(1.0, un), (dt, &l1), ((1.0 - 2.0 * b) * dt, &s1)]);
    let mut u2 = un.clone();
    op.implicit(&rhs, b * dt, t2, 2, &mut u2)?;
    let mut l2 = un.clone();
    let mut s2 = un.clone();
    op.explicit(&mut u2, t2, &mut l2)?;
    op.source(&u2, t2, &mut s2)?;
    let mut out = un.clone();
    let h = 0.5 * dt;
    O::combine(&mut out, &[(1.0, un), (h, &l1), (h, &l2), (h, &s1), (h, &s2)]);
    Ok(out)
}

/// Largest characteristic speeds of one cell in x and y: fluid waves of both
/// species and the electromagnetic speed `light`.
pub fn cell_speeds(wi: &SpeciesPrimitive, we: &SpeciesPrimitive, gi: &GasParams, ge: &GasParams, light: f64) -> (f64, f64) {
    let sx = max_wave_speed(wi, gi, Axis::X).max(max_wave_speed(we, ge, Axis::X)).max(light);
    let sy = max_wave_speed(wi, gi, Axis::Y).max(max_wave_speed(we, ge, Axis::Y)).max(light);
    (sx, sy)
}

/// CFL step from a primitive array. On a one-cell-high grid only the x
/// speeds count.
pub fn compute_dt(prim: &FieldArray<Cell>, grid: &Grid2D, cfl: f64, gi: &GasParams, ge: &GasParams, light: f64) -> Result<(f64, (f64, f64)), StepError> {
    let mut inv = 0.0f64;
    let mut smax = (0.0f64, 0.0f64);
    for (i, j, c) in prim.interior() {
        let wi = SpeciesPrimitive::from_slice(&c[ION..ION + 5]);
        let we = SpeciesPrimitive::from_slice(&c[ELECTRON..ELECTRON + 5]);
        let (sx, sy) = cell_speeds(&wi, &we, gi, ge, light);
        if !(sx.is_finite() && sy.is_finite()) {
            return Err(StepError::WaveSpeed { i, j });
        }
        smax = (smax.0.max(sx), smax.1.max(sy));
        let rate = if grid.is_1d() { sx / grid.dx } else { sx / grid.dx + sy / grid.dy };
        inv = inv.max(rate);
    }
    Ok((cfl / inv, smax))
}

/// Current densities recorded at the two source evaluations of a step, in
/// the `E` slots of otherwise empty cells with filled ghosts.
#[derive(Debug, Clone)]
pub struct StageCurrents {
    pub first: FieldArray<Cell>,
    pub second: FieldArray<Cell>,
}

/// The semi-discrete plasma system on a grid.
#[derive(Debug, Clone)]
pub struct PlasmaOperator {
    pub grid: Grid2D,
    pub model: SourceModel,
    pub maxwell: MaxwellScheme,
    pub order: Order,
    pub newton: NewtonParams,
    /// Last recovered primitives, reused as warm starts.
    prim: FieldArray<Cell>,
    sides: FieldArray<[SideState; 2]>,
    ws: MaxwellWorkspace,
    currents: Vec<FieldArray<Cell>>,
    pub newton_total: usize,
    pub newton_max: usize,
}

impl PlasmaOperator {
    pub fn new(grid: Grid2D, model: SourceModel, maxwell: MaxwellScheme, order: Order, newton: NewtonParams) -> Self {
        let blank = SideState::new(&SpeciesPrimitive::new(1.0, 0.0, 0.0, 0.0, 1.0), &model.gas_i);
        PlasmaOperator {
            prim: FieldArray::new(&grid, [0.0; NCOMP]),
            sides: FieldArray::new(&grid, [blank; 2]),
            ws: MaxwellWorkspace::new(&grid),
            currents: Vec::with_capacity(2),
            grid,
            model,
            maxwell,
            order,
            newton,
            newton_total: 0,
            newton_max: 0,
        }
    }

    pub fn phm(&self) -> Option<&PhmParams> {
        self.model.phm.as_ref()
    }

    /// Fastest electromagnetic signal.
    pub fn light_speed(&self) -> f64 {
        self.phm().map_or(1.0, |p| p.max_speed())
    }

    fn recover_cell(&self, c: &Cell, i: isize, j: isize) -> Result<(SpeciesPrimitive, SpeciesPrimitive), StepError> {
        let old = self.prim.get(i, j);
        let guess = |p: f64| (p > 0.0).then_some(p);
        let wi = primitive_from_conserved_guess(&SpeciesConserved::from_slice(&c[ION..ION + 5]), &self.model.gas_i, guess(old[ION + 4]))
            .map_err(|source| StepError::Recovery {
                i,
                j,
                species: "ions",
                source,
            })?;
        let we = primitive_from_conserved_guess(
            &SpeciesConserved::from_slice(&c[ELECTRON..ELECTRON + 5]),
            &self.model.gas_e,
            guess(old[ELECTRON + 4]),
        )
        .map_err(|source| StepError::Recovery {
            i,
            j,
            species: "electrons",
            source,
        })?;
        Ok((wi, we))
    }

    /// Recovers interior primitives of `u` (fields copied through) and fills
    /// their ghosts.
    pub fn recover(&mut self, u: &FieldArray<Cell>) -> Result<&FieldArray<Cell>, StepError> {
        for j in 0..self.grid.ny as isize {
            for i in 0..self.grid.nx as isize {
                let c = u.get(i, j);
                let (wi, we) = self.recover_cell(c, i, j)?;
                let mut w = *c;
                w[ION..ION + 5].copy_from_slice(&wi.to_array());
                w[ELECTRON..ELECTRON + 5].copy_from_slice(&we.to_array());
                self.prim.set(i, j, w);
            }
        }
        fill_ghosts(&mut self.prim, &self.grid);
        Ok(&self.prim)
    }

    pub fn primitives(&self) -> &FieldArray<Cell> {
        &self.prim
    }

    pub fn take_currents(&mut self) -> Option<StageCurrents> {
        if self.currents.len() != 2 {
            self.currents.clear();
            return None;
        }
        let second = self.currents.pop()?;
        let first = self.currents.pop()?;
        Some(StageCurrents { first, second })
    }

    pub fn reset_step(&mut self) {
        self.currents.clear();
        self.newton_total = 0;
        self.newton_max = 0;
    }

    fn species_flux(&self, s: [&[SideState; 2]; 4], k: usize, axis: Axis) -> [f64; 5] {
        let g = if k == 0 { &self.model.gas_i } else { &self.model.gas_e };
        match self.order {
            Order::First => es_flux_o1(&s[1][k], &s[2][k], g, axis),
            Order::Second => es_flux_o2([&s[0][k], &s[1][k], &s[2][k], &s[3][k]], g, axis),
        }
    }

    fn add_fluid_flux(out: &mut Cell, f: &[f64; 5], off: usize, w: f64) {
        for m in 0..5 {
            out[off + m] += w * f[m];
        }
    }
}

impl SplitOperator for PlasmaOperator {
    type Field = FieldArray<Cell>;
    type Error = StepError;

    fn explicit(&mut self, u: &mut FieldArray<Cell>, _t: f64, out: &mut FieldArray<Cell>) -> Result<(), StepError> {
        fill_ghosts(u, &self.grid);
        self.recover(u)?;
        let (gi, ge) = (self.model.gas_i, self.model.gas_e);
        for (side, w) in self.sides.as_mut_slice().iter_mut().zip(self.prim.as_slice()) {
            side[0] = SideState::new(&SpeciesPrimitive::from_slice(&w[ION..ION + 5]), &gi);
            side[1] = SideState::new(&SpeciesPrimitive::from_slice(&w[ELECTRON..ELECTRON + 5]), &ge);
        }
        out.as_mut_slice().iter_mut().for_each(|c| *c = [0.0; NCOMP]);
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let (idx, idy) = (1.0 / self.grid.dx, 1.0 / self.grid.dy);
        for j in 0..ny {
            for a in 0..=nx {
                let s = [
                    self.sides.get(a - 2, j),
                    self.sides.get(a - 1, j),
                    self.sides.get(a, j),
                    self.sides.get(a + 1, j),
                ];
                let fi = self.species_flux(s, 0, Axis::X);
                let fe = self.species_flux(s, 1, Axis::X);
                if a > 0 {
                    let c = out.get_mut(a - 1, j);
                    Self::add_fluid_flux(c, &fi, ION, -idx);
                    Self::add_fluid_flux(c, &fe, ELECTRON, -idx);
                }
                if a < nx {
                    let c = out.get_mut(a, j);
                    Self::add_fluid_flux(c, &fi, ION, idx);
                    Self::add_fluid_flux(c, &fe, ELECTRON, idx);
                }
            }
        }
        if !skip_y(&self.grid) {
            for b in 0..=ny {
                for i in 0..nx {
                    let s = [
                        self.sides.get(i, b - 2),
                        self.sides.get(i, b - 1),
                        self.sides.get(i, b),
                        self.sides.get(i, b + 1),
                    ];
                    let fi = self.species_flux(s, 0, Axis::Y);
                    let fe = self.species_flux(s, 1, Axis::Y);
                    if b > 0 {
                        let c = out.get_mut(i, b - 1);
                        Self::add_fluid_flux(c, &fi, ION, -idy);
                        Self::add_fluid_flux(c, &fe, ELECTRON, -idy);
                    }
                    if b < ny {
                        let c = out.get_mut(i, b);
                        Self::add_fluid_flux(c, &fi, ION, idy);
                        Self::add_fluid_flux(c, &fe, ELECTRON, idy);
                    }
                }
            }
        }
        let phm = self.model.phm.unwrap_or_default();
        maxwell::accumulate_rhs(self.maxwell, self.order, &phm, u, &self.grid, &mut self.ws, out);
        Ok(())
    }

    fn source(&mut self, u: &FieldArray<Cell>, t: f64, out: &mut FieldArray<Cell>) -> Result<(), StepError> {
        let mut cur = FieldArray::new(&self.grid, [0.0; NCOMP]);
        out.as_mut_slice().iter_mut().for_each(|c| *c = [0.0; NCOMP]);
        for j in 0..self.grid.ny as isize {
            for i in 0..self.grid.nx as isize {
                let c = u.get(i, j);
                let (wi, we) = self.recover_cell(c, i, j)?;
                let (x, y) = self.grid.cell_center(i, j);
                let (s, cc) = self
                    .model
                    .source_from_primitive(&wi, &we, &EmState::from_cell(c), x, y, t)
                    .map_err(|source| StepError::Source { i, j, source })?;
                out.set(i, j, s);
                cur.get_mut(i, j)[EX..EX + 3].copy_from_slice(&cc.j);
            }
        }
        fill_ghosts(&mut cur, &self.grid);
        if self.currents.len() == 2 {
            self.currents.clear();
        }
        self.currents.push(cur);
        Ok(())
    }

    fn implicit(&mut self, rhs: &FieldArray<Cell>, coeff: f64, t: f64, stage: usize, out: &mut FieldArray<Cell>) -> Result<(), StepError> {
        out.as_mut_slice().copy_from_slice(rhs.as_slice());
        for j in 0..self.grid.ny as isize {
            for i in 0..self.grid.nx as isize {
                let (x, y) = self.grid.cell_center(i, j);
                let sol = implicit_stage_solve(rhs.get(i, j), coeff, (x, y, t), &self.model, &self.newton)
                    .map_err(|source| StepError::Stiff { i, j, stage, source })?;
                self.newton_total += sol.iterations;
                self.newton_max = self.newton_max.max(sol.iterations);
                out.set(i, j, sol.u);
            }
        }
        Ok(())
    }

    fn combine(out: &mut FieldArray<Cell>, terms: &[(f64, &FieldArray<Cell>)]) {
        let n = out.as_slice().len();
        for idx in 0..n {
            let mut acc = [0.0; NCOMP];
            for (c, f) in terms {
                let v = &f.as_slice()[idx];
                for k in 0..NCOMP {
                    acc[k] += c * v[k];
                }
            }
            out.as_mut_slice()[idx] = acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time after the step.
    pub time: f64,
    pub dt: f64,
    pub max_speed: (f64, f64),
    pub newton_total: usize,
    pub newton_max: usize,
}

/// Owns the evolving state.
#[derive(Debug, Clone)]
pub struct Solver {
    pub op: PlasmaOperator,
    pub integrator: Integrator,
    pub cfl: f64,
    pub u: FieldArray<Cell>,
    pub time: f64,
    pub steps: usize,
}

impl Solver {
    pub fn new(op: PlasmaOperator, integrator: Integrator, cfl: f64, u: FieldArray<Cell>, time: f64) -> Self {
        let mut s = Solver {
            op,
            integrator,
            cfl,
            u,
            time,
            steps: 0,
        };
        fill_ghosts(&mut s.u, &s.op.grid);
        s
    }

    /// Step size from the current state.
    pub fn stable_dt(&mut self) -> Result<(f64, (f64, f64)), StepError> {
        self.op.recover(&self.u)?;
        let light = self.op.light_speed();
        compute_dt(self.op.primitives(), &self.op.grid, self.cfl, &self.op.model.gas_i, &self.op.model.gas_e, light)
    }

    /// One step of at most `dt_cap`. The previous state and the stage
    /// currents are returned for the constraint diagnostics.
    pub fn step(&mut self, dt_cap: f64) -> Result<(StepReport, FieldArray<Cell>, Option<StageCurrents>), StepError> {
        let (dt_cfl, speeds) = self.stable_dt()?;
        let dt = dt_cfl.min(dt_cap);
        self.op.reset_step();
        let mut old = self.u.clone();
        let new = match self.integrator {
            Integrator::Explicit => ssp_rk2_step(&mut self.op, &mut old, self.time, dt)?,
            Integrator::Imex => imex_step(&mut self.op, &old, self.time, dt)?,
        };
        self.u = new;
        fill_ghosts(&mut self.u, &self.op.grid);
        self.time += dt;
        self.steps += 1;
        let report = StepReport {
            step: self.steps,
            time: self.time,
            dt,
            max_speed: speeds,
            newton_total: self.op.newton_total,
            newton_max: self.op.newton_max,
        };
        Ok((report, old, self.op.take_currents()))
    }
}
