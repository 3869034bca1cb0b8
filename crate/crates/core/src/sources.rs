//! Lorentz and current sources, resistive friction, manufactured forcing and
//! the per-cell implicit solve used by the IMEX stages.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluid::{lorentz, primitive_from_conserved_guess, FluidError, GasParams};
use crate::maxwell::PhmParams;
use crate::state::{Cell, EmState, SpeciesConserved, SpeciesPrimitive, ELECTRON, EX, EY, EZ, ION, PHI};

/// Slots with a nonzero source row, other than `phi`.
pub const ACTIVE: [usize; 11] = [
    ION + 1,
    ION + 2,
    ION + 3,
    ION + 4,
    ELECTRON + 1,
    ELECTRON + 2,
    ELECTRON + 3,
    ELECTRON + 4,
    EX,
    EY,
    EZ,
];
const NA: usize = ACTIVE.len();

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("plasma frequency vanishes (rho_i={rho_i:e}, rho_e={rho_e:e})")]
    DegeneratePlasma { rho_i: f64, rho_e: f64 },
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("implicit source solve stalled after {iters} iterations: residual {residual:e} > {tol:e}")]
    Stagnation { iters: usize, residual: f64, tol: f64 },
}

/// Manufactured forcing added to the electric-field rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manufactured {
    Accuracy1d,
    Smooth2d,
}

impl Manufactured {
    pub fn forcing(self, x: f64, y: f64, t: f64) -> [f64; 3] {
        let tau = 2.0 * std::f64::consts::PI;
        match self {
            Manufactured::Accuracy1d => {
                let ph = tau * (x - 0.5 * t);
                [-(2.0 + ph.sin()) / 3f64.sqrt(), 0.0, -3.0 * std::f64::consts::PI * ph.cos()]
            }
            Manufactured::Smooth2d => {
                let ph = tau * (x + y - 0.5 * t);
                let a = -(2.0 + ph.sin()) / 14f64.sqrt();
                [a, a, -7.0 * std::f64::consts::PI * ph.cos()]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub r_i: f64,
    pub r_e: f64,
    /// Resistivity; zero disables the friction terms.
    #[serde(default)]
    pub eta: f64,
    /// Factor on the current and charge sources of the field equations.
    #[serde(default = "one")]
    pub maxwell_source_scale: f64,
    #[serde(default)]
    pub manufactured: Option<Manufactured>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChargeCurrent {
    pub rho_c: f64,
    pub j: [f64; 3],
}

pub fn charge_current(wi: &SpeciesPrimitive, we: &SpeciesPrimitive, p: &SourceParams) -> ChargeCurrent {
    let qi = p.r_i * wi.rho * lorentz(wi);
    let qe = p.r_e * we.rho * lorentz(we);
    ChargeCurrent {
        rho_c: qi + qe,
        j: [qi * wi.ux + qe * we.ux, qi * wi.uy + qe * we.uy, qi * wi.uz + qe * we.uz],
    }
}

/// `(0, r D (E + u x B), r D u.E)` for one species with charge-to-mass ratio `r`.
pub fn lorentz_source(w: &SpeciesPrimitive, em: &EmState, r: f64) -> [f64; 5] {
    let rd = r * w.rho * lorentz(w);
    let (u, b, e) = (w.velocity(), em.b(), em.e());
    [
        0.0,
        rd * (e[0] + u[1] * b[2] - u[2] * b[1]),
        rd * (e[1] + u[2] * b[0] - u[0] * b[2]),
        rd * (e[2] + u[0] * b[1] - u[1] * b[0]),
        rd * (u[0] * e[0] + u[1] * e[1] + u[2] * e[2]),
    ]
}

/// Ion friction `(R_i, R_i^0)`; the electron terms are their negatives.
pub fn resistive_terms(wi: &SpeciesPrimitive, we: &SpeciesPrimitive, p: &SourceParams) -> Result<([f64; 3], f64), SourceError> {
    if p.eta == 0.0 {
        return Ok(([0.0; 3], 0.0));
    }
    let wp2 = p.r_i * p.r_i * wi.rho + p.r_e * p.r_e * we.rho;
    if !(wp2 > 0.0) || !wp2.is_finite() {
        return Err(SourceError::DegeneratePlasma {
            rho_i: wi.rho,
            rho_e: we.rho,
        });
    }
    let (gi, ge) = (lorentz(wi), lorentz(we));
    let cc = charge_current(wi, we, p);
    let phi = cc.j.map(|x| x / wp2);
    let lambda = (p.r_i * p.r_i * wi.rho * gi + p.r_e * p.r_e * we.rho * ge) / wp2;
    let rho0 = lambda * cc.rho_c - (cc.j[0] * phi[0] + cc.j[1] * phi[1] + cc.j[2] * phi[2]);
    let c = -p.eta * wp2 / (p.r_i - p.r_e);
    let r = [
        c * (cc.j[0] - rho0 * phi[0]),
        c * (cc.j[1] - rho0 * phi[1]),
        c * (cc.j[2] - rho0 * phi[2]),
    ];
    Ok((r, c * (cc.rho_c - rho0 * lambda)))
}

/// Everything the per-cell source needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub params: SourceParams,
    pub gas_i: GasParams,
    pub gas_e: GasParams,
    /// Present when the PHM potentials are evolved.
    pub phm: Option<PhmParams>,
}

impl SourceModel {
    pub fn new(params: SourceParams, gamma_i: f64, gamma_e: f64, phm: Option<PhmParams>) -> Result<Self, FluidError> {
        Ok(SourceModel {
            params,
            gas_i: GasParams::new(gamma_i, params.r_i)?,
            gas_e: GasParams::new(gamma_e, params.r_e)?,
            phm,
        })
    }

    /// Source vector from already recovered species states.
    pub fn source_from_primitive(
        &self,
        wi: &SpeciesPrimitive,
        we: &SpeciesPrimitive,
        em: &EmState,
        x: f64,
        y: f64,
        t: f64,
    ) -> Result<(Cell, ChargeCurrent), SourceError> {
        let p = &self.params;
        let mut s = [0.0; crate::state::NCOMP];
        let si = lorentz_source(wi, em, p.r_i);
        let se = lorentz_source(we, em, p.r_e);
        let (r, r0) = resistive_terms(wi, we, p)?;
        for k in 0..3 {
            s[ION + 1 + k] = si[1 + k] + r[k];
            s[ELECTRON + 1 + k] = se[1 + k] - r[k];
        }
        s[ION + 4] = si[4] + r0;
        s[ELECTRON + 4] = se[4] - r0;
        let cc = charge_current(wi, we, p);
        let scale = p.maxwell_source_scale;
        s[EX] = -scale * cc.j[0];
        s[EY] = -scale * cc.j[1];
        s[EZ] = -scale * cc.j[2];
        if let Some(m) = p.manufactured {
            let f = m.forcing(x, y, t);
            s[EX] += f[0];
            s[EY] += f[1];
            s[EZ] += f[2];
        }
        if let Some(ph) = &self.phm {
            s[PHI] = ph.xi * scale * cc.rho_c;
        }
        Ok((s, cc))
    }

    fn recover(&self, u: &Cell, guess: [Option<f64>; 2]) -> Result<(SpeciesPrimitive, SpeciesPrimitive), FluidError> {
        let wi = primitive_from_conserved_guess(&SpeciesConserved::from_slice(&u[ION..ION + 5]), &self.gas_i, guess[0])?;
        let we = primitive_from_conserved_guess(&SpeciesConserved::from_slice(&u[ELECTRON..ELECTRON + 5]), &self.gas_e, guess[1])?;
        Ok((wi, we))
    }
}

/// Source of a conserved cell at `(x, y, t)`.
pub fn full_source(u: &Cell, x: f64, y: f64, t: f64, model: &SourceModel) -> Result<Cell, SourceError> {
    let (wi, we) = model.recover(u, [None, None])?;
    Ok(model.source_from_primitive(&wi, &we, &EmState::from_cell(u), x, y, t)?.0)
}

/// Newton controls for the implicit stage solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonParams {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub fd_step: f64,
    pub armijo_c: f64,
    pub max_halvings: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            max_iter: 50,
            rel_tol: 1e-10,
            fd_step: 1e-7,
            armijo_c: 1e-4,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSolution {
    pub u: Cell,
    pub iterations: usize,
    pub residual: f64,
}

struct Residual<'a> {
    model: &'a SourceModel,
    u_star: &'a Cell,
    coeff: f64,
    pos: (f64, f64, f64),
    guess: [Option<f64>; 2],
}

impl Residual<'_> {
    fn cell(&self, x: &SVector<f64, NA>) -> Cell {
        let mut u = *self.u_star;
        for (k, &s) in ACTIVE.iter().enumerate() {
            u[s] = x[k];
        }
        u
    }

    /// `G(x) = x - x* - c S(x)` on the active slots, or `None` outside the
    /// recoverable set.
    fn eval(&mut self, x: &SVector<f64, NA>) -> Option<(SVector<f64, NA>, Cell)> {
        let u = self.cell(x);
        let (wi, we) = self.model.recover(&u, self.guess).ok()?;
        let (x0, y0, t) = self.pos;
        let (s, _) = self.model.source_from_primitive(&wi, &we, &EmState::from_cell(&u), x0, y0, t).ok()?;
        let g = SVector::<f64, NA>::from_fn(|k, _| x[k] - self.u_star[ACTIVE[k]] - self.coeff * s[ACTIVE[k]]);
        if g.iter().all(|v| v.is_finite()) {
            self.guess = [Some(wi.p), Some(we.p)];
            Some((g, s))
        } else {
            None
        }
    }
}

fn inf_norm(v: &SVector<f64, NA>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `U = U* + coeff S(U)` for one cell. Density, magnetic field and
/// `psi` have no source and are returned unchanged; `phi` follows in closed
/// form once the rest has converged.
pub fn implicit_stage_solve(
    u_star: &Cell,
    coeff: f64,
    pos: (f64, f64, f64),
    model: &SourceModel,
    newton: &NewtonParams,
) -> Result<ImplicitSolution, SourceError> {
    let scale = u_star.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = newton.rel_tol * (1.0 + scale);
    let mut res = Residual {
        model,
        u_star,
        coeff,
        pos,
        guess: [None, None],
    };
    let mut x = SVector::<f64, NA>::from_fn(|k, _| u_star[ACTIVE[k]]);
    let (mut g, mut s) = match res.eval(&x) {
        Some(v) => v,
        None => {
            // surface the recovery error of the starting state
            let (wi, we) = model.recover(u_star, [None, None])?;
            model.source_from_primitive(&wi, &we, &EmState::from_cell(u_star), pos.0, pos.1, pos.2)?;
            return Err(SourceError::Stagnation {
                iters: 0,
                residual: f64::INFINITY,
                tol,
            });
        }
    };
    let mut norm = inf_norm(&g);
    let mut iters = 0;
    while norm > tol {
        if iters == newton.max_iter {
            return Err(SourceError::Stagnation {
                iters,
                residual: norm,
                tol,
            });
        }
        iters += 1;
        let mut jac = SMatrix::<f64, NA, NA>::zeros();
        let saved = res.guess;
        for k in 0..NA {
            let h = newton.fd_step * (1.0 + x[k].abs());
            let mut xp = x;
            xp[k] += h;
            let (gp, _) = res.eval(&xp).ok_or(SourceError::Stagnation {
                iters,
                residual: norm,
                tol,
            })?;
            res.guess = saved;
            jac.set_column(k, &((gp - g) / h));
        }
        let step = jac.lu().solve(&(-g)).ok_or(SourceError::Stagnation {
            iters,
            residual: norm,
            tol,
        })?;
        let merit = g.norm_squared();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=newton.max_halvings {
            let trial = x + step * alpha;
            if let Some((gt, st)) = res.eval(&trial) {
                if gt.norm_squared() <= (1.0 - 2.0 * newton.armijo_c * alpha) * merit {
                    accepted = Some((trial, gt, st));
                    break;
                }
            }
            res.guess = saved;
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, gn, sn)) => {
                x = xn;
                g = gn;
                s = sn;
                norm = inf_norm(&g);
            }
            None => {
                return Err(SourceError::Stagnation {
                    iters,
                    residual: norm,
                    tol,
                })
            }
        }
    }
    let mut u = res.cell(&x);
    if model.phm.is_some() {
        u[PHI] = u_star[PHI] + coeff * s[PHI];
    }
    Ok(ImplicitSolution {
        u,
        iterations: iters,
        residual: norm,
    })
}
