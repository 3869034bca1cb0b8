//! Per-species relativistic ideal-gas thermodynamics.
//!
//! Units have `c = 1`. For primitives `w = (rho, u, p)`:
//! `Gamma = (1 - |u|^2)^(-1/2)`, `h = 1 + k p / rho` with `k = gamma / (gamma - 1)`,
//! and the conserved variables are `D = rho Gamma`, `m = rho h Gamma^2 u`,
//! `E = rho h Gamma^2 - p`.

use nalgebra::Matrix5;
use thiserror::Error;

use crate::grid::Axis;
use crate::state::{SpeciesConserved, SpeciesPrimitive};

pub const RHO_FLOOR: f64 = 1e-14;
pub const P_FLOOR: f64 = 1e-14;

const RECOVERY_MAX_ITER: usize = 200;
const RECOVERY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("adiabatic index {0} outside (1, 2]")]
    BadGamma(f64),
    #[error("inadmissible primitive state rho={rho:e} p={p:e} |u|^2={speed_sq}")]
    Inadmissible { rho: f64, p: f64, speed_sq: f64 },
    #[error("conserved state D={d:e} |m|={m:e} E={en:e} has no admissible preimage")]
    Unrecoverable { d: f64, m: f64, en: f64 },
    #[error("pressure iteration did not converge after {iters} iterations (D={d:e} |m|={m:e} E={en:e})")]
    NoConvergence { iters: usize, d: f64, m: f64, en: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    pub gamma: f64,
    /// Charge-to-mass ratio.
    pub r: f64,
}

impl GasParams {
    pub fn new(gamma: f64, r: f64) -> Result<Self, FluidError> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(FluidError::BadGamma(gamma));
        }
        Ok(GasParams { gamma, r })
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.gamma / (self.gamma - 1.0)
    }

    /// Polytropic index `k - 1`.
    #[inline]
    pub fn n(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }
}

#[inline]
pub fn lorentz(w: &SpeciesPrimitive) -> f64 {
    1.0 / (1.0 - w.speed_sq()).sqrt()
}

#[inline]
pub fn enthalpy(w: &SpeciesPrimitive, g: &GasParams) -> f64 {
    1.0 + g.k() * w.p / w.rho
}

#[inline]
pub fn sound_speed_sq(w: &SpeciesPrimitive, g: &GasParams) -> f64 {
    g.k() * w.p / (g.n() * w.rho * enthalpy(w, g))
}

fn check(w: &SpeciesPrimitive) -> Result<(), FluidError> {
    if w.is_admissible() {
        Ok(())
    } else {
        Err(FluidError::Inadmissible {
            rho: w.rho,
            p: w.p,
            speed_sq: w.speed_sq(),
        })
    }
}

/// Conserved variables without the admissibility check.
#[inline]
pub fn conserved_unchecked(w: &SpeciesPrimitive, g: &GasParams) -> SpeciesConserved {
    let lf2 = 1.0 / (1.0 - w.speed_sq());
    let lf = lf2.sqrt();
    let big = (w.rho + g.k() * w.p) * lf2;
    SpeciesConserved {
        d: w.rho * lf,
        mx: big * w.ux,
        my: big * w.uy,
        mz: big * w.uz,
        en: big - w.p,
    }
}

pub fn conserved_from_primitive(w: &SpeciesPrimitive, g: &GasParams) -> Result<SpeciesConserved, FluidError> {
    check(w)?;
    Ok(conserved_unchecked(w, g))
}

/// Pressure residual of the recovery problem and its derivative, written in
/// terms of `tau = E - D` to limit cancellation for cold states.
#[inline]
fn pressure_residual(p: f64, d: f64, tau: f64, m2: f64, en: f64, k: f64) -> (f64, f64, f64) {
    let ep = en + p;
    let v2 = m2 / (ep * ep);
    let sq = (1.0 - v2).max(0.0).sqrt();
    let f = sq * ((tau + p) * sq - d * v2 / (1.0 + sq)) - k * p;
    let df = if sq > 0.0 { 1.0 + v2 - d * v2 / (sq * ep) - k } else { f64::NEG_INFINITY };
    // magnitude of the cancelling terms, for the roundoff stopping test
    let mag = (tau.abs() + p + d * v2) * sq + k * p;
    (f, df, mag)
}

pub fn primitive_from_conserved(u: &SpeciesConserved, g: &GasParams) -> Result<SpeciesPrimitive, FluidError> {
    primitive_from_conserved_guess(u, g, None)
}

/// Recovery by safeguarded Newton on the pressure, optionally warm-started.
pub fn primitive_from_conserved_guess(
    u: &SpeciesConserved,
    g: &GasParams,
    p_guess: Option<f64>,
) -> Result<SpeciesPrimitive, FluidError> {
    let d = u.d;
    let en = u.en;
    let m2 = u.momentum_sq();
    let m = m2.sqrt();
    let unrecoverable = || FluidError::Unrecoverable { d, m, en };
    if !(d > 0.0) || !en.is_finite() || !m.is_finite() || en * en - m2 <= d * d || en <= m {
        return Err(unrecoverable());
    }
    let k = g.k();
    let tau = en - d;
    // f(lo) > 0 follows from E^2 - m^2 > D^2; f(p) <= E - (k - 1) p bounds hi.
    let mut lo = 0.0_f64;
    let mut hi = en / (k - 1.0);
    let (fhi, _, _) = pressure_residual(hi, d, tau, m2, en, k);
    if fhi > 0.0 {
        return Err(unrecoverable());
    }
    let mut p = match p_guess {
        Some(pg) if pg > lo && pg < hi => pg,
        _ => {
            // Rest-frame estimate, exact for m = 0.
            let guess = (en - d) / (k - 1.0) * (1.0 - m2 / (en * en)).max(0.0).sqrt();
            guess.clamp(0.5 * (lo + hi) * 1e-12, hi * (1.0 - 1e-12))
        }
    };
    for _ in 0..RECOVERY_MAX_ITER {
        let (f, df, mag) = pressure_residual(p, d, tau, m2, en, k);
        if f.abs() <= 4.0 * f64::EPSILON * mag {
            return finish(u, p, m2);
        }
        if f > 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let newton = p - f / df;
        let next = if df.is_finite() && df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = next.abs().max(1e-300);
        if (next - p).abs() <= RECOVERY_TOL * scale || (hi - lo) <= RECOVERY_TOL * scale {
            return finish(u, next, m2);
        }
        p = next;
    }
    Err(FluidError::NoConvergence {
        iters: RECOVERY_MAX_ITER,
        d,
        m,
        en,
    })
}

fn finish(u: &SpeciesConserved, p: f64, m2: f64) -> Result<SpeciesPrimitive, FluidError> {
    let ep = u.en + p;
    let v2 = m2 / (ep * ep);
    let w = SpeciesPrimitive {
        rho: u.d * (1.0 - v2).sqrt(),
        ux: u.mx / ep,
        uy: u.my / ep,
        uz: u.mz / ep,
        p,
    };
    check(&w).map(|_| w).map_err(|_| FluidError::Unrecoverable {
        d: u.d,
        m: m2.sqrt(),
        en: u.en,
    })
}

/// Recovery that never fails: unrecoverable states are clamped to the floors
/// and reported through the returned flag.
pub fn recover_with_floors(u: &SpeciesConserved, g: &GasParams, p_guess: Option<f64>) -> (SpeciesPrimitive, bool) {
    if let Ok(w) = primitive_from_conserved_guess(u, g, p_guess) {
        if w.rho >= RHO_FLOOR && w.p >= P_FLOOR {
            return (w, false);
        }
    }
    let rho = u.d.max(RHO_FLOOR);
    let ep = u.en.max(0.0) + P_FLOOR;
    let mut v = [u.mx / ep, u.my / ep, u.mz / ep];
    let s2: f64 = v.iter().map(|x| x * x).sum();
    let cap = 1.0 - 1e-10;
    if !(s2 < cap * cap) {
        let f = if s2.is_finite() && s2 > 0.0 { cap / s2.sqrt() } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= f);
    }
    let lf = 1.0 / (1.0 - v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    (
        SpeciesPrimitive {
            rho: (rho / lf).max(RHO_FLOOR),
            ux: v[0],
            uy: v[1],
            uz: v[2],
            p: P_FLOOR,
        },
        true,
    )
}

#[inline]
fn normal_velocity(w: &SpeciesPrimitive, axis: Axis) -> f64 {
    match axis {
        Axis::X => w.ux,
        Axis::Y => w.uy,
    }
}

/// `(lambda-, u_d, u_d, u_d, lambda+)`.
pub fn fluid_eigenvalues(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> Result<[f64; 5], FluidError> {
    check(w)?;
    let (lm, lp) = acoustic_speeds(w, g, axis);
    if !lm.is_finite() || !lp.is_finite() {
        return Err(FluidError::Inadmissible {
            rho: w.rho,
            p: w.p,
            speed_sq: w.speed_sq(),
        });
    }
    let ud = normal_velocity(w, axis);
    Ok([lm, ud, ud, ud, lp])
}

#[inline]
fn acoustic_speeds(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> (f64, f64) {
    let c2 = sound_speed_sq(w, g);
    let c = c2.sqrt();
    let u2 = w.speed_sq();
    let ud = normal_velocity(w, axis);
    let q = 1.0 - ud * ud - c2 * (u2 - ud * ud);
    let lf = lorentz(w);
    let root = (c / lf) * q.max(0.0).sqrt();
    let den = 1.0 - c2 * u2;
    (((1.0 - c2) * ud - root) / den, ((1.0 - c2) * ud + root) / den)
}

/// Largest eigenvalue magnitude along `axis`, without admissibility checks.
#[inline]
pub fn max_wave_speed(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> f64 {
    let (lm, lp) = acoustic_speeds(w, g, axis);
    lm.abs().max(lp.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyVariables {
    pub v: [f64; 5],
    /// `rho / p`.
    pub beta: f64,
    /// `ln(p rho^-gamma)`.
    pub s: f64,
}

#[inline]
pub fn specific_entropy(w: &SpeciesPrimitive, g: &GasParams) -> f64 {
    w.p.ln() - g.gamma * w.rho.ln()
}

#[inline]
pub fn entropy_variables(w: &SpeciesPrimitive, g: &GasParams) -> EntropyVariables {
    let s = specific_entropy(w, g);
    let beta = w.rho / w.p;
    let lf = lorentz(w);
    let gb = lf * beta;
    EntropyVariables {
        v: [
            (g.gamma - s) / (g.gamma - 1.0) + beta,
            w.ux * gb,
            w.uy * gb,
            w.uz * gb,
            -gb,
        ],
        beta,
        s,
    }
}

/// `(eta, q^x, q^y)` with `eta = -rho Gamma s / (gamma - 1)`.
pub fn species_entropy(w: &SpeciesPrimitive, g: &GasParams) -> (f64, f64, f64) {
    let eta = -w.rho * lorentz(w) * specific_entropy(w, g) / (g.gamma - 1.0);
    (eta, eta * w.ux, eta * w.uy)
}

pub fn physical_flux(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> [f64; 5] {
    let u = conserved_unchecked(w, g);
    let ud = normal_velocity(w, axis);
    let mut f = [u.d * ud, u.mx * ud, u.my * ud, u.mz * ud, 0.0];
    match axis {
        Axis::X => {
            f[1] += w.p;
            f[4] = u.mx;
        }
        Axis::Y => {
            f[2] += w.p;
            f[4] = u.my;
        }
    }
    f
}

/// Jacobian `dU/dW` with `W = (rho, u_x, u_y, u_z, p)`.
pub fn du_dw(w: &SpeciesPrimitive, g: &GasParams) -> Matrix5<f64> {
    let k = g.k();
    let u = w.velocity();
    let lf2 = 1.0 / (1.0 - w.speed_sq());
    let lf = lf2.sqrt();
    let big = (w.rho + k * w.p) * lf2;
    let mut a = Matrix5::zeros();
    a[(0, 0)] = lf;
    for kk in 0..3 {
        a[(0, 1 + kk)] = w.rho * lf * lf2 * u[kk];
    }
    for j in 0..3 {
        a[(1 + j, 0)] = lf2 * u[j];
        a[(1 + j, 4)] = k * lf2 * u[j];
        for kk in 0..3 {
            a[(1 + j, 1 + kk)] = 2.0 * big * lf2 * u[kk] * u[j] + if j == kk { big } else { 0.0 };
        }
    }
    a[(4, 0)] = lf2;
    a[(4, 4)] = k * lf2 - 1.0;
    for kk in 0..3 {
        a[(4, 1 + kk)] = 2.0 * big * lf2 * u[kk];
    }
    a
}

/// Jacobian `dV/dW` of the entropy variables.
pub fn dv_dw(w: &SpeciesPrimitive, g: &GasParams) -> Matrix5<f64> {
    let gm1 = g.gamma - 1.0;
    let (rho, p) = (w.rho, w.p);
    let u = w.velocity();
    let lf2 = 1.0 / (1.0 - w.speed_sq());
    let lf = lf2.sqrt();
    let lf3 = lf * lf2;
    let beta = rho / p;
    let mut a = Matrix5::zeros();
    a[(0, 0)] = g.gamma / (rho * gm1) + 1.0 / p;
    a[(0, 4)] = -1.0 / (p * gm1) - rho / (p * p);
    for j in 0..3 {
        a[(1 + j, 0)] = u[j] * lf / p;
        a[(1 + j, 4)] = -u[j] * lf * rho / (p * p);
        for kk in 0..3 {
            a[(1 + j, 1 + kk)] = beta * (if j == kk { lf } else { 0.0 } + u[j] * lf3 * u[kk]);
        }
    }
    a[(4, 0)] = -lf / p;
    a[(4, 4)] = lf * rho / (p * p);
    for kk in 0..3 {
        a[(4, 1 + kk)] = -beta * lf3 * u[kk];
    }
    a
}

/// Jacobian `df/dW` of the physical flux along `axis`.
pub fn df_dw(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> Matrix5<f64> {
    let a = du_dw(w, g);
    let u = conserved_unchecked(w, g);
    let cons = [u.d, u.mx, u.my, u.mz];
    let (ud, dslot) = match axis {
        Axis::X => (w.ux, 1usize),
        Axis::Y => (w.uy, 2usize),
    };
    let mut f = Matrix5::zeros();
    for row in 0..4 {
        for col in 0..5 {
            f[(row, col)] = ud * a[(row, col)];
        }
        f[(row, dslot)] += cons[row];
    }
    f[(dslot, 4)] += 1.0;
    for col in 0..5 {
        f[(4, col)] = a[(dslot, col)];
    }
    f
}

/// Symmetrizer `dU/dV = (dU/dW)(dV/dW)^-1`, symmetrized against roundoff.
pub fn du_dv(w: &SpeciesPrimitive, g: &GasParams) -> Option<Matrix5<f64>> {
    let inv = dv_dw(w, g).try_inverse()?;
    let p = du_dw(w, g) * inv;
    Some((p + p.transpose()) * 0.5)
}
