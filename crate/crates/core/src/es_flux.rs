//! Entropy-conservative and entropy-stable fluid fluxes.

use nalgebra::{Matrix3, Matrix4, Matrix5, SymmetricEigen, Vector4, Vector5};
use thiserror::Error;

use crate::fluid::{df_dw, du_dv, du_dw, dv_dw, entropy_variables, fluid_eigenvalues, lorentz, max_wave_speed, GasParams};
use crate::grid::Axis;
use crate::state::SpeciesPrimitive;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("logarithmic mean needs positive arguments, got ({0}, {1})")]
    NonPositiveMean(f64, f64),
    #[error("entropy-conservative flux denominator vanished")]
    DegenerateDenominator,
    #[error("symmetrizer is not positive definite at the interface state")]
    NotPositiveDefinite,
}

/// Per-cell quantities reused by every interface touching the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideState {
    pub w: SpeciesPrimitive,
    /// Lorentz factor.
    pub lf: f64,
    /// `rho / p`.
    pub beta: f64,
    /// Spatial part of the four-velocity, `Gamma u`.
    pub z: [f64; 3],
    /// Entropy variables.
    pub v: [f64; 5],
}

impl SideState {
    #[inline]
    pub fn new(w: &SpeciesPrimitive, g: &GasParams) -> Self {
        let lf = lorentz(w);
        let ev = entropy_variables(w, g);
        SideState {
            w: *w,
            lf,
            beta: ev.beta,
            z: [lf * w.ux, lf * w.uy, lf * w.uz],
            v: ev.v,
        }
    }
}

/// Logarithmic mean `(b - a) / (ln b - ln a)`, with a series branch near `a = b`.
#[inline]
pub fn log_mean(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let f = (a - b) / (a + b);
    let u = f * f;
    if u < 1e-4 {
        (a + b) / (2.0 * (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0))
    } else {
        (b - a) / ((b - a) / a).ln_1p()
    }
}

pub fn checked_log_mean(a: f64, b: f64) -> Result<f64, FluxError> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(log_mean(a, b))
    } else {
        Err(FluxError::NonPositiveMean(a, b))
    }
}

#[inline]
fn dir(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
    }
}

/// Two-point entropy-conservative flux.
pub fn entropy_conservative_flux(l: &SideState, r: &SideState, g: &GasParams, axis: Axis) -> [f64; 5] {
    let d = dir(axis);
    let rho_ln = log_mean(l.w.rho, r.w.rho);
    let beta_ln = log_mean(l.beta, r.beta);
    let rho_bar = 0.5 * (l.w.rho + r.w.rho);
    let beta_bar = 0.5 * (l.beta + r.beta);
    let lf_bar = 0.5 * (l.lf + r.lf);
    let z = [
        0.5 * (l.z[0] + r.z[0]),
        0.5 * (l.z[1] + r.z[1]),
        0.5 * (l.z[2] + r.z[2]),
    ];
    let p_bar = rho_bar / beta_bar;
    let kk = 1.0 / ((g.gamma - 1.0) * beta_ln) + 1.0;
    let mut den = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - lf_bar * lf_bar;
    if den == 0.0 {
        den = -1e-300;
    }
    let f5 = -lf_bar * (kk * rho_ln * z[d] + z[d] * p_bar) / den;
    let mut f = [
        rho_ln * z[d],
        z[0] * f5 / lf_bar,
        z[1] * f5 / lf_bar,
        z[2] * f5 / lf_bar,
        f5,
    ];
    f[1 + d] += p_bar;
    f
}

/// Checked variant reporting a vanishing denominator.
pub fn try_entropy_conservative_flux(
    l: &SideState,
    r: &SideState,
    g: &GasParams,
    axis: Axis,
) -> Result<[f64; 5], FluxError> {
    checked_log_mean(l.w.rho, r.w.rho)?;
    checked_log_mean(l.beta, r.beta)?;
    let lf_bar = 0.5 * (l.lf + r.lf);
    let zz: f64 = (0..3).map(|k| (0.5 * (l.z[k] + r.z[k])).powi(2)).sum();
    if (zz - lf_bar * lf_bar).abs() < 1e-300 {
        return Err(FluxError::DegenerateDenominator);
    }
    Ok(entropy_conservative_flux(l, r, g, axis))
}

/// Arithmetic average of the two primitive states.
#[inline]
pub fn average_state(l: &SpeciesPrimitive, r: &SpeciesPrimitive) -> SpeciesPrimitive {
    SpeciesPrimitive {
        rho: 0.5 * (l.rho + r.rho),
        ux: 0.5 * (l.ux + r.ux),
        uy: 0.5 * (l.uy + r.uy),
        uz: 0.5 * (l.uz + r.uz),
        p: 0.5 * (l.p + r.p),
    }
}

/// State at which the dissipation eigenvectors are evaluated: log means of
/// density and `beta`, arithmetic velocities. Across strong pressure jumps the
/// arithmetic average overstates `dU/dV` by orders of magnitude and drives
/// the first-order update negative; this choice keeps `D [[V]]` close to
/// `[[U]]` in density.
#[inline]
pub fn dissipation_state(l: &SideState, r: &SideState) -> SpeciesPrimitive {
    let rho = log_mean(l.w.rho, r.w.rho);
    let beta = log_mean(l.beta, r.beta);
    let mut w = average_state(&l.w, &r.w);
    w.rho = rho;
    w.p = rho / beta;
    w
}

/// Interface dissipation speed: the largest fluid eigenvalue magnitude at
/// the average state and at both sides.
#[inline]
pub fn interface_speed(l: &SpeciesPrimitive, r: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> f64 {
    let avg = average_state(l, r);
    max_wave_speed(&avg, g, axis)
        .max(max_wave_speed(l, g, axis))
        .max(max_wave_speed(r, g, axis))
}

/// `D = R~ Lambda R~^T` with `Lambda = lambda I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationOperator {
    /// Entropy-scaled right eigenvectors, `R~ R~^T = dU/dV`.
    pub rt: Matrix5<f64>,
    pub lambda: f64,
    /// Eigenvalues of the flux Jacobian matching the columns of `rt`.
    pub eigenvalues: Vector5<f64>,
}

impl DissipationOperator {
    pub fn matrix(&self) -> Matrix5<f64> {
        self.rt * self.rt.transpose() * self.lambda
    }
}

/// Entropy-scaled eigenvectors at `w`, columns ordered as the eigenvalues
/// `(lambda-, u_d, u_d, u_d, lambda+)`.
///
/// In primitive variables the contact and shear waves perturb only the
/// density and the transverse velocities, and each acoustic wave is the null
/// vector of `df/dW - lambda dU/dW` with unit pressure perturbation. The
/// columns are then normalized in the metric `(dU/dW)^T dV/dW`, so that
/// `R~ R~^T = dU/dV`. Falls back to a dense symmetric eigensolve if the
/// acoustic systems are singular.
pub fn scaled_eigenvectors(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> Result<(Matrix5<f64>, Vector5<f64>), FluxError> {
    let lam = fluid_eigenvalues(w, g, axis).map_err(|_| FluxError::NotPositiveDefinite)?;
    let a = du_dw(w, g);
    let f = df_dw(w, g, axis);
    let (t1, t2) = match axis {
        Axis::X => (2, 3),
        Axis::Y => (1, 3),
    };
    let mut rw = Matrix5::zeros();
    for col in [0usize, 4] {
        let k = f - a * lam[col];
        let m4 = Matrix4::from_fn(|r, c| k[(r, c)]);
        let rhs = Vector4::from_fn(|r, _| -k[(r, 4)]);
        match m4.lu().solve(&rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => {
                for r in 0..4 {
                    rw[(r, col)] = x[r];
                }
                rw[(4, col)] = 1.0;
            }
            _ => return scaled_eigenvectors_dense(w, g, axis),
        }
    }
    rw[(0, 1)] = 1.0;
    rw[(t1, 2)] = 1.0;
    rw[(t2, 3)] = 1.0;
    let metric = a.transpose() * dv_dw(w, g);
    let gm = rw.transpose() * metric * rw;
    let ru = a * rw;
    let mut rt = Matrix5::zeros();
    for col in [0usize, 4] {
        let s = gm[(col, col)];
        if !(s > 0.0 && s.is_finite()) {
            return scaled_eigenvectors_dense(w, g, axis);
        }
        rt.set_column(col, &(ru.column(col) / s.sqrt()));
    }
    let gb = Matrix3::from_fn(|r, c| 0.5 * (gm[(1 + r, 1 + c)] + gm[(1 + c, 1 + r)]));
    let Some(chol) = gb.cholesky() else {
        return scaled_eigenvectors_dense(w, g, axis);
    };
    let Some(linv) = chol.l().try_inverse() else {
        return scaled_eigenvectors_dense(w, g, axis);
    };
    let block = ru.fixed_columns::<3>(1) * linv.transpose();
    rt.fixed_columns_mut::<3>(1).copy_from(&block);
    Ok((rt, Vector5::from(lam)))
}

/// Dense construction: with `dU/dV = L L^T`, the orthonormal eigenvectors
/// `Q` of the symmetric `L^-1 (df/dV) L^-T` give `R~ = L Q`.
pub fn scaled_eigenvectors_dense(w: &SpeciesPrimitive, g: &GasParams, axis: Axis) -> Result<(Matrix5<f64>, Vector5<f64>), FluxError> {
    let dvdw_inv = dv_dw(w, g).try_inverse().ok_or(FluxError::NotPositiveDefinite)?;
    let p = du_dv(w, g).ok_or(FluxError::NotPositiveDefinite)?;
    let chol = p.cholesky().ok_or(FluxError::NotPositiveDefinite)?;
    let l = chol.l();
    let a_v = df_dw(w, g, axis) * dvdw_inv;
    let l_inv = l.try_inverse().ok_or(FluxError::NotPositiveDefinite)?;
    let s = l_inv * a_v * l_inv.transpose();
    let s = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    Ok((l * eig.eigenvectors, eig.eigenvalues))
}

pub fn build_dissipation(l: &SideState, r: &SideState, g: &GasParams, axis: Axis) -> Result<DissipationOperator, FluxError> {
    let avg = dissipation_state(l, r);
    let (rt, eigenvalues) = scaled_eigenvectors(&avg, g, axis)?;
    Ok(DissipationOperator {
        rt,
        lambda: interface_speed(&l.w, &r.w, g, axis),
        eigenvalues,
    })
}

/// Closed form `D = lambda dU/dV` at the dissipation state.
pub fn dissipation_closed_form(l: &SideState, r: &SideState, g: &GasParams, axis: Axis) -> Result<Matrix5<f64>, FluxError> {
    let avg = dissipation_state(l, r);
    let p = du_dv(&avg, g).ok_or(FluxError::NotPositiveDefinite)?;
    Ok(p * interface_speed(&l.w, &r.w, g, axis))
}

/// Three-argument MinMod of the backward and forward differences around `b`.
#[inline]
pub fn minmod(a: f64, b: f64, c: f64) -> f64 {
    let back = b - a;
    let fwd = c - b;
    if back > 0.0 && fwd > 0.0 {
        back.min(fwd)
    } else if back < 0.0 && fwd < 0.0 {
        back.max(fwd)
    } else {
        0.0
    }
}

#[inline]
fn project(rt: &Matrix5<f64>, v: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (0..5).map(|m| rt[(m, k)] * v[m]).sum();
    }
    out
}

/// Jump of the limited scaled entropy variables `W = R~^T V` at the
/// interface between `stencil[1]` and `stencil[2]`.
///
/// Written as `[[W]] - (slope_l + slope_r) / 2` so the sign of each
/// component survives rounding.
pub fn scaled_minmod_jump(stencil: [&[f64; 5]; 4], rt: &Matrix5<f64>) -> [f64; 5] {
    let w = stencil.map(|v| project(rt, v));
    let mut jump = [0.0; 5];
    for k in 0..5 {
        let raw = w[2][k] - w[1][k];
        let sl = minmod(w[0][k], w[1][k], w[2][k]);
        let sr = minmod(w[1][k], w[2][k], w[3][k]);
        jump[k] = raw - 0.5 * (sl + sr);
    }
    jump
}

/// The same jump mapped back to entropy variables, `(R~^T)^-1 [[W~]]`.
pub fn scaled_entropy_jump(stencil: [&[f64; 5]; 4], rt: &Matrix5<f64>) -> Option<[f64; 5]> {
    let jw = Vector5::from(scaled_minmod_jump(stencil, rt));
    let jv = rt.transpose().lu().solve(&jw)?;
    Some([jv[0], jv[1], jv[2], jv[3], jv[4]])
}

/// First-order entropy-stable flux `F~ - 1/2 D [[V]]`.
pub fn es_flux_o1(l: &SideState, r: &SideState, g: &GasParams, axis: Axis) -> [f64; 5] {
    let mut f = entropy_conservative_flux(l, r, g, axis);
    let avg = dissipation_state(l, r);
    let lam = interface_speed(&l.w, &r.w, g, axis);
    if let Some(p) = du_dv(&avg, g) {
        let jv = Vector5::from_fn(|k, _| r.v[k] - l.v[k]);
        let d = p * jv;
        for k in 0..5 {
            f[k] -= 0.5 * lam * d[k];
        }
    }
    f
}

/// Second-order entropy-stable flux at the interface between `s[1]` and
/// `s[2]`, from the four-cell stencil `s`.
pub fn es_flux_o2(s: [&SideState; 4], g: &GasParams, axis: Axis) -> [f64; 5] {
    let (l, r) = (s[1], s[2]);
    let op = match build_dissipation(l, r, g, axis) {
        Ok(op) => op,
        Err(_) => return es_flux_o1(l, r, g, axis),
    };
    let mut f = entropy_conservative_flux(l, r, g, axis);
    let jw = scaled_minmod_jump([&s[0].v, &s[1].v, &s[2].v, &s[3].v], &op.rt);
    for (k, fk) in f.iter_mut().enumerate() {
        let corr: f64 = (0..5).map(|m| op.rt[(k, m)] * jw[m]).sum();
        *fk -= 0.5 * op.lambda * corr;
    }
    f
}
