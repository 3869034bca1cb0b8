//! Comparison Maxwell discretizations: plain Rusanov, and Rusanov on the
//! perfectly hyperbolic (PHM) extension.

use super::{physical_flux, Em, PhmParams};
use crate::grid::Axis;

/// 1-D Rusanov flux. Without `phm` the wave speed is 1 and the potential
/// slots stay zero; with it the PHM system is used with speed
/// `max(1, kappa, xi)`.
#[inline]
pub fn rusanov_flux(m: &Em, p: &Em, axis: Axis, phm: Option<&PhmParams>) -> Em {
    let fm = physical_flux(m, axis, phm);
    let fp = physical_flux(p, axis, phm);
    let (speed, n) = match phm {
        Some(ph) => (ph.max_speed(), 8),
        None => (1.0, 6),
    };
    let mut f = [0.0; 8];
    for k in 0..n {
        f[k] = 0.5 * (fm[k] + fp[k]) - 0.5 * speed * (p[k] - m[k]);
    }
    f
}

pub fn rusanov_maxwell_flux(left: &Em, right: &Em, axis: Axis) -> Em {
    rusanov_flux(left, right, axis, None)
}

pub fn phm_flux(left: &Em, right: &Em, axis: Axis, params: &PhmParams) -> Em {
    rusanov_flux(left, right, axis, Some(params))
}
