//! Per-cell state layout.
//!
//! Every cell stores the full two-fluid state in one flat array with the
//! canonical ordering
//!
//! ```text
//!  0..5   ion       (D, m_x, m_y, m_z, E)
//!  5..10  electron  (D, m_x, m_y, m_z, E)
//! 10..13  B         (B_x, B_y, B_z)
//! 13..16  E-field   (E_x, E_y, E_z)
//! 16, 17  psi, phi  (correction potentials, zero unless PHM is active)
//! ```
//!
//! The same slot layout is reused for primitive arrays, with
//! `(rho, u_x, u_y, u_z, p)` in place of each species' conserved block.

use thiserror::Error;

/// Number of stored components per cell (including the two PHM potentials).
pub const NCOMP: usize = 18;

/// Number of components of the plain two-fluid system.
pub const NCOMP_BASE: usize = 16;

pub const ION: usize = 0;
pub const ELECTRON: usize = 5;
pub const BX: usize = 10;
pub const BY: usize = 11;
pub const BZ: usize = 12;
pub const EX: usize = 13;
pub const EY: usize = 14;
pub const EZ: usize = 15;
pub const PSI: usize = 16;
pub const PHI: usize = 17;

/// Flat cell storage.
pub type Cell = [f64; NCOMP];

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("flat state has {got} components, expected 16 or 18")]
    LengthMismatch { got: usize },
}

/// The two fluid species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Ion,
    Electron,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::Ion, Species::Electron];

    /// Offset of the species block inside a [`Cell`].
    #[inline]
    pub fn offset(self) -> usize {
        match self {
            Species::Ion => ION,
            Species::Electron => ELECTRON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeciesConserved {
    pub d: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub en: f64,
}

impl SpeciesConserved {
    #[inline]
    pub fn from_slice(s: &[f64]) -> Self {
        SpeciesConserved {
            d: s[0],
            mx: s[1],
            my: s[2],
            mz: s[3],
            en: s[4],
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 5] {
        [self.d, self.mx, self.my, self.mz, self.en]
    }

    #[inline]
    pub fn momentum_sq(&self) -> f64 {
        self.mx * self.mx + self.my * self.my + self.mz * self.mz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeciesPrimitive {
    pub rho: f64,
    pub ux: f64,
    pub uy: f64,
    pub uz: f64,
    pub p: f64,
}

impl SpeciesPrimitive {
    pub fn new(rho: f64, ux: f64, uy: f64, uz: f64, p: f64) -> Self {
        SpeciesPrimitive { rho, ux, uy, uz, p }
    }

    #[inline]
    pub fn from_slice(s: &[f64]) -> Self {
        SpeciesPrimitive {
            rho: s[0],
            ux: s[1],
            uy: s[2],
            uz: s[3],
            p: s[4],
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 5] {
        [self.rho, self.ux, self.uy, self.uz, self.p]
    }

    #[inline]
    pub fn speed_sq(&self) -> f64 {
        self.ux * self.ux + self.uy * self.uy + self.uz * self.uz
    }

    #[inline]
    pub fn velocity(&self) -> [f64; 3] {
        [self.ux, self.uy, self.uz]
    }

    /// Membership in the admissible set (positive density and pressure,
    /// subluminal speed).
    pub fn is_admissible(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0 && self.speed_sq() < 1.0 && self.rho.is_finite() && self.p.is_finite()
    }
}

/// Electromagnetic part of a cell, plus the optional PHM potentials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmState {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub psi: f64,
    pub phi: f64,
}

impl EmState {
    #[inline]
    pub fn from_cell(c: &Cell) -> Self {
        EmState {
            bx: c[BX],
            by: c[BY],
            bz: c[BZ],
            ex: c[EX],
            ey: c[EY],
            ez: c[EZ],
            psi: c[PSI],
            phi: c[PHI],
        }
    }

    #[inline]
    pub fn write_to(&self, c: &mut Cell) {
        c[BX] = self.bx;
        c[BY] = self.by;
        c[BZ] = self.bz;
        c[EX] = self.ex;
        c[EY] = self.ey;
        c[EZ] = self.ez;
        c[PSI] = self.psi;
        c[PHI] = self.phi;
    }

    #[inline]
    pub fn to_array(self) -> [f64; 8] {
        [self.bx, self.by, self.bz, self.ex, self.ey, self.ez, self.psi, self.phi]
    }

    #[inline]
    pub fn from_array(a: [f64; 8]) -> Self {
        EmState {
            bx: a[0],
            by: a[1],
            bz: a[2],
            ex: a[3],
            ey: a[4],
            ez: a[5],
            psi: a[6],
            phi: a[7],
        }
    }

    #[inline]
    pub fn b(&self) -> [f64; 3] {
        [self.bx, self.by, self.bz]
    }

    #[inline]
    pub fn e(&self) -> [f64; 3] {
        [self.ex, self.ey, self.ez]
    }
}

/// Structured view of one cell's conserved variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedVector {
    pub ion: SpeciesConserved,
    pub electron: SpeciesConserved,
    pub em: EmState,
}

impl ConservedVector {
    pub fn species(&self, s: Species) -> &SpeciesConserved {
        match s {
            Species::Ion => &self.ion,
            Species::Electron => &self.electron,
        }
    }

    /// Canonical flat form: 16 components, or 18 with `psi, phi` appended
    /// when `with_phm` is set.
    pub fn flatten(&self, with_phm: bool) -> Vec<f64> {
        let cell = self.to_cell();
        let n = if with_phm { NCOMP } else { NCOMP_BASE };
        cell[..n].to_vec()
    }

    pub fn unflatten(flat: &[f64]) -> Result<Self, StateError> {
        if flat.len() != NCOMP_BASE && flat.len() != NCOMP {
            return Err(StateError::LengthMismatch { got: flat.len() });
        }
        let mut cell = [0.0; NCOMP];
        cell[..flat.len()].copy_from_slice(flat);
        Ok(Self::from_cell(&cell))
    }

    pub fn to_cell(&self) -> Cell {
        let mut c = [0.0; NCOMP];
        c[ION..ION + 5].copy_from_slice(&self.ion.to_array());
        c[ELECTRON..ELECTRON + 5].copy_from_slice(&self.electron.to_array());
        self.em.write_to(&mut c);
        c
    }

    pub fn from_cell(c: &Cell) -> Self {
        ConservedVector {
            ion: SpeciesConserved::from_slice(&c[ION..ION + 5]),
            electron: SpeciesConserved::from_slice(&c[ELECTRON..ELECTRON + 5]),
            em: EmState::from_cell(c),
        }
    }
}

/// Structured view of one cell's primitive variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitiveVector {
    pub ion: SpeciesPrimitive,
    pub electron: SpeciesPrimitive,
    pub em: EmState,
}

impl PrimitiveVector {
    pub fn species(&self, s: Species) -> &SpeciesPrimitive {
        match s {
            Species::Ion => &self.ion,
            Species::Electron => &self.electron,
        }
    }

    pub fn to_cell(&self) -> Cell {
        let mut c = [0.0; NCOMP];
        c[ION..ION + 5].copy_from_slice(&self.ion.to_array());
        c[ELECTRON..ELECTRON + 5].copy_from_slice(&self.electron.to_array());
        self.em.write_to(&mut c);
        c
    }

    pub fn from_cell(c: &Cell) -> Self {
        PrimitiveVector {
            ion: SpeciesPrimitive::from_slice(&c[ION..ION + 5]),
            electron: SpeciesPrimitive::from_slice(&c[ELECTRON..ELECTRON + 5]),
            em: EmState::from_cell(c),
        }
    }
}
