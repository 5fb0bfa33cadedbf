//! Unit system, physical constants, spatial grids, and conversions.
//!
//! Working units are chosen so the quantities of interest are order
//! unity: energies in eV, lengths in nm, times in fs, masses as ratios
//! of the free electron mass. Constants derive from the exact 2019 SI
//! definitions (h, e) and the CODATA-2018 electron mass, hard-coded to
//! full f64 precision; nothing is looked up at runtime.

use serde::Serialize;

use crate::error::ensure_finite;
use crate::{Error, Result};

/// Reduced Planck constant in eV·fs: h / (2π e) · 1e15.
pub const HBAR_EV_FS: f64 = 0.6582119569509067;

/// ħ² / (2 mₑ) in eV·nm², for the free electron.
pub const HBAR2_OVER_2ME_EV_NM2: f64 = 0.038099821161548597;

/// Free electron mass in kg (CODATA 2018).
pub const ELECTRON_MASS_SI_KG: f64 = 9.1093837015e-31;

/// Free electron mass expressed in eV·fs²/nm², i.e. ħ²/(2·ħ²/2mₑ).
pub const ELECTRON_MASS_EV_FS2_NM2: f64 = 5.685630103565722;

/// 1 eV·fs/nm in kg·m/s. Exact: e · 1e-15 / 1e-9.
pub const EV_FS_PER_NM_TO_SI_MOMENTUM: f64 = 1.602176634e-25;

/// The fixed constant set used by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// ħ in eV·fs.
    pub hbar: f64,
    /// ħ²/(2mₑ) in eV·nm² (free electron).
    pub hbar2_over_2me: f64,
    /// mₑ in kg.
    pub electron_mass_si: f64,
    /// kg·m/s per eV·fs/nm.
    pub ev_fs_per_nm_to_si_momentum: f64,
}

/// Returns the fixed constant set. Deterministic.
pub const fn constants() -> PhysicalConstants {
    PhysicalConstants {
        hbar: HBAR_EV_FS,
        hbar2_over_2me: HBAR2_OVER_2ME_EV_NM2,
        electron_mass_si: ELECTRON_MASS_SI_KG,
        ev_fs_per_nm_to_si_momentum: EV_FS_PER_NM_TO_SI_MOMENTUM,
    }
}

/// Effective mass as a ratio m*/mₑ of the free electron mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveMass {
    ratio: f64,
}

impl EffectiveMass {
    /// Free electron, ratio 1.
    pub const FREE_ELECTRON: EffectiveMass = EffectiveMass { ratio: 1.0 };

    pub fn new(ratio: f64) -> Result<Self> {
        ensure_finite("mass ratio", ratio)?;
        if ratio <= 0.0 {
            return Err(Error::Domain {
                name: "mass ratio",
                value: ratio,
                constraint: "must be > 0",
            });
        }
        Ok(EffectiveMass { ratio })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// m* in eV·fs²/nm².
    pub fn mass_ev(&self) -> f64 {
        self.ratio * ELECTRON_MASS_EV_FS2_NM2
    }
}

/// Uniform spatial grid with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    /// Spacing (x_max - x_min) / (n_points - 1), nm.
    pub dx: f64,
}

/// Build a uniform grid on [x_min, x_max] with n_points ≥ 8.
pub fn make_grid(x_min: f64, x_max: f64, n_points: usize) -> Result<SpatialGrid> {
    ensure_finite("x_min", x_min)?;
    ensure_finite("x_max", x_max)?;
    if x_max <= x_min {
        return Err(Error::Domain {
            name: "x_max",
            value: x_max,
            constraint: "must be > x_min",
        });
    }
    if n_points < 8 {
        return Err(Error::Domain {
            name: "n_points",
            value: n_points as f64,
            constraint: "must be >= 8",
        });
    }
    Ok(SpatialGrid {
        x_min,
        x_max,
        n_points,
        dx: (x_max - x_min) / (n_points - 1) as f64,
    })
}

impl SpatialGrid {
    /// Coordinate of grid point `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    pub fn span(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Convert momentum from eV·fs/nm to kg·m/s.
pub fn momentum_to_si(p: f64) -> f64 {
    p * EV_FS_PER_NM_TO_SI_MOMENTUM
}

/// Inverse of [`momentum_to_si`].
pub fn momentum_from_si(p_si: f64) -> f64 {
    p_si / EV_FS_PER_NM_TO_SI_MOMENTUM
}
