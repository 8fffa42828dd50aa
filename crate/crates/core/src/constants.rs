//! Fundamental constants, SI.

use serde::Serialize;

/// μ0/4π in N/A². Exact by definition here.
pub const MU0_OVER_4PI: f64 = 1.0e-7;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274e-24;
/// Free-electron g-factor.
pub const G_ELECTRON: f64 = 2.0023;
/// Planck constant, J·s.
pub const PLANCK_H: f64 = 6.626e-34;

/// Magnitude of a single unpaired electron's moment, (1/2)·g_e·μ_B ≈ 9.28e-24 J/T.
pub const ELECTRON_SPIN_MOMENT: f64 = 0.5 * G_ELECTRON * BOHR_MAGNETON;

/// The constant set used throughout the crate. Fields are private so a value
/// cannot drift after construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    mu0_over_4pi: f64,
    bohr_magneton: f64,
    g_electron: f64,
    planck_h: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        mu0_over_4pi: MU0_OVER_4PI,
        bohr_magneton: BOHR_MAGNETON,
        g_electron: G_ELECTRON,
        planck_h: PLANCK_H,
    };

    pub fn mu0_over_4pi(&self) -> f64 {
        self.mu0_over_4pi
    }

    pub fn bohr_magneton(&self) -> f64 {
        self.bohr_magneton
    }

    pub fn g_electron(&self) -> f64 {
        self.g_electron
    }

    pub fn planck_h(&self) -> f64 {
        self.planck_h
    }

    /// Zeeman conversion factor g·μ_B/h in Hz/T.
    pub fn hz_per_tesla(&self, g_factor: f64) -> f64 {
        g_factor * self.bohr_magneton / self.planck_h
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}
