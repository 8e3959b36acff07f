//! Unit system. Internally lengths are in Bohr radii, energies in eV and
//! times in fs; the SI values are only needed for the radiative prefactor.

use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// nm
    pub bohr_radius: f64,
    /// eV
    pub hartree: f64,
    /// eV fs
    pub hbar: f64,
    /// 2 E_h / hbar, fs^-1
    pub omega0: f64,
    /// m/s
    pub light_speed: f64,
    /// kg
    pub electron_mass: f64,
    /// C
    pub electron_charge: f64,
    /// F/m
    pub vacuum_permittivity: f64,
}

const HARTREE_EV: f64 = 27.211386245988;
const HBAR_EV_FS: f64 = 0.6582119569;

/// CODATA 2018.
pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    bohr_radius: 0.0529177210903,
    hartree: HARTREE_EV,
    hbar: HBAR_EV_FS,
    omega0: 2.0 * HARTREE_EV / HBAR_EV_FS,
    light_speed: 299_792_458.0,
    electron_mass: 9.1093837015e-31,
    electron_charge: 1.602176634e-19,
    vacuum_permittivity: 8.8541878128e-12,
};

impl PhysicalConstants {
    /// Kinetic energy (eV) of the mode with dimensionless momentum `kappa`.
    pub fn energy_of_kappa(&self, kappa: f64) -> f64 {
        2.0 * self.hartree * kappa * kappa
    }

    /// Bound-state energy E_n (eV), negative.
    pub fn bound_energy(&self, n: u32) -> f64 {
        let n = n as f64;
        -self.hartree / (2.0 * n * n)
    }

    fn hbar_si(&self) -> f64 {
        self.hbar * 1e-15 * self.electron_charge
    }

    fn bohr_radius_si(&self) -> f64 {
        self.bohr_radius * 1e-9
    }

    /// e^2 hbar / (16 pi^3 m_e^2 eps0 c a0^4), in fs^-2.
    pub fn emission_prefactor(&self) -> f64 {
        let e2 = self.electron_charge * self.electron_charge;
        let a0 = self.bohr_radius_si();
        let den = 16.0
            * PI.powi(3)
            * self.electron_mass.powi(2)
            * self.vacuum_permittivity
            * self.light_speed
            * a0.powi(4);
        e2 * self.hbar_si() / den * 1e-30
    }

    /// Light travel time across one Bohr radius, fs.
    pub fn bohr_light_time(&self) -> f64 {
        self.bohr_radius_si() / self.light_speed * 1e15
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialize")
    }
}
