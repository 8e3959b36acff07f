//! Closed-form spread/lifetime trade-off table.
//!
//! Δr = c_r a0 / sqrt(ΔE) and Δt = c_t / sqrt(E ΔE), with E, ΔE in eV.
//! Fixing Δt (or Δr) at a given E determines the remaining two quantities.

use crate::constants::CONSTANTS;
use serde::Serialize;
use std::fmt::Write as _;

/// a0 eV^{1/2}
pub const SPREAD_CONSTANT: f64 = 2.471;
/// eV fs
pub const LIFETIME_CONSTANT: f64 = 0.136;

pub const TABLE_ENERGIES: [f64; 3] = [1.0, 200.0, 1.0e4];

/// ΔE (eV) giving lifetime `dt_fs` at energy E.
pub fn spread_for_lifetime(energy_ev: f64, dt_fs: f64) -> f64 {
    (LIFETIME_CONSTANT / dt_fs).powi(2) / energy_ev
}

/// ΔE (eV) giving spatial spread `dr_nm`.
pub fn spread_for_width(dr_nm: f64) -> f64 {
    (SPREAD_CONSTANT * CONSTANTS.bohr_radius / dr_nm).powi(2)
}

pub fn width_nm(spread_ev: f64) -> f64 {
    SPREAD_CONSTANT * CONSTANTS.bohr_radius / spread_ev.sqrt()
}

pub fn lifetime_fs(energy_ev: f64, spread_ev: f64) -> f64 {
    LIFETIME_CONSTANT / (energy_ev * spread_ev).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    /// The quantity held fixed, e.g. "dt=53as".
    pub fixed: &'static str,
    /// "dE_eV", "dr_nm" or "dt_as".
    pub quantity: &'static str,
    /// None when the cell is the same for every energy.
    pub energy_ev: Option<f64>,
    pub published: f64,
    pub computed: f64,
}

impl TableCell {
    pub fn rel_error(&self) -> f64 {
        (self.computed - self.published) / self.published
    }
}

// printed values, columns E = 1, 200, 1e4 eV
const DT53_SPREAD: [f64; 3] = [6.6, 3.3e-2, 6.6e-4];
const DT53_WIDTH: [f64; 3] = [5.1e-2, 7.2e-1, 5.1];
const DT100_SPREAD: [f64; 3] = [1.9, 9.3e-3, 1.9e-4];
const DT100_WIDTH: [f64; 3] = [9.6e-2, 1.4, 9.6];
const DR143_SPREAD: f64 = 8.4e-7;
const DR143_LIFETIME: [f64; 3] = [1.5e5, 1.1e4, 1.5e3];
const DR10_SPREAD: f64 = 1.7e-4;
const DR10_LIFETIME: [f64; 3] = [1.0e4, 7.4e2, 1.0e2];

/// All 20 printed cells next to their closed-form values.
pub fn table1() -> Vec<TableCell> {
    let mut out = Vec::with_capacity(20);
    for (fixed, dt_fs, spreads, widths) in [
        ("dt=53as", 0.053, DT53_SPREAD, DT53_WIDTH),
        ("dt=100as", 0.100, DT100_SPREAD, DT100_WIDTH),
    ] {
        for (i, &e) in TABLE_ENERGIES.iter().enumerate() {
            let de = spread_for_lifetime(e, dt_fs);
            out.push(TableCell {
                fixed,
                quantity: "dE_eV",
                energy_ev: Some(e),
                published: spreads[i],
                computed: de,
            });
            out.push(TableCell {
                fixed,
                quantity: "dr_nm",
                energy_ev: Some(e),
                published: widths[i],
                computed: width_nm(de),
            });
        }
    }
    for (fixed, dr_nm, spread, lifetimes) in [
        ("dr=143nm", 143.0, DR143_SPREAD, DR143_LIFETIME),
        ("dr=10nm", 10.0, DR10_SPREAD, DR10_LIFETIME),
    ] {
        let de = spread_for_width(dr_nm);
        out.push(TableCell {
            fixed,
            quantity: "dE_eV",
            energy_ev: None,
            published: spread,
            computed: de,
        });
        for (i, &e) in TABLE_ENERGIES.iter().enumerate() {
            out.push(TableCell {
                fixed,
                quantity: "dt_as",
                energy_ev: Some(e),
                published: lifetimes[i],
                computed: 1e3 * lifetime_fs(e, de),
            });
        }
    }
    out
}

pub fn table1_csv(cells: &[TableCell]) -> String {
    let mut s = format!(
        "# c_r={SPREAD_CONSTANT},c_t={LIFETIME_CONSTANT}\nfixed,quantity,E_eV,published,computed,rel_error\n"
    );
    for c in cells {
        let e = c.energy_ev.map(|e| format!("{e:.16e}")).unwrap_or_else(|| "all".into());
        let _ = writeln!(
            s,
            "{},{},{e},{:.16e},{:.16e},{:.16e}",
            c.fixed,
            c.quantity,
            c.published,
            c.computed,
            c.rel_error()
        );
    }
    s
}
