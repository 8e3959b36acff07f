//! Gaussian superpositions of continuum modes,
//!
//! Ψ(r, t) = N ∫ e^{-(κ-μ)²/2σ²} w_κ(2r/a0) e^{-iω₀κ²t} dκ,
//!
//! normalised radially, ∫₀^{R_norm} |Ψ(r,0)|² r² dr = 1 (r in a0).

use crate::constants::CONSTANTS;
use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss_legendre, gauss_legendre};
use crate::specfun::series::{evaluate_from, ModeState};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

pub const DEFAULT_WINDOW: f64 = 5.0;
pub const DEFAULT_NODES: usize = 257;
pub const DEFAULT_PPW: usize = 20;

/// Modes per parallel work item. Fixed so sums never depend on thread count.
const BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketParams {
    pub energy_ev: f64,
    pub spread_ev: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Set once the packet has been normalised.
    pub norm: Option<f64>,
}

/// μ = sqrt(E / 2E_h), σ = sqrt(ΔE / 2E_h).
pub fn map_energy_params(energy_ev: f64, spread_ev: f64) -> Result<PacketParams> {
    if !(energy_ev.is_finite() && energy_ev > 0.0) {
        return Err(Error::domain(format!("energy must be positive, got {energy_ev} eV")));
    }
    if !(spread_ev.is_finite() && spread_ev > 0.0) {
        return Err(Error::domain(format!("energy spread must be positive, got {spread_ev} eV")));
    }
    let two_eh = 2.0 * CONSTANTS.hartree;
    Ok(PacketParams {
        energy_ev,
        spread_ev,
        mu: (energy_ev / two_eh).sqrt(),
        sigma: (spread_ev / two_eh).sqrt(),
        norm: None,
    })
}

impl PacketParams {
    /// R_norm in a0: five t=0 widths (1/σ in x) or 50 a0.
    pub fn norm_radius(&self) -> f64 {
        (5.0 / (2.0 * self.sigma)).max(50.0)
    }

    /// Upper wavenumber used to size radial meshes.
    pub fn kappa_ref(&self) -> f64 {
        self.mu + 3.0 * self.sigma
    }

    /// Closed-form lifetime scale 0.136 eV fs / sqrt(E ΔE), fs.
    pub fn lifetime_scale(&self) -> f64 {
        0.136 / (self.energy_ev * self.spread_ev).sqrt()
    }
}

/// Closed-form free-space Gaussian approximation: centre and width in x units.
pub fn gaussian_dynamics(params: &PacketParams, t: f64) -> (f64, f64) {
    let w = CONSTANTS.omega0;
    let s = params.sigma;
    let mu_x = 2.0 * params.mu * w * t;
    let sigma_x = (1.0 / (s * s) + 4.0 * s * s * w * w * t * t).sqrt();
    (mu_x, sigma_x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    /// a0, strictly increasing
    pub r_values: Vec<f64>,
    pub r_max: f64,
    pub points_per_wavelength: usize,
}

impl RadialGrid {
    /// Uniform grid on [0, r_max] with `ppw` points per half-wavelength π a0/(2κ).
    pub fn new(params: &PacketParams, r_max: f64, ppw: usize) -> Result<Self> {
        if ppw < DEFAULT_PPW {
            return Err(Error::domain(format!(
                "at least {DEFAULT_PPW} points per wavelength are required, got {ppw}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::domain(format!("r_max must be positive, got {r_max}")));
        }
        let spacing = PI / (2.0 * params.kappa_ref()) / ppw as f64;
        let n = (r_max / spacing).ceil() as usize;
        let h = r_max / n as f64;
        Ok(RadialGrid {
            r_values: (0..=n).map(|i| h * i as f64).collect(),
            r_max,
            points_per_wavelength: ppw,
        })
    }

    pub fn for_packet(params: &PacketParams, ppw: usize) -> Result<Self> {
        Self::new(params, params.norm_radius(), ppw)
    }

    pub fn len(&self) -> usize {
        self.r_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    /// fs
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
}

impl RadialField {
    /// r² |Ψ|².
    pub fn density(&self) -> Vec<f64> {
        self.grid
            .r_values
            .iter()
            .zip(&self.amplitudes)
            .map(|(r, a)| r * r * a.norm_sqr())
            .collect()
    }

    /// Composite Simpson estimate of ∫ r²|Ψ|² dr over the grid.
    pub fn norm_on_grid(&self) -> f64 {
        simpson(&self.grid.r_values, &self.density())
    }

    pub fn to_csv(&self, params: &PacketParams) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# energy_ev={:.16e} spread_ev={:.16e} time_fs={:.16e}",
            params.energy_ev, params.spread_ev, self.time
        );
        s.push_str("r_a0,re_psi,im_psi,density\n");
        for (r, a) in self.grid.r_values.iter().zip(&self.amplitudes) {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r,
                a.re,
                a.im,
                r * r * a.norm_sqr()
            );
        }
        s
    }

    pub fn to_json(&self, params: &PacketParams) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            params: &'a PacketParams,
            time_fs: f64,
            r_a0: &'a [f64],
            re_psi: Vec<f64>,
            im_psi: Vec<f64>,
        }
        serde_json::to_string(&Out {
            params,
            time_fs: self.time,
            r_a0: &self.grid.r_values,
            re_psi: self.amplitudes.iter().map(|a| a.re).collect(),
            im_psi: self.amplitudes.iter().map(|a| a.im).collect(),
        })
        .expect("field serializes")
    }
}

/// Simpson's rule on a uniform or nearly uniform grid (trapezoid on a leftover panel).
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h = x[i + 2] - x[i];
        s += h / 6.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    s
}

/// Radial mode family used to build a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeFamily {
    /// Coulomb continuum modes.
    Coulomb,
    /// Free s-waves 2i sin(κx)/x with the same normalisation at the origin.
    Free,
}

/// f, f' of the chosen family at x, continuing from a known state.
fn family_state(family: ModeFamily, kappa: f64, from: ModeState, x: f64) -> ModeState {
    match family {
        ModeFamily::Coulomb => evaluate_from(kappa, from, x),
        ModeFamily::Free => ModeState {
            x,
            f: (kappa * x).sin(),
            df: kappa * (kappa * x).cos(),
        },
    }
}

/// A discretised, normalised packet: Ψ = Σ_j c_j w_{κ_j} e^{-iω₀κ_j²t}.
#[derive(Debug, Clone)]
pub struct Packet {
    params: PacketParams,
    family: ModeFamily,
    kappas: Vec<f64>,
    coeffs: Vec<f64>,
}

impl Packet {
    pub fn new(params: &PacketParams) -> Result<Self> {
        Self::with_rule(params, ModeFamily::Coulomb, DEFAULT_WINDOW, DEFAULT_NODES)
    }

    pub fn free(params: &PacketParams) -> Result<Self> {
        Self::with_rule(params, ModeFamily::Free, DEFAULT_WINDOW, DEFAULT_NODES)
    }

    /// Gauss–Legendre rule with `nodes` points over κ ∈ μ ± window·σ.
    pub fn with_rule(params: &PacketParams, family: ModeFamily, window: f64, nodes: usize) -> Result<Self> {
        if !(window > 0.0) || nodes < 2 {
            return Err(Error::domain("window must be positive and at least two nodes used"));
        }
        let (x, w) = gauss_legendre(nodes);
        let half = window * params.sigma;
        let kappas: Vec<f64> = x.iter().map(|xi| params.mu + half * xi).collect();
        let weights: Vec<f64> = kappas
            .iter()
            .zip(&w)
            .map(|(k, wi)| {
                let z = (k - params.mu) / params.sigma;
                half * wi * (-0.5 * z * z).exp()
            })
            .collect();
        let mut p = Packet {
            params: *params,
            family,
            kappas,
            coeffs: weights,
        };
        let norm = 1.0 / p.raw_norm_integral().sqrt();
        if !norm.is_finite() {
            return Err(Error::domain("packet has zero norm"));
        }
        for c in &mut p.coeffs {
            *c *= norm;
        }
        p.params.norm = Some(norm);
        Ok(p)
    }

    pub fn params(&self) -> &PacketParams {
        &self.params
    }

    pub fn family(&self) -> ModeFamily {
        self.family
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    /// N × quadrature weight × Gaussian for each node.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// ω₀κ_j², fs^-1.
    pub fn omegas(&self) -> Vec<f64> {
        self.kappas.iter().map(|k| CONSTANTS.omega0 * k * k).collect()
    }

    fn kappa_max(&self) -> f64 {
        self.kappas.iter().fold(0.0f64, |m, k| m.max(k.abs()))
    }

    /// ∫₀^{R_norm} |Σ c_j w_j|² r² dr with the current coefficients.
    fn raw_norm_integral(&self) -> f64 {
        let (r, w) = self.radial_rule(0.0, self.params.norm_radius());
        let psi = self.amplitudes(&r, 0.0);
        psi.iter()
            .zip(r.iter().zip(&w))
            .map(|(p, (r, w))| w * r * r * p.norm_sqr())
            .sum()
    }

    /// ∫₀^{radius} |Ψ(r,t)|² r² dr.
    pub fn norm_within(&self, radius: f64, t: f64) -> f64 {
        let (r, w) = self.radial_rule(0.0, radius);
        let psi = self.amplitudes(&r, t);
        psi.iter()
            .zip(r.iter().zip(&w))
            .map(|(p, (r, w))| w * r * r * p.norm_sqr())
            .sum()
    }

    /// Composite Gauss–Legendre rule on [a, b] resolving the fastest mode.
    pub fn radial_rule(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half_wave = PI / (2.0 * self.kappa_max().max(1e-3));
        let panels = (((b - a) / (0.5 * half_wave)).ceil() as usize).max(4);
        composite_gauss_legendre(a, b, panels, 8)
    }

    /// Ψ(r, t) at ascending radii `r` (a0).
    pub fn amplitudes(&self, r: &[f64], t: f64) -> Vec<Complex64> {
        assert!(r.windows(2).all(|p| p[0] <= p[1]), "radii must be ascending");
        let phases: Vec<Complex64> = self
            .kappas
            .iter()
            .map(|k| Complex64::from_polar(1.0, -CONSTANTS.omega0 * k * k * t))
            .collect();
        let idx: Vec<usize> = (0..self.kappas.len()).collect();
        let partials: Vec<Vec<Complex64>> = idx
            .par_chunks(BLOCK)
            .map(|block| {
                let mut acc = vec![Complex64::new(0.0, 0.0); r.len()];
                for &j in block {
                    let k = self.kappas[j];
                    let c = phases[j] * self.coeffs[j];
                    let mut s = ModeState { x: 0.0, f: 0.0, df: k };
                    for (a, &ri) in acc.iter_mut().zip(r) {
                        s = family_state(self.family, k, s, 2.0 * ri);
                        *a += c * s.value(k);
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); r.len()];
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    pub fn field(&self, grid: &RadialGrid, t: f64) -> RadialField {
        RadialField {
            grid: grid.clone(),
            time: t,
            amplitudes: self.amplitudes(&grid.r_values, t),
        }
    }

    /// Mode states of every node at ascending radii, for repeated evaluation.
    pub fn mode_table(&self, r: &[f64]) -> ModeTable {
        assert!(r.windows(2).all(|p| p[0] <= p[1]), "radii must be ascending");
        let states: Vec<Vec<ModeState>> = self
            .kappas
            .par_iter()
            .map(|&k| {
                let mut s = ModeState { x: 0.0, f: 0.0, df: k };
                r.iter()
                    .map(|&ri| {
                        s = family_state(self.family, k, s, 2.0 * ri);
                        s
                    })
                    .collect()
            })
            .collect();
        ModeTable {
            r: r.to_vec(),
            states,
        }
    }
}

/// Cached mode states on a radial mesh.
#[derive(Debug, Clone)]
pub struct ModeTable {
    r: Vec<f64>,
    /// states[j][i]: mode j at r[i]
    states: Vec<Vec<ModeState>>,
}

impl ModeTable {
    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// States of mode j at every table radius.
    pub fn mode_column(&self, j: usize) -> &[ModeState] {
        &self.states[j]
    }

    /// Ψ at every table radius for time t.
    pub fn amplitudes(&self, packet: &Packet, t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.r.len()];
        for (j, col) in self.states.iter().enumerate() {
            let k = packet.kappas[j];
            let c = Complex64::from_polar(packet.coeffs[j], -CONSTANTS.omega0 * k * k * t);
            for (o, s) in out.iter_mut().zip(col) {
                *o += c * s.value(k);
            }
        }
        out
    }

    /// Ψ at an arbitrary radius inside the table range, by one continuation
    /// step from the nearest tabulated radius below.
    pub fn amplitude_at(&self, packet: &Packet, r: f64, t: f64) -> Complex64 {
        let i = match self.r.binary_search_by(|p| p.total_cmp(&r)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, col) in self.states.iter().enumerate() {
            let k = packet.kappas[j];
            let from = if self.r[i] <= r {
                col[i]
            } else {
                ModeState { x: 0.0, f: 0.0, df: k }
            };
            let s = family_state(packet.family, k, from, 2.0 * r);
            let c = Complex64::from_polar(packet.coeffs[j], -CONSTANTS.omega0 * k * k * t);
            acc += c * s.value(k);
        }
        acc
    }
}

/// Ψ(r, t) on `grid` for the packet defined by `params`.
pub fn build_packet(params: &PacketParams, grid: &RadialGrid, t: f64) -> Result<RadialField> {
    Ok(Packet::new(params)?.field(grid, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_mapping() {
        let p = map_energy_params(1.0, 5.44e-5).unwrap();
        assert!((p.mu - 0.1355532).abs() < 1e-6);
        assert!((p.sigma - 9.9979e-4).abs() < 1e-8);
        let p = map_energy_params(200.0, 3.3e-2).unwrap();
        assert!((p.mu - 1.9170).abs() < 1e-4);
        assert!(map_energy_params(0.0, 1.0).is_err());
        assert!(map_energy_params(1.0, -1.0).is_err());
        assert!(map_energy_params(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn dynamics_closed_form() {
        let p = map_energy_params(1.0, 0.01).unwrap();
        let (m, s) = gaussian_dynamics(&p, 0.0);
        assert_eq!(m, 0.0);
        assert!((s - 1.0 / p.sigma).abs() < 1e-12);
        let (_, a) = gaussian_dynamics(&p, 3.0);
        let (_, b) = gaussian_dynamics(&p, -3.0);
        assert_eq!(a, b);
        let t = 1e6;
        let (m, _) = gaussian_dynamics(&p, t);
        assert!((m / t / (2.0 * p.mu * CONSTANTS.omega0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_resolution_contract() {
        let p = map_energy_params(1.0, 0.1).unwrap();
        assert!(RadialGrid::new(&p, 10.0, 10).is_err());
        let g = RadialGrid::new(&p, 40.0, 20).unwrap();
        let h = g.r_values[1] - g.r_values[0];
        assert!(h <= PI / (2.0 * p.mu) / 20.0);
        assert_eq!(*g.r_values.last().unwrap(), 40.0);
    }

    #[test]
    fn simpson_exact_on_cubic() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| x * x * x).collect();
        assert!((simpson(&x, &y) - 0.25).abs() < 1e-14);
    }
}
