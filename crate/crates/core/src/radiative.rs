//! Radiative capture of a continuum packet into hydrogen np states.
//!
//! First-order (dipole) emission amplitude into a photon of frequency ω:
//!
//!   A_n(ω, t) = Σ_j c_j M_n(κ_j) T(ω - ω_j, t),   ω_j = ω₀κ_j² + |E_n|/ħ,
//!
//! with M_n(κ) = ∫ r² R_n1(r) ∂w_κ/∂r dr and T the first-order time kernel.
//! The probability is P_n(t) = K (a0/c)² F_m ∫ ω |A_n|² dω, where K is the
//! SI emission prefactor and F_m the solid-angle factor.

use crate::constants::CONSTANTS;
use crate::error::{Error, Result};
use crate::observables::diffraction_lifetime;
use crate::packet::{Packet, PacketParams};
use crate::quadrature::{composite_gauss_legendre, integrate_adaptive};
use crate::specfun::series::ModeState;
use crate::specfun::{series::evaluate_from, whittaker_mode_derivative, Momentum, QuadratureSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Sinc lobes kept on each side of the resonance.
pub const PHOTON_LOBES: f64 = 50.0;
/// Levels are added until the newest contributes less than this fraction.
pub const LEVEL_CUTOFF: f64 = 1e-3;
pub const MAX_LEVEL: u32 = 60;

const OMEGA_NODES: usize = 8;
const OMEGA_BLOCK: usize = 64;
const KAPPA_BLOCK: usize = 16;
const RADIAL_NODES: usize = 10;
const LEVEL_CHUNK: u32 = 8;

/// Hydrogen bound state with l = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub n: u32,
    pub l: u32,
    pub m: i32,
    /// eV
    pub energy: f64,
}

impl BoundState {
    pub fn new(n: u32, m: i32) -> Result<Self> {
        check_level(n)?;
        if !(-1..=1).contains(&m) {
            return Err(Error::domain(format!("m must be -1, 0 or 1 for l = 1, got {m}")));
        }
        Ok(BoundState {
            n,
            l: 1,
            m,
            energy: CONSTANTS.bound_energy(n),
        })
    }

    /// E_n / ħ, fs^-1 (negative).
    pub fn omega(&self) -> f64 {
        self.energy / CONSTANTS.hbar
    }

    pub fn radial(&self, r: f64) -> f64 {
        radial_unchecked(self.n, r)
    }
}

fn check_level(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("l = 1 needs n >= 2, got n = {n}")));
    }
    Ok(())
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn radial_unchecked(n: u32, r: f64) -> f64 {
    let nf = n as f64;
    let rho = 2.0 * r / nf;
    // L^(3)_{n-2}(ρ) by the three-term recurrence
    let k = n - 2;
    let (mut prev, mut cur) = (1.0, 4.0 - rho);
    if k == 0 {
        cur = 1.0;
    }
    for i in 1..k {
        let i = i as f64;
        let next = ((2.0 * i + 4.0 - rho) * cur - (i + 3.0) * prev) / (i + 1.0);
        prev = cur;
        cur = next;
    }
    let ln_norm = 0.5
        * (3.0 * (2.0 / nf).ln() + ln_factorial(n - 2) - (2.0 * nf).ln() - ln_factorial(n + 1));
    (ln_norm - 0.5 * rho).exp() * rho * cur
}

/// R_n1(r), r in a0, normalised to ∫R² r² dr = 1.
pub fn bound_radial(n: u32, r: f64) -> Result<f64> {
    check_level(n)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be finite and >= 0, got {r}")));
    }
    Ok(radial_unchecked(n, r))
}

/// Radius beyond which r²|R_n1| stays below `tail`.
pub fn radial_cutoff(n: u32, tail: f64) -> f64 {
    let nf = n as f64;
    let mut r = 2.0 * nf * nf + 40.0 * nf;
    while r * r * radial_unchecked(n, r).abs() > tail {
        r += nf;
    }
    r
}

/// M_n(κ) = ∫ r² R_n1 ∂w/∂r dr with ∂/∂r = 2∂/∂x, by adaptive quadrature of
/// the integral representation.
pub fn radial_matrix_element(n: u32, kappa: Momentum, quad: &QuadratureSpec) -> Result<Complex64> {
    radial_matrix_element_to(n, kappa, radial_cutoff(n, 1e-10), quad)
}

/// As [`radial_matrix_element`] with an explicit outer radius.
pub fn radial_matrix_element_to(
    n: u32,
    kappa: Momentum,
    r_cut: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    check_level(n)?;
    quad.validate()?;
    let width = (n as f64).min(PI / (2.0 * kappa.kappa()));
    let panels = (r_cut / width).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=panels).map(|i| r_cut * i as f64 / panels as f64).collect();
    let failure = RefCell::new(None);
    let inner = quad.with_rel_tol(quad.rel_tol.max(1e-13))?;
    let est = integrate_adaptive(
        |r| match whittaker_mode_derivative(kappa, 2.0 * r, &inner) {
            Ok(dw) => 2.0 * r * r * radial_unchecked(n, r) * dw,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        &breaks,
        quad.rel_tol.max(1e-10),
        quad.abs_tol,
        quad.max_subdivisions,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est.value)
}

/// M_n(κ_j) for every node of a packet and a range of levels, by marching the
/// modes through a Gauss–Legendre radial mesh.
#[derive(Debug, Clone)]
pub struct MatrixElements {
    kappas: Vec<f64>,
    levels: BTreeMap<u32, Vec<Complex64>>,
}

impl MatrixElements {
    pub fn compute(kappas: &[f64], n_lo: u32, n_hi: u32) -> Result<Self> {
        check_level(n_lo)?;
        if n_hi < n_lo {
            return Err(Error::domain("empty level range"));
        }
        let kmax = kappas.iter().fold(0.0f64, |m, k| m.max(k.abs())).max(1e-3);
        let panel = 0.5f64.min(PI / (4.0 * kmax));
        let ns: Vec<u32> = (n_lo..=n_hi).collect();
        let cuts: Vec<f64> = ns.iter().map(|&n| radial_cutoff(n, 1e-12)).collect();
        let r_max = cuts.iter().fold(0.0f64, |a, &b| a.max(b));
        let panels = (r_max / panel).ceil() as usize;
        let (r, w) = composite_gauss_legendre(0.0, r_max, panels, RADIAL_NODES);
        // weight × 2 r² R_n1(r) per level, truncated at its own cutoff
        let bound: Vec<Vec<f64>> = ns
            .iter()
            .zip(&cuts)
            .map(|(&n, &cut)| {
                r.iter()
                    .zip(&w)
                    .take_while(|(ri, _)| **ri <= cut)
                    .map(|(ri, wi)| 2.0 * wi * ri * ri * radial_unchecked(n, *ri))
                    .collect()
            })
            .collect();
        let idx: Vec<usize> = (0..kappas.len()).collect();
        let blocks: Vec<Vec<Vec<f64>>> = idx
            .par_chunks(KAPPA_BLOCK)
            .map(|block| {
                block
                    .iter()
                    .map(|&j| {
                        let k = kappas[j];
                        let mut acc = vec![0.0; ns.len()];
                        let mut s = ModeState { x: 0.0, f: 0.0, df: k };
                        for (i, &ri) in r.iter().enumerate() {
                            s = evaluate_from(k, s, 2.0 * ri);
                            let dw = s.derivative(k).im;
                            for (a, b) in acc.iter_mut().zip(&bound) {
                                if let Some(v) = b.get(i) {
                                    *a += v * dw;
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let per_kappa: Vec<Vec<f64>> = blocks.into_iter().flatten().collect();
        let levels = ns
            .iter()
            .enumerate()
            .map(|(li, &n)| {
                let col = per_kappa.iter().map(|m| Complex64::new(0.0, m[li])).collect();
                (n, col)
            })
            .collect();
        Ok(MatrixElements {
            kappas: kappas.to_vec(),
            levels,
        })
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn level(&self, n: u32) -> Option<&[Complex64]> {
        self.levels.get(&n).map(|v| v.as_slice())
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.keys().copied()
    }

    fn extend(&mut self, other: MatrixElements) {
        self.levels.extend(other.levels);
    }
}

/// One κ sample of the transition kernel for level n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionKernelSample {
    pub level: u32,
    pub kappa: f64,
    pub matrix_element: Complex64,
}

impl TransitionKernelSample {
    /// Δ = ω_k + E_n/ħ - ω₀κ², fs^-1.
    pub fn detuning_at(&self, omega_k: f64) -> f64 {
        omega_k + CONSTANTS.bound_energy(self.level) / CONSTANTS.hbar
            - CONSTANTS.omega0 * self.kappa * self.kappa
    }
}

/// T(Δ, t) = (e^{iΔt} - 1)/(iΔ) = ∫₀ᵗ e^{iΔs} ds.
pub fn time_kernel(detuning: f64, t: f64) -> Complex64 {
    let x = detuning * t;
    if x.abs() < 1e-6 {
        return t * Complex64::new(1.0 - x * x / 6.0, 0.5 * x);
    }
    // e^{ix} - 1 = -2 sin²(x/2) + i sin x, free of cancellation
    let h = (0.5 * x).sin();
    t * Complex64::new(x.sin() / x, 2.0 * h * h / x)
}

/// ∫dΩ_k |k̂ × ∫dΩ_x x̂ Y*_1m(x̂)|², identical for m = -1, 0, 1.
pub fn angular_factor(m: i32) -> Result<f64> {
    if !(-1..=1).contains(&m) {
        return Err(Error::domain(format!("m must be -1, 0 or 1, got {m}")));
    }
    Ok(32.0 * PI * PI / 9.0)
}

/// Emission amplitudes of one packet into a set of levels.
#[derive(Debug, Clone)]
pub struct DecayModel {
    packet: Packet,
    elements: MatrixElements,
}

impl DecayModel {
    pub fn new(params: &PacketParams, n_max: u32) -> Result<Self> {
        Self::from_packet(Packet::new(params)?, n_max)
    }

    pub fn from_packet(packet: Packet, n_max: u32) -> Result<Self> {
        let elements = MatrixElements::compute(packet.kappas(), 2, n_max.max(2))?;
        Ok(DecayModel { packet, elements })
    }

    pub fn packet(&self) -> &Packet {
        &self.packet
    }

    pub fn n_max(&self) -> u32 {
        self.elements.levels().last().unwrap_or(2)
    }

    /// Adds levels up to `n_max`.
    pub fn extend_to(&mut self, n_max: u32) -> Result<()> {
        let have = self.n_max();
        if n_max > have {
            let more = MatrixElements::compute(self.packet.kappas(), have + 1, n_max)?;
            self.elements.extend(more);
        }
        Ok(())
    }

    pub fn matrix_elements(&self) -> &MatrixElements {
        &self.elements
    }

    pub fn kernel_samples(&self, n: u32) -> Result<Vec<TransitionKernelSample>> {
        let m = self.level(n)?;
        Ok(self
            .packet
            .kappas()
            .iter()
            .zip(m)
            .map(|(&kappa, &matrix_element)| TransitionKernelSample {
                level: n,
                kappa,
                matrix_element,
            })
            .collect())
    }

    fn level(&self, n: u32) -> Result<&[Complex64]> {
        check_level(n)?;
        self.elements
            .level(n)
            .ok_or_else(|| Error::domain(format!("level {n} not prepared (n_max = {})", self.n_max())))
    }

    /// (c_j M_n(κ_j), ω_j) for level n.
    fn weights(&self, n: u32) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let m = self.level(n)?;
        let shift = -CONSTANTS.bound_energy(n) / CONSTANTS.hbar;
        let a = self.packet.coeffs().iter().zip(m).map(|(c, m)| c * m).collect();
        let om = self.packet.omegas().iter().map(|w| w + shift).collect();
        Ok((a, om))
    }

    /// Resonance frequency ω₀μ² + |E_n|/ħ, fs^-1.
    pub fn resonance(&self, n: u32) -> f64 {
        let mu = self.packet.params().mu;
        CONSTANTS.omega0 * mu * mu - CONSTANTS.bound_energy(n) / CONSTANTS.hbar
    }

    /// Photon window [ω_c - h, ω_c + h] and the panel count of its rule.
    pub fn photon_window(&self, n: u32, t: f64) -> (f64, f64, usize) {
        let wc = self.resonance(n);
        let shift = -CONSTANTS.bound_energy(n) / CONSTANTS.hbar;
        let spread = self
            .packet
            .omegas()
            .iter()
            .fold(0.0f64, |m, w| m.max((w + shift - wc).abs()));
        let lobes = if t > 0.0 { PHOTON_LOBES * 2.0 * PI / t } else { f64::INFINITY };
        let h = wc.min(lobes + spread);
        let p = self.packet.params();
        let band = CONSTANTS.omega0 * (2.0 * p.mu * p.sigma).max(p.sigma * p.sigma);
        let mut width = 0.5 * band;
        if t > 0.0 {
            width = width.min(PI / t);
        }
        let panels = ((2.0 * h / width).ceil() as usize).max(8);
        (wc - h, wc + h, panels)
    }

    /// A_n(ω, t) at each ω.
    pub fn amplitudes(&self, n: u32, t: f64, omegas: &[f64]) -> Result<Vec<Complex64>> {
        let (a, wj) = self.weights(n)?;
        // T(ω - ω_j) = (e^{iωt} e^{-iω_j t} - 1)/(i(ω - ω_j)) away from resonance
        let phase_j: Vec<Complex64> = wj.iter().map(|w| Complex64::from_polar(1.0, -w * t)).collect();
        let one_over_i = Complex64::new(0.0, -1.0);
        Ok(omegas
            .par_chunks(OMEGA_BLOCK)
            .flat_map_iter(|chunk| {
                chunk
                    .iter()
                    .map(|&om| {
                        let pw = Complex64::from_polar(1.0, om * t);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for ((aj, &w), pj) in a.iter().zip(&wj).zip(&phase_j) {
                            let d = om - w;
                            let tk = if (d * t).abs() < 1e-3 {
                                time_kernel(d, t)
                            } else {
                                (pw * pj - 1.0) * one_over_i / d
                            };
                            acc += aj * tk;
                        }
                        acc
                    })
                    .collect::<Vec<_>>()
            })
            .collect())
    }

    fn prefactor(&self, m: i32) -> Result<f64> {
        let tau = CONSTANTS.bohr_light_time();
        Ok(CONSTANTS.emission_prefactor() * tau * tau * angular_factor(m)?)
    }

    /// Photon-frequency integrand of P_n: prefactor × ω |A_n(ω, t)|².
    pub fn integrand(&self, n: u32, m: i32, t: f64, omegas: &[f64]) -> Result<Vec<f64>> {
        let c = self.prefactor(m)?;
        let amp = self.amplitudes(n, t, omegas)?;
        Ok(omegas.iter().zip(amp).map(|(w, a)| c * w * a.norm_sqr()).collect())
    }

    /// P_{n,m}(t).
    pub fn probability(&self, n: u32, m: i32, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time must be finite and >= 0, got {t}")));
        }
        let c = self.prefactor(m)?;
        self.level(n)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi, panels) = self.photon_window(n, t);
        let (om, w) = composite_gauss_legendre(lo, hi, panels, OMEGA_NODES);
        let amp = self.amplitudes(n, t, &om)?;
        let s: f64 = om
            .iter()
            .zip(&w)
            .zip(&amp)
            .map(|((o, w), a)| w * o * a.norm_sqr())
            .sum();
        Ok(c * s)
    }

    /// Limit of P_{n,m}(t) for an unbounded symmetric photon window:
    /// K (a0/c)² F π Σ_jk a_j a_k* (ω_j + ω_k) T(ω_k - ω_j, t).
    pub fn probability_unbounded(&self, n: u32, m: i32, t: f64) -> Result<f64> {
        let c = self.prefactor(m)?;
        let (a, wj) = self.weights(n)?;
        let mut s = Complex64::new(0.0, 0.0);
        for (aj, &oj) in a.iter().zip(&wj) {
            for (ak, &ok) in a.iter().zip(&wj) {
                s += aj * ak.conj() * (oj + ok) * time_kernel(ok - oj, t);
            }
        }
        Ok(c * PI * s.re)
    }
}

/// P_{n,m}(t) for the packet defined by `params`.
pub fn decay_probability(params: &PacketParams, n: u32, m: i32, t: f64) -> Result<f64> {
    check_level(n)?;
    DecayModel::new(params, n)?.probability(n, m, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTable {
    pub params: PacketParams,
    pub times: Vec<f64>,
    pub per_n: BTreeMap<u32, Vec<f64>>,
    pub total: Vec<f64>,
    pub n_max_used: u32,
}

impl DecayTable {
    /// Long format: one row per (t, n).
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# E_eV={:.16e},dE_eV={:.16e},n_max={}\nt_fs,n,P_n\n",
            self.params.energy_ev, self.params.spread_ev, self.n_max_used
        );
        for (i, t) in self.times.iter().enumerate() {
            for (n, p) in &self.per_n {
                let _ = writeln!(s, "{t:.16e},{n},{:.16e}", p[i]);
            }
        }
        s
    }

    pub fn total_csv(&self) -> String {
        let mut s = format!(
            "# E_eV={:.16e},dE_eV={:.16e},n_max={}\nt_fs,P\n",
            self.params.energy_ev, self.params.spread_ev, self.n_max_used
        );
        for (t, p) in self.times.iter().zip(&self.total) {
            let _ = writeln!(s, "{t:.16e},{p:.16e}");
        }
        s
    }
}

/// P_n(t) summed over n >= 2 (m = 0; P_1 vanishes for l = 1) until the last
/// level adds less than LEVEL_CUTOFF of the running total at every t > 0.
pub fn total_decay(params: &PacketParams, times: &[f64]) -> Result<DecayTable> {
    let mut model = DecayModel::new(params, 1 + LEVEL_CHUNK)?;
    total_decay_with(&mut model, times)
}

pub fn total_decay_with(model: &mut DecayModel, times: &[f64]) -> Result<DecayTable> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain("times must be finite and >= 0"));
    }
    let mut per_n = BTreeMap::new();
    let mut total = vec![0.0; times.len()];
    let mut n = 2;
    loop {
        if n > model.n_max() {
            model.extend_to((n + LEVEL_CHUNK - 1).min(MAX_LEVEL))?;
        }
        let p: Vec<f64> = times
            .iter()
            .map(|&t| model.probability(n, 0, t))
            .collect::<Result<_>>()?;
        for (s, v) in total.iter_mut().zip(&p) {
            *s += v;
        }
        let small = p
            .iter()
            .zip(&total)
            .all(|(v, s)| *s == 0.0 || v.abs() < LEVEL_CUTOFF * s);
        per_n.insert(n, p);
        if small || n >= MAX_LEVEL {
            break;
        }
        n += 1;
    }
    Ok(DecayTable {
        params: *model.packet().params(),
        times: times.to_vec(),
        per_n,
        total,
        n_max_used: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    #[serde(rename = "E")]
    pub energy_ev: f64,
    #[serde(rename = "dE")]
    pub spread_ev: f64,
    pub delta_t_fs: f64,
    /// P(2Δt)
    pub probability: f64,
    pub gamma_avg_hz: f64,
    pub n_max: u32,
}

impl RateSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serialises")
    }
}

/// Γ̃ = P(2Δt)/(2Δt) in Hz, with Δt the diffraction lifetime.
pub fn average_rate(params: &PacketParams) -> Result<RateSummary> {
    let dt = diffraction_lifetime(params)?;
    let horizon = 2.0 * dt;
    let table = total_decay(params, &[horizon])?;
    let p = table.total[0];
    Ok(RateSummary {
        energy_ev: params.energy_ev,
        spread_ev: params.spread_ev,
        delta_t_fs: dt,
        probability: p,
        gamma_avg_hz: p / (horizon * 1e-15),
        n_max: table.n_max_used,
    })
}
