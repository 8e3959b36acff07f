//! Log–log power-law regression and the two scaling-constant calibrations.

use crate::error::{Error, Result};
use crate::observables::{diffraction_lifetime, extract_envelope};
use crate::packet::{map_energy_params, Packet, RadialGrid, DEFAULT_PPW};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS of the residuals of ln y.
    pub residual_rms: f64,
    pub sample_count: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficient * x.powf(self.exponent)
    }
}

/// OLS on (ln x, ln y); with `fixed_exponent` only the intercept is fitted.
pub fn fit_power_law(samples: &[(f64, f64)], fixed_exponent: Option<f64>) -> Result<PowerLawFit> {
    if samples.len() < 4 {
        return Err(Error::domain(format!(
            "power-law fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::domain("power-law samples must be positive and finite"));
    }
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let exponent = match fixed_exponent {
        Some(p) => p,
        None => {
            let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
            if sxx <= 1e-24 * n * (1.0 + mx * mx) {
                return Err(Error::RankDeficient);
            }
            let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
            sxy / sxx
        }
    };
    let intercept = my - exponent * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        exponent,
        coefficient: intercept.exp(),
        residual_rms: (ss / n).sqrt(),
        sample_count: samples.len(),
    })
}

/// Fits with each sample removed in turn.
pub fn leave_one_out(samples: &[(f64, f64)], fixed_exponent: Option<f64>) -> Result<Vec<PowerLawFit>> {
    (0..samples.len())
        .map(|i| {
            let sub: Vec<(f64, f64)> = samples
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, s)| *s)
                .collect();
            fit_power_law(&sub, fixed_exponent)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub coefficient_mean: f64,
    pub coefficient_std: f64,
    pub exponent_mean: f64,
    pub exponent_std: f64,
}

/// Resampling-with-replacement spread of the fit; degenerate resamples are skipped.
pub fn bootstrap(
    samples: &[(f64, f64)],
    fixed_exponent: Option<f64>,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut coef = Vec::with_capacity(resamples);
    let mut expo = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let sub: Vec<(f64, f64)> = (0..samples.len())
            .map(|_| samples[rng.gen_range(0..samples.len())])
            .collect();
        if let Ok(f) = fit_power_law(&sub, fixed_exponent) {
            coef.push(f.coefficient);
            expo.push(f.exponent);
        }
    }
    if coef.len() < 2 {
        return Err(Error::RankDeficient);
    }
    let (cm, cs) = mean_std(&coef);
    let (em, es) = mean_std(&expo);
    Ok(BootstrapSummary {
        resamples: coef.len(),
        coefficient_mean: cm,
        coefficient_std: cs,
        exponent_mean: em,
        exponent_std: es,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Samples and both fits of one calibration run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Intercept with the exponent fixed at -1/2.
    pub fixed: PowerLawFit,
    /// Free-exponent refit; `None` when the abscissae are degenerate.
    pub free: Option<PowerLawFit>,
    /// (x, y): (ΔE, Δr/a0) or (E ΔE, Δt/fs)
    pub samples: Vec<(f64, f64)>,
}

impl Calibration {
    fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        let fixed = fit_power_law(&samples, Some(-0.5))?;
        let free = match fit_power_law(&samples, None) {
            Ok(f) => Some(f),
            Err(Error::RankDeficient) => None,
            Err(e) => return Err(e),
        };
        Ok(Calibration {
            fixed,
            free,
            samples,
        })
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            constant: f64,
            exponent: f64,
            residual_rms: f64,
            free_exponent: Option<f64>,
            free_constant: Option<f64>,
            samples: &'a [(f64, f64)],
        }
        serde_json::to_string_pretty(&Report {
            constant: self.fixed.coefficient,
            exponent: self.fixed.exponent,
            residual_rms: self.fixed.residual_rms,
            free_exponent: self.free.map(|f| f.exponent),
            free_constant: self.free.map(|f| f.coefficient),
            samples: &self.samples,
        })
        .expect("report serializes")
    }
}

/// Default spread calibration grid, ΔE in eV (run at E = 200 eV).
pub const SPREAD_CALIBRATION_ENERGY: f64 = 200.0;
pub const SPREAD_CALIBRATION_SPREADS: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// Table I pairs with Δt = 53 as, (E, ΔE) in eV.
pub const LIFETIME_53AS_PAIRS: [(f64, f64); 3] = [(1.0, 6.6), (200.0, 3.3e-2), (1.0e4, 6.6e-4)];

/// The 53 as row plus pairs off that row, so E ΔE spans five decades.
pub const LIFETIME_FREE_PAIRS: [(f64, f64); 7] = [
    (1.0, 6.6),
    (200.0, 3.3e-2),
    (1.0e4, 6.6e-4),
    (1.0, 1e-3),
    (1.0, 1e-2),
    (200.0, 1e-3),
    (1.0e4, 1e-2),
];

/// Δr per ΔE at energy E, fitted as c_r / sqrt(ΔE) (a0 eV^{1/2}).
pub fn calibrate_spread_constant(energy_ev: f64, spreads: &[f64]) -> Result<Calibration> {
    let samples: Result<Vec<(f64, f64)>> = spreads
        .par_iter()
        .map(|&de| {
            let params = map_energy_params(energy_ev, de)?;
            let packet = Packet::new(&params)?;
            let grid = RadialGrid::for_packet(&params, DEFAULT_PPW)?;
            let env = extract_envelope(&packet.field(&grid, 0.0))?;
            Ok((de, env.delta_r))
        })
        .collect();
    Calibration::from_samples(samples?)
}

/// Δt per (E, ΔE), fitted as c_t / sqrt(E ΔE) (eV fs).
pub fn calibrate_lifetime_constant(pairs: &[(f64, f64)]) -> Result<Calibration> {
    let samples: Result<Vec<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(e, de)| {
            let params = map_energy_params(e, de)?;
            Ok((e * de, diffraction_lifetime(&params)?))
        })
        .collect();
    let samples = samples?;
    // fit_power_law needs four samples; the 53 as row has three, so the
    // intercept is the mean of ln(Δt sqrt(E ΔE)) computed directly then.
    if samples.len() < 4 && !samples.is_empty() {
        let n = samples.len() as f64;
        let logs: Vec<f64> = samples.iter().map(|(x, y)| (y * x.sqrt()).ln()).collect();
        let m = logs.iter().sum::<f64>() / n;
        let rms = (logs.iter().map(|l| (l - m).powi(2)).sum::<f64>() / n).sqrt();
        return Ok(Calibration {
            fixed: PowerLawFit {
                exponent: -0.5,
                coefficient: m.exp(),
                residual_rms: rms,
                sample_count: samples.len(),
            },
            free: None,
            samples,
        });
    }
    Calibration::from_samples(samples)
}

/// Golden-section refinement after a coarse log-spaced scan; returns the argmin.
pub fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    assert!(lo > 0.0 && hi > lo);
    let n = 200;
    let ratio = (hi / lo).ln();
    let pts: Vec<f64> = (0..=n).map(|i| lo * (ratio * i as f64 / n as f64).exp()).collect();
    let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
    let best = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = pts[best.saturating_sub(1)].ln();
    let mut b = pts[(best + 1).min(n)].ln();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d.exp());
        }
    }
    (0.5 * (a + b)).exp()
}

/// Least-squares A exp(-x²/2s²); returns (A, s, R²).
pub fn fit_centered_gaussian(x: &[f64], y: &[f64], fixed_amplitude: Option<f64>) -> (f64, f64, f64) {
    let amp = |s: f64| -> f64 {
        match fixed_amplitude {
            Some(a) => a,
            None => {
                let (mut num, mut den) = (0.0, 0.0);
                for (xi, yi) in x.iter().zip(y) {
                    let g = (-0.5 * (xi / s).powi(2)).exp();
                    num += yi * g;
                    den += g * g;
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            }
        }
    };
    let sse = |s: f64| -> f64 {
        let a = amp(s);
        x.iter()
            .zip(y)
            .map(|(xi, yi)| (yi - a * (-0.5 * (xi / s).powi(2)).exp()).powi(2))
            .sum()
    };
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xmin = x
        .iter()
        .filter(|v| v.abs() > 0.0)
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let lo = if xmin.is_finite() { 0.05 * xmin } else { 1e-6 * xmax.max(1.0) };
    let s = minimize_scalar(sse, lo, 20.0 * xmax.max(lo * 2.0));
    let a = amp(s);
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if sst > 0.0 { (1.0 - sse(s) / sst).clamp(0.0, 1.0) } else { 1.0 };
    (a, s, r2)
}
