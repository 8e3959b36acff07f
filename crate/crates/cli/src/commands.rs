use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

use whittaker::fitting::{
    bootstrap, calibrate_lifetime_constant, calibrate_spread_constant, BootstrapSummary, Calibration,
    LIFETIME_FREE_PAIRS, SPREAD_CALIBRATION_ENERGY, SPREAD_CALIBRATION_SPREADS,
};
use whittaker::observables::{
    centre_drift, default_time_mesh, extract_envelope, lifetime_analysis, EnvelopeFit,
};
use whittaker::packet::{gaussian_dynamics, map_energy_params, Packet, PacketParams, RadialGrid};
use whittaker::radiative::{average_rate, total_decay};
use whittaker::specfun::{whittaker_mode, Momentum, QuadratureSpec};
use whittaker::table::{table1, table1_csv};
use whittaker::{Error, Result, CONSTANTS};

/// One file to be written into the output directory.
pub struct Output {
    pub name: String,
    pub contents: String,
}

impl Output {
    fn new(name: impl Into<String>, contents: String) -> Self {
        Output {
            name: name.into(),
            contents,
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

pub struct ModeArgs {
    pub kappa: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub quad: QuadratureSpec,
}

pub fn mode(a: &ModeArgs) -> Result<Vec<Output>> {
    let k = Momentum::new(a.kappa)?;
    if a.points < 2 {
        return Err(Error::Domain("--points must be at least 2".into()));
    }
    if !(a.x_min >= 0.0 && a.x_max > a.x_min && a.x_max.is_finite()) {
        return Err(Error::Domain(format!("invalid x range [{}, {}]", a.x_min, a.x_max)));
    }
    let h = (a.x_max - a.x_min) / (a.points - 1) as f64;
    let xs: Vec<f64> = (0..a.points).map(|i| a.x_min + h * i as f64).collect();
    let w = xs
        .par_iter()
        .map(|&x| whittaker_mode(k, x, &a.quad))
        .collect::<Result<Vec<_>>>()?;
    let mut s = format!(
        "# kappa={:.16e},rel_tol={:e}\nx,re_w,im_w\n",
        a.kappa, a.quad.rel_tol
    );
    for (x, w) in xs.iter().zip(&w) {
        let _ = writeln!(s, "{x:.16e},{:.16e},{:.16e}", w.re, w.im);
    }
    Ok(vec![Output::new("mode.csv", s)])
}

#[derive(Serialize)]
struct Snapshot {
    t_fs: f64,
    file: String,
    norm_within_r_norm: f64,
    delta_r_a0: Option<f64>,
    gaussian_sigma_a0: Option<f64>,
    fit_r2: Option<f64>,
    envelope_error: Option<String>,
}

#[derive(Serialize)]
struct PacketReport {
    params: PacketParams,
    r_norm_a0: f64,
    r_max_a0: f64,
    grid_ppw: usize,
    snapshots: Vec<Snapshot>,
}

/// Radius that holds the packet at time t: five free-space widths past the centre.
fn reach(p: &PacketParams, t: f64) -> f64 {
    let (centre, width) = gaussian_dynamics(p, t);
    p.norm_radius()
        .max(0.5 * (centre + 5.0 * width))
        .max(centre_drift(p, t) + p.norm_radius())
}

pub fn packet(p: &PacketParams, times: Option<Vec<f64>>, ppw: usize) -> Result<Vec<Output>> {
    let times = times.unwrap_or_else(|| {
        let s = p.lifetime_scale();
        vec![0.0, s, 2.0 * s]
    });
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("times must be finite and non-negative".into()));
    }
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(*t));
    let packet = Packet::new(p)?;
    let grid = RadialGrid::new(p, reach(p, t_max), ppw)?;
    let mut out = vec![];
    let mut snapshots = vec![];
    for (i, &t) in times.iter().enumerate() {
        let field = packet.field(&grid, t);
        let name = format!("packet_t{i}.csv");
        let env = extract_envelope(&field);
        snapshots.push(Snapshot {
            t_fs: t,
            file: name.clone(),
            norm_within_r_norm: packet.norm_within(p.norm_radius(), t),
            delta_r_a0: env.as_ref().ok().map(|e| e.delta_r),
            gaussian_sigma_a0: env.as_ref().ok().map(|e| e.gaussian_sigma),
            fit_r2: env.as_ref().ok().map(|e| e.fit_r2),
            envelope_error: env.as_ref().err().map(|e| e.to_string()),
        });
        out.push(Output::new(name, field.to_csv(p)));
    }
    out.push(Output::new(
        "packet.json",
        json(&PacketReport {
            params: *p,
            r_norm_a0: p.norm_radius(),
            r_max_a0: grid.r_values.last().copied().unwrap_or(0.0),
            grid_ppw: ppw,
            snapshots,
        }),
    ));
    Ok(out)
}

#[derive(Serialize)]
struct FitR2 {
    envelope: Option<f64>,
    overlap: f64,
}

#[derive(Serialize)]
struct Characterization {
    #[serde(rename = "E")]
    energy_ev: f64,
    #[serde(rename = "dE")]
    spread_ev: f64,
    /// a0
    delta_r: Option<f64>,
    delta_r_nm: Option<f64>,
    gaussian_sigma: Option<f64>,
    /// fs
    delta_t: f64,
    fitted_sigma_t: f64,
    overlap_cutoff_fs: f64,
    fit_r2s: FitR2,
    envelope_error: Option<String>,
}

pub fn characterize(p: &PacketParams, ppw: usize) -> Result<Vec<Output>> {
    let packet = Packet::new(p)?;
    let grid = RadialGrid::for_packet(p, ppw)?;
    let env: Result<EnvelopeFit> = extract_envelope(&packet.field(&grid, 0.0));
    let life = lifetime_analysis(&packet)?;
    let e = env.as_ref().ok();
    let report = Characterization {
        energy_ev: p.energy_ev,
        spread_ev: p.spread_ev,
        delta_r: e.map(|e| e.delta_r),
        delta_r_nm: e.map(|e| e.delta_r * CONSTANTS.bohr_radius),
        gaussian_sigma: e.map(|e| e.gaussian_sigma),
        delta_t: life.delta_t,
        fitted_sigma_t: life.series.fitted_sigma_t,
        overlap_cutoff_fs: life.cutoff_time,
        fit_r2s: FitR2 {
            envelope: e.map(|e| e.fit_r2),
            overlap: life.series.fit_r2,
        },
        envelope_error: env.as_ref().err().map(|e| e.to_string()),
    };
    let mut out = vec![
        Output::new("characterize.json", json(&report)),
        Output::new("overlap.csv", life.series.to_csv(p)),
    ];
    if let Some(e) = e {
        out.push(Output::new("envelope.csv", e.to_csv(p)));
    }
    Ok(out)
}

pub fn decay(p: &PacketParams, t_max: Option<f64>) -> Result<Vec<Output>> {
    let mut times = default_time_mesh(p);
    if let Some(t_max) = t_max {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Domain(format!("--tmax-fs must be positive, got {t_max}")));
        }
        let scale = t_max / times.last().copied().unwrap_or(1.0);
        times.iter_mut().for_each(|t| *t *= scale);
    }
    let table = total_decay(p, &times)?;
    let rate = average_rate(p)?;
    let mut summary = rate.to_json();
    summary.push('\n');
    Ok(vec![
        Output::new("decay.csv", table.to_csv()),
        Output::new("decay_total.csv", table.total_csv()),
        Output::new("decay.json", summary),
    ])
}

pub fn table() -> Vec<Output> {
    vec![Output::new("table1.csv", table1_csv(&table1()))]
}

#[derive(Serialize)]
struct CalibrationEntry {
    constant: f64,
    residual_rms: f64,
    free_exponent: Option<f64>,
    free_constant: Option<f64>,
    bootstrap: Option<BootstrapSummary>,
    samples: Vec<(f64, f64)>,
}

impl CalibrationEntry {
    fn new(c: Calibration, resamples: usize, seed: u64) -> Self {
        CalibrationEntry {
            constant: c.fixed.coefficient,
            residual_rms: c.fixed.residual_rms,
            free_exponent: c.free.map(|f| f.exponent),
            free_constant: c.free.map(|f| f.coefficient),
            bootstrap: bootstrap(&c.samples, None, resamples, seed).ok(),
            samples: c.samples,
        }
    }
}

#[derive(Serialize)]
struct CalibrationReport {
    seed: u64,
    spread_energy_ev: f64,
    /// a0 eV^{1/2}
    spread: CalibrationEntry,
    /// eV fs
    lifetime: CalibrationEntry,
}

pub fn calibrate(energy_ev: Option<f64>, seed: u64, resamples: usize) -> Result<Vec<Output>> {
    let e = energy_ev.unwrap_or(SPREAD_CALIBRATION_ENERGY);
    let spread = calibrate_spread_constant(e, &SPREAD_CALIBRATION_SPREADS)?;
    let lifetime = calibrate_lifetime_constant(&LIFETIME_FREE_PAIRS)?;
    let report = CalibrationReport {
        seed,
        spread_energy_ev: e,
        spread: CalibrationEntry::new(spread, resamples, seed),
        lifetime: CalibrationEntry::new(lifetime, resamples, seed),
    };
    Ok(vec![Output::new("calibration.json", json(&report))])
}

pub fn params(energy_ev: f64, spread_ev: f64) -> Result<PacketParams> {
    map_energy_params(energy_ev, spread_ev)
}
