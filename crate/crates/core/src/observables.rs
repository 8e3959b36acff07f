//! Characterisation of sampled packets: envelope spread, self-overlap and
//! diffraction lifetime, node positions and node lifting.

use crate::error::{Error, Result};
use crate::fitting::fit_centered_gaussian;
use crate::packet::{simpson, Packet, PacketParams, RadialField, RadialGrid, ModeTable};
use crate::quadrature::composite_gauss_legendre;
use crate::CONSTANTS;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

pub const MIN_PEAKS: usize = 5;
/// Upper end of the overlap integral, a0.
pub const OVERLAP_RADIUS: f64 = 5.0;
/// 𝕆 level that ends the lifetime mesh.
pub const OVERLAP_FLOOR: f64 = 1e-3;
pub const MIN_OVERLAP_R2: f64 = 0.95;
/// A t > 0 minimum survives as a node while below this fraction of its flanking maxima.
pub const NODE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    /// a0, increasing
    pub peak_positions: Vec<f64>,
    /// |Im Ψ| at the maxima
    pub peak_values: Vec<f64>,
    /// Standard deviation of the envelope under r² dr, a0.
    pub delta_r: f64,
    /// Width of the least-squares half-Gaussian through r |Im Ψ| peaks, a0.
    pub gaussian_sigma: f64,
    pub fit_r2: f64,
}

impl EnvelopeFit {
    pub fn to_csv(&self, params: &PacketParams) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# energy_ev={:.16e} spread_ev={:.16e}",
            params.energy_ev, params.spread_ev
        );
        s.push_str("r_a0,abs_im_psi\n");
        for (r, v) in self.peak_positions.iter().zip(&self.peak_values) {
            let _ = writeln!(s, "{r:.16e},{v:.16e}");
        }
        s
    }
}

/// Local maxima of `v` on `x` with parabolic refinement.
pub(crate) fn refined_maxima(x: &[f64], v: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let mut out = vec![];
    for i in 1..v.len().saturating_sub(1) {
        if v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > floor {
            out.push(parabola_vertex(x, v, i));
        }
    }
    out
}

fn parabola_vertex(x: &[f64], v: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (v[i - 1], v[i], v[i + 1]);
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let a = (d1 - d0) / (x2 - x0);
    if a == 0.0 {
        return (x1, y1);
    }
    // y = y1 + b (t - x1) + a (t - x1)²
    let b = d0 + a * (x1 - x0);
    let t = (-b / (2.0 * a)).clamp(x0 - x1, x2 - x1);
    (x1 + t, y1 + b * t + a * t * t)
}

/// Envelope of |Im Ψ(r, 0)| and its spread.
pub fn extract_envelope(field: &RadialField) -> Result<EnvelopeFit> {
    let r = &field.grid.r_values;
    let v: Vec<f64> = field.amplitudes.iter().map(|a| a.im.abs()).collect();
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(*x));
    let peaks = refined_maxima(r, &v, 1e-10 * vmax);
    if peaks.len() < MIN_PEAKS {
        return Err(Error::InsufficientPeaks {
            found: peaks.len(),
            required: MIN_PEAKS,
        });
    }
    let pr: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let pv: Vec<f64> = peaks.iter().map(|p| p.1).collect();

    let rho: Vec<f64> = pr.iter().zip(&pv).map(|(r, v)| v * r * r).collect();
    let m0 = trapezoid(&pr, &rho);
    let m1 = trapezoid(&pr, &rho.iter().zip(&pr).map(|(p, r)| p * r).collect::<Vec<_>>());
    let m2 = trapezoid(&pr, &rho.iter().zip(&pr).map(|(p, r)| p * r * r).collect::<Vec<_>>());
    let mean = m1 / m0;
    let delta_r = (m2 / m0 - mean * mean).max(0.0).sqrt();

    let u: Vec<f64> = pr.iter().zip(&pv).map(|(r, v)| r * v).collect();
    let (_, sigma, r2) = fit_centered_gaussian(&pr, &u, None);
    Ok(EnvelopeFit {
        peak_positions: pr,
        peak_values: pv,
        delta_r,
        gaussian_sigma: sigma,
        fit_r2: r2,
    })
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapSeries {
    /// fs, starting at 0
    pub times: Vec<f64>,
    /// 𝕆(t)/𝕆(0)
    pub values: Vec<f64>,
    /// Zero-centred Gaussian width fitted to the values, fs.
    pub fitted_sigma_t: f64,
    pub fit_r2: f64,
}

impl OverlapSeries {
    pub fn to_csv(&self, params: &PacketParams) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# energy_ev={:.16e} spread_ev={:.16e}",
            params.energy_ev, params.spread_ev
        );
        s.push_str("t_fs,overlap\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(s, "{t:.16e},{v:.16e}");
        }
        s
    }

    /// Standard deviation of 𝕆 viewed as a distribution over the sampled t ≥ 0.
    pub fn raw_std(&self) -> f64 {
        let t = &self.times;
        let o = &self.values;
        let m0 = simpson(t, o);
        let m1 = simpson(t, &t.iter().zip(o).map(|(t, o)| t * o).collect::<Vec<_>>());
        let m2 = simpson(t, &t.iter().zip(o).map(|(t, o)| t * t * o).collect::<Vec<_>>());
        let mean = m1 / m0;
        (m2 / m0 - mean * mean).max(0.0).sqrt()
    }
}

/// Precomputed overlap amplitude A(t) = ∫₀^{5 a0} Ψ*(r,0) Ψ(r,t) r² dr = Σ_l c_l h_l e^{-iω_l t}.
#[derive(Debug, Clone)]
pub struct OverlapEngine {
    weights: Vec<Complex64>,
    omegas: Vec<f64>,
    a0: f64,
}

impl OverlapEngine {
    pub fn new(packet: &Packet) -> Self {
        let kmax = packet.kappas().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let panels = ((OVERLAP_RADIUS * 4.0 * kmax.max(1.0) / PI).ceil() as usize).max(8);
        let (r, w) = composite_gauss_legendre(0.0, OVERLAP_RADIUS, panels, 10);
        let table = packet.mode_table(&r);
        let psi0 = table.amplitudes(packet, 0.0);
        let weights = mode_projections(packet, &table, &psi0, &r, &w);
        let omegas = packet.omegas();
        let a0 = weights.iter().sum::<Complex64>().norm_sqr();
        OverlapEngine { weights, omegas, a0 }
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.omegas)
            .map(|(w, om)| w * Complex64::from_polar(1.0, -om * t))
            .sum()
    }

    /// 𝕆(t)/𝕆(0).
    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        self.amplitude(t).norm_sqr() / self.a0
    }
}

// c_l ∫ r² Ψ*(r,0) w_l(r) dr for every mode l
fn mode_projections(
    packet: &Packet,
    table: &ModeTable,
    psi0: &[Complex64],
    r: &[f64],
    w: &[f64],
) -> Vec<Complex64> {
    let single: Vec<Complex64> = (0..packet.kappas().len())
        .map(|l| {
            let col = table.mode_column(l);
            let k = packet.kappas()[l];
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..r.len() {
                acc += w[i] * r[i] * r[i] * psi0[i].conj() * col[i].value(k);
            }
            acc * packet.coeffs()[l]
        })
        .collect();
    single
}

fn overlap_from_engine(engine: &OverlapEngine, times: &[f64]) -> Result<OverlapSeries> {
    if times.first() != Some(&0.0) {
        return Err(Error::domain("overlap times must start at t = 0"));
    }
    if times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::domain("overlap times must be strictly increasing"));
    }
    let values: Vec<f64> = times.iter().map(|&t| engine.value(t)).collect();
    let (_, sigma, r2) = fit_centered_gaussian(times, &values, Some(1.0));
    Ok(OverlapSeries {
        times: times.to_vec(),
        values,
        fitted_sigma_t: sigma,
        fit_r2: r2,
    })
}

fn check_fit(series: OverlapSeries) -> Result<OverlapSeries> {
    if series.fit_r2 < MIN_OVERLAP_R2 {
        return Err(Error::FitFailure {
            r2: series.fit_r2,
            threshold: MIN_OVERLAP_R2,
        });
    }
    Ok(series)
}

/// 𝕆(t) on the given mesh with its Gaussian fit.
pub fn overlap_series(params: &PacketParams, times: &[f64]) -> Result<OverlapSeries> {
    overlap_series_for(&Packet::new(params)?, times)
}

pub fn overlap_series_for(packet: &Packet, times: &[f64]) -> Result<OverlapSeries> {
    check_fit(overlap_from_engine(&OverlapEngine::new(packet), times)?)
}

/// 64 points, geometric then linear, out to five closed-form lifetimes.
pub fn default_time_mesh(params: &PacketParams) -> Vec<f64> {
    let t_end = 5.0 * params.lifetime_scale();
    let mut t = vec![0.0];
    let geo = 16;
    let t_switch = 0.1 * t_end;
    for i in 0..geo {
        t.push(t_switch * (1e-3f64).powf(1.0 - i as f64 / geo as f64));
    }
    let lin = 64 - t.len();
    for i in 0..lin {
        t.push(t_switch + (t_end - t_switch) * i as f64 / (lin - 1) as f64);
    }
    t.dedup();
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeAnalysis {
    /// sqrt(var 𝕆) over t ≥ 0, fs
    pub delta_t: f64,
    /// first t with 𝕆 < 1e-3, fs
    pub cutoff_time: f64,
    pub series: OverlapSeries,
}

/// Samples 𝕆 up to its first drop below 1e-3 and takes its standard deviation.
pub fn lifetime_analysis(packet: &Packet) -> Result<LifetimeAnalysis> {
    let engine = OverlapEngine::new(packet);
    let mut t_end = 5.0 * packet.params().lifetime_scale();
    let mut tries = 0;
    while engine.value(t_end) >= OVERLAP_FLOOR {
        t_end *= 2.0;
        tries += 1;
        if tries > 30 {
            return Err(Error::domain("overlap never decays below the floor"));
        }
    }
    let scan = 4096;
    let mut cutoff = t_end;
    let mut prev = (0.0, 1.0);
    for i in 1..=scan {
        let t = t_end * i as f64 / scan as f64;
        let v = engine.value(t);
        if v < OVERLAP_FLOOR {
            // linear interpolation to the crossing
            cutoff = prev.0 + (t - prev.0) * (prev.1 - OVERLAP_FLOOR) / (prev.1 - v);
            break;
        }
        prev = (t, v);
    }
    let n = 1024;
    let times: Vec<f64> = (0..=n).map(|i| cutoff * i as f64 / n as f64).collect();
    let series = overlap_from_engine(&engine, &times)?;
    let delta_t = series.raw_std();
    Ok(LifetimeAnalysis {
        delta_t,
        cutoff_time: cutoff,
        series: check_fit(series)?,
    })
}

/// Δt in fs.
pub fn diffraction_lifetime(params: &PacketParams) -> Result<f64> {
    Ok(lifetime_analysis(&Packet::new(params)?)?.delta_t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTrack {
    pub time: f64,
    /// a0, increasing
    pub node_positions: Vec<f64>,
    /// r²|Ψ|² at the nodes
    pub min_density_at_nodes: Vec<f64>,
}

impl NodeTrack {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_fs,r_a0,density\n");
        for (r, d) in self.node_positions.iter().zip(&self.min_density_at_nodes) {
            let _ = writeln!(s, "{:.16e},{r:.16e},{d:.16e}", self.time);
        }
        s
    }
}

/// Node search on a fixed radial grid with cached modes.
pub struct NodeFinder<'a> {
    packet: &'a Packet,
    table: ModeTable,
}

impl<'a> NodeFinder<'a> {
    pub fn new(packet: &'a Packet, grid: &RadialGrid) -> Self {
        NodeFinder {
            packet,
            table: packet.mode_table(&grid.r_values),
        }
    }

    pub fn radii(&self) -> &[f64] {
        self.table.radii()
    }

    pub fn density_at(&self, r: f64, t: f64) -> f64 {
        r * r * self.table.amplitude_at(self.packet, r, t).norm_sqr()
    }

    pub fn densities(&self, t: f64) -> Vec<f64> {
        let r = self.table.radii();
        self.table
            .amplitudes(self.packet, t)
            .iter()
            .zip(r)
            .map(|(a, r)| r * r * a.norm_sqr())
            .collect()
    }

    /// Sign changes of Im Ψ at t = 0 (bisected to 1e-8 a0); density minima below the
    /// survival threshold at t > 0.
    pub fn find(&self, t: f64) -> NodeTrack {
        if t == 0.0 {
            self.zero_crossings()
        } else {
            let (pos, val) = surviving_minima(self.table.radii(), &self.densities(t))
                .into_iter()
                .unzip();
            NodeTrack {
                time: t,
                node_positions: pos,
                min_density_at_nodes: val,
            }
        }
    }

    fn zero_crossings(&self) -> NodeTrack {
        let r = self.table.radii();
        let psi = self.table.amplitudes(self.packet, 0.0);
        let im = |x: f64| self.table.amplitude_at(self.packet, x, 0.0).im;
        let mut pos = vec![];
        let mut dens = vec![];
        for i in 1..r.len() {
            let (a, b) = (psi[i - 1].im, psi[i].im);
            if r[i - 1] == 0.0 || a == 0.0 || a * b > 0.0 {
                continue;
            }
            let (mut lo, mut hi, mut flo) = (r[i - 1], r[i], a);
            while hi - lo > 1e-8 {
                let m = 0.5 * (lo + hi);
                let fm = im(m);
                if fm * flo > 0.0 {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
            }
            // pick the endpoint with the smaller residual
            let x = if im(lo).abs() <= im(hi).abs() { lo } else { hi };
            pos.push(x);
            dens.push(self.density_at(x, 0.0));
        }
        NodeTrack {
            time: 0.0,
            node_positions: pos,
            min_density_at_nodes: dens,
        }
    }
}

// (position, value) of local minima that sit below NODE_THRESHOLD of the mean
// of the neighbouring maxima
fn surviving_minima(r: &[f64], d: &[f64]) -> Vec<(f64, f64)> {
    minima_with_depth(r, d)
        .into_iter()
        .filter(|m| m.2 < NODE_THRESHOLD)
        .map(|(x, v, _)| (x, v))
        .collect()
}

// every interior local minimum with its depth relative to the flanking maxima
fn minima_with_depth(r: &[f64], d: &[f64]) -> Vec<(f64, f64, f64)> {
    let maxima: Vec<usize> = (1..d.len().saturating_sub(1))
        .filter(|&i| d[i] > d[i - 1] && d[i] >= d[i + 1])
        .collect();
    let mut out = vec![];
    for i in 1..d.len().saturating_sub(1) {
        if !(d[i] < d[i - 1] && d[i] <= d[i + 1]) {
            continue;
        }
        let left = maxima.iter().rev().find(|&&m| m < i);
        let right = maxima.iter().find(|&&m| m > i);
        let (Some(&l), Some(&rr)) = (left, right) else {
            continue;
        };
        let (x, v) = parabola_vertex(r, d, i);
        let v = v.max(0.0);
        out.push((x, v, v / (0.5 * (d[l] + d[rr]))));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLifting {
    pub node_index: usize,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// r²|Ψ|² at the tracked minimum
    pub values: Vec<f64>,
    /// values divided by the mean of the flanking maxima
    pub relative_depth: Vec<f64>,
    /// First time at which the minimum no longer counts as a node.
    pub lost_at: Option<f64>,
}

impl NodeLifting {
    pub fn lost(&self) -> Option<Error> {
        self.lost_at.map(|t| Error::NodeLost {
            index: self.node_index,
            time_fs: t,
        })
    }
}

/// Follows the `node_index`-th t = 0 node (0 = innermost) through `times`
/// (ascending, starting at 0) until it stops qualifying as a node.
pub fn node_lifting_curve(finder: &NodeFinder, node_index: usize, times: &[f64]) -> Result<NodeLifting> {
    if times.first() != Some(&0.0) || times.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::domain("times must start at 0 and increase"));
    }
    let nodes = finder.find(0.0);
    let Some(&start) = nodes.node_positions.get(node_index) else {
        return Err(Error::domain(format!(
            "no node with index {node_index} (found {})",
            nodes.node_positions.len()
        )));
    };
    // a minimum further than a quarter of the local node spacing away belongs to
    // a neighbour
    let p = &nodes.node_positions;
    let half_wave = PI / (2.0 * finder.packet.params().mu);
    let spacing = [
        node_index.checked_sub(1).map(|i| start - p[i]),
        p.get(node_index + 1).map(|x| x - start),
    ]
    .into_iter()
    .flatten()
    .fold(half_wave, f64::min);
    let reach = 0.25 * spacing;
    let mut out = NodeLifting {
        node_index,
        times: vec![0.0],
        positions: vec![start],
        values: vec![nodes.min_density_at_nodes[node_index]],
        relative_depth: vec![0.0],
        lost_at: None,
    };
    let mut pos = start;
    for &t in &times[1..] {
        let minima = minima_with_depth(finder.radii(), &finder.densities(t));
        let near = minima
            .into_iter()
            .filter(|m| (m.0 - pos).abs() < reach)
            .min_by(|a, b| (a.0 - pos).abs().total_cmp(&(b.0 - pos).abs()))
            .filter(|m| m.2 < NODE_THRESHOLD);
        match near {
            Some((x, v, depth)) => {
                pos = x;
                out.times.push(t);
                out.positions.push(x);
                out.values.push(v);
                out.relative_depth.push(depth);
            }
            None => {
                out.lost_at = Some(t);
                break;
            }
        }
    }
    Ok(out)
}

/// RMS difference of the overlap functions of the Coulomb packet and the
/// free s-wave packet with the same weights, on the Coulomb lifetime mesh.
pub fn free_particle_overlap_rms(params: &PacketParams) -> Result<f64> {
    let coulomb = Packet::new(params)?;
    let life = lifetime_analysis(&coulomb)?;
    let free = OverlapEngine::new(&Packet::free(params)?);
    let n = life.series.times.len() as f64;
    let ss: f64 = life
        .series
        .times
        .iter()
        .zip(&life.series.values)
        .map(|(&t, &o)| (free.value(t) - o).powi(2))
        .sum();
    Ok((ss / n).sqrt())
}

/// Group-velocity displacement of the packet centre after t fs, a0.
pub fn centre_drift(params: &PacketParams, t: f64) -> f64 {
    params.mu * CONSTANTS.omega0 * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_exact() {
        let x = [0.0, 1.0, 2.0];
        let v: Vec<f64> = x.iter().map(|x: &f64| 3.0 - (x - 1.3).powi(2)).collect();
        let (p, m) = parabola_vertex(&x, &v, 1);
        assert!((p - 1.3).abs() < 1e-12 && (m - 3.0).abs() < 1e-12);
    }

    #[test]
    fn time_mesh_shape() {
        let p = crate::packet::map_energy_params(1.0, 0.1).unwrap();
        let t = default_time_mesh(&p);
        assert_eq!(t.len(), 64);
        assert_eq!(t[0], 0.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[63] - 5.0 * p.lifetime_scale()).abs() < 1e-12);
    }

    #[test]
    fn minima_threshold() {
        let r: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let deep: Vec<f64> = r.iter().map(|x| (2.0 * x).sin().powi(2)).collect();
        assert!(!surviving_minima(&r, &deep).is_empty());
        let shallow: Vec<f64> = r.iter().map(|x| 1.0 + 0.1 * (2.0 * x).sin()).collect();
        assert!(surviving_minima(&r, &shallow).is_empty());
    }
}
