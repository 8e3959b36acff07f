//! Coulomb continuum modes for l = 0 in the dimensionless radius x = 2r/a0.
//!
//! w_κ(x) = 4iκ² sinh(π/2κ)/π · e^{-iκx} ∫₀¹ e^{2iκxs} (s/(1-s))^{i/2κ} ds
//!
//! is purely imaginary, equals 2iκ at the origin and u = x w solves
//! u'' + (1/x + κ²) u = 0. Two evaluation routes are provided: a contour
//! integral (this module, the reference) and a power-series continuation of
//! the ODE ([`series`]) for bulk work.

pub mod series;

use crate::constants::CONSTANTS;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, Estimate};
use num_complex::Complex64;
use std::f64::consts::PI;

pub use series::{ModeMarcher, ModeState};

/// Dimensionless momentum κ = k a0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Momentum(f64);

impl Momentum {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::domain(format!("kappa must be finite and positive, got {kappa}")));
        }
        Ok(Momentum(kappa))
    }

    pub fn kappa(self) -> f64 {
        self.0
    }

    pub fn energy_ev(self) -> f64 {
        CONSTANTS.energy_of_kappa(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointTransform {
    /// Plain adaptive integration over s in [0, 1].
    None,
    /// s = 1/(1+e^{-u}) on a line shifted into the upper half plane.
    DoubleExponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub endpoint_transform: EndpointTransform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_subdivisions: 4000,
            endpoint_transform: EndpointTransform::DoubleExponential,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        rel_tol: f64,
        abs_tol: f64,
        max_subdivisions: usize,
        endpoint_transform: EndpointTransform,
    ) -> Result<Self> {
        let spec = QuadratureSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
            endpoint_transform,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Result<Self> {
        Self::new(rel_tol, self.abs_tol, self.max_subdivisions, self.endpoint_transform)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |t: f64| t > 0.0 && t < 1.0;
        if !in_unit(self.rel_tol) || !in_unit(self.abs_tol) {
            return Err(Error::domain("quadrature tolerances must lie in (0, 1)"));
        }
        if self.max_subdivisions < 8 {
            return Err(Error::domain("max_subdivisions must be at least 8"));
        }
        Ok(())
    }
}

/// Γ(1+iy)Γ(1-iy) = πy / sinh(πy).
pub fn gamma_pair(y: f64) -> f64 {
    let a = (PI * y).abs();
    if a < 1e-4 {
        // πy/sinh(πy) = 1 - a²/6 + 7a⁴/360
        let a2 = a * a;
        return 1.0 - a2 / 6.0 + 7.0 * a2 * a2 / 360.0;
    }
    // 2a e^{-a} / (1 - e^{-2a}) avoids overflow of sinh
    2.0 * a * (-a).exp() / (-(-2.0 * a).exp_m1())
}

/// Imaginary part of the mode prefactor, 4κ² sinh(π/2κ)/π (csch form).
pub fn prefactor_csch(kappa: f64) -> f64 {
    4.0 * kappa * kappa * (PI / (2.0 * kappa)).sinh() / PI
}

/// Imaginary part of the mode prefactor, 2κ / [Γ(1+i/2κ)Γ(1-i/2κ)] (Gamma form).
pub fn prefactor_gamma(kappa: f64) -> f64 {
    2.0 * kappa / gamma_pair(1.0 / (2.0 * kappa))
}

const MIN_KAPPA: f64 = 1e-3;

fn check_args(kappa: Momentum, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::domain(format!("x must be finite and non-negative, got {x}")));
    }
    if kappa.kappa() < MIN_KAPPA {
        return Err(Error::domain(format!(
            "kappa = {} is below the supported minimum {MIN_KAPPA}",
            kappa.kappa()
        )));
    }
    Ok(())
}

/// w_κ(x, 0).
pub fn whittaker_mode(kappa: Momentum, x: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    Ok(whittaker_mode_estimate(kappa, x, quad)?.value)
}

/// w_κ(x, 0) together with the propagated quadrature error estimate.
pub fn whittaker_mode_estimate(kappa: Momentum, x: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    check_args(kappa, x)?;
    quad.validate()?;
    mode_integral(kappa.kappa(), x, quad, false)
}

/// w_κ(x, t) = w_κ(x, 0) e^{-iω₀κ²t}, t in fs.
pub fn whittaker_mode_time(kappa: Momentum, x: f64, t: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    let w = whittaker_mode(kappa, x, quad)?;
    Ok(w * time_phase(kappa.kappa(), t))
}

/// e^{-iω₀κ²t}.
pub fn time_phase(kappa: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -CONSTANTS.omega0 * kappa * kappa * t)
}

/// ∂w/∂x by differentiating under the integral sign.
pub fn whittaker_mode_derivative(kappa: Momentum, x: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    Ok(whittaker_mode_derivative_estimate(kappa, x, quad)?.value)
}

pub fn whittaker_mode_derivative_estimate(
    kappa: Momentum,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_args(kappa, x)?;
    quad.validate()?;
    mode_integral(kappa.kappa(), x, quad, true)
}

/// Large-x form e^{iκx} e^{i ln(x)/2κ} / x.
pub fn asymptotic_mode(kappa: Momentum, x: f64) -> Result<Complex64> {
    let k = kappa.kappa();
    let guard = 100.0 * 1f64.max(1.0 / k);
    if !(x >= guard) || !x.is_finite() {
        return Err(Error::domain(format!(
            "asymptotic form needs x >= {guard} for kappa = {k}, got {x}"
        )));
    }
    Ok(Complex64::from_polar(1.0 / x, k * x + x.ln() / (2.0 * k)))
}

fn mode_integral(kappa: f64, x: f64, quad: &QuadratureSpec, derivative: bool) -> Result<Estimate> {
    match quad.endpoint_transform {
        EndpointTransform::DoubleExponential => contour_integral(kappa, x, quad, derivative),
        EndpointTransform::None => direct_integral(kappa, x, quad, derivative),
    }
}

// With s = 1/(1+e^{-u}) the integrand becomes
//   e^{iyu} e^{iκx tanh(u/2)} / (4 cosh²(u/2)),  y = 1/2κ,
// (the e^{-iκx} prefactor is absorbed through 2s-1 = tanh(u/2)). Moving the
// line to u = v + iθ, θ = π - δ, pulls out e^{-yθ}, which cancels the
// e^{πy} growth of the prefactor, and turns e^{iκx tanh} into a decaying
// factor because Im tanh(u/2) >= 0 in the strip.
fn contour_integral(kappa: f64, x: f64, quad: &QuadratureSpec, derivative: bool) -> Result<Estimate> {
    let y = 1.0 / (2.0 * kappa);
    let delta = (2.0 * kappa).min(0.5 * PI);
    let sin_t = delta.sin();
    let cos_d = delta.cos();
    let s2 = 2.0 * (0.5 * delta).sin().powi(2);
    let kx = kappa * x;

    let g = |v: f64| {
        let sh = v.sinh();
        let h2 = 2.0 * (0.5 * v).sinh().powi(2);
        // cosh v + cos θ and cosh u + 1, both in cancellation-free form
        let d = h2 + s2;
        let jac = 0.5 / Complex64::new(s2 - h2 * cos_d, sh * sin_t);
        let th = Complex64::new(sh / d, sin_t / d);
        let val = Complex64::from_polar((-kx * th.im).exp(), y * v + kx * th.re) * jac;
        if derivative {
            val * th * Complex64::new(0.0, kappa)
        } else {
            val
        }
    };

    let tol = quad.abs_tol.min(quad.rel_tol);
    let half = (10.0 / tol).ln() + (1.0 + 2.0 * kx).ln() + 2.0;
    let width = (2.0 * PI / y).min(4.0);
    let panels = ((2.0 * half / width).ceil() as usize).max(8);
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| -half + 2.0 * half * i as f64 / panels as f64)
        .collect();
    let est = integrate_adaptive(g, &breaks, quad.rel_tol, quad.abs_tol, quad.max_subdivisions)?;

    // (4iκ²/π) sinh(πy) e^{-yθ} = (2iκ²/π)(e^{yδ} - e^{-y(2π-δ)})
    let scale = 2.0 * kappa * kappa / PI * ((y * delta).exp() - (-y * (2.0 * PI - delta)).exp());
    Ok(Estimate {
        value: Complex64::new(0.0, scale) * est.value,
        error: scale * est.error,
    })
}

fn direct_integral(kappa: f64, x: f64, quad: &QuadratureSpec, derivative: bool) -> Result<Estimate> {
    let y = 1.0 / (2.0 * kappa);
    let kx = kappa * x;
    let g = |s: f64| {
        if s <= 0.0 || s >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let phase = kx * (2.0 * s - 1.0) + y * (s / (1.0 - s)).ln();
        let val = Complex64::from_polar(1.0, phase);
        if derivative {
            val * Complex64::new(0.0, kappa * (2.0 * s - 1.0))
        } else {
            val
        }
    };
    let panels = ((2.0 * kx / PI).ceil() as usize).max(8);
    let breaks: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
    let est = integrate_adaptive(g, &breaks, quad.rel_tol, quad.abs_tol, quad.max_subdivisions)?;
    let scale = prefactor_csch(kappa);
    Ok(Estimate {
        value: Complex64::new(0.0, scale) * est.value,
        error: scale * est.error,
    })
}
