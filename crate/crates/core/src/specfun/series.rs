//! Power-series continuation of the radial equation.
//!
//! With u = x w = 2i f the real function f solves x f'' + (1 + κ²x) f = 0,
//! f(0) = 0, f'(0) = κ. Near the origin f is summed from its Maclaurin
//! series; further out it is carried by Taylor steps whose length is capped
//! by the distance to the singular point x = 0 and by the local wavenumber.
//! Negative κ gives the odd extension w_{-κ} = -w_κ, κ = 0 gives w = 0.

use num_complex::Complex64;

const MAX_TERMS: usize = 120;
const TERM_EPS: f64 = 1e-18;

/// f and f' at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub x: f64,
    pub f: f64,
    pub df: f64,
}

impl ModeState {
    /// w = 2i f / x.
    pub fn value(&self, kappa: f64) -> Complex64 {
        if self.x == 0.0 {
            return Complex64::new(0.0, 2.0 * kappa);
        }
        Complex64::new(0.0, 2.0 * self.f / self.x)
    }

    /// ∂w/∂x = 2i (f'/x - f/x²).
    pub fn derivative(&self, kappa: f64) -> Complex64 {
        if self.x == 0.0 {
            return Complex64::new(0.0, -kappa);
        }
        let x = self.x;
        Complex64::new(0.0, 2.0 * (self.df / x - self.f / (x * x)))
    }
}

/// Radius below which the Maclaurin series is summed directly.
fn origin_radius(kappa: f64) -> f64 {
    1f64.min(1.0 / kappa.abs().max(1e-300))
}

/// f, f' from the Maclaurin series; also returns w and ∂w/∂x without the
/// 1/x cancellation.
fn maclaurin(kappa: f64, x: f64) -> (f64, f64, Complex64, Complex64) {
    let k2 = kappa * kappa;
    // a_m x^m, starting at a_1 = κ
    let mut am1 = 0.0; // a_{m-1} x^{m-1}
    let mut am = kappa * x; // a_m x^m, m = 1
    let (mut f, mut df, mut w, mut dw) = (0.0, 0.0, 0.0, 0.0);
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        f += am;
        if x > 0.0 {
            df += mf * am / x;
            w += am / x;
            dw += (mf - 1.0) * am / (x * x);
        }
        // (m+1) m a_{m+1} + a_m + κ² a_{m-1} = 0
        let next = -(am * x + k2 * am1 * x * x) / ((mf + 1.0) * mf);
        am1 = am;
        am = next;
        m += 1;
        if m > MAX_TERMS || (am.abs() <= TERM_EPS * f.abs().max(kappa.abs() * x) && am1.abs() <= TERM_EPS * f.abs().max(kappa.abs() * x)) {
            break;
        }
    }
    if x == 0.0 {
        df = kappa;
        w = kappa;
        dw = -kappa / 2.0;
    }
    (f, df, Complex64::new(0.0, 2.0 * w), Complex64::new(0.0, 2.0 * dw))
}

/// Largest safe Taylor step from x0.
fn max_step(kappa: f64, x0: f64) -> f64 {
    let k_loc = (kappa * kappa + 1.0 / x0).sqrt();
    (x0 / 3.0).min(1.5 / k_loc)
}

/// One Taylor step of length h from state s (h need not respect max_step
/// but convergence is only guaranteed for h < x0).
pub fn taylor_step(kappa: f64, s: ModeState, h: f64) -> ModeState {
    let x0 = s.x;
    let k2 = kappa * kappa;
    let a = 1.0 + k2 * x0;
    // d_k = c_k h^k
    let mut d_km1 = 0.0;
    let mut d_k = s.f;
    let mut d_k1 = s.df * h;
    let mut f = d_k + d_k1;
    let mut df = s.df;
    let scale = s.f.abs() + s.df.abs() * h;
    let mut k = 0usize;
    let mut small = 0;
    while k < MAX_TERMS {
        let kf = k as f64;
        // x0 (k+2)(k+1) c_{k+2} + (k+1)k c_{k+1} + (1+κ²x0) c_k + κ² c_{k-1} = 0
        let d_k2 = -((kf + 1.0) * kf * d_k1 * h + a * d_k * h * h + k2 * d_km1 * h * h * h)
            / (x0 * (kf + 2.0) * (kf + 1.0));
        f += d_k2;
        df += (kf + 2.0) * d_k2 / h;
        if d_k2.abs() <= TERM_EPS * scale {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        d_km1 = d_k;
        d_k = d_k1;
        d_k1 = d_k2;
        k += 1;
    }
    ModeState { x: x0 + h, f, df }
}

/// Marches one mode outward through increasing radii.
#[derive(Debug, Clone)]
pub struct ModeMarcher {
    kappa: f64,
    state: ModeState,
}

impl ModeMarcher {
    pub fn new(kappa: f64) -> Self {
        ModeMarcher {
            kappa,
            state: ModeState {
                x: 0.0,
                f: 0.0,
                df: kappa,
            },
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn state(&self) -> ModeState {
        self.state
    }

    /// Advances to `x` (must not be behind the current position).
    pub fn advance_to(&mut self, x: f64) -> ModeState {
        assert!(x >= self.state.x, "marcher cannot move inward");
        self.state = evaluate_from(self.kappa, self.state, x);
        self.state
    }

    /// w at the current position.
    pub fn value(&self) -> Complex64 {
        self.state.value(self.kappa)
    }

    pub fn derivative(&self) -> Complex64 {
        self.state.derivative(self.kappa)
    }
}

/// State at `x` starting from a known state at `from.x <= x`.
pub fn evaluate_from(kappa: f64, from: ModeState, x: f64) -> ModeState {
    let x_origin = origin_radius(kappa);
    let mut s = from;
    if x <= x_origin {
        let (f, df, _, _) = maclaurin(kappa, x);
        return ModeState { x, f, df };
    }
    if s.x < x_origin {
        let (f, df, _, _) = maclaurin(kappa, x_origin);
        s = ModeState {
            x: x_origin,
            f,
            df,
        };
    }
    while s.x < x {
        let h = (x - s.x).min(max_step(kappa, s.x));
        s = taylor_step(kappa, s, h);
        if x - s.x < 1e-14 * x {
            s.x = x;
        }
    }
    s
}

/// w and ∂w/∂x at a single point.
pub fn mode_value(kappa: f64, x: f64) -> (Complex64, Complex64) {
    if x <= origin_radius(kappa) {
        let (_, _, w, dw) = maclaurin(kappa, x);
        return (w, dw);
    }
    let s = evaluate_from(kappa, ModeState { x: 0.0, f: 0.0, df: kappa }, x);
    (s.value(kappa), s.derivative(kappa))
}
