//! Gauss–Kronrod (10/21) adaptive integration of complex integrands and
//! Gauss–Legendre node generation.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;

// G10K21 abscissae and weights (QUADPACK qk21). Gauss nodes sit at odd indices.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980029270,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// One G10K21 panel. Returns (Kronrod value, |Kronrod - Gauss|).
pub fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = Complex64::new(0.0, 0.0);
    for i in 0..10 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).norm())
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // ties broken by position so the bisection order is reproducible
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive integration over the partition given by `breaks`
/// (strictly increasing). Bisects the worst panel until the summed error
/// estimate is below max(abs_tol, rel_tol |I|).
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    assert!(breaks.len() >= 2);
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let (value, error) = gk21(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut splits = 0;
    loop {
        // Re-summing keeps the running totals free of cancellation drift.
        let (total, err) = sum_panels(&heap);
        let tol = abs_tol.max(rel_tol * total.norm());
        if err <= tol {
            return Ok(Estimate {
                value: total,
                error: err,
            });
        }
        if splits >= max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: err,
                tolerance: tol,
                subdivisions: splits,
            });
        }
        // Bisect a batch of the worst panels before re-summing.
        let batch = (heap.len() / 8).clamp(1, max_subdivisions - splits);
        for _ in 0..batch {
            let p = heap.pop().expect("non-empty panel set");
            let m = 0.5 * (p.a + p.b);
            if m <= p.a || m >= p.b {
                // panel below floating-point resolution, keep it as is
                heap.push(p);
                splits = max_subdivisions;
                break;
            }
            let (v1, e1) = gk21(&f, p.a, m);
            let (v2, e2) = gk21(&f, m, p.b);
            heap.push(Panel {
                a: p.a,
                b: m,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: m,
                b: p.b,
                value: v2,
                error: e2,
            });
            splits += 1;
        }
    }
}

fn sum_panels(heap: &BinaryHeap<Panel>) -> (Complex64, f64) {
    // Sum in position order so the result does not depend on heap layout.
    let mut v: Vec<&Panel> = heap.iter().collect();
    v.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in v {
        total += p.value;
        err += p.error;
    }
    (total, err)
}

/// n-point Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels of
/// `order` nodes each; nodes ascending.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}
