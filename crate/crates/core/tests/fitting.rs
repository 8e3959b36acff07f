use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use whittaker::fitting::*;
use whittaker::observables::diffraction_lifetime;
use whittaker::packet::map_energy_params;
use whittaker::Error;

#[test]
fn exact_inverse_square_root() {
    let s: Vec<(f64, f64)> = [1.0, 4.0, 9.0, 16.0].iter().map(|&x: &f64| (x, 3.0 / x.sqrt())).collect();
    let f = fit_power_law(&s, None).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12);
    assert!((f.coefficient - 3.0).abs() < 1e-12);
    assert!(f.residual_rms < 1e-12);
    assert_eq!(f.sample_count, 4);
}

#[test]
fn noisy_samples_recover_coefficient() {
    let mut rng = StdRng::seed_from_u64(7);
    let s: Vec<(f64, f64)> = (0..12)
        .map(|i| {
            let x = 10f64.powf(-3.0 + 0.3 * i as f64);
            // 1% multiplicative noise, Box-Muller
            let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
            let g = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            (x, 2.471 / x.sqrt() * (1.0 + 0.01 * g))
        })
        .collect();
    for fixed in [None, Some(-0.5)] {
        let f = fit_power_law(&s, fixed).unwrap();
        assert!((f.coefficient / 2.471 - 1.0).abs() < 0.02, "{f:?}");
    }
}

#[test]
fn degenerate_abscissae() {
    let s = vec![(2.0, 1.0), (2.0, 1.1), (2.0, 0.9), (2.0, 1.0)];
    assert_eq!(fit_power_law(&s, None), Err(Error::RankDeficient));
    assert!(fit_power_law(&s, Some(-0.5)).is_ok());
}

#[test]
fn invalid_samples() {
    assert!(matches!(fit_power_law(&[(1.0, 1.0); 3], None), Err(Error::Domain(_))));
    let s = vec![(1.0, 1.0), (2.0, -1.0), (3.0, 1.0), (4.0, 1.0)];
    assert!(matches!(fit_power_law(&s, None), Err(Error::Domain(_))));
}

#[test]
fn bootstrap_is_seeded() {
    let s: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 1.0 / (i as f64).sqrt() * (1.0 + 0.01 * (i % 3) as f64))).collect();
    let a = bootstrap(&s, None, 200, 11).unwrap();
    let b = bootstrap(&s, None, 200, 11).unwrap();
    assert_eq!(a, b);
    assert!((a.exponent_mean + 0.5).abs() < 0.02);
}

#[test]
fn spread_constant_from_simulation() {
    let c = calibrate_spread_constant(SPREAD_CALIBRATION_ENERGY, &SPREAD_CALIBRATION_SPREADS).unwrap();
    assert!((c.fixed.coefficient / 2.471 - 1.0).abs() < 0.05, "{:?}", c.fixed);
    let free = c.free.unwrap();
    assert!((free.exponent + 0.5).abs() < 0.03, "{free:?}");
    // leave-one-out stability
    for f in leave_one_out(&c.samples, Some(-0.5)).unwrap_or_default() {
        assert!((f.coefficient / c.fixed.coefficient).ln().abs() < 2.0 * c.fixed.residual_rms + 1e-12);
    }
    let json: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
    assert!(json["constant"].as_f64().is_some());
    assert_eq!(json["samples"].as_array().unwrap().len(), 4);
}

#[test]
fn spread_constant_independent_of_energy() {
    let spreads = [3e-3, 1e-2, 1e-1, 1.0];
    let a = calibrate_spread_constant(200.0, &spreads).unwrap().fixed.coefficient;
    let b = calibrate_spread_constant(1.0e4, &spreads).unwrap().fixed.coefficient;
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
#[ignore = "E = 1 eV: the Coulomb phase bends the envelope and c_r drifts from 2.6 to 29 over this grid; see notes"]
fn spread_constant_at_one_ev() {
    let c = calibrate_spread_constant(1.0, &[1e-3, 1e-2, 1e-1, 1.0, 6.6]).unwrap();
    assert!((c.fixed.coefficient / 2.471 - 1.0).abs() < 0.05, "{:?}", c.fixed);
    assert!((c.free.unwrap().exponent + 0.5).abs() < 0.03);
}

#[test]
fn lifetime_constant_from_shortest_row() {
    let c = calibrate_lifetime_constant(&LIFETIME_53AS_PAIRS).unwrap();
    assert!((c.fixed.coefficient / 0.136 - 1.0).abs() < 0.05, "{:?}", c.fixed);
    assert!(c.free.is_none());
}

#[test]
fn lifetime_exponent_from_wide_grid() {
    let c = calibrate_lifetime_constant(&LIFETIME_FREE_PAIRS).unwrap();
    let free = c.free.unwrap();
    assert!((free.exponent + 0.5).abs() < 0.03, "{free:?}");
    assert!((c.fixed.coefficient / 0.136 - 1.0).abs() < 0.10, "{:?}", c.fixed);
}

#[test]
#[ignore = "σ = 0.19 > μ = 0.14 at (1 eV, 1.9 eV): the packet is dominated by κ ~ 0 and Δt = 174 as; see notes"]
fn hundred_attosecond_visible_cell() {
    let dt = diffraction_lifetime(&map_energy_params(1.0, 1.9).unwrap()).unwrap();
    assert!((dt / 0.100 - 1.0).abs() < 0.10, "{dt}");
}

#[test]
fn doubling_energy_shortens_lifetime() {
    let a = diffraction_lifetime(&map_energy_params(200.0, 0.033).unwrap()).unwrap();
    let b = diffraction_lifetime(&map_energy_params(400.0, 0.033).unwrap()).unwrap();
    assert!((b / a - 0.5f64.sqrt()).abs() < 0.05 * 0.5f64.sqrt(), "{}", b / a);
}

#[test]
fn scalar_minimiser() {
    let x = minimize_scalar(|x| (x.ln() - 1.3).powi(2), 0.01, 100.0);
    assert!((x - 1.3f64.exp()).abs() < 1e-6);
}

#[test]
fn centred_gaussian_fit() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
    let y: Vec<f64> = x.iter().map(|x| 2.0 * (-x * x / (2.0 * 1.7 * 1.7)).exp()).collect();
    let (a, s, r2) = fit_centered_gaussian(&x, &y, None);
    assert!((a - 2.0).abs() < 1e-6 && (s - 1.7).abs() < 1e-6 && r2 > 1.0 - 1e-10);
}

proptest! {
    #[test]
    fn power_law_recovered(p in -2.0f64..2.0, c in 0.01f64..100.0, x0 in 0.01f64..10.0) {
        let s: Vec<(f64, f64)> = (0..6).map(|i| {
            let x = x0 * 1.7f64.powi(i);
            (x, c * x.powf(p))
        }).collect();
        let f = fit_power_law(&s, None).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-9);
        prop_assert!((f.coefficient / c - 1.0).abs() < 1e-9);
        prop_assert!(f.residual_rms < 1e-9);
    }

    #[test]
    fn fixed_exponent_is_geometric_mean(v in proptest::collection::vec(0.5f64..2.0, 4..10)) {
        let s: Vec<(f64, f64)> = v.iter().enumerate().map(|(i, m)| {
            let x = (i + 1) as f64;
            (x, m / x.sqrt())
        }).collect();
        let f = fit_power_law(&s, Some(-0.5)).unwrap();
        let gm = (v.iter().map(|m| m.ln()).sum::<f64>() / v.len() as f64).exp();
        prop_assert!((f.coefficient / gm - 1.0).abs() < 1e-12);
    }
}
