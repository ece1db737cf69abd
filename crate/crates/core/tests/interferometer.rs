mod common;

use std::f64::consts::PI;

use common::*;
use qni_core::interferometer::*;
use qni_core::units::SPEED_OF_LIGHT as C;
use qni_core::PhaseMask;

#[test]
fn equivalent_wavelength_values() {
    assert!(rel(equivalent_wavelength(525.2, 797.0, 1540.0), 271.8) < 2e-4);
    assert_eq!(equivalent_wavelength(400.0, 800.0, 800.0), 400.0);
    let (p, s, i) = (525.2, 797.0, 1540.0);
    let swapped = equivalent_wavelength(p, i, s) / equivalent_wavelength(p, s, i);
    assert!(rel(swapped, (i / s).powi(2)) < 1e-14);
}

#[test]
fn phase_total_reference_points() {
    let mut sc = scenario();
    let wi = sc.spectral.omega_i0();
    assert_eq!(phase_total(&sc, [1.3 * MM, -0.4 * MM], wi), 0.0);

    sc.delta_l = sc.spdc.idler_wavelength();
    assert!((phase_total(&sc, [0.0, 0.0], wi) - 2.0 * PI).abs() < 1e-12);

    sc.delta_l = 0.0;
    sc.crystal_shift = 6.0 * MM;
    let lam_eq = sc.spdc.equivalent_wavelength();
    let rho1 = (0.2f64.powi(2) * lam_eq / 6e-3).sqrt();
    assert!(rel(rho1, 1.346 * MM) < 1e-3);
    assert!((phase_total(&sc, [rho1, 0.0], wi) - 2.0 * PI).abs() < 1e-9);
}

#[test]
fn detector_to_mirror_map() {
    let sc = scenario();
    assert_eq!(map_detector_to_mirror(&sc, [0.0, 0.0]), [0.0, 0.0]);
    let r = map_detector_to_mirror(&sc, [1.0 * MM, 0.0])[0];
    assert!(rel(r, 0.7246 * MM) < 1e-3, "{r}");
    let a = map_detector_to_mirror(&sc, [0.3 * MM, -0.7 * MM]);
    let b = map_detector_to_mirror(&sc, [0.6 * MM, -1.4 * MM]);
    assert_eq!([2.0 * a[0], 2.0 * a[1]], b);
}

#[test]
fn closed_form_limits() {
    let mut sc = scenario();
    let eps = sc.spdc.pair_gen_scale;
    assert!(rel(mean_count_closed(&sc, [0.8 * MM, 0.0]), 4.0 * eps) < 1e-15);
    sc.phi1 = PI;
    assert!(mean_count_closed(&sc, [0.0, 0.0]).abs() < 1e-20);
    let lc = coherence_length(&sc.spectral);
    for dl in [lc / 2.0, 0.7 * lc, -lc / 2.0] {
        sc.delta_l = dl;
        for r in [0.0, 1.0, 2.5] {
            assert!(rel(mean_count_closed(&sc, [r * MM, 0.0]), 2.0 * eps) < 1e-12);
        }
    }
}

#[test]
fn envelope_values() {
    let sc = scenario();
    let dw = sc.spectral.delta_omega;
    assert_eq!(visibility_envelope(&sc.spectral, 0.0), 1.0);
    assert!(visibility_envelope(&sc.spectral, 4.0 * PI * C / dw).abs() < 1e-12);
    assert!(visibility_envelope(&sc.spectral, -4.0 * PI * C / dw).abs() < 1e-12);
    assert!((visibility_envelope(&sc.spectral, 2.0 * PI * C / dw) - 0.5).abs() < 1e-12);
}

#[test]
fn coherence_length_forms_agree() {
    let sc = scenario();
    let lc = coherence_length(&sc.spectral);
    assert!(rel(lc, 1.20 * MM) < 0.05, "lc = {lc}");
    let (li, ls) = coherence_length_wavelength_forms(&sc.spectral);
    assert!(rel(li, ls) < 0.01);
    assert!(rel(li, lc) < 0.01);
    let long = qni_core::Scenario::from_config(spdc(20.0)).unwrap();
    assert!(rel(coherence_length(&long.spectral) / lc, 2.0) < 0.02);
}

#[test]
fn integral_matches_closed_form_on_grid() {
    let mut sc = scenario();
    let eps = sc.spdc.pair_gen_scale;
    for dl in [0.0, 100.0, 300.0, 500.0] {
        sc.delta_l = dl * UM;
        for i in 0..10 {
            let rho = [3.0 * MM * i as f64 / 9.0, 0.0];
            let closed = mean_count_closed(&sc, rho);
            let integral = mean_count_integral(&sc, rho).unwrap();
            assert!(
                (integral - closed).abs() <= 1e-3 * closed.max(1e-3 * eps),
                "dl = {dl} um, rho = {} mm: integral {integral} closed {closed}",
                rho[0] / MM
            );
        }
    }
}

#[test]
fn integral_matches_closed_form_with_mask_and_shift() {
    let mut sc = scenario();
    sc.phase_mask = Some(PhaseMask::uniform(0.5 * MM, 1.647));
    sc.delta_l = -2.0 * 0.647 * 0.5 * MM + 150.0 * UM;
    sc.crystal_shift = 4.0 * MM;
    sc.allow_combined = true;
    sc.phi1 = 0.3;
    sc.l_prime = 10.0 * UM;
    for r in [0.0, 0.7, 1.9] {
        let rho = [r * MM, 0.0];
        let closed = mean_count_closed(&sc, rho);
        let integral = mean_count_integral(&sc, rho).unwrap();
        assert!(rel(integral, closed) < 1e-3, "{integral} vs {closed}");
    }
}

#[test]
fn counts_bounded() {
    let mut sc = scenario();
    let top = 4.0 * sc.spdc.pair_gen_scale;
    sc.filter = Some(qni_core::FilterModel::bandpass_800_10());
    for dl in [0.0, 40.0, 160.0, 320.0] {
        sc.delta_l = dl * UM;
        for r in [0.0, 0.5, 1.5, 3.0] {
            let n = mean_count_integral(&sc, [r * MM, 0.0]).unwrap();
            assert!((0.0..=top * (1.0 + 1e-9)).contains(&n), "{n}");
        }
    }
}

#[test]
fn rotational_symmetry() {
    let mut sc = scenario();
    sc.delta_l = 160.0 * UM;
    sc.crystal_shift = 6.0 * MM;
    let r = 1.1 * MM;
    let reference = mean_count_integral(&sc, [r, 0.0]).unwrap();
    for k in 1..8 {
        let t = 2.0 * PI * k as f64 / 8.0;
        let v = mean_count_integral(&sc, [r * t.cos(), r * t.sin()]).unwrap();
        assert!(rel(v, reference) < 1e-12, "azimuth {k}: {v} vs {reference}");
    }
}

#[test]
fn ring_maxima_follow_quadratic_law() {
    let mut sc = scenario();
    sc.crystal_shift = 6.0 * MM;
    let a = 6.0 * MM / (sc.f2 * sc.f2 * sc.spdc.equivalent_wavelength());
    // maxima of the closed form along a radius by dense search and refinement
    let f = |r: f64| mean_count_closed(&sc, [r, 0.0]);
    let n = 6000;
    let h = 3.2 * MM / n as f64;
    let mut maxima = Vec::new();
    for i in 1..n {
        let (l, m, r) = (f((i - 1) as f64 * h), f(i as f64 * h), f((i + 1) as f64 * h));
        if m > l && m >= r {
            let shift = 0.5 * (l - r) / (l - 2.0 * m + r);
            maxima.push((i as f64 + shift) * h);
        }
    }
    assert!(maxima.len() >= 4);
    for (k, rho) in maxima.iter().enumerate() {
        let order = a * rho * rho;
        assert!((order - (k + 1) as f64).abs() < 0.005 * (k + 1) as f64, "ring {k}: {order}");
    }
}

#[test]
fn axial_period_is_idler_wavelength() {
    let mut sc = scenario();
    let li = sc.spdc.idler_wavelength();
    let mut peaks = Vec::new();
    let steps = 5000;
    let h = 5.0 * li / steps as f64;
    let mut prev = [0.0; 2];
    for i in 0..=steps + 1 {
        sc.delta_l = -0.25 * li + i as f64 * h;
        // fringe term with the slowly varying envelope divided out
        let eps2 = 2.0 * sc.spdc.pair_gen_scale;
        let v = (mean_count_closed(&sc, [0.0, 0.0]) / eps2 - 1.0) / visibility_envelope(&sc.spectral, sc.delta_l);
        if i >= 2 && prev[1] > prev[0] && prev[1] >= v {
            let shift = 0.5 * (prev[0] - v) / (prev[0] - 2.0 * prev[1] + v);
            peaks.push(-0.25 * li + (i as f64 - 1.0 + shift) * h);
        }
        prev = [prev[1], v];
    }
    assert_eq!(peaks.len(), 5, "{peaks:?}");
    let period = (peaks[4] - peaks[0]) / 4.0;
    assert!(rel(period, li) < 1e-6, "{period} vs {li}");
}

#[test]
fn asd_phase_scaling() {
    let mut sc = scenario();
    sc.delta_l = 100.0 * UM;
    let p1 = asd_phase(&sc, [1.0 * MM, 0.0]);
    let p2 = asd_phase(&sc, [2.0 * MM, 0.0]);
    assert!(rel(p2 / p1, 4.0) < 1e-14);
    sc.delta_l = 200.0 * UM;
    assert!(rel(asd_phase(&sc, [1.0 * MM, 0.0]) / p1, 2.0) < 1e-14);
    let w = sc.spectral.omega_s0;
    let expected = sc.spectral.b * w * w * (1e-3f64).powi(2) * 100e-6 / (sc.f2 * sc.f2 * C.powi(3));
    assert!(rel(p1, expected) < 1e-12);
}

#[test]
fn scenario_guards() {
    let mut sc = scenario();
    assert!(sc.validate().is_ok());
    sc.crystal_shift = 1.0 * MM;
    sc.phase_mask = Some(PhaseMask::uniform(0.1 * MM, 1.5));
    assert!(sc.validate().is_err());
    sc.allow_combined = true;
    assert!(sc.validate().is_ok());
    sc.delta_l = 20.0 * MM;
    assert!(sc.validate().is_err());
    sc.delta_l = 0.0;
    sc.f2 = 0.0;
    assert!(sc.validate().is_err());
}
