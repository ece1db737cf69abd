mod common;

use common::*;
use qni_core::analysis::models::{Quadratic, Triangle};
use qni_core::analysis::*;
use qni_core::synth::{add_shot_noise, radial_profile, render_pattern};
use qni_core::{Error, GridSpec, RingExtremum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn quadratic_data(truth: &[f64; 3], sigma: f64, seed: u64) -> Vec<DataPoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..20)
        .map(|i| {
            let x = -1.0 + 0.1 * i as f64;
            let y = truth[0] + truth[1] * x + truth[2] * x * x + noise.sample(&mut rng);
            DataPoint::new(x, y, sigma)
        })
        .collect()
}

#[test]
fn exact_data_recovered() {
    let truth = [0.3, -1.2, 2.5];
    let data: Vec<_> = (0..12)
        .map(|i| {
            let x = i as f64 * 0.25;
            DataPoint::new(x, truth[0] + truth[1] * x + truth[2] * x * x, 1.0)
        })
        .collect();
    let fit = nls_fit(&Quadratic, &data, &[1.0, 1.0, 1.0], None, &NlsOptions::default()).unwrap();
    assert!(fit.converged);
    for (p, t) in fit.params.iter().zip(truth) {
        assert!(rel(*p, t) < 1e-8, "{p} vs {t}");
    }

    let tri_truth = [0.1, 1.2, 0.8];
    let tri: Vec<_> = (0..41)
        .map(|i| {
            let x = -1.0 + 0.05 * i as f64;
            DataPoint::new(x, Triangle.value(x, &tri_truth), 0.01)
        })
        .collect();
    let fit = nls_fit(&Triangle, &tri, &[0.05, 1.0, 0.7], None, &NlsOptions::default()).unwrap();
    for (p, t) in fit.params.iter().zip(tri_truth) {
        assert!(rel(*p, t) < 1e-8, "{p} vs {t}");
    }
}

#[test]
fn chi2_never_increases() {
    let data = quadratic_data(&[1.0, 2.0, -3.0], 0.1, 3);
    let fit = nls_fit(&Quadratic, &data, &[10.0, -5.0, 7.0], None, &NlsOptions::default()).unwrap();
    assert!(fit.chi2_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(fit.stderr.iter().all(|s| *s >= 0.0));
    assert!(fit.converged);
}

#[test]
fn pulls_are_standard_normal() {
    let truth = [1.0, 2.0, -3.0];
    let mut total = 0.0;
    let mut n = 0;
    for seed in 0..500 {
        let data = quadratic_data(&truth, 0.2, seed);
        let fit = nls_fit(&Quadratic, &data, &[0.0, 0.0, 0.0], None, &NlsOptions::default()).unwrap();
        for j in 0..3 {
            total += ((fit.params[j] - truth[j]) / fit.stderr[j]).abs();
            n += 1;
        }
    }
    let mean_abs = total / n as f64;
    // E|z| = sqrt(2/pi) ~ 0.798 for a standard normal
    assert!((0.7..=1.3).contains(&mean_abs), "mean |pull| {mean_abs}");
}

#[test]
fn degenerate_model_is_rank_deficient() {
    let model = FnModel { names: vec!["p".into(), "q".into()], f: |_x: f64, p: &[f64]| p[0] + p[1] };
    let data: Vec<_> = (0..5).map(|i| DataPoint::new(i as f64, 1.0, 1.0)).collect();
    match nls_fit(&model, &data, &[0.5, 0.5], None, &NlsOptions::default()) {
        Err(Error::RankDeficient { param }) => assert_eq!(param, "q"),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let data = quadratic_data(&[1.0, 2.0, -3.0], 0.1, 5);
    let opts = NlsOptions { max_iter: 1, ..NlsOptions::default() };
    let fit = nls_fit(&Quadratic, &data, &[100.0, 100.0, 100.0], None, &opts).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.n_iter, 1);
}

#[test]
fn quadratic_coefficient_from_synthetic_orders() {
    let a = 0.5519e6;
    let make = |offset: f64| -> Vec<RingExtremum> {
        (1..10)
            .map(|k| {
                let order = k as f64 * 0.5;
                RingExtremum {
                    radius: ((order - offset) / a).sqrt(),
                    order,
                    kind: if k % 2 == 0 { ExtremumKind::Max } else { ExtremumKind::Min },
                }
            })
            .collect()
    };
    let fit = fit_quadratic_coefficient(&make(0.0)).unwrap();
    assert!(rel(fit.param("a").unwrap(), a) < 1e-6);
    let shifted = fit_quadratic_coefficient(&make(0.3)).unwrap();
    assert!(rel(shifted.param("a").unwrap(), a) < 1e-6);
    let mut renumbered = make(0.0);
    renumbered.iter_mut().for_each(|e| e.order += 3.0);
    let base = fit.param("a").unwrap();
    assert!(rel(fit_quadratic_coefficient(&renumbered).unwrap().param("a").unwrap(), base) < 1e-12);
    assert!(fit_quadratic_coefficient(&make(0.0)[..2]).is_err());
}

#[test]
fn lambda_eq_from_pairs() {
    let f2 = 0.2;
    let lam = 271.8 * NM;
    let pairs: Vec<_> = (3..=7).map(|d| (d as f64 * MM, d as f64 * MM / (f2 * f2 * lam))).collect();
    let fit = fit_lambda_eq(&pairs, f2).unwrap();
    assert!(rel(fit.param("lambda_eq").unwrap(), lam) < 1e-9);
    let single = fit_lambda_eq(&pairs[2..3], f2).unwrap();
    assert!(rel(single.params[0], lam) < 1e-12);
    assert!(matches!(fit_lambda_eq(&[(3e-3, -1.0)], f2), Err(Error::Inconsistent(_))));
}

fn triangle_scan(center: f64, lc: f64, noise: f64, seed: u64, offset: f64) -> Vec<DataPoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, noise).unwrap();
    (0..41)
        .map(|i| {
            let x = -MM + 0.05 * MM * i as f64;
            let v = Triangle.value(x, &[center, lc, 1.0]) + n.sample(&mut rng);
            DataPoint::new(x + offset, v, noise)
        })
        .collect()
}

#[test]
fn triangle_round_trip() {
    for seed in 0..10 {
        let fit = fit_triangle_envelope(&triangle_scan(0.0, 1.2 * MM, 0.05, seed, 0.0)).unwrap();
        assert!(rel(fit.param("l_c").unwrap(), 1.2 * MM) < 0.03, "seed {seed}: {:?}", fit.params);
        assert!(fit.param("center").unwrap().abs() < 20.0 * UM);
    }
    let a = fit_triangle_envelope(&triangle_scan(0.0, 1.2 * MM, 0.05, 1, 0.0)).unwrap();
    let b = fit_triangle_envelope(&triangle_scan(0.0, 1.2 * MM, 0.05, 1, 0.25 * MM)).unwrap();
    assert!((b.params[0] - a.params[0] - 0.25 * MM).abs() < 1e-9 * MM);
    let zeros: Vec<_> = (0..9).map(|i| DataPoint::new(i as f64, 0.0, 0.1)).collect();
    assert!(matches!(fit_triangle_envelope(&zeros), Err(Error::NoSignal(_))));
}

#[test]
fn sine_round_trip() {
    let period = 1540.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = Normal::new(0.0, 0.02).unwrap();
    let scan: Vec<(f64, f64)> = (0..60)
        .map(|i| {
            let x = i as f64 * 3.0 * period / 59.0;
            (x, 1.0 + 0.8 * (std::f64::consts::TAU * x / period + 0.7).cos() + n.sample(&mut rng))
        })
        .collect();
    let fit = fit_sine_scan(&scan).unwrap();
    assert!(rel(fit.param("period").unwrap(), period) < 0.005, "{:?}", fit.params);
    assert!(fit.param("amplitude").unwrap() > 0.0);
    let scaled: Vec<_> = scan.iter().map(|&(x, y)| (x, 37.0 * y)).collect();
    assert!(rel(fit_sine_scan(&scaled).unwrap().params[0], fit.params[0]) < 1e-9);
    let flat: Vec<_> = scan.iter().map(|&(x, _)| (x, 2.0)).collect();
    assert!(matches!(fit_sine_scan(&flat), Err(Error::NoOscillation(_))));
}

#[test]
fn refractive_index_values() {
    let m = measure_refractive_index(342.0_f64, 11.0, 500.0, 0.0).unwrap();
    assert!((m.value - 1.684).abs() < 1e-12);
    assert!((m.value - 1.683).abs() < 0.054);
    assert!((m.stderr - 0.022).abs() < 1e-12);
    assert_eq!(measure_refractive_index(0.0, 0.0, 500.0, 1.0).unwrap().value, 1.0);
    assert!((measure_refractive_index(323.5_f64, 0.0, 500.0, 0.0).unwrap().value - 1.647).abs() < 1e-12);
    assert!(measure_refractive_index(1.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn wedge_angle_inversion() {
    let sc = scenario();
    let (li, ls) = (sc.spdc.idler_wavelength(), sc.spdc.signal_wavelength);
    let alpha = measure_wedge_angle(2.17 * MM, 1.647, li, sc.f1, sc.f2, ls).unwrap();
    let arcmin = alpha.to_degrees() * 60.0;
    assert!((arcmin - 1.3).abs() < 0.01, "{arcmin}");
    let doubled = measure_wedge_angle(4.34 * MM, 1.647, li, sc.f1, sc.f2, ls).unwrap();
    assert!(rel(doubled.tan(), alpha.tan() / 2.0) < 1e-12);
    assert!(measure_wedge_angle(1.0, 1.0, li, sc.f1, sc.f2, ls).is_err());
}

#[test]
fn ring_extrema_noise_and_scale() {
    let mut sc = scenario();
    sc.crystal_shift = 6.0 * MM;
    let grid = GridSpec::default_camera();
    let clean = render_pattern(&sc, &grid).unwrap();
    let clean_ext = extract_ring_extrema(&radial_profile(&clean, 200).unwrap()).unwrap();
    assert!(clean_ext.len() >= 6);
    let radii_ok = clean_ext.windows(2).all(|w| w[1].radius > w[0].radius && w[1].order > w[0].order);
    assert!(radii_ok);

    // SNR ~ 30 per pixel
    let exposure = 900.0 / clean.max_value();
    let noisy = add_shot_noise(&clean, exposure, 99).unwrap();
    let noisy_ext = extract_ring_extrema(&radial_profile(&noisy, 200).unwrap()).unwrap();
    assert_eq!(noisy_ext.len(), clean_ext.len());

    let scaled = extract_ring_extrema(&radial_profile(&clean.scaled(1234.5), 200).unwrap()).unwrap();
    assert_eq!(scaled.len(), clean_ext.len());
    for (a, b) in scaled.iter().zip(&clean_ext) {
        assert!(rel(a.radius, b.radius) < 1e-9);
        assert_eq!(a.order, b.order);
    }

    let flat = render_pattern(&scenario(), &GridSpec::centered(64, 64, 50.0 * UM)).unwrap();
    assert!(extract_ring_extrema(&radial_profile(&flat, 20).unwrap()).unwrap().is_empty());
}

#[test]
fn ring_pipeline_recovers_equivalent_wavelength() {
    let mut sc = scenario();
    let grid = GridSpec::default_camera();
    let mut pairs = Vec::new();
    for d in [3.0, 4.0, 6.0] {
        sc.crystal_shift = d * MM;
        let p = render_pattern(&sc, &grid).unwrap();
        let ext = extract_ring_extrema(&radial_profile(&p, 200).unwrap()).unwrap();
        pairs.push((d * MM, fit_quadratic_coefficient(&ext).unwrap().param("a").unwrap()));
    }
    let line = nls_fit(
        &models::Linear { slope: "slope", offset: "intercept" },
        &pairs.iter().map(|&(d, a)| DataPoint::new(d, a, 1.0)).collect::<Vec<_>>(),
        &[1e8, 0.0],
        None,
        &NlsOptions::default(),
    )
    .unwrap();
    let intercept = line.param("intercept").unwrap();
    assert!(intercept.abs() < 0.02 * pairs[2].1, "intercept {intercept}");
    let lam = fit_lambda_eq(&pairs, sc.f2).unwrap().params[0];
    assert!(rel(lam, 271.8 * NM) < 0.02, "lambda_eq {lam}");
}
