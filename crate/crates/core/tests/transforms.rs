use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raytomo::geodesics::{geodesic_length, trace_geodesic, GeodesicSpec, RayQuadrature};
use raytomo::grid::linspace;
use raytomo::transforms::*;
use raytomo::{GridFunction, WaveSpeed};

fn unit_speed() -> WaveSpeed {
    WaveSpeed::constant(0.05, 1.0).unwrap()
}

fn one_jump() -> WaveSpeed {
    WaveSpeed::from_layers(0.05, &[(0.05, 0.6, &[1.1]), (0.6, 1.0, &[1.0])]).unwrap()
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

type ModeFn = Box<dyn Fn(f64) -> Complex64>;

fn field_from(inner: f64, n: usize, modes: Vec<(i32, ModeFn)>) -> FourierField {
    FourierField::from_fns(inner, &linspace(inner, 1.0, n), modes).unwrap()
}

/// Band-limited field with smooth random radial profiles vanishing at r = 1.
fn random_field(rng: &mut ChaCha8Rng, inner: f64, k_max: i32) -> FourierField {
    let mut modes: Vec<(i32, ModeFn)> = Vec::new();
    for k in -k_max..=k_max {
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(1.0..4.0));
        let (d, e) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        modes.push((k, Box::new(move |r: f64| cx(a + b * (c * r).cos(), d * r + e * r * r) * (1.0 - r))));
    }
    field_from(inner, 801, modes)
}

/// Relative L² distance of `got` from `truth`, both sampled on got's grid over [lo, hi].
fn rel_l2(got: &FourierField, truth: &FourierField, lo: f64, hi: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let grid: Vec<f64> = got.grid().iter().copied().filter(|&r| r >= lo && r <= hi).collect();
    for w in grid.windows(2) {
        let (r, dr) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
        for &k in truth.modes().keys() {
            let t = truth.coefficient(k, r);
            num += (got.coefficient(k, r) - t).norm_sqr() * r * dr;
            den += t.norm_sqr() * r * dr;
        }
    }
    (num / den).sqrt()
}

/// ∫ f over the traced geodesic by the trapezoid rule on an arclength-uniform polyline.
fn path_integral(w: &WaveSpeed, spec: &GeodesicSpec, f: &dyn Fn(f64, f64, f64) -> Complex64) -> (Complex64, f64) {
    let path = trace_geodesic(w, spec, 20001).unwrap();
    let s = &path.samples;
    let (mut sum, mut abs) = (cx(0.0, 0.0), 0.0);
    for i in 0..s.len() - 1 {
        let dt = s[i + 1].t - s[i].t;
        let a = f(s[i].r, s[i].theta, s[i].t);
        let b = f(s[i + 1].r, s[i + 1].theta, s[i + 1].t);
        sum += (a + b) * (0.5 * dt);
        abs += 0.5 * (a.norm() + b.norm()) * dt;
    }
    (sum, abs)
}

#[test]
fn decompose_sin_theta() {
    let radii = linspace(0.1, 1.0, 11);
    let samples = PolarSamples::from_real_fn(&radii, 32, |_, t| t.sin());
    let (field, alias) = fourier_decompose(0.1, &samples, 4).unwrap();
    assert!(!alias);
    for &r in &radii {
        assert!((field.coefficient(1, r) - cx(0.0, -0.5)).norm() < 1e-12);
        assert!((field.coefficient(-1, r) - cx(0.0, 0.5)).norm() < 1e-12);
        for k in [-4, -3, -2, 0, 2, 3, 4] {
            assert!(field.coefficient(k, r).norm() < 1e-12);
        }
    }
    assert!(field.is_real(1e-12));
}

#[test]
fn alias_risk_flags_energy_at_the_cutoff() {
    let radii = linspace(0.1, 1.0, 5);
    let samples = PolarSamples::from_real_fn(&radii, 16, |r, t| r + (3.0 * t).cos());
    assert!(fourier_decompose(0.1, &samples, 3).unwrap().1);
    assert!(!fourier_decompose(0.1, &samples, 4).unwrap().1);
}

#[test]
fn decompose_radial_function() {
    let radii = linspace(0.1, 1.0, 11);
    let samples = PolarSamples::from_real_fn(&radii, 16, |r, _| r * r);
    let (field, alias) = fourier_decompose(0.1, &samples, 3).unwrap();
    assert!(!alias);
    for &r in &radii {
        assert!((field.coefficient(0, r) - cx(r * r, 0.0)).norm() < 1e-12);
        assert!(field.modes().iter().filter(|(k, _)| **k != 0).all(|(_, a)| a.max_abs() < 1e-12));
    }
}

#[test]
fn decompose_needs_enough_angles() {
    let radii = linspace(0.1, 1.0, 5);
    let samples = PolarSamples::from_real_fn(&radii, 15, |_, _| 1.0);
    assert!(fourier_decompose(0.1, &samples, 4).is_err());
}

#[test]
fn parseval_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let field = random_field(&mut rng, 0.1, 5);
    let samples = fourier_synthesize(&field, 64);
    let (back, _) = fourier_decompose(0.1, &samples, 5).unwrap();
    let (a, b, c) = (field.l2_norm_sq(), samples.l2_norm_sq(), back.l2_norm_sq());
    assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    assert!((a - c).abs() <= 1e-8 * a, "{a} vs {c}");
}

#[test]
fn field_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let field = random_field(&mut rng, 0.1, 2);
    let mut buf = Vec::new();
    field.write_csv(&mut buf).unwrap();
    let back = FourierField::read_csv(0.1, buf.as_slice()).unwrap();
    assert_eq!(field, back);
}

#[test]
fn a0_of_one_is_chord_length() {
    let w = unit_speed();
    let v = mode_forward_at(&w, 0, &|_| 1.0, 0.6).unwrap();
    assert!((v - 1.6).abs() < 1e-10);
    let jump = one_jump();
    for r0 in [0.3, 0.55, 0.8] {
        let v = mode_forward_at(&jump, 0, &|_| 1.0, r0).unwrap();
        assert!((v - geodesic_length(&jump, r0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn mode_two_matches_chord_integral() {
    let w = unit_speed();
    let spec = GeodesicSpec::new(&w, 0.5, 0.0, 1).unwrap();
    let (direct, _) = path_integral(&w, &spec, &|_, th, _| Complex64::from_polar(1.0, 2.0 * th));
    let modal = mode_forward_at(&w, 2, &|_| cx(1.0, 0.0), 0.5).unwrap();
    assert!((direct - modal).norm() < 1e-5, "{direct} vs {modal}");
}

#[test]
fn attenuation_factors() {
    let w = unit_speed();
    let one = AttenuationProfile::constant(0.05, 1.0).unwrap();
    let e = attenuation_e(&w, &one, 0.6).unwrap();
    assert!((e - 0.8f64.exp()).abs() < 1e-10, "{e}");
    let zero = AttenuationProfile::constant(0.05, 0.0).unwrap();
    assert_eq!(attenuation_e(&w, &zero, 0.4).unwrap(), 1.0);
    assert_eq!(attenuation_lambda(&w, &zero, 0.9, 0.4).unwrap(), 1.0);
    let near = attenuation_lambda(&w, &one, 0.4 + 1e-9, 0.4).unwrap();
    assert!((near - 1.0).abs() < 1e-6);
    assert!(attenuation_lambda(&w, &one, 0.3, 0.4).is_err());
}

#[test]
fn zero_attenuation_is_unattenuated() {
    let w = one_jump();
    let zero = AttenuationProfile::constant(0.05, 0.0).unwrap();
    for k in 0..4 {
        for r0 in [0.2, 0.7] {
            let a = |r: f64| (3.0 * r).sin();
            let plain = mode_forward_at(&w, k, &a, r0).unwrap();
            let att = mode_forward_attenuated_at(&w, &zero, k, &a, r0).unwrap();
            assert!((plain - att).abs() <= 1e-12 * plain.abs().max(1.0));
        }
    }
    let lam = AttenuationProfile::constant(0.05, 0.7).unwrap();
    for r0 in [0.2, 0.5, 0.9] {
        let plain = mode_forward_at(&w, 0, &|r| r, r0).unwrap();
        assert!(mode_forward_attenuated_at(&w, &lam, 0, &|r| r, r0).unwrap() > plain);
    }
}

#[test]
fn attenuated_matches_two_direction_path_integral() {
    let w = unit_speed();
    let lam = AttenuationProfile::from_fn(linspace(0.05, 1.0, 401), |r| r).unwrap();
    let (r0, k) = (0.5, 0);
    let spec = GeodesicSpec::new(&w, r0, 0.0, 1).unwrap();
    let path = trace_geodesic(&w, &spec, 20001).unwrap();
    let s = &path.samples;
    let total = path.total_length;
    // cumulative ∫λ from the start of the path
    let mut cum = vec![0.0; s.len()];
    for i in 1..s.len() {
        cum[i] = cum[i - 1] + 0.5 * (s[i].r + s[i - 1].r) * (s[i].t - s[i - 1].t);
    }
    let full = cum[s.len() - 1];
    let mut both = 0.0;
    for i in 0..s.len() - 1 {
        let weight = |j: usize| (cum[j]).exp() + (full - cum[j]).exp();
        both += 0.5 * (weight(i) + weight(i + 1)) * (s[i + 1].t - s[i].t);
    }
    let _ = total;
    let e = attenuation_e(&w, &lam, r0).unwrap();
    let oracle = both / (2.0 * e);
    let modal = mode_forward_attenuated_at(&w, &lam, k, &|_| 1.0, r0).unwrap();
    assert!((oracle - modal).abs() < 1e-4 * modal.abs(), "{oracle} vs {modal}");
}

#[test]
fn xray_of_one_is_chord_length() {
    let w = unit_speed();
    let field = field_from(0.05, 11, vec![(0, Box::new(|_| cx(1.0, 0.0)))]);
    let spec = GeodesicSpec::new(&w, 0.5, 1.0, 1).unwrap();
    let v = xray_forward(&w, &field, &spec, None).unwrap();
    assert!((v - cx(3f64.sqrt(), 0.0)).norm() < 1e-8);
}

#[test]
fn xray_mode_factorization() {
    let w = one_jump();
    let a = |r: f64| cx(r.cos(), r * r);
    let field = field_from(0.05, 401, vec![(3, Box::new(a))]);
    for (r0, th) in [(0.3, 0.4), (0.8, 2.0)] {
        let spec = GeodesicSpec::new(&w, r0, th, 1).unwrap();
        let x = xray_forward(&w, &field, &spec, None).unwrap();
        let m = mode_forward_at(&w, 3, &|r| field.coefficient(3, r), r0).unwrap();
        assert!((x - m * Complex64::from_polar(1.0, 3.0 * th)).norm() < 1e-10);
    }
}

#[test]
fn xray_odd_field_cancels_at_zero_angle() {
    let w = unit_speed();
    let field = field_from(
        0.05,
        201,
        vec![(2, Box::new(|r| cx(0.0, -0.5 * r))), (-2, Box::new(|r| cx(0.0, 0.5 * r)))],
    );
    let spec = GeodesicSpec::new(&w, 0.4, 0.0, 1).unwrap();
    assert!(xray_forward(&w, &field, &spec, None).unwrap().norm() < 1e-12);
}

#[test]
fn xray_matches_path_sampling_for_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for w in [unit_speed(), one_jump()] {
        let field = random_field(&mut rng, 0.05, 4);
        for _ in 0..3 {
            let r0 = rng.gen_range(0.1..0.95);
            if (r0 - 0.6f64).abs() < 1e-3 {
                continue;
            }
            let th = rng.gen_range(0.0..TAU);
            let spec = GeodesicSpec::new(&w, r0, th, 1).unwrap();
            let (direct, abs) = path_integral(&w, &spec, &|r, t, _| field.eval(r, t));
            let modal = xray_forward(&w, &field, &spec, None).unwrap();
            assert!((direct - modal).norm() <= 1e-4 * abs, "{direct} vs {modal}");
        }
    }
}

#[test]
fn rotation_multiplies_sinograms() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w = one_jump();
    let field = random_field(&mut rng, 0.05, 3);
    let phi = 0.7;
    let rotated = FourierField::new(
        0.05,
        field
            .modes()
            .iter()
            .map(|(&k, a)| (k, a.map(|_, v| v * Complex64::from_polar(1.0, -k as f64 * phi))))
            .collect(),
    )
    .unwrap();
    let a = sinograms(&w, &field, 64, None).unwrap();
    let b = sinograms(&w, &rotated, 64, None).unwrap();
    for (k, s) in &a {
        for (u, v) in s.values.iter().zip(&b[k].values) {
            assert!((u * Complex64::from_polar(1.0, -*k as f64 * phi) - v).norm() < 1e-10);
        }
    }
}

#[test]
fn tip_grid_masks_jump_gap() {
    let w = one_jump();
    let (rho, tips) = tip_grid(&w, 64).unwrap();
    assert_eq!(tips.last().copied().flatten(), Some(1.0));
    let gap = w.rho_gaps()[0];
    for (p, t) in rho.iter().zip(&tips) {
        let inside_gap = *p >= gap.0 && *p <= gap.1;
        assert_eq!(t.is_none(), inside_gap, "ρ = {p}, gap {gap:?}");
    }
    assert!(tips.iter().any(Option::is_none));
}

#[test]
fn sinogram_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let w = one_jump();
    let field = random_field(&mut rng, 0.05, 1);
    let sinos = sinograms(&w, &field, 32, None).unwrap();
    let mut buf = Vec::new();
    write_sinograms_csv(&sinos, &mut buf).unwrap();
    let back = read_sinograms_csv(&w, buf.as_slice()).unwrap();
    for (k, s) in &sinos {
        let kept: Vec<_> = s.samples().collect();
        let read: Vec<_> = back[k].samples().collect();
        assert_eq!(kept.len(), read.len());
        for (a, b) in kept.iter().zip(&read) {
            assert!((a.0 - b.0).abs() < 1e-14 && a.1 == b.1 && a.2 == b.2);
        }
    }
}

#[test]
fn round_trip_euclidean_smooth() {
    let w = unit_speed();
    let truth = field_from(0.05, 2001, vec![(2, Box::new(|r| cx(1.0 - r, 0.0)))]);
    let start = Instant::now();
    let sinos = sinograms(&w, &truth, DEFAULT_TIPS, None).unwrap();
    let got = xray_invert_modes(&w, &sinos, None).unwrap();
    let err = rel_l2(&got, &truth, 0.05, 1.0);
    eprintln!("euclidean round trip: {err:.3e} in {:?}", start.elapsed());
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn round_trip_across_jump() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let w = one_jump();
    let truth = random_field(&mut rng, 0.05, 4);
    let start = Instant::now();
    let sinos = sinograms(&w, &truth, DEFAULT_TIPS, None).unwrap();
    let got = xray_invert_modes(&w, &sinos, None).unwrap();
    let err = rel_l2(&got, &truth, 0.05, 1.0);
    eprintln!("jump round trip: {err:.3e} in {:?}", start.elapsed());
    assert!(err <= 1e-2, "{err}");
}

#[test]
fn round_trip_attenuated() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let lam = AttenuationProfile::from_fn(linspace(0.05, 1.0, 401), |r| r / 2.0).unwrap();
    for w in [unit_speed(), one_jump()] {
        let truth = random_field(&mut rng, 0.05, 4);
        let start = Instant::now();
        let sinos = sinograms(&w, &truth, DEFAULT_TIPS, Some(&lam)).unwrap();
        let got = xray_invert_modes(&w, &sinos, Some(&lam)).unwrap();
        let err = rel_l2(&got, &truth, 0.05, 1.0);
        eprintln!("attenuated round trip: {err:.3e} in {:?}", start.elapsed());
        assert!(err <= 1e-2, "{err}");
    }
}

#[test]
fn support_theorem() {
    let w = unit_speed();
    let bump = |r: f64| if r < 0.5 { (0.5 - r).powi(3) * 8.0 } else { 0.0 };
    let truth = field_from(0.05, 2001, vec![(0, Box::new(move |r| cx(bump(r), 0.0))), (1, Box::new(move |r| cx(0.0, bump(r))))]);
    let sinos = sinograms(&w, &truth, DEFAULT_TIPS, None).unwrap();
    for s in sinos.values() {
        for (_, r0, v) in s.samples() {
            if r0 >= 0.55 {
                assert!(v.norm() <= 1e-8, "r0 = {r0}: {v}");
            }
        }
    }
    let got = xray_invert_modes(&w, &sinos, None).unwrap();
    for (&k, a) in got.modes() {
        for (&r, v) in a.grid().iter().zip(a.values()) {
            if r >= 0.55 {
                assert!(v.norm() <= 1e-6, "k = {k}, r = {r}: {v}");
            }
        }
    }
}

#[test]
fn layer_stripping_is_local() {
    let w = one_jump();
    let outer = |r: f64| cx((1.0 - r) * r, 0.0);
    let a = field_from(0.05, 1201, vec![(1, Box::new(outer))]);
    let b = field_from(0.05, 1201, vec![(1, Box::new(move |r| outer(r) + if r < 0.55 { cx((0.55 - r).powi(2), 0.3) } else { cx(0.0, 0.0) }))]);
    let ra = xray_invert_modes(&w, &sinograms(&w, &a, 256, None).unwrap(), None).unwrap();
    let rb = xray_invert_modes(&w, &sinograms(&w, &b, 256, None).unwrap(), None).unwrap();
    for ((&r, u), v) in ra.grid().iter().zip(ra.mode(1).unwrap().values()).zip(rb.mode(1).unwrap().values()) {
        if r > 0.6 {
            assert!((u - v).norm() <= 1e-8, "r = {r}");
        }
    }
}

#[test]
fn a0_inversion_of_constant() {
    let w = unit_speed();
    let grid = linspace(0.05, 1.0, 801);
    let g = GridFunction::from_fn(grid, |r| 2.0 * (1.0 - r * r).sqrt()).unwrap();
    let f = a0_invert(&w, &g).unwrap();
    for (&r, &v) in f.grid().iter().zip(f.values()) {
        if (0.1..=0.95).contains(&r) {
            assert!((v - 1.0).abs() <= 1e-5, "r = {r}: {v}");
        }
    }
}

#[test]
fn a0_inversion_curved_profile() {
    let w = WaveSpeed::from_layers(0.1, &[(0.1, 1.0, &[2.0, -1.0])]).unwrap();
    let tips = linspace(0.1, 1.0, 801)[1..].to_vec();
    let g = GridFunction::new(
        tips.clone(),
        tips.iter().map(|&r0| mode_forward_at(&w, 0, &|r| r, r0).unwrap()).collect(),
    )
    .unwrap();
    let f = a0_invert(&w, &g).unwrap();
    for (&r, &v) in f.grid().iter().zip(f.values()) {
        if (0.15..=0.95).contains(&r) {
            assert!((v - r).abs() <= 1e-4, "r = {r}: {v}");
        }
    }
}

#[test]
fn a0_inversion_is_linear() {
    let w = unit_speed();
    let grid = linspace(0.05, 1.0, 801)[1..].to_vec();
    let fwd = |f: &dyn Fn(f64) -> f64| {
        GridFunction::new(grid.clone(), grid.iter().map(|&r0| mode_forward_at(&w, 0, f, r0).unwrap()).collect()).unwrap()
    };
    let (f1, f2) = (|r: f64| r * r, |r: f64| (2.0 * r).cos());
    let sum = fwd(&|r| f1(r) + f2(r));
    let got = a0_invert(&w, &sum).unwrap();
    for (&r, &v) in got.grid().iter().zip(got.values()) {
        if (0.1..=0.95).contains(&r) {
            assert!((v - f1(r) - f2(r)).abs() <= 1e-5, "r = {r}");
        }
    }
}

#[test]
fn a0_inversion_across_jump() {
    let w = one_jump();
    let (rho, tips) = tip_grid(&w, DEFAULT_TIPS).unwrap();
    let _ = rho;
    let kept: Vec<f64> = tips.into_iter().flatten().collect();
    let g = GridFunction::new(kept.clone(), kept.iter().map(|&r0| mode_forward_at(&w, 0, &|r| 1.0 + r, r0).unwrap()).collect()).unwrap();
    let f = a0_invert(&w, &g).unwrap();
    let mut worst: f64 = 0.0;
    for (&r, &v) in f.grid().iter().zip(f.values()) {
        if r > 0.1 && r < 0.98 {
            worst = worst.max((v - 1.0 - r).abs());
        }
    }
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn circle_average_recovery() {
    let w = unit_speed();
    let grid = linspace(0.05, 1.0, 801)[1..].to_vec();
    let ones: Vec<(f64, f64)> = grid.iter().map(|&r| (r, 1.0)).collect();
    let f = brt_circle_average(&w, &ones).unwrap();
    for (&r, &v) in f.grid().iter().zip(f.values()) {
        if (0.1..=0.95).contains(&r) {
            assert!((v - 1.0).abs() <= 1e-5, "r = {r}: {v}");
        }
    }
    let data: Vec<(f64, f64)> = grid
        .iter()
        .map(|&r0| {
            if r0 >= 1.0 {
                (r0, 0.0)
            } else {
                (r0, mode_forward_at(&w, 0, &|r| r, r0).unwrap() / geodesic_length(&w, r0).unwrap())
            }
        })
        .collect();
    let f = brt_circle_average(&w, &data).unwrap();
    for (&r, &v) in f.grid().iter().zip(f.values()) {
        if (0.1..=0.95).contains(&r) {
            assert!((v - r).abs() <= 1e-4, "r = {r}: {v}");
        }
    }
}

#[test]
fn pbrt_divisibility() {
    let w = unit_speed();
    let r0 = 0.5;
    assert_eq!(periodic_index(&w, r0).unwrap(), 3);
    let two = field_from(0.05, 401, vec![(2, Box::new(|r| cx(1.0 + r, 0.0)))]);
    assert!(pbrt_forward(&w, &two, r0, 0.3).unwrap().norm() <= 1e-10);
    assert!(pbrt_direct(&w, &two, r0, 0.3, 3).unwrap().norm() <= 1e-10);
    let three = field_from(0.05, 11, vec![(3, Box::new(|_| cx(1.0, 0.0)))]);
    let theta0 = 0.9;
    let expected = Complex64::from_polar(3.0, 3.0 * theta0) * mode_forward_at(&w, 3, &|_| 1.0, r0).unwrap();
    let got = pbrt_forward(&w, &three, r0, theta0).unwrap();
    assert!((got - expected).norm() <= 1e-10);
    assert!((pbrt_direct(&w, &three, r0, theta0, 3).unwrap() - got).norm() <= 1e-10);
    let zero = field_from(0.05, 101, vec![(0, Box::new(|r| cx(r, 0.0)))]);
    for (r0, m) in [(0.5, 3.0), (0.5f64.sqrt(), 4.0)] {
        let expected = m * mode_forward_at(&w, 0, &|r| r, r0).unwrap();
        assert!((pbrt_forward(&w, &zero, r0, 1.0).unwrap() - cx(expected, 0.0)).norm() <= 1e-10);
    }
    assert!(pbrt_forward(&w, &zero, 0.4, 0.0).is_err());
}

#[test]
fn pbrt_rotation_sum_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let w = unit_speed();
    let field = random_field(&mut rng, 0.05, 6);
    for (r0, m) in [(0.5, 3), (0.5f64.sqrt(), 4), ((PI / 5.0).cos(), 5), ((PI / 6.0).cos(), 6)] {
        let th = rng.gen_range(0.0..TAU);
        let closed = pbrt_forward(&w, &field, r0, th).unwrap();
        let direct = pbrt_direct(&w, &field, r0, th, m).unwrap();
        assert!((closed - direct).norm() <= 1e-10, "m = {m}");
    }
}

#[test]
fn broken_ray_average_kills_mode_one() {
    let w = unit_speed();
    let field = field_from(0.05, 401, vec![(0, Box::new(|_| cx(1.0, 0.0))), (1, Box::new(|r| cx(r, 0.5)))]);
    for r0 in [0.5, 0.5f64.sqrt()] {
        let m = periodic_index(&w, r0).unwrap();
        let avg = pbrt_forward(&w, &field, r0, 0.2).unwrap() / (m as f64 * geodesic_length(&w, r0).unwrap());
        assert!((avg - cx(1.0, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn planar_average_values() {
    let w = unit_speed();
    let one = field_from(0.05, 11, vec![(0, Box::new(|_| cx(1.0, 0.0)))]);
    assert!((planar_average(&w, &one, 0.6).unwrap() - cx(1.6, 0.0)).norm() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let jump = one_jump();
    let field = random_field(&mut rng, 0.05, 3);
    for r in [0.3, 0.8] {
        let n = 256;
        let mean: Complex64 = (0..n)
            .map(|j| {
                let spec = GeodesicSpec::new(&jump, r, TAU * j as f64 / n as f64, 1).unwrap();
                xray_forward(&jump, &field, &spec, None).unwrap()
            })
            .sum::<Complex64>()
            / n as f64;
        assert!((planar_average(&jump, &field, r).unwrap() - mean).norm() < 1e-6);
    }
}

#[test]
fn invert_rejects_mismatched_grids() {
    let w = unit_speed();
    let mut sinos = BTreeMap::new();
    let field = field_from(0.05, 11, vec![(0, Box::new(|_| cx(1.0, 0.0)))]);
    let a = sinograms(&w, &field, 32, None).unwrap().remove(&0).unwrap();
    let mut b = sinograms(&w, &field, 40, None).unwrap().remove(&0).unwrap();
    b.k = 1;
    sinos.insert(0, a);
    sinos.insert(1, b);
    assert!(xray_invert_modes(&w, &sinos, None).is_err());
    assert!(xray_invert_modes(&w, &BTreeMap::new(), None).is_err());
}

#[test]
fn quadrature_tip_weights_are_positive() {
    let q = RayQuadrature::new(&one_jump(), 0.3).unwrap();
    assert!(q.weights().iter().all(|&w| w > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_is_linear(k in 0i32..5, r0 in 0.1f64..0.95, s in -3.0f64..3.0) {
        let w = one_jump();
        prop_assume!((r0 - 0.6).abs() > 1e-3);
        let f = |r: f64| r.sin();
        let g = |r: f64| r * r;
        let lhs = mode_forward_at(&w, k, &|r| f(r) + s * g(r), r0).unwrap();
        let rhs = mode_forward_at(&w, k, &f, r0).unwrap() + s * mode_forward_at(&w, k, &g, r0).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn chebyshev_bound_on_forward(k in 0i32..6, r0 in 0.1f64..0.95) {
        let w = unit_speed();
        let v = mode_forward_at(&w, k, &|_| 1.0, r0).unwrap();
        prop_assert!(v.abs() <= geodesic_length(&w, r0).unwrap() + 1e-12);
    }
}
