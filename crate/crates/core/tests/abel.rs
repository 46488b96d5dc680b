use std::f64::consts::PI;

use proptest::prelude::*;
use raytomo::abel::{
    abel_forward, c_alpha, compose_j, invert_classical, invert_factored, invert_neumann, KernelSpec,
};
use raytomo::grid::{linspace, GridFunction};

/// Adaptive Gauss–Kronrod (7/15) used as an independent reference quadrature.
fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = WK[7] * f(c);
    let mut gauss = WG[3] * f(c);
    for i in 0..7 {
        let v = f(c - h * XK[i]) + f(c + h * XK[i]);
        kron += WK[i] * v;
        if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }
    kron *= h;
    gauss *= h;
    if (kron - gauss).abs() <= tol || depth == 0 {
        kron
    } else {
        gauss_kronrod(f, a, c, tol / 2.0, depth - 1) + gauss_kronrod(f, c, b, tol / 2.0, depth - 1)
    }
}

fn l2_rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn forward_matches_kronrod_reference() {
    let alpha = 1.0 / 3.0;
    let k = KernelSpec::new(alpha, |_, y| 1.0 + y).unwrap();
    let x = 0.2;
    let got = abel_forward(&k, |y| y * y, x).unwrap();
    // substituted integrand y = x + t^{3/2}
    let p = 1.0 / (1.0 - alpha);
    let integrand = |t: f64| {
        let y = x + t.powf(p);
        (1.0 + y) * y * y * p
    };
    let reference = gauss_kronrod(&integrand, 0.0, (1.0 - x).powf(1.0 - alpha), 1e-14, 40);
    assert!((got - reference).abs() < 1e-9, "{got} vs {reference}");
}

#[test]
fn classical_round_trips() {
    let alpha = 0.5;
    let k = KernelSpec::new(alpha, |_, _| 1.0).unwrap();
    let grid = linspace(0.0, 1.0, 401);
    let cases: Vec<(&str, fn(f64) -> f64)> =
        vec![("one", |_| 1.0), ("x", |x| x), ("cos3x", |x| (3.0 * x).cos())];
    for (name, f) in cases {
        let g = GridFunction::from_fn(grid.clone(), |x| abel_forward(&k, f, x).unwrap()).unwrap();
        let rec = invert_classical(alpha, &g).unwrap();
        let (got, want): (Vec<f64>, Vec<f64>) = rec
            .grid()
            .iter()
            .zip(rec.values())
            .filter(|(x, _)| **x <= 0.99)
            .map(|(x, v)| (*v, f(*x)))
            .unzip();
        let sup = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup <= 1e-6, "{name}: sup error {sup}");
        assert!(l2_rel(&got, &want) <= 1e-6, "{name}");
    }
}

#[test]
fn factored_round_trips() {
    let alpha = 0.5;
    let grid = linspace(0.0, 1.0, 401);
    let one = GridFunction::from_fn(grid.clone(), |_| 1.0).unwrap();

    // a ≡ 1, b ≡ 1 reduces to the classical inversion
    let g = GridFunction::from_fn(grid.clone(), |x| 2.0 * (1.0 - x).sqrt()).unwrap();
    let a = invert_factored(alpha, &one, &one, &g).unwrap();
    let b = invert_classical(alpha, &g).unwrap();
    assert_eq!(a.values(), b.values());

    // a(x) = 1 + x, b ≡ 1, f = x²
    let k = KernelSpec::new(alpha, |x, _| 1.0 + x).unwrap();
    let g = GridFunction::from_fn(grid.clone(), |x| abel_forward(&k, |y| y * y, x).unwrap()).unwrap();
    let a_fn = GridFunction::from_fn(grid.clone(), |x| 1.0 + x).unwrap();
    let rec = invert_factored(alpha, &a_fn, &one, &g).unwrap();
    let want: Vec<f64> = rec.grid().iter().map(|x| x * x).collect();
    assert!(l2_rel(rec.values(), &want) <= 1e-6);

    // a ≡ 1, b(y) = e^y, f ≡ 1
    let k = KernelSpec::new(alpha, |_, y: f64| y.exp()).unwrap();
    let g = GridFunction::from_fn(grid.clone(), |x| abel_forward(&k, |_| 1.0, x).unwrap()).unwrap();
    let b_fn = GridFunction::from_fn(grid.clone(), |y: f64| y.exp()).unwrap();
    let rec = invert_factored(alpha, &one, &b_fn, &g).unwrap();
    for (x, v) in rec.grid().iter().zip(rec.values()) {
        if *x <= 0.99 {
            assert!((v - 1.0).abs() <= 1e-6, "x = {x}: {v}");
        }
    }
}

#[test]
fn neumann_constant_kernel_agrees_with_classical() {
    let grid = linspace(0.0, 1.0, 201);
    let k = KernelSpec::new(0.5, |_, _| 1.0).unwrap();
    let g = GridFunction::from_fn(grid, |x| abel_forward(&k, |y| (3.0 * y).cos(), x).unwrap()).unwrap();
    let a = invert_neumann(&k, &g, 0.0).unwrap();
    let b = invert_classical(0.5, &g).unwrap();
    let diff = a.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-8, "{diff}");
}

#[test]
fn neumann_recovers_cos3x_for_perturbed_kernel() {
    let k = KernelSpec::new(0.5, |x, y| 1.0 + 0.5 * (y - x)).unwrap();
    let grid = linspace(0.0, 1.0, 201);
    let g = GridFunction::from_fn(grid, |x| abel_forward(&k, |y| (3.0 * y).cos(), x).unwrap()).unwrap();
    let rec = invert_neumann(&k, &g, 0.0).unwrap();
    let (got, want): (Vec<f64>, Vec<f64>) = rec
        .grid()
        .iter()
        .zip(rec.values())
        .filter(|(x, _)| **x >= 0.1)
        .map(|(x, v)| (*v, (3.0 * x).cos()))
        .unzip();
    let err = l2_rel(&got, &want);
    assert!(err <= 1e-4, "{err}");
}

#[test]
fn neumann_preserves_support() {
    let k = KernelSpec::new(0.5, |x, y| 1.0 + 0.5 * (y - x)).unwrap();
    let f = |y: f64| if y < 0.6 { (0.6 - y).powi(2) } else { 0.0 };
    let grid = linspace(0.0, 1.0, 201);
    let g = GridFunction::from_fn(grid, |x| abel_forward(&k, f, x).unwrap()).unwrap();
    let rec = invert_neumann(&k, &g, 0.0).unwrap();
    for (x, v) in rec.grid().iter().zip(rec.values()) {
        if *x >= 0.65 {
            assert!(v.abs() <= 1e-8, "x = {x}: {v}");
        }
    }
}

#[test]
fn neumann_with_exponent_zero() {
    // α = 0: Volterra equation of the first kind with K(x,x) ≠ 0
    let k = KernelSpec::new(0.0, |x, y| 2.0 + x * y).unwrap();
    let grid = linspace(0.0, 1.0, 201);
    let g = GridFunction::from_fn(grid, |x| abel_forward(&k, |y| 1.0 + y * y, x).unwrap()).unwrap();
    let rec = invert_neumann(&k, &g, 0.0).unwrap();
    let want: Vec<f64> = rec.grid().iter().map(|y| 1.0 + y * y).collect();
    assert!(l2_rel(rec.values(), &want) <= 1e-6);
}

#[test]
fn j_bounds_hold() {
    for alpha in [0.25, 0.5, 0.75] {
        let k = KernelSpec::new(alpha, |x, y| 1.0 + (2.0 * x).sin() * y).unwrap();
        let c = c_alpha(alpha).unwrap();
        let n = 24;
        let pts = linspace(0.0, 1.0, n + 1);
        for j in 1..=n {
            let y = pts[j];
            let mut prev: Option<(f64, f64)> = None;
            for &x in &pts[..j] {
                let v = compose_j(&k, x, y).unwrap();
                assert!(v.abs() <= c * k.sup_k() + 1e-9);
                if let Some((px, pv)) = prev {
                    assert!((v - pv).abs() / (x - px) <= c * k.lip1_k() + 1e-6);
                }
                prev = Some((x, v));
            }
        }
    }
}

#[test]
fn forward_vanishes_above_support() {
    let k = KernelSpec::new(0.4, |x, y| 1.0 + x + y).unwrap();
    let f = |y: f64| if y < 0.5 { 1.0 - y } else { 0.0 };
    for x in linspace(0.5, 1.0, 11) {
        assert_eq!(abel_forward(&k, f, x).unwrap(), 0.0);
    }
}

#[test]
fn forward_is_holder_near_top() {
    for alpha in [0.25, 0.5, 0.75] {
        let k = KernelSpec::new(alpha, |x, y| 2.0 + (x * y).cos()).unwrap();
        let bound = k.sup_k() * 1.0 / (1.0 - alpha);
        let fine = linspace(0.9, 1.0, 101);
        let vals: Vec<f64> = fine.iter().map(|&x| abel_forward(&k, |y| 1.0 + y, x).unwrap()).collect();
        for i in 0..fine.len() {
            for j in (i + 1)..fine.len() {
                let dx = fine[j] - fine[i];
                // |g| grows like (1 − x)^{1−α}; the increment obeys the same Hölder modulus
                let ratio = (vals[j] - vals[i]).abs() / dx.powf(1.0 - alpha);
                assert!(ratio <= 2.0 * bound * 2.0 + 1e-9, "alpha {alpha}: {ratio}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn composition_through_j_kernel(
        a in 0.5f64..2.0, b in -0.5f64..0.5, c in -0.5f64..0.5, d in -0.5f64..0.5,
        alpha in 0.2f64..0.8, fa in -1.0f64..1.0, fb in 0.5f64..3.0,
    ) {
        let kfun = move |x: f64, y: f64| a + b * x + c * y + d * (3.0 * x * y).sin();
        let k = KernelSpec::new(alpha, kfun).unwrap();
        let kj = k.clone();
        let ca = c_alpha(alpha).unwrap();
        let jker = KernelSpec::new(0.0, move |x, y| {
            if y - x < 1e-14 { ca * kfun(y, y) } else { compose_j(&kj, x, y).unwrap() }
        }).unwrap();
        let outer = KernelSpec::new(1.0 - alpha, |_, _| 1.0).unwrap();
        let f = move |y: f64| fa + (fb * y).cos();
        for x in linspace(0.0, 0.98, 50) {
            let lhs = abel_forward(&jker, f, x).unwrap();
            let rhs = abel_forward(&outer, |y| abel_forward(&k, f, y).unwrap(), x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-7, "x = {}: {} vs {}", x, lhs, rhs);
        }
    }

    #[test]
    fn forward_is_linear(s in -3.0f64..3.0, t in -3.0f64..3.0, x in 0.0f64..1.0, alpha in 0.0f64..0.9) {
        let k = KernelSpec::new(alpha, |x, y| 1.0 + x * y).unwrap();
        let f = |y: f64| y.sin();
        let g = |y: f64| 1.0 - y * y;
        let lhs = abel_forward(&k, |y| s * f(y) + t * g(y), x).unwrap();
        let rhs = s * abel_forward(&k, f, x).unwrap() + t * abel_forward(&k, g, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}

#[test]
fn constant_kernel_j_is_c_alpha() {
    let k = KernelSpec::new(0.5, |_, _| 1.0).unwrap();
    for (x, y) in [(0.0, 1.0), (0.3, 0.31), (0.9, 1.0)] {
        assert!((compose_j(&k, x, y).unwrap() - PI).abs() < 1e-12);
    }
}
