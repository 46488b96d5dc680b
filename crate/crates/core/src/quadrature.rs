//! Gauss rules, a cumulative (indefinite) integration matrix and an adaptive
//! composite integrator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Nodes and weights on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

const MAX_CACHED_ORDER: usize = 256;

fn legendre_cache() -> &'static [OnceLock<Rule>] {
    static CACHE: OnceLock<Vec<OnceLock<Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| (0..=MAX_CACHED_ORDER).map(|_| OnceLock::new()).collect())
}

/// Legendre polynomial P_n and its derivative at `x`.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        let nf = n as f64;
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

fn compute_gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule with `n` nodes (cached for n ≤ 256).
pub fn gauss_legendre(n: usize) -> &'static Rule {
    assert!((1..=MAX_CACHED_ORDER).contains(&n), "Gauss–Legendre order {n} not supported");
    legendre_cache()[n].get_or_init(|| compute_gauss_legendre(n))
}

/// Gauss–Jacobi rule for the weight (1−t)^a (1+t)^b on [-1, 1], a, b > −1,
/// computed by the Golub–Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, u64), Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(rule) = cache.lock().unwrap().get(&key) {
        return rule.clone();
    }
    let rule = Arc::new(compute_gauss_jacobi(n, a, b));
    cache.lock().unwrap().insert(key, rule.clone());
    rule
}

fn compute_gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(a > -1.0 && b > -1.0 && n >= 1);
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let s = 2.0 * m + ab;
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Nodes `s` in (0,1) and weights for ∫_0^1 s^p (1−s)^q F(s) ds.
pub fn jacobi_unit(n: usize, p: f64, q: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_jacobi(n, q, p);
    let scale = 2f64.powf(-(p + q + 1.0));
    let nodes = rule.nodes.iter().map(|t| 0.5 * (1.0 + t)).collect();
    let weights = rule.weights.iter().map(|w| w * scale).collect();
    (nodes, weights)
}

/// Cumulative integration matrix for the n-point Gauss–Legendre rule:
/// `S[i][j] = ∫_{-1}^{x_i} ℓ_j(t) dt` with ℓ_j the Lagrange basis on the nodes.
pub fn cumulative_matrix(n: usize) -> &'static [Vec<f64>] {
    static CACHE: OnceLock<Vec<OnceLock<Vec<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_CACHED_ORDER).map(|_| OnceLock::new()).collect());
    cache[n].get_or_init(|| {
        let rule = gauss_legendre(n);
        let legendre_all = |x: f64| {
            let mut p = vec![0.0; n + 1];
            p[0] = 1.0;
            if n >= 1 {
                p[1] = x;
            }
            for k in 2..=n {
                let kf = k as f64;
                p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
            }
            p
        };
        let at_nodes: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre_all(x)).collect();
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            let pi = &at_nodes[i];
            let xi = rule.nodes[i];
            for j in 0..n {
                let pj = &at_nodes[j];
                let mut acc = 0.5 * (xi + 1.0);
                for m in 1..n {
                    acc += 0.5 * pj[m] * (pi[m + 1] - pi[m - 1]);
                }
                s[i][j] = rule.weights[j] * acc;
            }
        }
        s
    })
}

/// Adaptive composite Gauss–Legendre integration: panels are bisected until
/// the 10- and 20-point estimates agree to `rel_tol` (or `abs_tol`).
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let coarse = gauss_legendre(10);
    let fine = gauss_legendre(20);
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut panels = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let i20 = fine.integrate(lo, hi, &mut f);
        let i10 = coarse.integrate(lo, hi, &mut f);
        panels += 1;
        let err = (i20 - i10).abs();
        if err <= rel_tol * i20.abs() || err <= abs_tol || depth >= 60 {
            total += i20;
            continue;
        }
        if panels + stack.len() >= max_panels {
            return Err(Error::QuadratureFailure(format!(
                "adaptive refinement on [{a}, {b}] exceeded {max_panels} panels"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    Ok(total)
}
