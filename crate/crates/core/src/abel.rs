//! Generalized Abel transforms
//! I^α_K f(x) = ∫_x^top (y − x)^{−α} K(x, y) f(y) dy
//! and their inversion (classical, factored kernel, Neumann layer stripping).

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{derivative, derivative_within, interpolation_weights, GridFunction};
use crate::quadrature::{adaptive, gauss_legendre, jacobi_unit};

pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const PANEL_REL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 20_000;
const JACOBI_NODES: usize = 32;
const NEUMANN_TOL: f64 = 1e-10;
const NEUMANN_MAX_TERMS: usize = 200;
const MIN_LAYER_WIDTH: f64 = 1e-3;

/// A kernel K on the triangle lo ≤ x ≤ y ≤ top together with the exponent α
/// and the bounds used by the Neumann inversion.
#[derive(Clone)]
pub struct KernelSpec {
    alpha: f64,
    kernel: KernelFn,
    partial_x: Option<KernelFn>,
    sup_k: f64,
    lip1_k: f64,
    diag_min: f64,
    breakpoints: Vec<f64>,
    lo: f64,
    top: f64,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("alpha", &self.alpha)
            .field("sup_k", &self.sup_k)
            .field("lip1_k", &self.lip1_k)
            .field("diag_min", &self.diag_min)
            .field("breakpoints", &self.breakpoints)
            .field("domain", &(self.lo, self.top))
            .finish()
    }
}

/// Sampled bounds of a kernel on a triangle.
#[derive(Debug, Clone, Copy)]
struct SampledBounds {
    sup: f64,
    lip1: f64,
    diag_min: f64,
}

fn sample_bounds(k: &dyn Fn(f64, f64) -> f64, lo: f64, top: f64, n: usize) -> SampledBounds {
    let pts: Vec<f64> = (0..=n).map(|i| lo + (top - lo) * i as f64 / n as f64).collect();
    let mut sup: f64 = 0.0;
    let mut lip1: f64 = 0.0;
    let mut diag_min = f64::INFINITY;
    for (j, &y) in pts.iter().enumerate() {
        let mut prev: Option<(f64, f64)> = None;
        for &x in &pts[..=j] {
            let v = k(x, y);
            sup = sup.max(v.abs());
            if let Some((px, pv)) = prev {
                lip1 = lip1.max((v - pv).abs() / (x - px));
            }
            prev = Some((x, v));
        }
        diag_min = diag_min.min(k(y, y).abs());
    }
    SampledBounds { sup, lip1, diag_min }
}

impl KernelSpec {
    /// Kernel on the unit triangle with bounds estimated by sampling.
    pub fn new(alpha: f64, kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::on_domain(alpha, kernel, 0.0, 1.0)
    }

    /// Kernel on lo ≤ x ≤ y ≤ top.
    pub fn on_domain(
        alpha: f64,
        kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        top: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::OutOfDomain { value: alpha, domain: "[0, 1)".into() });
        }
        if !(top > lo) {
            return Err(Error::InvalidInput(format!("empty kernel domain [{lo}, {top}]")));
        }
        let kernel: KernelFn = Arc::new(kernel);
        let b = sample_bounds(kernel.as_ref(), lo, top, 64);
        if !b.sup.is_finite() {
            return Err(Error::InvalidInput("kernel is not finite on its domain".into()));
        }
        Ok(KernelSpec {
            alpha,
            kernel,
            partial_x: None,
            sup_k: b.sup,
            lip1_k: b.lip1 * 1.05,
            diag_min: b.diag_min,
            breakpoints: Vec::new(),
            lo,
            top,
        })
    }

    /// Declares explicit bounds; the sup bound must dominate sampled values.
    pub fn with_bounds(mut self, sup_k: f64, lip1_k: f64, diag_min: f64) -> Result<Self> {
        let b = sample_bounds(self.kernel.as_ref(), self.lo, self.top, 64);
        if b.sup > sup_k + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "declared sup_K {sup_k} is below the sampled sup {}",
                b.sup
            )));
        }
        self.sup_k = sup_k;
        self.lip1_k = lip1_k;
        self.diag_min = diag_min;
        Ok(self)
    }

    /// Supplies ∂K/∂x analytically instead of by finite differences.
    pub fn with_partial_x(mut self, d1: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.partial_x = Some(Arc::new(d1));
        self
    }

    /// Points in y where K(x, ·) may fail to be smooth.
    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        self.breakpoints = breakpoints;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sup_k(&self) -> f64 {
        self.sup_k
    }

    pub fn lip1_k(&self) -> f64 {
        self.lip1_k
    }

    pub fn diag_min(&self) -> f64 {
        self.diag_min
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.top)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.kernel)(x, y)
    }

    /// ∂K/∂x at (z, y), by the supplied callback or a fourth-order stencil
    /// that stays inside the triangle.
    pub fn partial_x(&self, z: f64, y: f64) -> f64 {
        if let Some(d1) = &self.partial_x {
            return d1(z, y);
        }
        let k = &self.kernel;
        let span = y - self.lo;
        let h = (1e-4 * (self.top - self.lo)).min(span / 4.0);
        if h <= 1e-9 * (self.top - self.lo) {
            // degenerate corner: evaluate with the first argument clamped into the triangle
            let h = 1e-4 * (self.top - self.lo);
            return crate::grid::derivative(|t| k(t.clamp(self.lo, y), y), z, h, 0);
        }
        derivative_within(|t| k(t, y), z, h, self.lo, y)
    }

    /// Same kernel with α replaced (bounds unchanged).
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::OutOfDomain { value: alpha, domain: "[0, 1)".into() });
        }
        let mut k = self.clone();
        k.alpha = alpha;
        Ok(k)
    }
}

/// c_α = π / sin(απ), the value of J^α_1 off the diagonal.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain { value: alpha, domain: "(0, 1)".into() });
    }
    Ok(PI / (alpha * PI).sin())
}

/// I^α_K f(x), computed after the substitution y = x + t^{1/(1−α)}, which
/// turns the endpoint singularity into a smooth factor.
pub fn abel_forward(k: &KernelSpec, f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let (lo, top) = k.domain();
    if !(x >= lo - 1e-15 && x <= top) {
        return Err(Error::OutOfDomain { value: x, domain: format!("[{lo}, {top}]") });
    }
    if x >= top {
        return Ok(0.0);
    }
    let alpha = k.alpha;
    let power = 1.0 / (1.0 - alpha);
    let integrand = |t: f64| {
        let y = (x + t.powf(power)).min(top);
        k.eval(x, y) * f(y) * power
    };
    let mut cuts = vec![0.0];
    for &b in &k.breakpoints {
        if b > x && b < top {
            cuts.push((b - x).powf(1.0 - alpha));
        }
    }
    cuts.push((top - x).powf(1.0 - alpha));
    let scale = k.sup_k.max(1e-300) * (top - x).powf(1.0 - alpha);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive(integrand, w[0], w[1], PANEL_REL_TOL, 1e-15 * scale, MAX_PANELS)?;
    }
    Ok(total)
}

/// J^α_K(x, y) = ∫_x^y (z − x)^{α−1} (y − z)^{−α} K(z, y) dz by Gauss–Jacobi
/// quadrature matched to both endpoint singularities.
pub fn compose_j(k: &KernelSpec, x: f64, y: f64) -> Result<f64> {
    let alpha = k.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain { value: alpha, domain: "(0, 1)".into() });
    }
    if !(x < y) {
        return Err(Error::InvalidInput(format!("compose_j needs x < y, got x = {x}, y = {y}")));
    }
    let eval = |n: usize| {
        let (s, w) = jacobi_unit(n, alpha - 1.0, -alpha);
        s.iter().zip(&w).map(|(s, w)| w * k.eval(x + (y - x) * s, y)).sum::<f64>()
    };
    let fine = eval(JACOBI_NODES + 16);
    let coarse = eval(JACOBI_NODES);
    if !fine.is_finite() || (fine - coarse).abs() > 1e-7 * fine.abs().max(k.sup_k) {
        return Err(Error::QuadratureFailure(format!(
            "Gauss–Jacobi estimates of J({x}, {y}) disagree: {coarse} vs {fine}"
        )));
    }
    Ok(fine)
}

/// ∂J^α_K/∂x (x, y) = ∫_0^1 s^{α−1}(1−s)^{1−α} ∂_1K(x + (y − x)s, y) ds; for
/// α = 0 this is ∂_1K(x, y).
fn partial_x_j(k: &KernelSpec, x: f64, y: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    if k.alpha == 0.0 {
        return k.partial_x(x, y);
    }
    let (s, w) = nodes;
    s.iter().zip(w).map(|(s, w)| w * k.partial_x(x + (y - x) * s, y)).sum()
}

/// Data of the form g(y) = (top − y)^β G(y) with G smooth, stored through G.
/// Abel-transformed data vanish at the top endpoint like (top − y)^{1−α};
/// interpolating G instead of g keeps full interpolation accuracy there.
#[derive(Debug, Clone)]
pub struct EndpointFactored {
    pub top: f64,
    pub beta: f64,
    pub smooth: GridFunction,
}

impl EndpointFactored {
    /// Divides samples of g by (top − y)^β; the node at `top` is dropped
    /// (its value follows by extrapolation).
    pub fn from_samples(g: &GridFunction, beta: f64, top: f64) -> Result<Self> {
        let scale = g.max_abs().max(1e-300);
        let mut grid = Vec::with_capacity(g.len());
        let mut vals = Vec::with_capacity(g.len());
        for (&y, &v) in g.grid().iter().zip(g.values()) {
            let d = top - y;
            if d <= 1e-14 * (top - g.lo()) {
                if v.abs() > 1e-8 * scale {
                    return Err(Error::DomainMismatch(format!(
                        "data must vanish at the top endpoint {top}, found {v}"
                    )));
                }
                continue;
            }
            grid.push(y);
            vals.push(v / d.powf(beta));
        }
        Ok(EndpointFactored { top, beta, smooth: GridFunction::new(grid, vals)? })
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.top - y).max(0.0).powf(self.beta) * self.smooth.eval(y)
    }

    /// ∫_x^top (y − x)^{−γ} g(y) dy for γ < 1, by Gauss–Jacobi in s = (y − x)/(top − x).
    pub fn fractional_integral(&self, gamma: f64, x: f64) -> f64 {
        let len = self.top - x;
        if len <= 0.0 {
            return 0.0;
        }
        let (s, w) = jacobi_unit(48, -gamma, self.beta);
        let inner: f64 = s.iter().zip(&w).map(|(s, w)| w * self.smooth.eval(x + len * s)).sum();
        len.powf(1.0 - gamma + self.beta) * inner
    }
}

fn local_step(grid: &[f64], i: usize) -> f64 {
    let left = if i > 0 { grid[i] - grid[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < grid.len() { grid[i + 1] - grid[i] } else { f64::INFINITY };
    0.25 * left.min(right)
}

/// Derivative of the smooth function `h` at every node, with stencils refined
/// 4× relative to the grid. Stencils point forward wherever they fit, so the
/// value at a node only sees h on [x, top].
fn node_derivatives(grid: &[f64], top: f64, h: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let step = local_step(grid, i);
            let side = if grid[i] + 4.0 * step <= top { 1 } else { -1 };
            derivative(&h, grid[i], step, side)
        })
        .collect()
}

fn check_top(g: &GridFunction, top: f64) -> Result<()> {
    if (g.hi() - top).abs() > 1e-12 {
        return Err(Error::DomainMismatch(format!(
            "data grid ends at {} but the transform domain ends at {top}",
            g.hi()
        )));
    }
    Ok(())
}

/// Inverts I^α_1 (K ≡ 1): f = −c_α⁻¹ d/dx I^{1−α}_1 g.
pub fn invert_classical(alpha: f64, g: &GridFunction) -> Result<GridFunction> {
    let c = c_alpha(alpha)?;
    check_top(g, 1.0)?;
    let data = EndpointFactored::from_samples(g, 1.0 - alpha, 1.0)?;
    let h = |x: f64| data.fractional_integral(1.0 - alpha, x);
    let hp = node_derivatives(g.grid(), 1.0, h);
    let f = GridFunction::new(g.grid().to_vec(), hp.iter().map(|d| -d / c).collect())?;
    let residual = composition_residual(&f, c, &h);
    if residual > 1e-8 * f.max_abs().max(1.0) {
        log::warn!("classical Abel inversion: composition identity residual {residual:.3e}");
    }
    Ok(f)
}

/// max_i |c ∫_{x_i}^top f − h(x_i)|, the defect of I^{1−α}I^α f = c_α ∫ f.
pub fn composition_residual(f: &GridFunction, c: f64, h: &dyn Fn(f64) -> f64) -> f64 {
    let top = f.hi();
    let rule = gauss_legendre(16);
    let grid = f.grid();
    let mut tail = 0.0;
    let mut worst: f64 = 0.0;
    for i in (0..grid.len()).rev() {
        if i + 1 < grid.len() {
            tail += rule.integrate(grid[i], grid[i + 1], |y| f.eval(y));
        }
        if grid[i] < top {
            worst = worst.max((c * tail - h(grid[i])).abs());
        }
    }
    worst
}

/// Inverts I^α_K for K(x, y) = a(x) b(y): f = −b⁻¹ c_α⁻¹ d/dx I^{1−α}_1 (g / a).
pub fn invert_factored(
    alpha: f64,
    a: &GridFunction,
    b: &GridFunction,
    g: &GridFunction,
) -> Result<GridFunction> {
    for (x, v) in a.grid().iter().zip(a.values()).chain(b.grid().iter().zip(b.values())) {
        if v.abs() < 1e-12 {
            return Err(Error::DivisionByZero(*x));
        }
    }
    for &x in g.grid() {
        if a.eval(x).abs() < 1e-12 || b.eval(x).abs() < 1e-12 {
            return Err(Error::DivisionByZero(x));
        }
    }
    let scaled = g.map(|x, v| v / a.eval(x));
    let inner = invert_classical(alpha, &scaled)?;
    Ok(inner.map(|x, v| v / b.eval(x)))
}

/// Inverts I^α_K by layer stripping from the top: on each layer the equation
/// D I^{1−α}_1 I^α_K f = D I^{1−α}_1 g is a second-kind equation
/// −c K(x,x) f(x) + ∫_x^top ∂_xJ^α_K(x,y) f(y) dy = h′(x), solved by Neumann
/// iteration around −c C with C = K at the layer's upper diagonal corner.
/// Returns f on the grid nodes in [r_stop, top].
pub fn invert_neumann(k: &KernelSpec, g: &GridFunction, r_stop: f64) -> Result<GridFunction> {
    let (_, top) = k.domain();
    check_top(g, top)?;
    let data = EndpointFactored::from_samples(g, 1.0 - k.alpha, top)?;
    invert_neumann_factored(k, &data, g.grid(), r_stop)
}

/// As [`invert_neumann`], with the data already in endpoint-factored form and
/// the solution nodes given explicitly (ascending, ending at the top).
pub fn invert_neumann_factored(
    k: &KernelSpec,
    data: &EndpointFactored,
    nodes: &[f64],
    r_stop: f64,
) -> Result<GridFunction> {
    Ok(invert_neumann_many(k, std::slice::from_ref(data), nodes, r_stop)?.remove(0))
}

/// Solves I^α_K f = g for several data sets sharing one kernel; the
/// quadrature of ∂_xJ is built once.
pub fn invert_neumann_many(
    k: &KernelSpec,
    data: &[EndpointFactored],
    nodes: &[f64],
    r_stop: f64,
) -> Result<Vec<GridFunction>> {
    let (lo_dom, top) = k.domain();
    let last = nodes.last().copied().unwrap_or(f64::NAN);
    if (last - top).abs() > 1e-12 || data.iter().any(|d| (d.top - top).abs() > 1e-12) {
        return Err(Error::DomainMismatch("solution grid must end at the kernel's top".into()));
    }
    let start = nodes.partition_point(|&x| x < r_stop - 1e-14);
    let nodes: Vec<f64> = nodes[start..].to_vec();
    if nodes.len() < 2 {
        return Err(Error::DomainMismatch(format!("fewer than two nodes in [{r_stop}, {top}]")));
    }
    if nodes[0] < lo_dom - 1e-12 {
        return Err(Error::DomainMismatch(format!("node {} below kernel domain", nodes[0])));
    }
    let alpha = k.alpha;
    let c = if alpha > 0.0 { c_alpha(alpha)? } else { 1.0 };
    let hps: Vec<Vec<f64>> = data
        .iter()
        .map(|d| {
            if alpha > 0.0 {
                node_derivatives(&nodes, top, |x| d.fractional_integral(1.0 - alpha, x))
            } else {
                node_derivatives(&nodes, top, |x| d.eval(x))
            }
        })
        .collect();
    let solutions = neumann_core(k, c, &nodes, &hps)?;
    solutions.into_iter().map(|f| GridFunction::new(nodes.clone(), f)).collect()
}

struct Row {
    ys: Vec<f64>,
    weighted_p: Vec<f64>,
}

fn neumann_core(k: &KernelSpec, c: f64, nodes: &[f64], hps: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = nodes.len();
    let top = nodes[n - 1];
    let jac = if k.alpha > 0.0 {
        jacobi_unit(JACOBI_NODES, k.alpha - 1.0, 1.0 - k.alpha)
    } else {
        (Vec::new(), Vec::new())
    };
    let rule = gauss_legendre(16);
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = nodes[i];
            let len = top - x;
            let panels = if len > 0.0 { (len / 0.125).ceil().max(1.0) as usize } else { 0 };
            let mut ys = Vec::with_capacity(panels * rule.len());
            let mut weighted_p = Vec::with_capacity(panels * rule.len());
            for p in 0..panels {
                let a = x + len * p as f64 / panels as f64;
                let b = x + len * (p + 1) as f64 / panels as f64;
                for (y, w) in rule.mapped(a, b) {
                    ys.push(y);
                    weighted_p.push(w * partial_x_j(k, x, y, &jac));
                }
            }
            Row { ys, weighted_p }
        })
        .collect();
    let diag: Vec<f64> = nodes.iter().map(|&x| k.eval(x, x)).collect();

    let mut fs = vec![vec![0.0; n]; hps.len()];
    let mut hi_idx = n; // nodes with index >= hi_idx are solved
    let mut hi = top;
    while hi_idx > 0 {
        let cc = k.eval(hi, hi);
        if cc.abs() < 1e-300 {
            return Err(Error::IllConditioned(format!("kernel vanishes on the diagonal at {hi}")));
        }
        let remaining = hi - nodes[0];
        let width = layer_width(k, hi, cc, remaining)?;
        let lo = if width >= remaining { nodes[0] } else { hi - width };
        let lo_idx = if width >= remaining { 0 } else { nodes.partition_point(|&x| x < lo) };
        // layer nodes: [lo_idx, hi_idx) plus the top node on the first layer
        let layer: Vec<usize> = (lo_idx..hi_idx).collect();
        hi = lo;
        if layer.is_empty() {
            continue;
        }
        let sub = &nodes[lo_idx..];
        let interp: Vec<Vec<(usize, [f64; 4], usize)>> = layer
            .iter()
            .map(|&i| {
                rows[i]
                    .ys
                    .iter()
                    .map(|&y| {
                        let (s, w, cnt) = interpolation_weights(sub, y);
                        (s + lo_idx, w, cnt)
                    })
                    .collect()
            })
            .collect();
        for (f, hp) in fs.iter_mut().zip(hps) {
            iterate_layer(&rows, &interp, &layer, &diag, c, cc, hp, f, hi_idx)?;
        }
        hi_idx = lo_idx;
    }
    Ok(fs)
}

/// Neumann iteration f ← [c(C − K(x,x)) f + ∫ ∂_xJ f − h′] / (cC) on one layer.
#[allow(clippy::too_many_arguments)]
fn iterate_layer(
    rows: &[Row],
    interp: &[Vec<(usize, [f64; 4], usize)>],
    layer: &[usize],
    diag: &[f64],
    c: f64,
    cc: f64,
    hp: &[f64],
    f: &mut [f64],
    hi_idx: usize,
) -> Result<()> {
    let mut last_change = f64::INFINITY;
    for _term in 0..NEUMANN_MAX_TERMS {
        let mut next = Vec::with_capacity(layer.len());
        for (li, &i) in layer.iter().enumerate() {
            let row = &rows[i];
            let mut integral = 0.0;
            for (q, wp) in row.weighted_p.iter().enumerate() {
                let (s, w, cnt) = interp[li][q];
                let mut fy = 0.0;
                for t in 0..cnt {
                    fy += w[t] * f[s + t];
                }
                integral += wp * fy;
            }
            next.push((c * (cc - diag[i]) * f[i] + integral - hp[i]) / (c * cc));
        }
        let scale = next.iter().chain(&f[hi_idx..]).fold(1.0f64, |m, v| m.max(v.abs()));
        let mut change: f64 = 0.0;
        for (li, &i) in layer.iter().enumerate() {
            change = change.max((next[li] - f[i]).abs());
            f[i] = next[li];
        }
        last_change = change;
        if change <= NEUMANN_TOL * scale {
            return Ok(());
        }
    }
    Err(Error::NotConverged { iterations: NEUMANN_MAX_TERMS, residual: last_change })
}

/// Largest admissible layer width below `hi`: halve until the contraction
/// estimate (c sup|C − K| + c lip1 δ) / (c |C|) drops below 1, then halve once
/// more for margin (unless the whole remaining interval already qualifies).
fn layer_width(k: &KernelSpec, hi: f64, cc: f64, remaining: f64) -> Result<f64> {
    let estimate = |delta: f64| {
        let lo = hi - delta;
        let m = 8;
        let mut sup: f64 = 0.0;
        for j in 0..=m {
            let y = lo + delta * j as f64 / m as f64;
            for i in 0..=j {
                let x = lo + delta * i as f64 / m as f64;
                sup = sup.max((cc - k.eval(x, y)).abs());
            }
        }
        (sup + k.lip1_k * delta) / cc.abs()
    };
    let mut delta = remaining;
    loop {
        let est = estimate(delta);
        if est < 1.0 {
            if delta >= remaining {
                return Ok(remaining);
            }
            return Ok((0.5 * delta).max(MIN_LAYER_WIDTH));
        }
        if delta <= MIN_LAYER_WIDTH {
            return Err(Error::ContractionFailure { estimate: est, width: delta });
        }
        delta = (0.5 * delta).max(MIN_LAYER_WIDTH);
    }
}

/// f′(x) for f(x) = ∫_x^1 (y² − x²)^{−α} φ(x, y) dy via
/// f′(x) = ∫_x^1 (y² − x²)^{−α}[∂_xφ + ∂_y((x/y)φ)] dy − x(1 − x²)^{−α} φ(x, 1).
/// Partial derivatives come from `partials` when given, else from stencils.
pub fn abel_derivative(
    phi: &(dyn Fn(f64, f64) -> f64 + Sync),
    partials: Option<(&(dyn Fn(f64, f64) -> f64 + Sync), &(dyn Fn(f64, f64) -> f64 + Sync))>,
    alpha: f64,
    x: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::OutOfDomain { value: alpha, domain: "[0, 1)".into() });
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain { value: x, domain: "(0, 1)".into() });
    }
    let h: f64 = 1e-4;
    let dx = |x: f64, y: f64| match partials {
        Some((px, _)) => px(x, y),
        None => derivative_within(|t| phi(t, y), x, h.min(y / 4.0), 0.0, y),
    };
    let dy = |x: f64, y: f64| match partials {
        Some((_, py)) => py(x, y),
        None => derivative_within(|t| phi(x, t), y, h.min((1.0 - x) / 4.0), x, 1.0),
    };
    let power = 1.0 / (1.0 - alpha);
    let integrand = |t: f64| {
        let y = (x + t.powf(power)).min(1.0);
        let bracket = dx(x, y) - x / (y * y) * phi(x, y) + x / y * dy(x, y);
        (y + x).powf(-alpha) * bracket * power
    };
    let upper = (1.0 - x).powf(1.0 - alpha);
    let integral = adaptive(integrand, 0.0, upper, PANEL_REL_TOL, 1e-14, MAX_PANELS)?;
    Ok(integral - x * (1.0 - x * x).powf(-alpha) * phi(x, 1.0))
}
