//! Mode-wise inversion of the X-ray transform by layer stripping in the
//! variable ρ, and the closed-form inversion of 𝒜₀.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::abel::{invert_neumann_many, EndpointFactored, KernelSpec};
use crate::error::{Error, Result};
use crate::geodesics::{geodesic_length, tip_segment, RayQuadrature};
use crate::grid::{derivative_within, linspace, GridFunction};
use crate::quadrature::{gauss_legendre, jacobi_unit};
use crate::wave_speed::{Segment, WaveSpeed};

use super::field::FourierField;
use super::forward::{weighted_sum, AttenuationProfile, Sinogram};

const KERNEL_ORDER: usize = 16;
const MIN_LAYER_NODES: usize = 24;

/// Solver resolution: nodes per unit of ρ in each layer (at least 24 per layer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub nodes_per_unit_rho: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { nodes_per_unit_rho: 160.0 }
    }
}

/// K_k(p, u) = cos(k ω) cosh(F) · 2u / (c ρ′)(u) · (u + p)^{−1/2} on one
/// C^{1,1} layer, where ω and F are the angle and attenuation accumulated
/// between the radii with turning parameters p and u.
#[derive(Clone)]
struct LayerKernel {
    seg: Segment,
    k: f64,
    lam: Option<AttenuationProfile>,
}

impl LayerKernel {
    fn radius(&self, p: f64) -> f64 {
        self.seg.rho_inverse_in(p, self.seg.a, self.seg.b)
    }

    fn eval(&self, p: f64, u: f64) -> f64 {
        let seg = &self.seg;
        let (rp, ru) = (self.radius(p), self.radius(u));
        let h = 2.0 * u / (seg.c(ru) * seg.drho(ru) * (u + p).sqrt());
        if (self.k == 0.0 && self.lam.is_none()) || ru <= rp {
            return h;
        }
        let span = ru - rp;
        let cp = seg.c(rp);
        let rule = gauss_legendre(KERNEL_ORDER);
        let (mut omega, mut atten) = (0.0, 0.0);
        // σ = r_p + span·v², so that ρ(σ) − p = span·v²·D(σ) with D smooth
        for (v, wt) in rule.mapped(0.0, 1.0) {
            let sigma = rp + span * v * v;
            let cs = seg.c(sigma);
            let rho = sigma / cs;
            let slope = (cp - rp * seg.poly.divided_difference(sigma, rp)) / (cs * cp);
            let dl = 2.0 * rho * span.sqrt() / (cs * (slope * (rho + p)).sqrt());
            omega += wt * dl * p * cs * cs / (sigma * sigma);
            if let Some(lam) = &self.lam {
                atten += wt * dl * lam.eval(sigma);
            }
        }
        h * (self.k * omega).cos() * atten.cosh()
    }
}

/// Per-tip quantities shared by all modes.
struct TipData {
    quad: RayQuadrature,
    cumulative: Option<Vec<f64>>,
    /// 2E^λ(r0), or 1 without attenuation
    norm: f64,
}

/// Data for the layer-stripping solver: tip (ρ, r0) pairs and, per mode,
/// the transform values at those tips.
struct StripInput<'a> {
    tips: Vec<(f64, f64)>,
    values: BTreeMap<i32, Vec<Complex64>>,
    lam: Option<&'a AttenuationProfile>,
}

/// Solves for every mode layer by layer from the outer boundary inwards.
/// Returns the radial grid and the mode values on it.
fn strip_layers(w: &WaveSpeed, input: StripInput, opts: InversionOptions) -> Result<(Vec<f64>, BTreeMap<i32, Vec<Complex64>>)> {
    w.require_herglotz()?;
    let segs = w.segments();
    let tip_data: Vec<Option<TipData>> = input
        .tips
        .par_iter()
        .map(|&(_, r0)| {
            if r0 >= 1.0 {
                return Ok(None);
            }
            let quad = RayQuadrature::new(w, r0)?;
            let (cumulative, norm) = match input.lam {
                Some(l) => {
                    let (cum, total) = quad.cumulative(|s| l.eval(s));
                    (Some(cum), 2.0 * total.exp())
                }
                None => (None, 1.0),
            };
            Ok(Some(TipData { quad, cumulative, norm }))
        })
        .collect::<Result<_>>()?;

    let modes: Vec<i32> = input.values.keys().copied().collect();
    let mut orders: Vec<i32> = modes.iter().map(|k| k.abs()).collect();
    orders.sort_unstable();
    orders.dedup();

    // solutions[j][k]: values on the layer's ρ nodes
    let mut layer_nodes: Vec<Vec<f64>> = vec![Vec::new(); segs.len()];
    let mut solutions: Vec<BTreeMap<i32, GridFunction<Complex64>>> = vec![BTreeMap::new(); segs.len()];

    for j in (0..segs.len()).rev() {
        let seg = segs[j];
        let (lo, top) = (seg.rho(seg.a), seg.rho(seg.b));
        let in_layer: Vec<usize> = (0..input.tips.len())
            .filter(|&i| {
                let (p, r0) = input.tips[i];
                p > lo && p < top && r0 < 1.0 && tip_data[i].is_some()
            })
            .collect();
        if in_layer.is_empty() {
            return Err(Error::DomainMismatch(format!(
                "no data for tips with turning parameter in ({lo}, {top})"
            )));
        }
        let n_nodes = ((opts.nodes_per_unit_rho * (top - lo)).ceil() as usize).max(MIN_LAYER_NODES);
        let nodes = linspace(lo, top, n_nodes);
        let upper = &solutions[j + 1..];
        let upper_eval = |k: i32, s: f64| -> Complex64 {
            let jj = segs.partition_point(|sg| sg.b < s).min(segs.len() - 1);
            upper[jj - j - 1][&k].eval(segs[jj].rho(s))
        };

        let solved: Vec<Vec<(i32, GridFunction<Complex64>)>> = orders
            .par_iter()
            .map(|&order| {
                let kernel = LayerKernel { seg, k: order as f64, lam: input.lam.cloned() };
                let diag_check = kernel.eval(top, top).min(kernel.eval(lo, lo));
                if !(diag_check > 0.0) {
                    return Err(Error::IllConditioned(format!("kernel diagonal {diag_check} not positive")));
                }
                let kspec = KernelSpec::on_domain(0.5, move |p, u| kernel.eval(p, u), lo, top)?;
                let group: Vec<i32> = modes.iter().copied().filter(|k| k.abs() == order).collect();
                let mut datas = Vec::with_capacity(2 * group.len());
                for &k in &group {
                    let vals = &input.values[&k];
                    let mut grid = Vec::with_capacity(in_layer.len() + 1);
                    let mut h = Vec::with_capacity(in_layer.len() + 1);
                    for &i in &in_layer {
                        let td = tip_data[i].as_ref().unwrap();
                        let first = td.quad.first_node_above(seg.b);
                        let outer = if first < td.quad.radii().len() {
                            weighted_sum(&td.quad, k, &|s| upper_eval(k, s), td.cumulative.as_deref(), first)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        grid.push(input.tips[i].0);
                        h.push(vals[i] / td.norm - outer);
                    }
                    grid.push(top);
                    h.push(Complex64::new(0.0, 0.0));
                    let re = GridFunction::new(grid.clone(), h.iter().map(|v| v.re).collect())?;
                    let im = GridFunction::new(grid, h.iter().map(|v| v.im).collect())?;
                    datas.push(EndpointFactored::from_samples(&re, 0.5, top)?);
                    datas.push(EndpointFactored::from_samples(&im, 0.5, top)?);
                }
                let sols = invert_neumann_many(&kspec, &datas, &nodes, lo)?;
                group
                    .iter()
                    .enumerate()
                    .map(|(g, &k)| {
                        let (re, im) = (&sols[2 * g], &sols[2 * g + 1]);
                        let vals = re.values().iter().zip(im.values()).map(|(a, b)| Complex64::new(*a, *b)).collect();
                        Ok((k, GridFunction::new(re.grid().to_vec(), vals)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (k, gf) in solved.into_iter().flatten() {
            solutions[j].insert(k, gf);
        }
        layer_nodes[j] = nodes;
    }

    let mut grid = Vec::new();
    let mut values: BTreeMap<i32, Vec<Complex64>> = modes.iter().map(|&k| (k, Vec::new())).collect();
    for (j, nodes) in layer_nodes.iter().enumerate() {
        let skip = usize::from(j > 0);
        for (i, &p) in nodes.iter().enumerate().skip(skip) {
            grid.push(segs[j].rho_inverse_in(p, segs[j].a, segs[j].b));
            for &k in &modes {
                values.get_mut(&k).unwrap().push(solutions[j][&k].values()[i]);
            }
        }
    }
    Ok((grid, values))
}

/// Recovers the mode coefficients a_k from mode sinograms (attenuated ones
/// if `lam` is given), stripping one C^{1,1} layer of the wave speed at a
/// time from the outside in.
pub fn xray_invert_modes(
    w: &WaveSpeed,
    sinos: &BTreeMap<i32, Sinogram>,
    lam: Option<&AttenuationProfile>,
) -> Result<FourierField> {
    xray_invert_modes_with(w, sinos, lam, InversionOptions::default())
}

pub fn xray_invert_modes_with(
    w: &WaveSpeed,
    sinos: &BTreeMap<i32, Sinogram>,
    lam: Option<&AttenuationProfile>,
    opts: InversionOptions,
) -> Result<FourierField> {
    let first = sinos
        .values()
        .next()
        .ok_or_else(|| Error::InvalidInput("no sinograms to invert".into()))?;
    let tips: Vec<(f64, f64)> = first.samples().map(|(p, r, _)| (p, r)).collect();
    let mut values = BTreeMap::new();
    for (&k, s) in sinos {
        let these: Vec<(f64, f64, Complex64)> = s.samples().collect();
        if these.len() != tips.len() || these.iter().zip(&tips).any(|(a, b)| a.1 != b.1) {
            return Err(Error::DomainMismatch(format!("sinogram for mode {k} uses a different tip grid")));
        }
        values.insert(k, these.into_iter().map(|t| t.2).collect());
    }
    let (grid, vals) = strip_layers(w, StripInput { tips, values, lam }, opts)?;
    let mut modes = BTreeMap::new();
    for (k, v) in vals {
        modes.insert(k, GridFunction::new(grid.clone(), v)?);
    }
    FourierField::new(w.inner_radius(), modes)
}

/// Inverts 𝒜₀. Without jumps this is the Abel inversion in u = ρ:
/// f(r) = −(c ρ′ / (π ρ))(r) · Φ′(ρ(r)), Φ(p) = ∫_p^{ρ(1)} u g̃(u) (u² − p²)^{−1/2} du.
/// With jumps ρ has gaps and the mode-0 layer-stripping solver is used.
pub fn a0_invert(w: &WaveSpeed, g: &GridFunction) -> Result<GridFunction> {
    w.require_herglotz()?;
    if (g.hi() - 1.0).abs() > 1e-12 {
        return Err(Error::DomainMismatch(format!("data must extend to r = 1, ends at {}", g.hi())));
    }
    if w.has_jumps() {
        let mut tips = Vec::new();
        let mut vals = Vec::new();
        for (&r, &v) in g.grid().iter().zip(g.values()) {
            if r > w.inner_radius() && (r >= 1.0 || tip_segment(w, r).is_ok()) {
                tips.push((w.rho(r)?, r));
                vals.push(Complex64::new(v, 0.0));
            }
        }
        let input = StripInput { tips, values: BTreeMap::from([(0, vals)]), lam: None };
        let (grid, vals) = strip_layers(w, input, InversionOptions::default())?;
        return GridFunction::new(grid, vals[&0].iter().map(|v| v.re).collect());
    }

    let top = w.rho_max();
    let mut u = Vec::with_capacity(g.len());
    let mut smooth = Vec::with_capacity(g.len());
    if g.lo() < w.inner_radius() - 1e-12 {
        return Err(Error::OutOfDomain { value: g.lo(), domain: format!("[{}, 1]", w.inner_radius()) });
    }
    let seg_at = |r: f64| &w.segments()[w.segments().partition_point(|s| s.b < r).min(w.segments().len() - 1)];
    for (&r, &v) in g.grid().iter().zip(g.values()) {
        let p = seg_at(r).rho(r);
        if r < 1.0 {
            u.push(p);
            smooth.push(v / (top - p).sqrt());
        }
    }
    let smooth = GridFunction::new(u.clone(), smooth)?;
    let (s, wts) = jacobi_unit(48, -0.5, 0.5);
    let phi = |p: f64| {
        let len = top - p;
        let sum: f64 = s
            .iter()
            .zip(&wts)
            .map(|(s, wt)| {
                let y = p + len * s;
                wt * y / (y + p).sqrt() * smooth.eval(y)
            })
            .sum();
        len * sum
    };
    let mut nodes = u.clone();
    nodes.push(top);
    let lo = nodes[0];
    let values = g
        .grid()
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let p = nodes[i];
            let left = if i > 0 { p - nodes[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < nodes.len() { nodes[i + 1] - p } else { f64::INFINITY };
            let step = 0.25 * left.min(right);
            let dphi = derivative_within(phi, p, step, lo, top);
            let seg = seg_at(r);
            -seg.c(r) * seg.drho(r) / (PI * p) * dphi
        })
        .collect::<Vec<f64>>();
    GridFunction::new(g.grid().to_vec(), values)
}

/// Recovers a₀ from normalized broken-ray averages 𝒜₀a₀(r)/𝒜₀1(r): multiplies
/// by 𝒜₀1(r) = 2L(r) and inverts 𝒜₀.
pub fn brt_circle_average(w: &WaveSpeed, data: &[(f64, f64)]) -> Result<GridFunction> {
    let values = data
        .par_iter()
        .map(|&(r, avg)| if r >= 1.0 { Ok(0.0) } else { Ok(avg * geodesic_length(w, r)?) })
        .collect::<Result<Vec<f64>>>()?;
    let g = GridFunction::new(data.iter().map(|d| d.0).collect(), values)?;
    a0_invert(w, &g)
}
