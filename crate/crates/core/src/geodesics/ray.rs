//! Quadrature along one half of a geodesic, from its tip r0 to the outer
//! boundary, in the variable t with ρ(s) = ρ(r0) + t².
//!
//! In t the measure H(s; r0) ds becomes 2 s / (c² ρ′ √(ρ(s) + ρ(r0))) dt,
//! which is smooth, so Gauss–Legendre panels converge spectrally. Panels never
//! straddle a segment boundary.

use crate::error::{Error, Result};
use crate::quadrature::{cumulative_matrix, gauss_legendre};
use crate::wave_speed::{Segment, WaveSpeed};

const ORDER: usize = 20;
const MAX_PANEL_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg: usize,
    t_lo: f64,
    t_hi: f64,
    first: usize,
    length_start: f64,
    angle_start: f64,
}

/// Quadrature nodes on the half geodesic with tip radius r0.
#[derive(Debug, Clone)]
pub struct RayQuadrature {
    r0: f64,
    p0: f64,
    segments: Vec<Segment>,
    panels: Vec<Panel>,
    /// radius s at each node
    radius: Vec<f64>,
    /// weight such that Σ weight_i F(s_i) ≈ ∫_{r0}^1 F(s) H(s; r0) ds
    weight: Vec<f64>,
    /// (panel half-width) × density, for cumulative integrals
    half_density: Vec<f64>,
    /// partial angle ω(s_i; r0) and partial length from the tip
    angle: Vec<f64>,
    length: Vec<f64>,
    total_angle: f64,
    total_length: f64,
}

/// Checks that r0 is an admissible tip radius and returns its segment index.
pub fn tip_segment(w: &WaveSpeed, r0: f64) -> Result<usize> {
    w.require_herglotz()?;
    if !(r0 > w.inner_radius() && r0 < 1.0) {
        return Err(Error::OutOfDomain { value: r0, domain: format!("({}, 1)", w.inner_radius()) });
    }
    let j = w.segment_index(r0)?;
    let segs = w.segments();
    if r0 == segs[j].b && j + 1 < segs.len() && segs[j + 1].c(r0) != segs[j].c(r0) {
        return Err(Error::JumpTangency { p: segs[j].rho(r0), breakpoint: r0 });
    }
    Ok(j)
}

#[inline]
fn density(seg: &Segment, s: f64, u: f64, p0: f64) -> f64 {
    let c = seg.c(s);
    2.0 * s / (c * c * seg.drho(s) * (u + p0).sqrt())
}

impl RayQuadrature {
    pub fn new(w: &WaveSpeed, r0: f64) -> Result<Self> {
        let j0 = tip_segment(w, r0)?;
        let segs = w.segments();
        let p0 = segs[j0].rho(r0);
        let rule = gauss_legendre(ORDER);
        let smat = cumulative_matrix(ORDER);
        let max_width = MAX_PANEL_WIDTH.min(0.5 * (2.0 * p0).sqrt());

        let mut q = RayQuadrature {
            r0,
            p0,
            segments: segs.to_vec(),
            panels: Vec::new(),
            radius: Vec::new(),
            weight: Vec::new(),
            half_density: Vec::new(),
            angle: Vec::new(),
            length: Vec::new(),
            total_angle: 0.0,
            total_length: 0.0,
        };
        let (mut angle_acc, mut length_acc) = (0.0, 0.0);
        for (j, seg) in segs.iter().enumerate().skip(j0) {
            let t_lo = if j == j0 { 0.0 } else { (seg.rho(seg.a) - p0).max(0.0).sqrt() };
            let t_hi = (seg.rho(seg.b) - p0).max(0.0).sqrt();
            if t_hi <= t_lo {
                continue;
            }
            let lo_r = if j == j0 { r0 } else { seg.a };
            let n_panels = ((t_hi - t_lo) / max_width).ceil().max(1.0) as usize;
            for k in 0..n_panels {
                let a = t_lo + (t_hi - t_lo) * k as f64 / n_panels as f64;
                let b = t_lo + (t_hi - t_lo) * (k + 1) as f64 / n_panels as f64;
                let half = 0.5 * (b - a);
                let first = q.radius.len();
                let mut dens_angle = Vec::with_capacity(ORDER);
                let mut dens = Vec::with_capacity(ORDER);
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let t = 0.5 * (a + b) + half * x;
                    let u = p0 + t * t;
                    let s = seg.rho_inverse_in(u, lo_r, seg.b);
                    let d = density(seg, s, u, p0);
                    let cs = seg.c(s);
                    q.radius.push(s);
                    q.weight.push(wt * half * d);
                    q.half_density.push(half * d);
                    dens.push(d);
                    dens_angle.push(d * p0 * cs * cs / (s * s));
                }
                for i in 0..ORDER {
                    let (mut ang, mut len) = (0.0, 0.0);
                    for m in 0..ORDER {
                        ang += smat[i][m] * dens_angle[m];
                        len += smat[i][m] * dens[m];
                    }
                    q.angle.push(angle_acc + half * ang);
                    q.length.push(length_acc + half * len);
                }
                q.panels.push(Panel {
                    seg: j,
                    t_lo: a,
                    t_hi: b,
                    first,
                    length_start: length_acc,
                    angle_start: angle_acc,
                });
                let (mut ang, mut len) = (0.0, 0.0);
                for m in 0..ORDER {
                    ang += rule.weights[m] * dens_angle[m];
                    len += rule.weights[m] * dens[m];
                }
                angle_acc += half * ang;
                length_acc += half * len;
            }
        }
        q.total_angle = angle_acc;
        q.total_length = length_acc;
        Ok(q)
    }

    pub fn tip_radius(&self) -> f64 {
        self.r0
    }

    /// Turning parameter ρ(r0), the conserved angular momentum.
    pub fn turning_parameter(&self) -> f64 {
        self.p0
    }

    pub fn radii(&self) -> &[f64] {
        &self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Index of the first node with radius above `r` (nodes are sorted by radius).
    pub fn first_node_above(&self, r: f64) -> usize {
        self.radius.partition_point(|&s| s <= r)
    }

    /// Partial angles ω(s_i; r0) at the nodes.
    pub fn angles(&self) -> &[f64] {
        &self.angle
    }

    /// α(r0): angle swept from the tip to the boundary.
    pub fn half_angle(&self) -> f64 {
        self.total_angle
    }

    /// L(r0): length from the tip to the boundary.
    pub fn half_length(&self) -> f64 {
        self.total_length
    }

    /// ∫_{r0}^1 F(s) H(s; r0) ds.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.radius.iter().zip(&self.weight).map(|(&s, w)| w * f(s)).sum()
    }

    /// Cumulative ∫_{r0}^{s_i} F H ds at every node, and the total.
    pub fn cumulative(&self, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let smat = cumulative_matrix(ORDER);
        let rule = gauss_legendre(ORDER);
        let mut out = Vec::with_capacity(self.radius.len());
        let mut acc = 0.0;
        let mut vals = [0.0; ORDER];
        for p in &self.panels {
            for m in 0..ORDER {
                let i = p.first + m;
                vals[m] = self.half_density[i] * f(self.radius[i]);
            }
            for row in smat.iter().take(ORDER) {
                let mut v = 0.0;
                for m in 0..ORDER {
                    v += row[m] * vals[m];
                }
                out.push(acc + v);
            }
            for m in 0..ORDER {
                acc += rule.weights[m] * vals[m];
            }
        }
        (out, acc)
    }

    /// ∫_{r0}^{r} F(s) H(s; r0) ds for r ∈ [r0, 1].
    pub fn integrate_to(&self, r: f64, f: impl Fn(f64) -> f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        let seg = self.segment_of(r);
        let t = (self.segments[seg].rho(r) - self.p0).max(0.0).sqrt();
        let mut total = 0.0;
        for p in &self.panels {
            if p.seg < seg || (p.seg == seg && p.t_hi <= t) {
                for i in p.first..p.first + ORDER {
                    total += self.weight[i] * f(self.radius[i]);
                }
            } else if p.seg == seg && p.t_lo < t {
                let sg = &self.segments[seg];
                let rule = gauss_legendre(ORDER);
                for (tt, wt) in rule.mapped(p.t_lo, t) {
                    let s = self.radius_at(seg, tt);
                    total += wt * density(sg, s, self.p0 + tt * tt, self.p0) * f(s);
                }
            }
        }
        total
    }

    fn panel_for_t(&self, seg: usize, t: f64) -> Option<&Panel> {
        self.panels
            .iter()
            .filter(|p| p.seg == seg)
            .find(|p| t <= p.t_hi)
            .or_else(|| self.panels.iter().rev().find(|p| p.seg == seg))
    }

    fn segment_of(&self, r: f64) -> usize {
        self.segments.partition_point(|s| s.b < r).min(self.segments.len() - 1)
    }

    /// Radius s(t) on segment `seg`.
    fn radius_at(&self, seg: usize, t: f64) -> f64 {
        let s = &self.segments[seg];
        let lo = if s.a < self.r0 { self.r0 } else { s.a };
        s.rho_inverse_in(self.p0 + t * t, lo, s.b)
    }

    /// (∫ dens, ∫ dens·angle-rate) over [a, b] within panel segment `seg`.
    fn partial_integrals(&self, seg: usize, a: f64, b: f64) -> (f64, f64) {
        if b <= a {
            return (0.0, 0.0);
        }
        let sg = &self.segments[seg];
        let rule = gauss_legendre(ORDER);
        let (mut len, mut ang) = (0.0, 0.0);
        for (t, wt) in rule.mapped(a, b) {
            let u = self.p0 + t * t;
            let s = self.radius_at(seg, t);
            let d = density(sg, s, u, self.p0);
            let c = sg.c(s);
            len += wt * d;
            ang += wt * d * self.p0 * c * c / (s * s);
        }
        (len, ang)
    }

    /// Partial angle ω(r; r0) from the tip to radius r ∈ [r0, 1].
    pub fn angle_at_radius(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        let seg = self.segment_of(r);
        let sg = &self.segments[seg];
        let t = (sg.rho(r) - self.p0).max(0.0).sqrt();
        match self.panel_for_t(seg, t) {
            Some(p) => {
                let (_, ang) = self.partial_integrals(seg, p.t_lo, t.min(p.t_hi));
                p.angle_start + ang
            }
            None => self.total_angle,
        }
    }

    /// Partial length from the tip to radius r.
    pub fn length_at_radius(&self, r: f64) -> f64 {
        if r <= self.r0 {
            return 0.0;
        }
        let seg = self.segment_of(r);
        let sg = &self.segments[seg];
        let t = (sg.rho(r) - self.p0).max(0.0).sqrt();
        match self.panel_for_t(seg, t) {
            Some(p) => {
                let (len, _) = self.partial_integrals(seg, p.t_lo, t.min(p.t_hi));
                p.length_start + len
            }
            None => self.total_length,
        }
    }

    /// Radius and partial angle at arclength `d` from the tip (0 ≤ d ≤ L).
    pub fn point_at_length(&self, d: f64) -> (f64, f64) {
        if d <= 0.0 {
            return (self.r0, 0.0);
        }
        if d >= self.total_length {
            return (1.0, self.total_angle);
        }
        let idx = self
            .panels
            .partition_point(|p| p.length_start <= d)
            .saturating_sub(1);
        let p = self.panels[idx];
        let sg = &self.segments[p.seg];
        // locate by bisection/Newton in t on ℓ(t) = length_start + ∫_{t_lo}^t dens
        let (mut lo, mut hi) = (p.t_lo, p.t_hi);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (len, _) = self.partial_integrals(p.seg, p.t_lo, t);
            let f = p.length_start + len - d;
            if f.abs() <= 1e-15 * self.total_length.max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let s = self.radius_at(p.seg, t);
            let dl = density(sg, s, self.p0 + t * t, self.p0);
            let next = t - f / dl;
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        let (_, ang) = self.partial_integrals(p.seg, p.t_lo, t);
        (self.radius_at(p.seg, t), p.angle_start + ang)
    }
}
