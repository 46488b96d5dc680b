use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::Result;
use crate::wave_speed::WaveSpeed;

use super::RayQuadrature;

const SAMPLES_PER_SEGMENT: usize = 400;
const END_OFFSET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicRadius {
    pub r: f64,
    pub p: u32,
    pub q: u32,
}

fn half_angle(w: &WaveSpeed, r0: f64) -> Result<f64> {
    Ok(RayQuadrature::new(w, r0)?.half_angle())
}

/// Simplest fraction p/q (q ≤ q_max) with |α − πp/q| < tol, found by
/// descending the Stern–Brocot tree towards α/π.
pub fn rational_multiple_of_pi(alpha: f64, q_max: u32, tol: f64) -> Option<(u32, u32)> {
    let target = alpha / PI;
    if !(target > 0.0) || !target.is_finite() {
        return None;
    }
    let (mut lp, mut lq, mut rp, mut rq) = (0u64, 1u64, 1u64, 0u64);
    loop {
        let (p, q) = (lp + rp, lq + rq);
        if q > q_max as u64 {
            return None;
        }
        let value = p as f64 / q as f64;
        if (alpha - PI * value).abs() < tol {
            return Some((p as u32, q as u32));
        }
        if target < value {
            rp = p;
            rq = q;
        } else {
            lp = p;
            lq = q;
        }
    }
}

/// (p, q) in lowest terms if α(r0) = πp/q within `tol`, with q ≤ q_max.
/// Invalid tips give `None`.
pub fn is_periodic(w: &WaveSpeed, r0: f64, q_max: u32, tol: f64) -> Option<(u32, u32)> {
    let alpha = half_angle(w, r0).ok()?;
    rational_multiple_of_pi(alpha, q_max, tol)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Open sample grid strictly inside each segment, where tips are valid.
fn tip_samples(w: &WaveSpeed, per_segment: usize) -> Vec<Vec<f64>> {
    w.segments()
        .iter()
        .map(|s| {
            let lo = s.a + END_OFFSET;
            let hi = s.b - END_OFFSET;
            (0..per_segment).map(|i| lo + (hi - lo) * i as f64 / (per_segment - 1) as f64).collect()
        })
        .collect()
}

/// All tip radii with α(r) = πp/q for q ≤ q_max, sorted by radius. Roots are
/// bracketed on a fine sample grid of α and refined by bisection.
pub fn find_periodic_radii(w: &WaveSpeed, q_max: u32) -> Result<Vec<PeriodicRadius>> {
    w.require_herglotz()?;
    let mut found = Vec::new();
    for radii in tip_samples(w, SAMPLES_PER_SEGMENT) {
        let alphas: Vec<f64> = radii
            .par_iter()
            .map(|&r| half_angle(w, r))
            .collect::<Result<Vec<_>>>()?;
        let roots: Vec<Vec<PeriodicRadius>> = (0..radii.len() - 1)
            .into_par_iter()
            .map(|i| {
                let (a1, a2) = (alphas[i], alphas[i + 1]);
                let (lo, hi) = (a1.min(a2), a1.max(a2));
                let mut out = Vec::new();
                for q in 1..=q_max {
                    let first = (lo * q as f64 / PI).ceil().max(1.0) as u32;
                    let last = (hi * q as f64 / PI).floor() as u32;
                    for p in first..=last {
                        if gcd(p, q) != 1 {
                            continue;
                        }
                        let target = PI * p as f64 / q as f64;
                        // half-open brackets so shared sample points are counted once
                        let in_bracket = if a1 <= a2 {
                            a1 <= target && target < a2
                        } else {
                            a2 < target && target <= a1
                        };
                        if in_bracket || (i + 2 == radii.len() && target == a2) {
                            if let Ok(r) = bisect(w, radii[i], radii[i + 1], a1, target) {
                                out.push(PeriodicRadius { r, p, q });
                            }
                        }
                    }
                }
                out
            })
            .collect();
        found.extend(roots.into_iter().flatten());
    }
    found.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok(found)
}

fn bisect(w: &WaveSpeed, mut lo: f64, mut hi: f64, alpha_lo: f64, target: f64) -> Result<f64> {
    let lo_sign = (alpha_lo - target).signum();
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let value = half_angle(w, mid)? - target;
        if value.abs() <= 1e-13 || hi - lo <= 1e-15 {
            break;
        }
        if value.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Tip radii where a finite-difference α′ changes sign, sampled on `n` points
/// per segment. A diagnostic for conjugate-point structure, nothing more.
pub fn alpha_derivative_zeros(w: &WaveSpeed, n: usize) -> Result<Vec<f64>> {
    w.require_herglotz()?;
    let mut zeros = Vec::new();
    for radii in tip_samples(w, n.max(4)) {
        let alphas: Vec<f64> = radii
            .par_iter()
            .map(|&r| half_angle(w, r))
            .collect::<Result<Vec<_>>>()?;
        let slopes: Vec<f64> = alphas.windows(2).zip(radii.windows(2)).map(|(a, r)| (a[1] - a[0]) / (r[1] - r[0])).collect();
        for i in 1..slopes.len() {
            if slopes[i - 1] * slopes[i] < 0.0 {
                zeros.push(radii[i]);
            }
        }
    }
    Ok(zeros)
}
