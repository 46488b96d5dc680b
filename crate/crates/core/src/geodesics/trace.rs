use crate::error::Result;
use crate::wave_speed::WaveSpeed;

use super::{BrokenRaySpec, GeodesicSpec, PathPolyline, PathSample, RayQuadrature};

fn sample(w: &WaveSpeed, p0: f64, t: f64, r: f64, theta: f64, outgoing: bool, orient: f64) -> Result<PathSample> {
    let c = w.eval_c(r)?;
    let rho = r / c;
    let radial = if outgoing { 1.0 } else { -1.0 } * c * (1.0 - (p0 / rho).powi(2)).max(0.0).sqrt();
    let angular = orient * p0 * c * c / (r * r);
    Ok(PathSample {
        t,
        r,
        theta,
        speed_sq: (radial * radial + r * r * angular * angular) / (c * c),
        angular_momentum: orient * r * r * angular / (c * c),
    })
}

fn trace_with(w: &WaveSpeed, quad: &RayQuadrature, spec: &GeodesicSpec, n_samples: usize) -> Result<PathPolyline> {
    let n = n_samples.max(3);
    let half = quad.half_length();
    let total = 2.0 * half;
    let orient = spec.orientation as f64;
    let p0 = quad.turning_parameter();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = total * i as f64 / (n - 1) as f64;
        let from_tip = (t - half).abs();
        let (r, omega) = quad.point_at_length(from_tip);
        let side = if t < half { -1.0 } else { 1.0 };
        let theta = spec.theta0 + orient * side * omega;
        samples.push(sample(w, p0, t, r, theta, t >= half, orient)?);
    }
    Ok(PathPolyline { samples, total_length: total })
}

/// Samples the geodesic at `n_samples` points uniform in arclength, from the
/// entry point on the outer boundary through the tip to the exit point.
pub fn trace_geodesic(w: &WaveSpeed, spec: &GeodesicSpec, n_samples: usize) -> Result<PathPolyline> {
    let quad = RayQuadrature::new(w, spec.r0)?;
    trace_with(w, &quad, spec, n_samples)
}

/// Chains rotated copies of the base geodesic; consecutive copies meet on the
/// outer boundary, where the ray reflects.
pub fn broken_ray(w: &WaveSpeed, spec: &BrokenRaySpec, samples_per_segment: usize) -> Result<PathPolyline> {
    let quad = RayQuadrature::new(w, spec.base.r0)?;
    let base = trace_with(w, &quad, &spec.base, samples_per_segment)?;
    let turn = 2.0 * quad.half_angle() * spec.base.orientation as f64;
    let mut samples = base.samples.clone();
    for l in 1..spec.n_segments {
        let shift_t = base.total_length * l as f64;
        let shift_theta = turn * l as f64;
        samples.extend(base.samples.iter().skip(1).map(|s| PathSample {
            t: s.t + shift_t,
            theta: s.theta + shift_theta,
            ..*s
        }));
    }
    Ok(PathPolyline { samples, total_length: base.total_length * spec.n_segments as f64 })
}
