//! Independent path tracer: classical RK4 on Hamilton's equations for
//! H = ½ c(|x|)² |ξ|², with Snell refraction at jump surfaces.

use crate::error::{Error, Result};
use crate::wave_speed::{Segment, WaveSpeed};

use super::{tip_segment, GeodesicSpec, PathPolyline, PathSample};

const DRIFT_LIMIT: f64 = 1e-6;
const CROSSING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct State {
    x: [f64; 2],
    xi: [f64; 2],
}

impl State {
    fn radius(&self) -> f64 {
        self.x[0].hypot(self.x[1])
    }
}

fn rate(seg: &Segment, s: &State) -> State {
    let r = s.radius();
    let c = seg.c(r);
    let xi_sq = s.xi[0] * s.xi[0] + s.xi[1] * s.xi[1];
    let pull = -c * seg.dc(r) * xi_sq / r;
    State {
        x: [c * c * s.xi[0], c * c * s.xi[1]],
        xi: [pull * s.x[0], pull * s.x[1]],
    }
}

fn axpy(s: &State, h: f64, d: &State) -> State {
    State {
        x: [s.x[0] + h * d.x[0], s.x[1] + h * d.x[1]],
        xi: [s.xi[0] + h * d.xi[0], s.xi[1] + h * d.xi[1]],
    }
}

fn rk4(seg: &Segment, s: &State, h: f64) -> State {
    let k1 = rate(seg, s);
    let k2 = rate(seg, &axpy(s, 0.5 * h, &k1));
    let k3 = rate(seg, &axpy(s, 0.5 * h, &k2));
    let k4 = rate(seg, &axpy(s, h, &k3));
    State {
        x: [
            s.x[0] + h / 6.0 * (k1.x[0] + 2.0 * k2.x[0] + 2.0 * k3.x[0] + k4.x[0]),
            s.x[1] + h / 6.0 * (k1.x[1] + 2.0 * k2.x[1] + 2.0 * k3.x[1] + k4.x[1]),
        ],
        xi: [
            s.xi[0] + h / 6.0 * (k1.xi[0] + 2.0 * k2.xi[0] + 2.0 * k3.xi[0] + k4.xi[0]),
            s.xi[1] + h / 6.0 * (k1.xi[1] + 2.0 * k2.xi[1] + 2.0 * k3.xi[1] + k4.xi[1]),
        ],
    }
}

fn snell(s: &State, c_new: f64) -> State {
    let r = s.radius();
    let (ex, ey) = (s.x[0] / r, s.x[1] / r);
    let tangential = -ey * s.xi[0] + ex * s.xi[1];
    let radial = (1.0 / (c_new * c_new) - tangential * tangential).max(0.0).sqrt();
    State {
        x: s.x,
        xi: [radial * ex - tangential * ey, radial * ey + tangential * ex],
    }
}

/// (time, state, segment used for c) along one half, starting at the tip.
fn half_path(w: &WaveSpeed, start: State, j0: usize, step: f64) -> Vec<(f64, State, usize)> {
    let segs = w.segments();
    let mut out = vec![(0.0, start, j0)];
    let (mut t, mut s, mut j) = (0.0, start, j0);
    loop {
        let next = rk4(&segs[j], &s, step);
        let top = segs[j].b;
        if next.radius() < top {
            t += step;
            s = next;
            out.push((t, s, j));
            continue;
        }
        let (mut lo, mut hi) = (0.0, step);
        while hi - lo > CROSSING_TOL {
            let mid = 0.5 * (lo + hi);
            if rk4(&segs[j], &s, mid).radius() < top {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        let mut hit = rk4(&segs[j], &s, tau);
        let r = hit.radius();
        hit.x = [hit.x[0] * top / r, hit.x[1] * top / r];
        t += tau;
        out.push((t, hit, j));
        if j + 1 == segs.len() {
            return out;
        }
        j += 1;
        s = snell(&hit, segs[j].c(top));
        out.push((t, s, j));
    }
}

/// Traces the geodesic by RK4 with the given step, from the entry point
/// through the tip to the exit point. Samples include every step and every
/// jump crossing (once on each side of the interface).
pub fn trace_ode_oracle(w: &WaveSpeed, spec: &GeodesicSpec, step: f64) -> Result<PathPolyline> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let mut j0 = tip_segment(w, spec.r0)?;
    let segs = w.segments();
    if spec.r0 == segs[j0].b && j0 + 1 < segs.len() {
        j0 += 1;
    }
    let c0 = segs[j0].c(spec.r0);
    let orient = spec.orientation as f64;
    let (ct, st) = (spec.theta0.cos(), spec.theta0.sin());
    let tip = [spec.r0 * ct, spec.r0 * st];
    let tangent = [-st, ct];
    let forward = State { x: tip, xi: [orient * tangent[0] / c0, orient * tangent[1] / c0] };
    let backward = State { x: tip, xi: [-forward.xi[0], -forward.xi[1]] };

    let ahead = half_path(w, forward, j0, step);
    let behind = half_path(w, backward, j0, step);
    let back_len = behind.last().unwrap().0;

    let momentum = spec.r0 / c0;
    let mut samples = Vec::with_capacity(ahead.len() + behind.len());
    let mut worst: f64 = 0.0;
    let mut push = |t: f64, s: &State, j: usize, reversed: bool| {
        let r = s.radius();
        let c = segs[j].c(r);
        let xi_sq = s.xi[0] * s.xi[0] + s.xi[1] * s.xi[1];
        let cross = s.x[0] * s.xi[1] - s.x[1] * s.xi[0];
        let sign = if reversed { -1.0 } else { 1.0 };
        let sample = PathSample {
            t,
            r,
            theta: s.x[1].atan2(s.x[0]),
            speed_sq: c * c * xi_sq,
            angular_momentum: sign * orient * cross,
        };
        worst = worst
            .max((sample.speed_sq - 1.0).abs())
            .max((sample.angular_momentum - momentum).abs());
        samples.push(sample);
    };
    for (t, s, j) in behind.iter().rev() {
        push(back_len - t, s, *j, true);
    }
    for (t, s, j) in ahead.iter().skip(1) {
        push(back_len + t, s, *j, false);
    }
    if worst > DRIFT_LIMIT {
        return Err(Error::StepTooLarge(worst));
    }
    // continuous polar angle
    for i in 1..samples.len() {
        let prev = samples[i - 1].theta;
        let mut th = samples[i].theta;
        th += std::f64::consts::TAU * ((prev - th) / std::f64::consts::TAU).round();
        samples[i].theta = th;
    }
    let total_length = samples.last().unwrap().t;
    Ok(PathPolyline { samples, total_length })
}
