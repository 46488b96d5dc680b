//! Geodesics and broken rays of the metric c(r)⁻² e in the annulus R < r ≤ 1,
//! parametrized through the two conserved quantities (unit speed and angular
//! momentum ρ(r0) = r0 / c(r0)).

mod ode;
mod periodic;
mod ray;
mod trace;

use std::f64::consts::TAU;
use std::io::Write;

use crate::error::{Error, Result};
use crate::wave_speed::WaveSpeed;

pub use ode::trace_ode_oracle;
pub use periodic::{alpha_derivative_zeros, find_periodic_radii, is_periodic, PeriodicRadius};
pub use ray::{tip_segment, RayQuadrature};
pub use trace::{broken_ray, trace_geodesic};

pub const DEFAULT_PERIODIC_TOL: f64 = 1e-9;
pub const DEFAULT_Q_MAX: u32 = 50;

/// A geodesic identified by its tip (closest point to the centre).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSpec {
    pub r0: f64,
    pub theta0: f64,
    /// +1 for counter-clockwise traversal, −1 for clockwise
    pub orientation: i8,
}

impl GeodesicSpec {
    pub fn new(w: &WaveSpeed, r0: f64, theta0: f64, orientation: i8) -> Result<Self> {
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidInput(format!("orientation must be ±1, got {orientation}")));
        }
        if !theta0.is_finite() {
            return Err(Error::InvalidInput("tip angle must be finite".into()));
        }
        tip_segment(w, r0)?;
        Ok(Self { r0, theta0: theta0.rem_euclid(TAU), orientation })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenRaySpec {
    pub base: GeodesicSpec,
    pub n_segments: usize,
}

impl BrokenRaySpec {
    pub fn new(base: GeodesicSpec, n_segments: usize) -> Result<Self> {
        if n_segments == 0 {
            return Err(Error::InvalidInput("a broken ray needs at least one segment".into()));
        }
        Ok(Self { base, n_segments })
    }
}

/// One sample of a traced path, with the conserved quantities evaluated
/// from the local velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    /// |velocity|² in the metric c⁻² e
    pub speed_sq: f64,
    /// r² θ′ / c², signed by the orientation
    pub angular_momentum: f64,
}

impl PathSample {
    pub fn x(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn y(&self) -> f64 {
        self.r * self.theta.sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    pub samples: Vec<PathSample>,
    pub total_length: f64,
}

impl PathPolyline {
    pub fn first(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &PathSample {
        self.samples.last().unwrap()
    }

    /// Largest deviation of speed² from 1 and of angular momentum from `momentum`.
    pub fn conservation_drift(&self, momentum: f64) -> (f64, f64) {
        self.samples.iter().fold((0.0, 0.0), |(ds, dm), s| {
            (ds.max((s.speed_sq - 1.0).abs()), dm.max((s.angular_momentum - momentum).abs()))
        })
    }

    /// Writes columns t, r, theta, x, y.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wtr.write_record(["t", "r", "theta", "x", "y"]).map_err(io)?;
        for s in &self.samples {
            wtr.write_record(
                [s.t, s.r, s.theta, s.x(), s.y()].map(|v| format!("{v:.15e}")),
            )
            .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}

/// Full length 2L(r0) of the geodesic with tip radius r0.
pub fn geodesic_length(w: &WaveSpeed, r0: f64) -> Result<f64> {
    Ok(2.0 * RayQuadrature::new(w, r0)?.half_length())
}

/// Angular distance 2α(r0) between the endpoints, on the universal cover.
pub fn opening_angle(w: &WaveSpeed, r0: f64) -> Result<f64> {
    Ok(2.0 * RayQuadrature::new(w, r0)?.half_angle())
}

/// Partial angle ω(r; r0) swept between the tip and radius r.
pub fn partial_angle(w: &WaveSpeed, r: f64, r0: f64) -> Result<f64> {
    if !(r >= r0 && r <= 1.0) {
        return Err(Error::OutOfDomain { value: r, domain: format!("[{r0}, 1]") });
    }
    Ok(RayQuadrature::new(w, r0)?.angle_at_radius(r))
}

/// Length weight H(r; z) = c(r)⁻¹ (1 − (z c(r) / (r c(z)))²)^{−1/2}.
pub fn weight_h(w: &WaveSpeed, r: f64, z: f64) -> Result<f64> {
    let inner = w.inner_radius();
    if !(inner < z && z < r && r <= 1.0) {
        return Err(Error::OutOfDomain { value: r, domain: format!("{inner} < z < r ≤ 1") });
    }
    let (cr, cz) = (w.eval_c(r)?, w.eval_c(z)?);
    let q = z * cr / (r * cz);
    Ok(1.0 / (cr * (1.0 - q * q).sqrt()))
}

/// T_k(r; r0) = cos(k ω(r; r0)).
pub fn chebyshev_t(w: &WaveSpeed, k: i32, r: f64, r0: f64) -> Result<f64> {
    if k == 0 {
        tip_segment(w, r0)?;
        return Ok(1.0);
    }
    Ok((k as f64 * partial_angle(w, r, r0)?).cos())
}
