//! Periodic broken-ray and planar-average transforms.



use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funk::{harmonic_circle_averages, ShellField};
use crate::geodesics::{is_periodic, RayQuadrature, DEFAULT_PERIODIC_TOL, DEFAULT_Q_MAX};
use crate::wave_speed::WaveSpeed;

use super::field::FourierField;
use super::forward::weighted_sum;

/// Smallest m with m α(r0) ∈ πℕ, or NotPeriodic.
pub fn periodic_index(w: &WaveSpeed, r0: f64) -> Result<u32> {
    periodic_index_with(w, r0, DEFAULT_Q_MAX, DEFAULT_PERIODIC_TOL)
}

pub fn periodic_index_with(w: &WaveSpeed, r0: f64, q_max: u32, tol: f64) -> Result<u32> {
    is_periodic(w, r0, q_max, tol).map(|(_, q)| q).ok_or(Error::NotPeriodic(r0))
}

/// Integral over the closed broken ray with m reflections through the tip
/// (r0, θ0): Σ_k m δ_{m|k} e^{ikθ0} 𝒜_k a_k(r0).
pub fn pbrt_forward(w: &WaveSpeed, field: &FourierField, r0: f64, theta0: f64) -> Result<Complex64> {
    pbrt_forward_with(w, field, r0, theta0, DEFAULT_Q_MAX, DEFAULT_PERIODIC_TOL)
}

/// [`pbrt_forward`] with explicit periodicity search bounds.
pub fn pbrt_forward_with(
    w: &WaveSpeed,
    field: &FourierField,
    r0: f64,
    theta0: f64,
    q_max: u32,
    tol: f64,
) -> Result<Complex64> {
    let m = periodic_index_with(w, r0, q_max, tol)? as i32;
    let q = RayQuadrature::new(w, r0)?;
    Ok(field
        .modes()
        .iter()
        .filter(|(&k, _)| k % m == 0)
        .map(|(&k, a)| {
            let ak = weighted_sum(&q, k, &|r| a.eval(r), None, 0);
            ak * Complex64::from_polar(m as f64, k as f64 * theta0)
        })
        .sum())
}

/// The same integral as a sum over the m segments, each a geodesic rotated
/// by 2α(r0): Σ_k Σ_{l<m} e^{ik(θ0 + 2lα)} 𝒜_k a_k(r0).
pub fn pbrt_direct(w: &WaveSpeed, field: &FourierField, r0: f64, theta0: f64, m: u32) -> Result<Complex64> {
    let q = RayQuadrature::new(w, r0)?;
    let alpha = q.half_angle();
    Ok(field
        .modes()
        .iter()
        .map(|(&k, a)| {
            let ak = weighted_sum(&q, k, &|r| a.eval(r), None, 0);
            let rotations: Complex64 = (0..m)
                .map(|l| Complex64::from_polar(1.0, k as f64 * (theta0 + 2.0 * l as f64 * alpha)))
                .sum();
            ak * rotations
        })
        .sum())
}

/// Average over θ0 of the geodesic integrals with tip radius r: 𝒜₀a₀(r).
pub fn planar_average(w: &WaveSpeed, field: &FourierField, r: f64) -> Result<Complex64> {
    if r == 1.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = RayQuadrature::new(w, r)?;
    Ok(weighted_sum(&q, 0, &|s| field.coefficient(0, s), None, 0))
}


/// Planar average in three dimensions: the field is averaged over the great
/// circle of each sphere |x| = s lying in the plane with unit normal `normal`,
/// and 𝒜₀ is applied to that circle average at tip radius r.
pub fn planar_average_3d(w: &WaveSpeed, field: &ShellField, normal: &Vector3<f64>, r: f64) -> Result<Complex64> {
    let avgs = harmonic_circle_averages(field.l_max(), normal)?;
    if r == 1.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = RayQuadrature::new(w, r)?;
    let circle = |s: f64| -> Complex64 {
        field.at_radius(s).coefficients().iter().zip(&avgs).map(|(c, a)| c * a).sum()
    };
    Ok(weighted_sum(&q, 0, &circle, None, 0))
}
