//! Mode-wise forward transforms 𝒜_k, 𝒜^λ_k and the X-ray transform.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesics::{GeodesicSpec, RayQuadrature};
use crate::grid::{GridFunction, Sample};
use crate::wave_speed::WaveSpeed;

use super::field::{parse_mode, parse_num, read_records, FourierField};

/// A radial Lipschitz attenuation λ(r).
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationProfile {
    lambda: GridFunction,
    lipschitz: f64,
}

impl AttenuationProfile {
    /// Checks the sampled difference quotients against the declared bound.
    pub fn new(lambda: GridFunction, lipschitz: f64) -> Result<Self> {
        let worst = lambda
            .grid()
            .windows(2)
            .zip(lambda.values().windows(2))
            .map(|(x, v)| (v[1] - v[0]).abs() / (x[1] - x[0]))
            .fold(0.0, f64::max);
        if worst > lipschitz + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "attenuation has difference quotient {worst} above its Lipschitz bound {lipschitz}"
            )));
        }
        Ok(Self { lambda, lipschitz })
    }

    /// Samples `f` on `grid` and takes the largest difference quotient as the bound.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let lambda = GridFunction::from_fn(grid, f)?;
        let lip = lambda
            .grid()
            .windows(2)
            .zip(lambda.values().windows(2))
            .map(|(x, v)| (v[1] - v[0]).abs() / (x[1] - x[0]))
            .fold(0.0, f64::max);
        Self::new(lambda, lip)
    }

    pub fn constant(inner: f64, value: f64) -> Result<Self> {
        Self::new(GridFunction::new(vec![inner, 1.0], vec![value, value])?, 0.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.lambda.eval(r)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn profile(&self) -> &GridFunction {
        &self.lambda
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.values().iter().all(|v| *v == 0.0)
    }
}

/// 2 Σ_i w_i a(s_i) cos(k ω_i) cosh(F_i) over the nodes of `q` from `first` on.
pub(crate) fn weighted_sum<T: Sample>(
    q: &RayQuadrature,
    k: i32,
    a: &dyn Fn(f64) -> T,
    cumulative_lambda: Option<&[f64]>,
    first: usize,
) -> T {
    let mut acc = T::zero();
    let (radii, weights, angles) = (q.radii(), q.weights(), q.angles());
    for i in first..radii.len() {
        let mut factor = 2.0 * weights[i] * (k as f64 * angles[i]).cos();
        if let Some(cum) = cumulative_lambda {
            factor *= cum[i].cosh();
        }
        acc = acc + a(radii[i]) * factor;
    }
    acc
}

/// 𝒜_k a(r0) = 2∫_{r0}^1 a(r) T_k(r; r0) H(r; r0) dr; zero at r0 = 1.
pub fn mode_forward_at<T: Sample>(w: &WaveSpeed, k: i32, a: &dyn Fn(f64) -> T, r0: f64) -> Result<T> {
    if r0 == 1.0 {
        return Ok(T::zero());
    }
    let q = RayQuadrature::new(w, r0)?;
    Ok(weighted_sum(&q, k, a, None, 0))
}

/// 𝒜_k a at every tip radius in `tips`.
pub fn mode_forward<T: Sample>(w: &WaveSpeed, k: i32, a: &GridFunction<T>, tips: &[f64]) -> Result<GridFunction<T>> {
    let values = tips
        .par_iter()
        .map(|&r0| mode_forward_at(w, k, &|r| a.eval(r), r0))
        .collect::<Result<Vec<T>>>()?;
    GridFunction::new(tips.to_vec(), values)
}

/// Λ^λ(r; r0) = cosh ∫_{r0}^r λ(u) H(u; r0) du.
pub fn attenuation_lambda(w: &WaveSpeed, lam: &AttenuationProfile, r: f64, r0: f64) -> Result<f64> {
    if !(r >= r0 && r <= 1.0) {
        return Err(Error::OutOfDomain { value: r, domain: format!("[{r0}, 1]") });
    }
    let q = RayQuadrature::new(w, r0)?;
    Ok(q.integrate_to(r, |s| lam.eval(s)).cosh())
}

/// E^λ(r0) = exp ∫_{r0}^1 λ(s) H(s; r0) ds.
pub fn attenuation_e(w: &WaveSpeed, lam: &AttenuationProfile, r0: f64) -> Result<f64> {
    if r0 == 1.0 {
        return Ok(1.0);
    }
    let q = RayQuadrature::new(w, r0)?;
    Ok(q.integrate(|s| lam.eval(s)).exp())
}

/// 𝒜^λ_k a(r0) = 2∫_{r0}^1 a(r) Λ^λ(r; r0) T_k(r; r0) H(r; r0) dr.
pub fn mode_forward_attenuated_at<T: Sample>(
    w: &WaveSpeed,
    lam: &AttenuationProfile,
    k: i32,
    a: &dyn Fn(f64) -> T,
    r0: f64,
) -> Result<T> {
    if r0 == 1.0 {
        return Ok(T::zero());
    }
    let q = RayQuadrature::new(w, r0)?;
    let (cum, _) = q.cumulative(|s| lam.eval(s));
    Ok(weighted_sum(&q, k, a, Some(&cum), 0))
}

pub fn mode_forward_attenuated<T: Sample>(
    w: &WaveSpeed,
    lam: &AttenuationProfile,
    k: i32,
    a: &GridFunction<T>,
    tips: &[f64],
) -> Result<GridFunction<T>> {
    let values = tips
        .par_iter()
        .map(|&r0| mode_forward_attenuated_at(w, lam, k, &|r| a.eval(r), r0))
        .collect::<Result<Vec<T>>>()?;
    GridFunction::new(tips.to_vec(), values)
}

/// Mode coefficients of the X-ray transform at one tip: 𝒜_k a_k(r0), or
/// 2E^λ(r0) 𝒜^λ_k a_k(r0) with attenuation.
fn tip_coefficients(
    w: &WaveSpeed,
    field: &FourierField,
    lam: Option<&AttenuationProfile>,
    r0: f64,
) -> Result<BTreeMap<i32, Complex64>> {
    if r0 == 1.0 {
        return Ok(field.modes().keys().map(|&k| (k, Complex64::new(0.0, 0.0))).collect());
    }
    let q = RayQuadrature::new(w, r0)?;
    let cum = lam.map(|l| q.cumulative(|s| l.eval(s)));
    let mut out = BTreeMap::new();
    for (&k, a) in field.modes() {
        let sum = weighted_sum(&q, k, &|r| a.eval(r), cum.as_ref().map(|c| c.0.as_slice()), 0);
        let scale = cum.as_ref().map_or(1.0, |c| 2.0 * c.1.exp());
        out.insert(k, sum * scale);
    }
    Ok(out)
}

/// Integral of the field over the geodesic `spec`. With attenuation this is
/// the symmetrized sum I₊ + I₋ of the two traversal directions.
pub fn xray_forward(
    w: &WaveSpeed,
    field: &FourierField,
    spec: &GeodesicSpec,
    lam: Option<&AttenuationProfile>,
) -> Result<Complex64> {
    let coeffs = tip_coefficients(w, field, lam, spec.r0)?;
    Ok(coeffs
        .iter()
        .map(|(&k, v)| v * Complex64::from_polar(1.0, k as f64 * spec.theta0))
        .sum())
}

/// Mode-k data g_k on a tip grid. Tips tangent to a jump surface are masked
/// (`r0 = None`) and carry no value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub k: i32,
    pub rho: Vec<f64>,
    pub r0: Vec<Option<f64>>,
    pub values: Vec<Complex64>,
}

impl Sinogram {
    /// Unmasked (ρ, r0, value) triples.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.rho
            .iter()
            .zip(&self.r0)
            .zip(&self.values)
            .filter_map(|((&p, r), &v)| r.map(|r| (p, r, v)))
    }
}

/// n tips uniform in ρ on (ρ(R⁺), ρ(1)]; tips whose ρ falls in a jump gap or
/// on a jump surface are masked.
pub fn tip_grid(w: &WaveSpeed, n: usize) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    w.require_herglotz()?;
    if n < 2 {
        return Err(Error::InvalidInput("tip grid needs at least two points".into()));
    }
    let (lo, hi) = (w.rho_min(), w.rho_max());
    let mut rho = Vec::with_capacity(n);
    let mut tips = Vec::with_capacity(n);
    for i in 1..=n {
        let p = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
        let tip = if i == n {
            Some(1.0)
        } else {
            match w.rho_inverse(p) {
                Ok(r) if crate::geodesics::tip_segment(w, r).is_ok() => Some(r),
                Ok(_) | Err(Error::JumpTangency { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        rho.push(p);
        tips.push(tip);
    }
    Ok((rho, tips))
}

/// Mode sinograms of the X-ray transform (attenuated if `lam` is given) on
/// the uniform-ρ tip grid with n points.
pub fn sinograms(
    w: &WaveSpeed,
    field: &FourierField,
    n: usize,
    lam: Option<&AttenuationProfile>,
) -> Result<BTreeMap<i32, Sinogram>> {
    let (rho, tips) = tip_grid(w, n)?;
    let per_tip: Vec<Option<BTreeMap<i32, Complex64>>> = tips
        .par_iter()
        .map(|tip| tip.map(|r0| tip_coefficients(w, field, lam, r0)).transpose())
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for &k in field.modes().keys() {
        let values = per_tip
            .iter()
            .map(|c| c.as_ref().map_or(Complex64::new(0.0, 0.0), |c| c[&k]))
            .collect();
        out.insert(k, Sinogram { k, rho: rho.clone(), r0: tips.clone(), values });
    }
    Ok(out)
}

/// Writes columns k, r0, re, im; masked tips are omitted.
pub fn write_sinograms_csv<W: Write>(sinos: &BTreeMap<i32, Sinogram>, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    wtr.write_record(["k", "r0", "re", "im"]).map_err(io)?;
    for (k, s) in sinos {
        for (_, r0, v) in s.samples() {
            wtr.write_record([
                k.to_string(),
                format!("{r0:.17e}"),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(())
}

/// Reads sinograms written by [`write_sinograms_csv`]; ρ is recomputed from r0.
pub fn read_sinograms_csv<R: Read>(w: &WaveSpeed, input: R) -> Result<BTreeMap<i32, Sinogram>> {
    let mut out: BTreeMap<i32, Sinogram> = BTreeMap::new();
    for rec in read_records(input)? {
        let k = parse_mode(&rec[0])?;
        let r0 = parse_num(&rec[1])?;
        let v = Complex64::new(parse_num(&rec[2])?, parse_num(&rec[3])?);
        let s = out.entry(k).or_insert_with(|| Sinogram { k, rho: vec![], r0: vec![], values: vec![] });
        s.rho.push(w.rho(r0)?);
        s.r0.push(Some(r0));
        s.values.push(v);
    }
    Ok(out)
}
