//! Funk transform on S² for band-limited functions: averages over great
//! circles, its diagonal action on spherical harmonics, and recovery of the
//! even part.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};
use std::sync::OnceLock;

use nalgebra::{Rotation3, Unit, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::gauss_legendre;
use crate::transforms::field::{parse_mode, parse_num, read_records};

pub const CIRCLE_POINTS: usize = 256;
pub const DEFAULT_L_MAX: usize = 16;
const RESIDUAL_TOL: f64 = 1e-8;
const MIN_EIGENVALUE: f64 = 1e-12;

fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// All complex orthonormal harmonics Y_{l,m}(ω) for l ≤ l_max, Condon–Shortley
/// phase, ordered by (l, m) with m from −l to l.
pub fn spherical_harmonics(l_max: usize, dir: &Vector3<f64>) -> Vec<Complex64> {
    let n = dir.norm();
    let (x, y, z) = (dir.x / n, dir.y / n, dir.z / n);
    let sin_theta = (x * x + y * y).sqrt();
    let phi = y.atan2(x);
    let mut out = vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)];
    // normalized associated Legendre functions, column by column in m
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta;
        }
        let mut prev2 = 0.0;
        let mut prev = pmm;
        let phase = Complex64::from_polar(1.0, m as f64 * phi);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for l in m..=l_max {
            let p = if l == m {
                pmm
            } else {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = if l == m + 1 {
                    0.0
                } else {
                    let l1 = lf - 1.0;
                    ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt()
                };
                let v = a * (z * prev - b * prev2);
                prev2 = prev;
                prev = v;
                v
            };
            let y = phase * p;
            out[idx(l, m as i64)] = y;
            if m > 0 {
                out[idx(l, -(m as i64))] = sign * y.conj();
            }
        }
    }
    out
}

/// f(ω) = Σ_{l ≤ L, |m| ≤ l} f_{l,m} Y_{l,m}(ω).
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalField {
    l_max: usize,
    coeffs: Vec<Complex64>,
}

impl SphericalField {
    pub fn zeros(l_max: usize) -> Self {
        Self { l_max, coeffs: vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)] }
    }

    pub fn from_coefficients(l_max: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (l_max + 1) * (l_max + 1) {
            return Err(Error::InvalidInput(format!(
                "degree {l_max} needs {} coefficients, got {}",
                (l_max + 1) * (l_max + 1),
                coeffs.len()
            )));
        }
        Ok(Self { l_max, coeffs })
    }

    /// The single harmonic Y_{l,m}.
    pub fn harmonic(l_max: usize, l: usize, m: i64) -> Result<Self> {
        let mut f = Self::zeros(l_max);
        f.set(l, m, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if l > self.l_max || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[idx(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) -> Result<()> {
        if l > self.l_max || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidInput(format!("no harmonic ({l}, {m}) below degree {}", self.l_max)));
        }
        self.coeffs[idx(l, m)] = v;
        Ok(())
    }

    pub fn eval(&self, dir: &Vector3<f64>) -> Complex64 {
        spherical_harmonics(self.l_max, dir).iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// L² norm on the sphere (the harmonics are orthonormal).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// f_{l,−m} = (−1)^m conj(f_{l,m}) within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        (0..=self.l_max).all(|l| {
            (-(l as i64)..=l as i64).all(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (self.get(l, -m) - sign * self.get(l, m).conj()).norm() <= tol
            })
        })
    }

    fn filter_degrees(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            if !keep(l) {
                for m in -(l as i64)..=l as i64 {
                    out.coeffs[idx(l, m)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// Part with f(−ω) = f(ω): the even degrees.
    pub fn even_part(&self) -> Self {
        self.filter_degrees(|l| l % 2 == 0)
    }

    pub fn odd_part(&self) -> Self {
        self.filter_degrees(|l| l % 2 == 1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let l_max = self.l_max.max(other.l_max);
        let mut out = Self::zeros(l_max);
        for l in 0..=l_max {
            for m in -(l as i64)..=l as i64 {
                out.coeffs[idx(l, m)] = self.get(l, m) - other.get(l, m);
            }
        }
        out
    }

    /// g(ω) = f(Rᵀω), by sampling and projecting (exact for band-limited f).
    pub fn rotate(&self, rot: &Rotation3<f64>) -> Self {
        let inverse = rot.inverse();
        project(self.l_max, |dir| self.eval(&(inverse * dir))).0
    }

    /// Writes columns l, m, re, im.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wtr.write_record(["l", "m", "re", "im"]).map_err(io)?;
        for l in 0..=self.l_max {
            for m in -(l as i64)..=l as i64 {
                let v = self.get(l, m);
                wtr.write_record([l.to_string(), m.to_string(), format!("{:.17e}", v.re), format!("{:.17e}", v.im)])
                    .map_err(io)?;
            }
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for rec in read_records(input)? {
            let l = parse_mode(&rec[0])?;
            let m = parse_mode(&rec[1])?;
            if l < 0 || m.abs() > l {
                return Err(Error::InvalidInput(format!("no harmonic ({l}, {m})")));
            }
            entries.push((l as usize, m as i64, Complex64::new(parse_num(&rec[2])?, parse_num(&rec[3])?)));
        }
        let l_max = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut out = Self::zeros(l_max);
        for (l, m, v) in entries {
            out.set(l, m, v)?;
        }
        Ok(out)
    }
}

/// Gauss–Legendre nodes in cos θ times uniform longitudes, (2L+2)² points.
fn sphere_grid(l_max: usize) -> Vec<(Vector3<f64>, f64)> {
    let n = 2 * l_max + 2;
    let rule = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (z, wz) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - z * z).sqrt();
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            out.push((Vector3::new(s * phi.cos(), s * phi.sin(), *z), wz * TAU / n as f64));
        }
    }
    out
}

/// Projects `f` onto harmonics of degree ≤ l_max. Returns the field and the
/// energy left outside the band.
fn project(l_max: usize, f: impl Fn(&Vector3<f64>) -> Complex64 + Sync) -> (SphericalField, f64) {
    let grid = sphere_grid(l_max);
    let parts: Vec<(Vec<Complex64>, f64)> = grid
        .par_iter()
        .map(|(dir, wt)| {
            let v = f(dir);
            let ys = spherical_harmonics(l_max, dir);
            (ys.iter().map(|y| y.conj() * v * *wt).collect(), wt * v.norm_sqr())
        })
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)];
    let mut energy = 0.0;
    for (c, e) in parts {
        for (acc, v) in coeffs.iter_mut().zip(c) {
            *acc += v;
        }
        energy += e;
    }
    let field = SphericalField { l_max, coeffs };
    let captured = field.norm().powi(2);
    (field, (energy - captured).max(0.0))
}

/// Unit vectors spanning the plane orthogonal to `normal`.
pub fn plane_basis(normal: &Vector3<f64>) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let n = normal.norm();
    if !((n - 1.0).abs() <= 1e-10) {
        return Err(Error::InvalidInput(format!("plane normal must be a unit vector, has length {n}")));
    }
    let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = normal.cross(&helper).normalize();
    let e2 = normal.cross(&e1);
    Ok((e1, e2))
}

/// Points of the great circle orthogonal to `normal`, equally spaced.
pub fn great_circle(normal: &Vector3<f64>, n: usize) -> Result<Vec<Vector3<f64>>> {
    let (e1, e2) = plane_basis(normal)?;
    Ok((0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            e1 * t.cos() + e2 * t.sin()
        })
        .collect())
}

/// Average of every harmonic Y_{l,m} over the great circle orthogonal to `normal`.
pub fn harmonic_circle_averages(l_max: usize, normal: &Vector3<f64>) -> Result<Vec<Complex64>> {
    let mut acc = vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)];
    for p in great_circle(normal, CIRCLE_POINTS)? {
        for (a, y) in acc.iter_mut().zip(spherical_harmonics(l_max, &p)) {
            *a += y;
        }
    }
    for a in &mut acc {
        *a /= CIRCLE_POINTS as f64;
    }
    Ok(acc)
}

/// Average of the field over the great circle orthogonal to `normal`
/// (256-point trapezoid rule).
pub fn great_circle_average(field: &SphericalField, normal: &Vector3<f64>) -> Result<Complex64> {
    let avgs = harmonic_circle_averages(field.l_max, normal)?;
    Ok(avgs.iter().zip(&field.coeffs).map(|(a, c)| a * c).sum())
}

/// The Funk transform: great-circle averages as a function of the unit
/// normal, re-projected onto harmonics of the same degree bound. Off-band
/// energy is measured relative to ‖f‖².
pub fn funk_forward(field: &SphericalField) -> Result<SphericalField> {
    let (out, residual) = project(field.l_max, |n| {
        great_circle_average(field, n).expect("grid normals are unit vectors")
    });
    let scale = field.norm().powi(2);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::ProjectionResidual(residual / scale));
    }
    Ok(out)
}

/// μ_l: the factor by which the Funk transform scales degree-l harmonics,
/// measured as the average of Y_{l,0} over the equator divided by its value
/// at the pole.
pub fn funk_eigenvalues(l_max: usize) -> Vec<f64> {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    let cached = CACHE.get_or_init(|| compute_eigenvalues(DEFAULT_L_MAX.max(32)));
    if l_max < cached.len() {
        cached[..=l_max].to_vec()
    } else {
        compute_eigenvalues(l_max)
    }
}

fn compute_eigenvalues(l_max: usize) -> Vec<f64> {
    let pole = spherical_harmonics(l_max, &Vector3::z());
    let equator = harmonic_circle_averages(l_max, &Vector3::z()).expect("pole is a unit vector");
    (0..=l_max).map(|l| equator[idx(l, 0)].re / pole[idx(l, 0)].re).collect()
}

/// Recovers the even part of f from its Funk transform. Odd degrees lie in
/// the kernel and come back as zero.
pub fn funk_even_recover(transformed: &SphericalField) -> Result<SphericalField> {
    let mu = funk_eigenvalues(transformed.l_max);
    let mut out = SphericalField::zeros(transformed.l_max);
    for l in (0..=transformed.l_max).step_by(2) {
        if mu[l].abs() < MIN_EIGENVALUE {
            return Err(Error::IllConditioned(format!("Funk eigenvalue μ_{l} = {:e}", mu[l])));
        }
        for m in -(l as i64)..=l as i64 {
            out.coeffs[idx(l, m)] = transformed.get(l, m) / mu[l];
        }
    }
    Ok(out)
}

/// f(rω) = Σ a_{l,m}(r) Y_{l,m}(ω) on the 3D annulus R ≤ r ≤ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellField {
    inner: f64,
    l_max: usize,
    coeffs: Vec<GridFunction<Complex64>>,
}

impl ShellField {
    /// `coeff(l, m, r)` sampled on `grid`.
    pub fn from_fn(inner: f64, l_max: usize, grid: &[f64], coeff: impl Fn(usize, i64, f64) -> Complex64) -> Result<Self> {
        let mut coeffs = Vec::with_capacity((l_max + 1) * (l_max + 1));
        for l in 0..=l_max {
            for m in -(l as i64)..=l as i64 {
                coeffs.push(GridFunction::from_fn(grid.to_vec(), |r| coeff(l, m, r))?);
            }
        }
        Ok(Self { inner, l_max, coeffs })
    }

    /// The separable field a(r)·g(ω).
    pub fn separable(inner: f64, grid: &[f64], radial: impl Fn(f64) -> f64, angular: &SphericalField) -> Result<Self> {
        Self::from_fn(inner, angular.l_max, grid, |l, m, r| angular.get(l, m) * radial(r))
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// The angular field on the sphere of radius r.
    pub fn at_radius(&self, r: f64) -> SphericalField {
        SphericalField { l_max: self.l_max, coeffs: self.coeffs.iter().map(|a| a.eval(r)).collect() }
    }

    pub fn eval(&self, point: &Vector3<f64>) -> Complex64 {
        let r = point.norm();
        self.at_radius(r).eval(point)
    }

    /// Writes columns l, m, r, re, im.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wtr.write_record(["l", "m", "r", "re", "im"]).map_err(io)?;
        let mut it = self.coeffs.iter();
        for l in 0..=self.l_max {
            for m in -(l as i64)..=l as i64 {
                let a = it.next().expect("one profile per harmonic");
                for (r, v) in a.grid().iter().zip(a.values()) {
                    wtr.write_record([
                        l.to_string(),
                        m.to_string(),
                        format!("{r:.17e}"),
                        format!("{:.17e}", v.re),
                        format!("{:.17e}", v.im),
                    ])
                    .map_err(io)?;
                }
            }
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}

/// Unit normal of the plane spanned by two vectors.
pub fn plane_normal(u: &Vector3<f64>, v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = u.cross(v);
    if n.norm() < 1e-12 {
        return Err(Error::InvalidInput("plane vectors are parallel".into()));
    }
    Ok(n.normalize())
}

/// Rotation by `angle` about `axis`.
pub fn rotation(axis: &Vector3<f64>, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}
