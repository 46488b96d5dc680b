//! Functions on the annulus stored through their angular Fourier modes.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{integration_weights, GridFunction};

/// f(r, θ) = Σ_k a_k(r) e^{ikθ}, all modes sampled on one radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    inner: f64,
    grid: Vec<f64>,
    modes: BTreeMap<i32, GridFunction<Complex64>>,
}

impl FourierField {
    pub fn new(inner: f64, modes: BTreeMap<i32, GridFunction<Complex64>>) -> Result<Self> {
        let grid = match modes.values().next() {
            Some(a) => a.grid().to_vec(),
            None => return Err(Error::InvalidInput("a Fourier field needs at least one mode".into())),
        };
        if modes.values().any(|a| a.grid() != grid.as_slice()) {
            return Err(Error::InvalidInput("all modes must share one radial grid".into()));
        }
        if grid[0] < inner - 1e-12 || *grid.last().unwrap() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain {
                value: grid[0],
                domain: format!("[{inner}, 1]"),
            });
        }
        Ok(Self { inner, grid, modes })
    }

    /// A single mode a(r) e^{ikθ}.
    pub fn single(inner: f64, k: i32, a: GridFunction<Complex64>) -> Result<Self> {
        Self::new(inner, BTreeMap::from([(k, a)]))
    }

    /// Modes given by closures on a shared grid.
    pub fn from_fns(
        inner: f64,
        grid: &[f64],
        modes: impl IntoIterator<Item = (i32, Box<dyn Fn(f64) -> Complex64>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, f) in modes {
            map.insert(k, GridFunction::from_fn(grid.to_vec(), f)?);
        }
        Self::new(inner, map)
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn modes(&self) -> &BTreeMap<i32, GridFunction<Complex64>> {
        &self.modes
    }

    pub fn mode(&self, k: i32) -> Option<&GridFunction<Complex64>> {
        self.modes.get(&k)
    }

    pub fn k_max(&self) -> i32 {
        self.modes.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// a_k(r), zero for absent modes.
    pub fn coefficient(&self, k: i32, r: f64) -> Complex64 {
        self.modes.get(&k).map_or(Complex64::new(0.0, 0.0), |a| a.eval(r))
    }

    pub fn eval(&self, r: f64, theta: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|(&k, a)| a.eval(r) * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// True if a_{−k} = conj(a_k) within `tol`, i.e. the field is real.
    pub fn is_real(&self, tol: f64) -> bool {
        self.modes.iter().all(|(&k, a)| {
            let partner = self.modes.get(&-k);
            a.values().iter().enumerate().all(|(i, v)| {
                let other = partner.map_or(Complex64::new(0.0, 0.0), |b| b.values()[i]);
                (v - other.conj()).norm() <= tol
            })
        })
    }

    /// ∫∫ |f|² r dr dθ = 2π Σ_k ∫ |a_k|² r dr, with the radial integral of the
    /// cubic interpolant of the nodal values.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = integration_weights(&self.grid);
        TAU * self
            .modes
            .values()
            .map(|a| {
                a.values()
                    .iter()
                    .zip(&self.grid)
                    .zip(&w)
                    .map(|((v, r), w)| w * v.norm_sqr() * r)
                    .sum::<f64>()
            })
            .sum::<f64>()
    }

    /// Writes columns k, r, re, im.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wtr.write_record(["k", "r", "re", "im"]).map_err(io)?;
        for (k, a) in &self.modes {
            for (r, v) in a.grid().iter().zip(a.values()) {
                wtr.write_record([
                    k.to_string(),
                    format!("{r:.17e}"),
                    format!("{:.17e}", v.re),
                    format!("{:.17e}", v.im),
                ])
                .map_err(io)?;
            }
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(inner: f64, input: R) -> Result<Self> {
        let mut rows: BTreeMap<i32, (Vec<f64>, Vec<Complex64>)> = BTreeMap::new();
        for rec in read_records(input)? {
            let k = parse_mode(&rec[0])?;
            let entry = rows.entry(k).or_default();
            entry.0.push(parse_num(&rec[1])?);
            entry.1.push(Complex64::new(parse_num(&rec[2])?, parse_num(&rec[3])?));
        }
        let mut modes = BTreeMap::new();
        for (k, (grid, vals)) in rows {
            modes.insert(k, GridFunction::new(grid, vals)?);
        }
        Self::new(inner, modes)
    }
}

pub(crate) fn read_records<R: Read>(input: R) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
        if rec.len() < 4 {
            return Err(Error::InvalidInput(format!("expected 4 columns, found {}", rec.len())));
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

pub(crate) fn parse_num(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
}

pub(crate) fn parse_mode(s: &str) -> Result<i32> {
    s.parse::<i32>().map_err(|e| Error::InvalidInput(format!("bad mode {s:?}: {e}")))
}

/// Values f(r_i, θ_j) with θ_j = 2πj / n_theta.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSamples {
    pub radii: Vec<f64>,
    pub n_theta: usize,
    pub values: Vec<Vec<Complex64>>,
}

impl PolarSamples {
    pub fn from_fn(radii: &[f64], n_theta: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = radii
            .iter()
            .map(|&r| (0..n_theta).map(|j| f(r, TAU * j as f64 / n_theta as f64)).collect())
            .collect();
        Self { radii: radii.to_vec(), n_theta, values }
    }

    pub fn from_real_fn(radii: &[f64], n_theta: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(radii, n_theta, |r, t| Complex64::new(f(r, t), 0.0))
    }

    /// ∫∫ |f|² r dr dθ with the trapezoid rule in θ and the interpolant rule in r.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = integration_weights(&self.radii);
        self.radii
            .iter()
            .zip(&self.values)
            .zip(&w)
            .map(|((r, row), w)| {
                let mean = row.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.n_theta as f64;
                w * TAU * mean * r
            })
            .sum()
    }
}

/// a_k(r_i) = (1/N) Σ_j f(r_i, θ_j) e^{−ikθ_j} for |k| ≤ k_max. The flag is
/// raised (and logged) when the modes at |k| = k_max carry more than 1% of the
/// energy, a sign that the field is not resolved by k_max.
pub fn fourier_decompose(inner: f64, samples: &PolarSamples, k_max: i32) -> Result<(FourierField, bool)> {
    if k_max < 0 {
        return Err(Error::InvalidInput(format!("k_max must be non-negative, got {k_max}")));
    }
    let n = samples.n_theta;
    if n < (4 * k_max.max(1)) as usize {
        return Err(Error::InvalidInput(format!(
            "{n} angular samples cannot resolve modes up to {k_max} (need at least {})",
            4 * k_max.max(1)
        )));
    }
    if samples.values.len() != samples.radii.len() || samples.values.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("sample array does not match its grid".into()));
    }
    let mut modes = BTreeMap::new();
    for k in -k_max..=k_max {
        let vals: Vec<Complex64> = samples
            .values
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -TAU * (k as f64) * j as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        modes.insert(k, GridFunction::new(samples.radii.clone(), vals)?);
    }
    let field = FourierField::new(inner, modes)?;
    let energy = |k: i32| field.mode(k).map_or(0.0, |a| a.values().iter().map(|v| v.norm_sqr()).sum::<f64>());
    let total: f64 = field.modes.keys().map(|&k| energy(k)).sum();
    let edge = energy(k_max) + if k_max > 0 { energy(-k_max) } else { 0.0 };
    let alias_risk = k_max > 0 && total > 0.0 && edge > 0.01 * total;
    if alias_risk {
        log::warn!("modes at |k| = {k_max} carry {:.1}% of the energy; K_max may be too small", 100.0 * edge / total);
    }
    Ok((field, alias_risk))
}

/// Samples the field on its radial grid at n_theta equispaced angles.
pub fn fourier_synthesize(field: &FourierField, n_theta: usize) -> PolarSamples {
    let mut values = vec![vec![Complex64::new(0.0, 0.0); n_theta]; field.grid.len()];
    for (&k, a) in &field.modes {
        for (i, v) in a.values().iter().enumerate() {
            for (j, out) in values[i].iter_mut().enumerate() {
                *out += v * Complex64::from_polar(1.0, TAU * k as f64 * j as f64 / n_theta as f64);
            }
        }
    }
    PolarSamples { radii: field.grid.clone(), n_theta, values }
}
