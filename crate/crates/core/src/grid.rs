//! Sampled functions of one variable with local cubic interpolation, and
//! finite-difference stencils.

use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be interpolated linearly (real or complex samples).
pub trait Sample:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync + 'static
{
    fn zero() -> Self;
    fn finite(&self) -> bool;
    fn magnitude(&self) -> f64;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Samples on a strictly increasing grid, interpolated by the cubic through
/// the four nearest nodes (lower order when fewer nodes exist). Evaluation
/// outside the grid continues the end polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Sample = f64> {
    grid: Vec<f64>,
    values: Vec<T>,
}

impl<T: Sample> GridFunction<T> {
    pub fn new(grid: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidInput("grid needs at least two points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("grid must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> T) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn hi(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> T {
        let (start, w, count) = interpolation_weights(&self.grid, x);
        let mut acc = T::zero();
        for i in 0..count {
            acc = acc + self.values[start + i] * w[i];
        }
        acc
    }

    pub fn map<U: Sample>(&self, f: impl Fn(f64, T) -> U) -> GridFunction<U> {
        GridFunction {
            grid: self.grid.clone(),
            values: self.grid.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }
}

impl GridFunction<Complex64> {
    pub fn re(&self) -> GridFunction<f64> {
        self.map(|_, v| v.re)
    }

    pub fn im(&self) -> GridFunction<f64> {
        self.map(|_, v| v.im)
    }
}

impl GridFunction<f64> {
    /// Writes the two-column CSV form `x,value` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wtr.write_record(["x", "value"]).map_err(io)?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            wtr.write_record([format!("{x:.17e}"), format!("{v:.17e}")]).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::InvalidInput("missing CSV column".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(e.to_string()))
            };
            grid.push(field(0)?);
            values.push(field(1)?);
        }
        Self::new(grid, values)
    }
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    v[n - 1] = hi;
    v
}

/// Start index, Lagrange weights and stencil size for interpolating at `x`
/// from the (up to) four grid nodes nearest to it.
pub fn interpolation_weights(grid: &[f64], x: f64) -> (usize, [f64; 4], usize) {
    let n = grid.len();
    let count = n.min(4);
    let idx = grid.partition_point(|&g| g <= x);
    // interval [grid[idx-1], grid[idx]] contains x; take nodes idx-2..idx+1
    let mut start = idx.saturating_sub(2);
    if start + count > n {
        start = n - count;
    }
    let mut w = [0.0; 4];
    let nodes = &grid[start..start + count];
    for i in 0..count {
        let mut l = 1.0;
        for j in 0..count {
            if i != j {
                l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        w[i] = l;
    }
    (start, w, count)
}

/// Weights w_i with Σ w_i v_i = ∫ of the cubic interpolant of the v_i over
/// the whole grid.
pub fn integration_weights(grid: &[f64]) -> Vec<f64> {
    let rule = crate::quadrature::gauss_legendre(4);
    let mut weights = vec![0.0; grid.len()];
    for pair in grid.windows(2) {
        for (x, wq) in rule.mapped(pair[0], pair[1]) {
            let (start, w, count) = interpolation_weights(grid, x);
            for i in 0..count {
                weights[start + i] += wq * w[i];
            }
        }
    }
    weights
}

/// Fourth-order derivative estimate of `f` at `x` with step `h`. `side`
/// selects the stencil: 0 centred, +1 forward (uses x..x+4h), −1 backward.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, side: i8) -> f64 {
    match side {
        0 => (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h),
        s => {
            let h = if s > 0 { h } else { -h };
            (-25.0 * f(x) + 48.0 * f(x + h) - 36.0 * f(x + 2.0 * h) + 16.0 * f(x + 3.0 * h)
                - 3.0 * f(x + 4.0 * h))
                / (12.0 * h)
        }
    }
}

/// Fourth-order derivative of `f` at `x` using only points inside `[lo, hi]`.
pub fn derivative_within<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, lo: f64, hi: f64) -> f64 {
    if x - 2.0 * h >= lo && x + 2.0 * h <= hi {
        derivative(f, x, h, 0)
    } else if x + 4.0 * h <= hi {
        derivative(f, x, h, 1)
    } else {
        derivative(f, x, h, -1)
    }
}
