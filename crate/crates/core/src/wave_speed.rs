//! Piecewise-polynomial radial wave speeds on (R, 1] and the turning
//! parameter ρ(r) = r / c(r).

use crate::error::{Error, Result};

/// Points per segment used when a profile is validated at construction.
pub const DEFAULT_CHECK_POINTS: usize = 10_000;

/// Cubic (or lower degree) polynomial c0 + c1 r + c2 r² + c3 r³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn from_slice(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > 4 {
            return Err(Error::InvalidProfile(format!(
                "expected 1 to 4 polynomial coefficients, got {}",
                coeffs.len()
            )));
        }
        let mut c = [0.0; 4];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Cubic(c))
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let c = &self.0;
        ((c[3] * r + c[2]) * r + c[1]) * r + c[0]
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        let c = &self.0;
        (3.0 * c[3] * r + 2.0 * c[2]) * r + c[1]
    }

    /// (p(x) − p(y)) / (x − y), evaluated without cancellation.
    #[inline]
    pub fn divided_difference(&self, x: f64, y: f64) -> f64 {
        let c = &self.0;
        c[1] + c[2] * (x + y) + c[3] * (x * x + x * y + y * y)
    }

    /// Real roots of the derivative (critical points).
    fn critical_points(&self) -> Vec<f64> {
        quadratic_roots(3.0 * self.0[3], 2.0 * self.0[2], self.0[1])
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = vec![q / a];
    if q != 0.0 {
        out.push(c / q);
    }
    out
}

/// One layer: the speed is `poly` on the half-open interval (a, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub poly: Cubic,
}

impl Segment {
    pub fn new(a: f64, b: f64, coeffs: &[f64]) -> Result<Self> {
        Ok(Segment { a, b, poly: Cubic::from_slice(coeffs)? })
    }

    #[inline]
    pub fn c(&self, r: f64) -> f64 {
        self.poly.eval(r)
    }

    #[inline]
    pub fn dc(&self, r: f64) -> f64 {
        self.poly.derivative(r)
    }

    #[inline]
    pub fn rho(&self, r: f64) -> f64 {
        r / self.poly.eval(r)
    }

    #[inline]
    pub fn drho(&self, r: f64) -> f64 {
        let c = self.poly.eval(r);
        (c - r * self.poly.derivative(r)) / (c * c)
    }

    /// Numerator c − r c′ of ρ′ (a cubic c0 − c2 r² − 2 c3 r³).
    fn herglotz_numerator(&self, r: f64) -> f64 {
        let c = &self.poly.0;
        c[0] - c[2] * r * r - 2.0 * c[3] * r * r * r
    }

    /// Exact minimum of c − r c′ over [a, b].
    fn herglotz_numerator_min(&self) -> f64 {
        let c = &self.poly.0;
        let mut candidates = vec![self.a, self.b];
        candidates.extend(quadratic_roots(-6.0 * c[3], -2.0 * c[2], 0.0));
        candidates
            .into_iter()
            .filter(|r| *r >= self.a && *r <= self.b)
            .map(|r| self.herglotz_numerator(r))
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves ρ(r) = p for r in [lo, hi], assuming ρ increasing there.
    pub fn rho_inverse_in(&self, p: f64, lo: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        let (flo, fhi) = (self.rho(lo) - p, self.rho(hi) - p);
        if flo >= 0.0 {
            return lo;
        }
        if fhi <= 0.0 {
            return hi;
        }
        let mut r = lo + (hi - lo) * (-flo) / (fhi - flo);
        for _ in 0..200 {
            let f = self.rho(r) - p;
            if f.abs() <= 1e-16 * p.abs().max(1.0) {
                return r;
            }
            if f < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let step = f / self.drho(r);
            let next = r - step;
            r = if next > lo && next < hi && step.is_finite() { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs() || step.abs() <= 1e-17 {
                return r;
            }
        }
        r
    }
}

/// Result of validating the Herglotz and jump conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzReport {
    pub pass: bool,
    pub min_herglotz_margin: f64,
    pub jump_violations: Vec<(f64, f64)>,
    pub notes: String,
}

/// Radial wave speed on (R, 1], piecewise polynomial on half-open segments.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpeed {
    inner: f64,
    segments: Vec<Segment>,
    herglotz: bool,
}

impl WaveSpeed {
    /// Builds a profile after checking that the segments tile (R, 1] and the
    /// speed is positive.
    pub fn new(inner: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(inner > 0.0 && inner < 1.0) {
            return Err(Error::InvalidProfile(format!("inner radius {inner} not in (0,1)")));
        }
        if segments.is_empty() {
            return Err(Error::InvalidProfile("no segments".into()));
        }
        if segments[0].a != inner {
            return Err(Error::InvalidProfile(format!(
                "first segment starts at {} instead of R = {inner}",
                segments[0].a
            )));
        }
        if segments.last().unwrap().b != 1.0 {
            return Err(Error::InvalidProfile("last segment must end at 1".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.b > s.a) {
                return Err(Error::InvalidProfile(format!("segment {i} is empty or reversed")));
            }
            if i > 0 && segments[i - 1].b != s.a {
                return Err(Error::InvalidProfile(format!(
                    "segments {} and {i} leave a gap or overlap at {}",
                    i - 1,
                    s.a
                )));
            }
            if s.poly.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidProfile(format!("segment {i} has non-finite coefficients")));
            }
            let mut candidates = vec![s.a, s.b];
            candidates.extend(s.poly.critical_points().into_iter().filter(|r| *r > s.a && *r < s.b));
            let n = 1000;
            candidates.extend((0..=n).map(|k| s.a + (s.b - s.a) * k as f64 / n as f64));
            if let Some(r) = candidates.into_iter().find(|&r| !(s.c(r) > 0.0)) {
                return Err(Error::InvalidProfile(format!(
                    "speed is not positive at r = {r} in segment {i}"
                )));
            }
        }
        let mut w = WaveSpeed { inner, segments, herglotz: false };
        w.herglotz = w.check_herglotz(DEFAULT_CHECK_POINTS).pass;
        Ok(w)
    }

    /// Constant speed `c` on (R, 1].
    pub fn constant(inner: f64, c: f64) -> Result<Self> {
        Self::new(inner, vec![Segment::new(inner, 1.0, &[c])?])
    }

    /// Builds from `(a, b, coeffs)` triples.
    pub fn from_layers(inner: f64, layers: &[(f64, f64, &[f64])]) -> Result<Self> {
        let segs = layers
            .iter()
            .map(|(a, b, c)| Segment::new(*a, *b, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(inner, segs)
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Interior breakpoints (segment boundaries other than R and 1).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.b).collect()
    }

    pub fn satisfies_herglotz(&self) -> bool {
        self.herglotz
    }

    pub(crate) fn require_herglotz(&self) -> Result<()> {
        if self.herglotz {
            Ok(())
        } else {
            Err(Error::InvalidProfile("profile violates the Herglotz or jump condition".into()))
        }
    }

    /// True if the speed has a jump at some interior breakpoint.
    pub fn has_jumps(&self) -> bool {
        self.segments.windows(2).any(|w| w[0].c(w[0].b) != w[1].c(w[0].b))
    }

    /// Index of the segment whose (a, b] contains `r`.
    pub fn segment_index(&self, r: f64) -> Result<usize> {
        if !(r > self.inner && r <= 1.0) {
            return Err(Error::OutOfDomain { value: r, domain: format!("({}, 1]", self.inner) });
        }
        Ok(self.segments.partition_point(|s| s.b < r))
    }

    pub fn eval_c(&self, r: f64) -> Result<f64> {
        Ok(self.segments[self.segment_index(r)?].c(r))
    }

    pub fn eval_dc(&self, r: f64) -> Result<f64> {
        Ok(self.segments[self.segment_index(r)?].dc(r))
    }

    pub fn rho(&self, r: f64) -> Result<f64> {
        Ok(self.segments[self.segment_index(r)?].rho(r))
    }

    pub fn rho_prime(&self, r: f64) -> Result<f64> {
        Ok(self.segments[self.segment_index(r)?].drho(r))
    }

    /// ρ(R⁺), the infimum of attainable turning parameters.
    pub fn rho_min(&self) -> f64 {
        self.segments[0].rho(self.inner)
    }

    /// ρ(1).
    pub fn rho_max(&self) -> f64 {
        let s = self.segments.last().unwrap();
        s.rho(1.0)
    }

    /// ρ-intervals (ρ(a⁺), ρ(b)] covered by each segment.
    pub fn rho_ranges(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|s| (s.rho(s.a), s.rho(s.b))).collect()
    }

    /// Jump gaps (ρ(a), ρ(a⁺)) with their breakpoint, for breakpoints where ρ jumps.
    pub fn rho_gaps(&self) -> Vec<(f64, f64, f64)> {
        self.segments
            .windows(2)
            .filter_map(|w| {
                let a = w[0].b;
                let (left, right) = (w[0].rho(a), w[1].rho(a));
                (right > left).then_some((left, right, a))
            })
            .collect()
    }

    /// Unique r with ρ(r) = p.
    pub fn rho_inverse(&self, p: f64) -> Result<f64> {
        self.require_herglotz()?;
        let s = &self.segments[self.rho_segment(p)?];
        Ok(s.rho_inverse_in(p, s.a, s.b))
    }

    /// Segment containing the tip with turning parameter `p`.
    pub fn rho_segment(&self, p: f64) -> Result<usize> {
        if !(p > self.rho_min() && p <= self.rho_max()) {
            return Err(Error::OutOfRange(p));
        }
        for (j, s) in self.segments.iter().enumerate() {
            let (lo, hi) = (s.rho(s.a), s.rho(s.b));
            if j > 0 && p > self.segments[j - 1].rho(s.a) && p <= lo {
                return Err(Error::JumpTangency { p, breakpoint: s.a });
            }
            if p > lo && p <= hi {
                return Ok(j);
            }
        }
        Err(Error::OutOfRange(p))
    }

    pub fn check_herglotz(&self, grid_points: usize) -> HerglotzReport {
        let n = grid_points.max(100);
        let mut margin = f64::INFINITY;
        let mut notes = Vec::new();
        let mut exact_fail = false;
        for (i, s) in self.segments.iter().enumerate() {
            for k in 0..=n {
                let r = s.a + (s.b - s.a) * k as f64 / n as f64;
                margin = margin.min(s.drho(r));
            }
            if s.herglotz_numerator_min() <= 0.0 {
                exact_fail = true;
                notes.push(format!("segment {i}: c − r c′ vanishes or changes sign on [{}, {}]", s.a, s.b));
            }
        }
        let mut jump_violations = Vec::new();
        for w in self.segments.windows(2) {
            let a = w[0].b;
            let excess = w[1].c(a) - w[0].c(a);
            if excess > 1e-12 * w[0].c(a).abs() {
                jump_violations.push((a, excess));
                notes.push(format!("jump at {a}: speed increases by {excess}"));
            }
        }
        let pass = margin > 0.0 && !exact_fail && jump_violations.is_empty();
        HerglotzReport { pass, min_herglotz_margin: margin, jump_violations, notes: notes.join("; ") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump_profile() -> WaveSpeed {
        WaveSpeed::from_layers(0.2, &[(0.2, 0.5, &[1.2]), (0.5, 1.0, &[1.0])]).unwrap()
    }

    #[test]
    fn evaluates_with_half_open_convention() {
        let w = jump_profile();
        assert_eq!(w.eval_c(0.5).unwrap(), 1.2);
        assert_eq!(w.eval_c(0.500001).unwrap(), 1.0);
        assert_eq!(WaveSpeed::constant(0.1, 1.0).unwrap().eval_c(0.5).unwrap(), 1.0);
        assert!(matches!(w.eval_c(0.2), Err(Error::OutOfDomain { .. })));
        assert!(matches!(w.eval_c(1.01), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn rho_examples() {
        let w = WaveSpeed::constant(0.1, 1.0).unwrap();
        assert_eq!(w.rho(0.7).unwrap(), 0.7);
        assert_eq!(w.rho_prime(0.7).unwrap(), 1.0);
        let lin = WaveSpeed::from_layers(0.2, &[(0.2, 1.0, &[2.0, -1.0])]).unwrap();
        assert!((lin.rho(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((lin.rho_inverse(1.0 / 3.0).unwrap() - 0.5).abs() < 1e-12);
        let j = jump_profile();
        assert!((j.rho(0.5).unwrap() - 0.5 / 1.2).abs() < 1e-15);
        assert!((j.rho(0.5 + 1e-12).unwrap() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn rho_inverse_reports_gap_and_range() {
        let j = jump_profile();
        assert!(matches!(j.rho_inverse(0.45), Err(Error::JumpTangency { .. })));
        assert!((j.rho_inverse(0.5 / 1.2).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(j.rho_inverse(1.5), Err(Error::OutOfRange(_))));
        assert!(matches!(j.rho_inverse(0.1), Err(Error::OutOfRange(_))));
        assert!((WaveSpeed::constant(0.1, 1.0).unwrap().rho_inverse(0.3).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn herglotz_examples() {
        let e = WaveSpeed::constant(0.1, 1.0).unwrap().check_herglotz(1000);
        assert!(e.pass);
        assert_eq!(e.min_herglotz_margin, 1.0);
        let bad = WaveSpeed::from_layers(0.1, &[(0.1, 1.0, &[0.0, 2.0])]).unwrap();
        let rep = bad.check_herglotz(1000);
        assert!(!rep.pass);
        assert_eq!(rep.min_herglotz_margin, 0.0);
        assert!(bad.rho_inverse(0.5).is_err());
        let up = WaveSpeed::from_layers(0.2, &[(0.2, 0.5, &[1.0]), (0.5, 1.0, &[1.2])]).unwrap();
        let rep = up.check_herglotz(1000);
        assert!(!rep.pass);
        assert_eq!(rep.jump_violations.len(), 1);
        assert_eq!(rep.jump_violations[0].0, 0.5);
        assert!((rep.jump_violations[0].1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn construction_rejects_bad_tilings() {
        assert!(WaveSpeed::from_layers(0.2, &[(0.2, 0.5, &[1.0]), (0.6, 1.0, &[1.0])]).is_err());
        assert!(WaveSpeed::from_layers(0.2, &[(0.2, 0.9, &[1.0])]).is_err());
        assert!(WaveSpeed::from_layers(0.2, &[(0.3, 1.0, &[1.0])]).is_err());
        assert!(WaveSpeed::from_layers(0.2, &[(0.2, 1.0, &[1.0, -1.0])]).is_err());
    }

    #[test]
    fn exact_check_catches_failure_between_grid_points() {
        // c − r c′ = −1e−9 + (r − 0.6)² + O((r − 0.6)³): negative only very close to 0.6
        let c3 = -1.0 / 1.8;
        let w = WaveSpeed::from_layers(0.1, &[(0.1, 1.0, &[0.12 - 1e-9, 0.0, 1.0, c3])]).unwrap();
        let rep = w.check_herglotz(100);
        assert!(rep.min_herglotz_margin > 0.0);
        assert!(!rep.pass);
    }
}
