//! Piecewise-linear temporal power profiles of probe pulses.
//!
//! Power is in photons per second, so integrals are photon numbers. Knots may
//! repeat a time value to encode a step (square pulse edges).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PulseEnvelope {
    knots: Vec<(f64, f64)>,
}

impl PulseEnvelope {
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.iter().any(|&(t, p)| !t.is_finite() || !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("envelope", "knots must be finite with nonnegative power"));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("envelope", "knot times must be nondecreasing"));
        }
        Ok(Self { knots })
    }

    pub fn empty() -> Self {
        Self { knots: Vec::new() }
    }

    /// Rectangular pulse carrying `energy` photons.
    pub fn square(start: f64, width: f64, energy: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid("envelope", "width must be positive"));
        }
        let p = energy / width;
        Self::from_knots(vec![(start, 0.0), (start, p), (start + width, p), (start + width, 0.0)])
    }

    /// Symmetric triangle peaking at the midpoint.
    pub fn triangular(start: f64, width: f64, energy: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid("envelope", "width must be positive"));
        }
        let peak = 2.0 * energy / width;
        Self::from_knots(vec![(start, 0.0), (start + width / 2.0, peak), (start + width, 0.0)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn energy(&self) -> f64 {
        self.integral(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        self.segments()
            .filter_map(|s| s.clip(a, b))
            .map(|((t0, p0), (t1, p1))| 0.5 * (p0 + p1) * (t1 - t0))
            .sum()
    }

    /// The part of the pulse inside `[a, b]`, zero elsewhere.
    pub fn restricted(&self, a: f64, b: f64) -> Self {
        if !(b > a) {
            return Self::empty();
        }
        let mut knots = Vec::new();
        for (lo, hi) in self.segments().filter_map(|s| s.clip(a, b)) {
            if knots.is_empty() {
                knots.push((lo.0, 0.0));
            }
            knots.push(lo);
            knots.push(hi);
        }
        if let Some(&(t, _)) = knots.last() {
            knots.push((t, 0.0));
        }
        Self { knots }
    }

    /// The part of the pulse outside `[a, b]`.
    pub fn excluding(&self, a: f64, b: f64) -> Self {
        let mut knots = self.restricted(f64::NEG_INFINITY, a).knots;
        knots.extend(self.restricted(b.max(a), f64::INFINITY).knots);
        Self { knots }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            knots: self.knots.iter().map(|&(t, p)| (t + dt, p)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0, "envelope scale must be nonnegative");
        Self {
            knots: self.knots.iter().map(|&(t, p)| (t, p * c)).collect(),
        }
    }

    /// Right-continuous power at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.segments()
            .find(|s| s.t0 <= t && t < s.t1)
            .map(|s| s.at(t))
            .unwrap_or(0.0)
    }

    /// First and last time with nonzero power.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut lo = None;
        let mut hi = None;
        for s in self.segments() {
            if s.p0 > 0.0 || s.p1 > 0.0 {
                lo.get_or_insert(s.t0);
                hi = Some(s.t1);
            }
        }
        lo.zip(hi)
    }

    fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.knots.windows(2).filter(|w| w[1].0 > w[0].0).map(|w| Segment {
            t0: w[0].0,
            p0: w[0].1,
            t1: w[1].0,
            p1: w[1].1,
        })
    }
}

#[derive(Clone, Copy)]
struct Segment {
    t0: f64,
    p0: f64,
    t1: f64,
    p1: f64,
}

impl Segment {
    fn at(&self, t: f64) -> f64 {
        self.p0 + (self.p1 - self.p0) * (t - self.t0) / (self.t1 - self.t0)
    }

    fn clip(&self, a: f64, b: f64) -> Option<((f64, f64), (f64, f64))> {
        let lo = self.t0.max(a);
        let hi = self.t1.min(b);
        (hi > lo).then(|| ((lo, self.at(lo)), (hi, self.at(hi))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Midpoint-rule quadrature of `value_at`, independent of the exact integral.
    fn quadrature(env: &PulseEnvelope, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| env.value_at(a + (i as f64 + 0.5) * h) * h).sum()
    }

    #[test]
    fn square_pulse_integrals() {
        let p = PulseEnvelope::square(0.0, 500e-9, 100.0).unwrap();
        assert!((p.energy() - 100.0).abs() < 1e-9);
        assert!((p.integral(0.0, 250e-9) - 50.0).abs() < 1e-9);
        assert!((p.integral(-1.0, 1.0) - 100.0).abs() < 1e-9);
        assert_eq!(p.integral(600e-9, 1.0), 0.0);
        assert_eq!(p.support(), Some((0.0, 500e-9)));
    }

    #[test]
    fn triangular_window_matches_quadrature() {
        let p = PulseEnvelope::triangular(1e-6, 400e-9, 10.0).unwrap();
        for &(a, b) in &[(0.9e-6, 1.1e-6), (1.05e-6, 1.3e-6), (1.2e-6, 2e-6)] {
            let q = quadrature(&p, a, b, 200_000);
            assert!((p.integral(a, b) - q).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn restriction_and_exclusion_partition_the_pulse() {
        let p = PulseEnvelope::triangular(0.0, 1.0, 3.0).unwrap();
        let inside = p.restricted(0.2, 0.7);
        let outside = p.excluding(0.2, 0.7);
        assert!((inside.energy() - p.integral(0.2, 0.7)).abs() < 1e-12);
        assert!((inside.energy() + outside.energy() - 3.0).abs() < 1e-12);
        assert_eq!(inside.value_at(0.1), 0.0);
        assert!((outside.value_at(0.1) - p.value_at(0.1)).abs() < 1e-12);
        assert_eq!(outside.value_at(0.5), 0.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PulseEnvelope::from_knots(vec![(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(PulseEnvelope::from_knots(vec![(0.0, -1.0)]).is_err());
        assert!(PulseEnvelope::square(0.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn window_integrals_are_additive(a in -0.5f64..1.5, m in 0.0f64..1.0, b in -0.5f64..1.5) {
            let p = PulseEnvelope::triangular(0.0, 1.0, 2.0).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let mid = lo + m * (hi - lo);
            let sum = p.integral(lo, mid) + p.integral(mid, hi);
            prop_assert!((sum - p.integral(lo, hi)).abs() < 1e-12);
        }
    }
}
