//! Closed real intervals used as p-map domains and problem intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IntervalError {
    #[error("interval endpoints must be finite and ordered: got [{lo}, {hi}]")]
    Invalid { lo: f64, hi: f64 },
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(IntervalError::Invalid { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    /// Containment with an absolute slack, for range checks on computed points.
    pub fn contains_slack(&self, t: f64, slack: f64) -> bool {
        t >= self.lo - slack && t <= self.hi + slack
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `n + 1` equally spaced points from `lo` to `hi`.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        (0..=n)
            .map(|i| self.lo + self.width() * i as f64 / n as f64)
            .collect()
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = IntervalError;
    fn try_from(v: (f64, f64)) -> Result<Self, Self::Error> {
        Interval::new(v.0, v.1)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn containment() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(iv.contains(0.0));
        assert!(iv.contains(1.0));
        assert!(!iv.contains(1.0 + 1e-9));
        assert!(iv.contains_slack(1.0 + 1e-9, 1e-8));
    }
}
