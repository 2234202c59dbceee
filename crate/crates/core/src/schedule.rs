use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar time schedule `k ↦ s(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Const { value: f64 },
    /// `max(floor, v0 · ratio^k)`
    Geometric { v0: f64, ratio: f64, floor: f64 },
    /// Linear interpolation between `(k, value)` knots, constant outside them.
    Piecewise { knots: Vec<(usize, f64)> },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Const { value } if !value.is_finite() => {
                Err(Error::Schedule(format!("constant {value} is not finite")))
            }
            Schedule::Const { .. } => Ok(()),
            Schedule::Geometric { v0, ratio, floor } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::Schedule(format!("ratio {ratio} outside (0, 1)")));
                }
                if !(*floor > 0.0 && floor.is_finite()) {
                    return Err(Error::Schedule(format!("floor {floor} must be positive")));
                }
                if !(v0.is_finite() && v0 >= floor) {
                    return Err(Error::Schedule(format!("v0 {v0} below floor {floor}")));
                }
                Ok(())
            }
            Schedule::Piecewise { knots } => {
                if knots.is_empty() {
                    return Err(Error::Schedule("piecewise schedule has no knots".into()));
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Schedule("knot times must increase strictly".into()));
                }
                if knots.iter().any(|(_, v)| !v.is_finite()) {
                    return Err(Error::Schedule("knot values must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        match self {
            Schedule::Const { value } => *value,
            Schedule::Geometric { v0, ratio, floor } => {
                // powi saturates to 0 for huge k, leaving the floor
                let e = i32::try_from(k).unwrap_or(i32::MAX);
                floor.max(v0 * ratio.powi(e))
            }
            Schedule::Piecewise { knots } => {
                let (k0, v0) = knots[0];
                if k <= k0 {
                    return v0;
                }
                for w in knots.windows(2) {
                    let ((ka, va), (kb, vb)) = (w[0], w[1]);
                    if k <= kb {
                        let t = (k - ka) as f64 / (kb - ka) as f64;
                        return va + t * (vb - va);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    /// Smallest and largest value over `0..=horizon`.
    pub fn range(&self, horizon: usize) -> (f64, f64) {
        (0..=horizon)
            .map(|k| self.value(k))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}
