//! Closed-form proximal operators for box-constrained zero/quadratic costs.

use crate::error::{Error, Result};
use crate::game::{BoxSet, GameSpec, LocalCost};

pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    if v.len() != lo.len() || v.len() != hi.len() {
        return Err(Error::Shape(format!(
            "point has length {}, box has {}/{}",
            v.len(),
            lo.len(),
            hi.len()
        )));
    }
    Ok(v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.clamp(l, h))
        .collect())
}

pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// `argmin_y f(y) + ι_box(y) + ‖y − v‖² / (2λ)`.
///
/// Both terms are coordinatewise, so the quadratic minimizer is clamped.
pub fn prox_local(scale: f64, v: &[f64], cost: &LocalCost, bounds: &BoxSet) -> Result<Vec<f64>> {
    if !(scale > 0.0) {
        return Err(Error::NonpositiveScale(scale));
    }
    match cost {
        LocalCost::Zero => project_box(v, &bounds.lo, &bounds.hi),
        LocalCost::Quadratic { target, weight } => {
            if target.len() != v.len() {
                return Err(Error::Shape(format!(
                    "target length {} for point of length {}",
                    target.len(),
                    v.len()
                )));
            }
            let lw = scale * weight;
            let y: Vec<f64> = v
                .iter()
                .zip(target)
                .map(|(&vi, &ri)| (vi + lw * ri) / (1.0 + lw))
                .collect();
            project_box(&y, &bounds.lo, &bounds.hi)
        }
    }
}

/// Block-diagonal prox: agent `i`'s block uses its own cost, box and scale.
pub fn group_prox(x: &[f64], scales: &[f64], game: &GameSpec) -> Result<Vec<f64>> {
    if x.len() != game.size() || scales.len() != game.agents {
        return Err(Error::Shape(format!(
            "profile {} / scales {} for {} agents of dimension {}",
            x.len(),
            scales.len(),
            game.agents,
            game.dim
        )));
    }
    let mut out = Vec::with_capacity(x.len());
    for i in 0..game.agents {
        out.extend(prox_local(scales[i], game.block(x, i), &game.costs[i], &game.boxes[i])?);
    }
    Ok(out)
}

/// How far `g` is from `∂(f + ι_box)(y)`, coordinatewise.
///
/// Interior coordinates need `g = ∇f(y)`; at an upper bound the normal cone
/// allows `g − ∇f(y) ≥ 0`, at a lower bound `≤ 0`. Points outside the box
/// count their distance to it.
pub fn subgradient_violation(y: &[f64], g: &[f64], cost: &LocalCost, bounds: &BoxSet) -> f64 {
    let mut worst = 0.0_f64;
    for d in 0..y.len() {
        let (lo, hi) = (bounds.lo[d], bounds.hi[d]);
        let grad = match cost {
            LocalCost::Zero => 0.0,
            LocalCost::Quadratic { target, weight } => weight * (y[d] - target[d]),
        };
        let normal = g[d] - grad;
        let outside = (lo - y[d]).max(y[d] - hi).max(0.0);
        let v = if lo == hi {
            0.0
        } else if y[d] >= hi {
            (-normal).max(0.0)
        } else if y[d] <= lo {
            normal.max(0.0)
        } else {
            normal.abs()
        };
        worst = worst.max(v).max(outside);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Grid argmin of `φ(y) + (y − v)²/(2λ)` over `[lo, hi]`, step `h`.
    fn grid_argmin_1d(lo: f64, hi: f64, h: f64, f: impl Fn(f64) -> f64) -> f64 {
        let steps = ((hi - lo) / h).round() as usize;
        (0..=steps)
            .map(|s| lo + s as f64 * h)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(project_box(&[2.0, -2.0], &[-1.0, -1.0], &[1.0, 1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(project_box(&[0.3, -0.2], &[-1.0, -1.0], &[1.0, 1.0]).unwrap(), vec![0.3, -0.2]);
        assert!(project_box(&[0.0], &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn box_projection_matches_grid() {
        // n = 2, box [-1, 1] x [-0.5, 2]; the grid argmin separates per axis
        let pts = [[1.7, -3.2], [0.25, 0.75], [-4.0, 5.0], [0.0, -0.5]];
        for v in pts {
            let p = project_box(&v, &[-1.0, -0.5], &[1.0, 2.0]).unwrap();
            let g0 = grid_argmin_1d(-1.0, 1.0, 1e-3, |y| (y - v[0]).powi(2));
            let g1 = grid_argmin_1d(-0.5, 2.0, 1e-3, |y| (y - v[1]).powi(2));
            assert!((p[0] - g0).abs() <= 1e-3 && (p[1] - g1).abs() <= 1e-3);
        }
    }

    #[test]
    fn nonneg_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0]), vec![0.0]);
    }

    #[test]
    fn zero_cost_reduces_to_clamp() {
        let b = BoxSet::uniform(1, -1.0, 1.0);
        for lam in [0.01, 1.0, 100.0] {
            assert_eq!(prox_local(lam, &[3.0], &LocalCost::Zero, &b).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn quadratic_unbounded_closed_form() {
        let cost = LocalCost::Quadratic { target: vec![2.0], weight: 1.0 };
        let y = prox_local(1.0, &[1.0], &cost, &BoxSet::unbounded(1)).unwrap();
        assert_eq!(y, vec![1.5]);
        let g = grid_argmin_1d(-5.0, 5.0, 1e-4, |t| 0.5 * (t - 2.0).powi(2) + 0.5 * (t - 1.0).powi(2));
        assert!((y[0] - g).abs() <= 1e-4);
    }

    #[test]
    fn quadratic_in_box_matches_grid() {
        let cost = LocalCost::Quadratic { target: vec![0.0], weight: 1.0 };
        let b = BoxSet::uniform(1, 0.5, 2.0);
        let y = prox_local(1.0, &[0.0], &cost, &b).unwrap();
        assert_eq!(y, vec![0.5]);
        let g = grid_argmin_1d(0.5, 2.0, 1e-4, |t| 0.5 * t * t + 0.5 * t * t);
        assert!((y[0] - g).abs() <= 1e-4);
    }

    #[test]
    fn nonpositive_scale_rejected() {
        let b = BoxSet::uniform(1, -1.0, 1.0);
        assert!(matches!(
            prox_local(0.0, &[0.0], &LocalCost::Zero, &b),
            Err(Error::NonpositiveScale(_))
        ));
    }

    #[test]
    fn subgradient_of_prox_output() {
        let cost = LocalCost::Quadratic { target: vec![0.3, -2.0], weight: 2.0 };
        let b = BoxSet::uniform(2, -1.0, 1.0);
        let v = [0.9, -0.4];
        let lam = 0.7;
        let y = prox_local(lam, &v, &cost, &b).unwrap();
        let g: Vec<f64> = v.iter().zip(&y).map(|(a, b)| (a - b) / lam).collect();
        assert!(subgradient_violation(&y, &g, &cost, &b) < 1e-12);
        let bad = [g[0] + 0.1, g[1]];
        assert!(subgradient_violation(&y, &bad, &cost, &b) > 0.05);
    }
}
