//! Geometry-agnostic reference implementations of the slicing coordinates,
//! built only from `dist`, `log` and the geodesic through the origin.

use rand::RngCore;

use super::{Direction, Geometry};
use crate::error::{Error, Result};

/// Bracket half-widths beyond this are treated as divergence.
const MAX_BRACKET: f64 = (1u64 << 60) as f64;
const BISECTION_WIDTH: f64 = 1e-10;

/// Derivative of `t ↦ d(x, γ(t))²`.
fn sq_dist_slope<G: Geometry + ?Sized>(m: &G, v: &Direction, x: &[f64], t: f64) -> Result<f64> {
    let g = m.geodesic_point(v, t)?;
    let ahead = m.geodesic_point(v, t + 1.0)?;
    let to_x = m.log(&g, x)?;
    let velocity = m.log(&g, &ahead)?;
    let s = -2.0 * m.inner(&g, &to_x, &velocity)?;
    if !s.is_finite() {
        return Err(Error::Divergence(format!("non-finite slope at t = {t}")));
    }
    Ok(s)
}

/// `argmin_t d(x, γ(t))²` by bracketing and bisection on the derivative.
pub fn numeric_geodesic_coord<G: Geometry + ?Sized>(m: &G, v: &Direction, x: &[f64]) -> Result<f64> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while sq_dist_slope(m, v, x, lo)? > 0.0 {
        lo *= 2.0;
        if lo.abs() > MAX_BRACKET {
            return Err(Error::Divergence("geodesic projection bracket overflow".into()));
        }
    }
    while sq_dist_slope(m, v, x, hi)? < 0.0 {
        hi *= 2.0;
        if hi > MAX_BRACKET {
            return Err(Error::Divergence("geodesic projection bracket overflow".into()));
        }
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sq_dist_slope(m, v, x, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Truncated Busemann limit `d(x, γ(t_max)) − t_max`.
pub fn numeric_busemann<G: Geometry + ?Sized>(m: &G, v: &Direction, x: &[f64], t_max: f64) -> Result<f64> {
    let far = m.geodesic_point(v, t_max)?;
    Ok(m.dist(x, &far)? - t_max)
}

/// Draws directions until the truncation point `γ(t_max)` is a valid point of
/// `m`. On SPD manifolds `exp(t_max·A)` can exceed the conditioning floor for
/// directions with a wide spectrum.
pub fn sample_oracle_direction<G: Geometry + ?Sized>(m: &G, rng: &mut dyn RngCore, t_max: f64) -> Direction {
    loop {
        let v = m.sample_direction(rng);
        if m.geodesic_point(&v, t_max).and_then(|p| m.check_point(&p)).is_ok() {
            return v;
        }
    }
}
