//! Hyperbolic space of curvature `K < 0` in the Lorentz (hyperboloid) and
//! Poincaré ball models.
//!
//! Conventions: `c = −K`, the Lorentz origin is `x⁰ = (1/√c, 0, …, 0)` and
//! a Lorentz direction is `(0, ṽ)` with `‖ṽ‖₂ = 1`. Poincaré directions are
//! the ideal points `ṽ` themselves; `(0, ṽ) ↔ ṽ` under the isometry.

use rand::RngCore;

use super::{acosh1p, check_len, dot, gaussian_vec, norm2, Direction, Geometry, DIRECTION_TOL};
use crate::error::{Error, Result};

const CONSTRAINT_TOL: f64 = 1e-8;
const TANGENT_TOL: f64 = 1e-6;
const NEAR_BOUNDARY: f64 = 1e-9;

/// `⟨x, y⟩_𝕃 = −x₀y₀ + Σᵢ xᵢyᵢ`.
pub fn minkowski_inner(x: &[f64], y: &[f64]) -> f64 {
    -x[0] * y[0] + dot(&x[1..], &y[1..])
}

fn check_curvature(k: f64) -> Result<f64> {
    if !(k < 0.0) || !k.is_finite() {
        return Err(Error::InvalidConfig(format!("curvature must be negative, got {k}")));
    }
    Ok((-k).sqrt())
}

/// Stereographic map from the hyperboloid of curvature `k` to the ball.
pub fn lorentz_to_ball(x: &[f64], k: f64) -> Vec<f64> {
    let sc = (-k).sqrt();
    let denom = 1.0 + sc * x[0];
    x[1..].iter().map(|c| c / denom).collect()
}

/// Inverse of [`lorentz_to_ball`].
pub fn ball_to_lorentz(y: &[f64], k: f64) -> Vec<f64> {
    let c = -k;
    let sc = c.sqrt();
    let r2 = dot(y, y);
    let gap = 1.0 - c * r2;
    let mut out = Vec::with_capacity(y.len() + 1);
    out.push((1.0 + c * r2) / (sc * gap));
    out.extend(y.iter().map(|v| 2.0 * v / gap));
    out
}

/// Differential of [`lorentz_to_ball`] at `x` applied to the tangent `u`.
fn lorentz_to_ball_tangent(x: &[f64], u: &[f64], k: f64) -> Vec<f64> {
    let sc = (-k).sqrt();
    let denom = 1.0 + sc * x[0];
    x[1..]
        .iter()
        .zip(&u[1..])
        .map(|(xs, us)| us / denom - xs * sc * u[0] / (denom * denom))
        .collect()
}

/// `(x₀ − s, x₀ + s)` for a hyperboloid point with spatial projection `s`
/// onto a unit spatial direction, avoiding cancellation.
fn axial_gaps(x: &[f64], dir: &[f64], c: f64) -> (f64, f64, f64) {
    let s = dot(&x[1..], dir);
    let perp2: f64 = x[1..].iter().zip(dir).map(|(a, b)| (a - s * b).powi(2)).sum();
    let q = 1.0 / c + perp2;
    let (minus, plus) = if s > 0.0 {
        let plus = x[0] + s;
        (q / plus, plus)
    } else {
        let minus = x[0] - s;
        (minus, q / minus)
    };
    (s, minus, plus)
}

/// Lorentz model `𝕃^d_K`, points in `ℝ^{d+1}`.
#[derive(Debug, Clone)]
pub struct Lorentz {
    dim: usize,
    k: f64,
    sc: f64,
}

impl Lorentz {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        let sc = check_curvature(curvature)?;
        if dim == 0 {
            return Err(Error::InvalidConfig("hyperbolic dimension must be positive".into()));
        }
        Ok(Lorentz {
            dim,
            k: curvature,
            sc,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    fn c(&self) -> f64 {
        -self.k
    }

    /// `z − K⟨x, z⟩_𝕃 x`.
    fn project_tangent(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        let a = self.k * minkowski_inner(x, z);
        z.iter().zip(x).map(|(zi, xi)| zi - a * xi).collect()
    }

    /// `δ = K⟨x, y⟩_𝕃 − 1`, evaluated through the Minkowski norm of `x − y`
    /// for nearby points and directly once `δ` is large.
    fn cosh_gap(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let direct = self.k * minkowski_inner(x, y) - 1.0;
        let delta = if direct > 1.0 {
            direct
        } else {
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            self.c() * minkowski_inner(&diff, &diff) / 2.0
        };
        if delta < -1e-6 {
            return Err(Error::ConstraintViolation(format!(
                "arccosh argument {} below 1",
                1.0 + delta
            )));
        }
        Ok(delta.max(0.0))
    }

    /// Spatial part of a direction.
    fn spatial<'a>(&self, v: &'a Direction) -> &'a [f64] {
        &v.coords()[1..]
    }
}

impl Geometry for Lorentz {
    fn kind(&self) -> &'static str {
        "lorentz"
    }

    fn point_len(&self) -> usize {
        self.dim + 1
    }

    fn origin(&self) -> Vec<f64> {
        let mut o = vec![0.0; self.dim + 1];
        o[0] = 1.0 / self.sc;
        o
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(x, self.dim + 1)?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::ConstraintViolation("non-finite coordinate".into()));
        }
        if !(x[0] > 0.0) {
            return Err(Error::ConstraintViolation("x₀ must be positive".into()));
        }
        let r = self.constraint_residual(x);
        if r > CONSTRAINT_TOL * (1.0 + self.c() * x[0] * x[0]) {
            return Err(Error::ConstraintViolation(format!(
                "point is off the hyperboloid (residual {r:e})"
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        check_len(x, self.dim + 1)?;
        check_len(v, self.dim + 1)?;
        let ip = minkowski_inner(x, v);
        if ip.abs() > TANGENT_TOL * (1.0 + norm2(x) * norm2(v)) {
            return Err(Error::ConstraintViolation(format!(
                "vector is not tangent (⟨x, v⟩ = {ip:e})"
            )));
        }
        Ok(())
    }

    fn constraint_residual(&self, x: &[f64]) -> f64 {
        (minkowski_inner(x, x) - 1.0 / self.k).abs()
    }

    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(x, self.dim + 1)?;
        check_len(y, self.dim + 1)?;
        Ok(acosh1p(self.cosh_gap(x, y)?) / self.sc)
    }

    fn inner(&self, _x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        Ok(minkowski_inner(u, w))
    }

    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_tangent(x, v)?;
        let v = self.project_tangent(x, v);
        let nv = minkowski_inner(&v, &v).max(0.0).sqrt();
        let theta = self.sc * nv;
        let sinhc = if theta < 1e-8 {
            1.0 + theta * theta / 6.0
        } else {
            theta.sinh() / theta
        };
        let ch = theta.cosh();
        let mut out: Vec<f64> = x.iter().zip(&v).map(|(a, b)| ch * a + sinhc * b).collect();
        self.retract(&mut out);
        Ok(out)
    }

    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.dim + 1)?;
        check_len(y, self.dim + 1)?;
        let delta = self.cosh_gap(x, y)?;
        let u: Vec<f64> = y.iter().zip(x).map(|(b, a)| (b - a) - delta * a).collect();
        let factor = if delta < 1e-12 {
            1.0 - delta / 3.0
        } else {
            acosh1p(delta) / (delta * (2.0 + delta)).sqrt()
        };
        let out: Vec<f64> = u.iter().map(|c| c * factor).collect();
        Ok(self.project_tangent(x, &out))
    }

    fn to_tangent(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.project_tangent(x, u)
    }

    fn retract(&self, x: &mut [f64]) {
        let s2 = dot(&x[1..], &x[1..]);
        x[0] = (1.0 / self.c() + s2).sqrt();
    }

    fn direction_norm(&self, v: &[f64]) -> f64 {
        norm2(&v[1..]).hypot(v[0])
    }

    fn check_direction(&self, v: &[f64]) -> Result<()> {
        check_len(v, self.dim + 1)?;
        if v[0].abs() > 1e-12 {
            return Err(Error::Domain("Lorentz direction must have zero time coordinate".into()));
        }
        let n = norm2(&v[1..]);
        if (n - 1.0).abs() > DIRECTION_TOL {
            return Err(Error::Domain(format!("direction norm {n} is not 1")));
        }
        Ok(())
    }

    fn normalize_direction(&self, mut coords: Vec<f64>) -> Result<Direction> {
        check_len(&coords, self.dim + 1)?;
        coords[0] = 0.0;
        let n = norm2(&coords[1..]);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero direction".into()));
        }
        coords[1..].iter_mut().for_each(|c| *c /= n);
        Ok(Direction::from_unit(coords))
    }

    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(gaussian_vec(rng, self.dim));
        v
    }

    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        let theta = self.sc * t;
        let mut out = vec![theta.cosh() / self.sc];
        let sh = theta.sinh() / self.sc;
        out.extend(self.spatial(v).iter().map(|c| sh * c));
        Ok(out)
    }

    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim + 1)?;
        // arctanh(s / x₀) = ½ log((x₀ + s)/(x₀ − s))
        let (s, minus, plus) = axial_gaps(x, self.spatial(v), self.c());
        let ratio = (s / x[0]).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        let val = if ratio.abs() > 0.5 && minus > 0.0 && plus > 0.0 {
            0.5 * (plus / minus).ln()
        } else {
            ratio.atanh()
        };
        Ok(val / self.sc)
    }

    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim + 1)?;
        // −√c ⟨x, √c x⁰ + v⟩_𝕃 = √c (x₀ − s)
        let (_, minus, _) = axial_gaps(x, self.spatial(v), self.c());
        let arg = self.sc * minus;
        if !(arg > 0.0) || !arg.is_finite() {
            return Err(Error::ConstraintViolation(format!(
                "Busemann log argument {arg} is not positive"
            )));
        }
        Ok(arg.ln() / self.sc)
    }

    /// `(√c/K)(Kx − w/⟨x, w⟩_𝕃)` projected onto `T_x`, gradient for the
    /// metric induced by `⟨·,·⟩_𝕃`.
    fn grad_busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.dim + 1)?;
        let (_, minus, _) = axial_gaps(x, self.spatial(v), self.c());
        // w = √c x⁰ + v = (1, ṽ), ⟨x, w⟩_𝕃 = −(x₀ − s)
        let ip = -minus;
        let k = self.k;
        let scale = self.sc / k;
        let mut g = Vec::with_capacity(x.len());
        g.push(scale * (k * x[0] - 1.0 / ip));
        for (xi, vi) in x[1..].iter().zip(self.spatial(v)) {
            g.push(scale * (k * xi - vi / ip));
        }
        Ok(self.project_tangent(x, &g))
    }

    /// `(⟨x, x⁰⟩v − ⟨x, v⟩x⁰)/(⟨x, v⟩² + K⟨x, x⁰⟩²)`.
    fn grad_geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.dim + 1)?;
        let (s, minus, plus) = axial_gaps(x, self.spatial(v), self.c());
        let x_x0 = -x[0] / self.sc;
        // ⟨x, v⟩² + K⟨x, x⁰⟩² = s² − x₀²
        let denom = -minus * plus;
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::ConstraintViolation("degenerate geodesic gradient".into()));
        }
        let mut g = Vec::with_capacity(x.len());
        g.push((-s / self.sc) / denom);
        for vi in self.spatial(v) {
            g.push(x_x0 * vi / denom);
        }
        Ok(self.project_tangent(x, &g))
    }
}

/// Poincaré ball `𝔹^d_K` of radius `1/√c`.
#[derive(Debug, Clone)]
pub struct Poincare {
    dim: usize,
    k: f64,
    sc: f64,
    lorentz: Lorentz,
}

impl Poincare {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        let sc = check_curvature(curvature)?;
        Ok(Poincare {
            dim,
            k: curvature,
            sc,
            lorentz: Lorentz::new(dim, curvature)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    /// Lorentz model with the same curvature.
    pub fn lorentz(&self) -> &Lorentz {
        &self.lorentz
    }

    fn c(&self) -> f64 {
        -self.k
    }

    fn gap(&self, x: &[f64]) -> f64 {
        1.0 - self.c() * dot(x, x)
    }

    fn conformal(&self, x: &[f64]) -> f64 {
        2.0 / self.gap(x)
    }

    fn mobius_add(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let c = self.c();
        let xy = dot(x, y);
        let x2 = dot(x, x);
        let y2 = dot(y, y);
        let a = 1.0 + 2.0 * c * xy + c * y2;
        let b = 1.0 - c * x2;
        let den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
        x.iter().zip(y).map(|(xi, yi)| (a * xi + b * yi) / den).collect()
    }

    fn lorentz_direction(&self, v: &Direction) -> Direction {
        let mut coords = vec![0.0];
        coords.extend_from_slice(v.coords());
        Direction::from_unit(coords)
    }

    /// Pushes a Lorentz gradient at `ball_to_lorentz(x)` to the ball.
    fn gradient_via_lorentz(
        &self,
        v: &Direction,
        x: &[f64],
        f: impl Fn(&Lorentz, &Direction, &[f64]) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let xl = ball_to_lorentz(x, self.k);
        let gl = f(&self.lorentz, &self.lorentz_direction(v), &xl)?;
        Ok(lorentz_to_ball_tangent(&xl, &gl, self.k))
    }

    /// Closed-form Riemannian gradient of the Busemann coordinate for `K = −1`.
    pub fn grad_busemann_unit_curvature(&self, v: &Direction, x: &[f64]) -> Vec<f64> {
        let r2 = dot(x, x);
        let diff: Vec<f64> = v.coords().iter().zip(x).map(|(a, b)| a - b).collect();
        let d2 = dot(&diff, &diff);
        let scale = ((1.0 - r2) / 2.0).powi(2);
        x.iter()
            .zip(&diff)
            .map(|(xi, di)| scale * 2.0 * (xi / (1.0 - r2) - di / d2))
            .collect()
    }

    fn s_coord(&self, x: &[f64], v: &[f64]) -> f64 {
        let c = self.c();
        let a = dot(x, v);
        if a.abs() <= 1e-12 * norm2(x) {
            return 0.0;
        }
        let b = 1.0 + c * dot(x, x);
        // rationalized form of (b − √(b² − 4ca²)) / (2ca)
        2.0 * a / (b + (b * b - 4.0 * c * a * a).max(0.0).sqrt())
    }
}

impl Geometry for Poincare {
    fn kind(&self) -> &'static str {
        "poincare"
    }

    fn point_len(&self) -> usize {
        self.dim
    }

    fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(x, self.dim)?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::ConstraintViolation("non-finite coordinate".into()));
        }
        if !(self.gap(x) > 0.0) {
            return Err(Error::ConstraintViolation("point is on or outside the ball boundary".into()));
        }
        Ok(())
    }

    fn constraint_residual(&self, x: &[f64]) -> f64 {
        (-self.gap(x)).max(0.0)
    }

    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let (gx, gy) = (self.gap(x), self.gap(y));
        if gx < NEAR_BOUNDARY || gy < NEAR_BOUNDARY {
            return self
                .lorentz
                .dist(&ball_to_lorentz(x, self.k), &ball_to_lorentz(y, self.k));
        }
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(acosh1p(2.0 * self.c() * d2 / (gx * gy)) / self.sc)
    }

    fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        let l = self.conformal(x);
        Ok(l * l * dot(u, w))
    }

    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.dim)?;
        let nv = norm2(v);
        if nv == 0.0 {
            return Ok(x.to_vec());
        }
        let t = (self.sc * self.conformal(x) * nv / 2.0).tanh();
        let step: Vec<f64> = v.iter().map(|c| t * c / (self.sc * nv)).collect();
        let mut out = self.mobius_add(x, &step);
        self.retract(&mut out);
        Ok(out)
    }

    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.dim)?;
        let neg: Vec<f64> = x.iter().map(|c| -c).collect();
        let w = self.mobius_add(&neg, y);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        let arg = (self.sc * nw).min(1.0 - 1e-16);
        let scale = 2.0 / (self.sc * self.conformal(x)) * arg.atanh() / nw;
        Ok(w.iter().map(|c| c * scale).collect())
    }

    fn retract(&self, x: &mut [f64]) {
        let r2 = dot(x, x);
        let max = (1.0 - 1e-12) / self.c();
        if r2 > max {
            let s = (max / r2).sqrt();
            x.iter_mut().for_each(|c| *c *= s);
        }
    }

    fn direction_norm(&self, v: &[f64]) -> f64 {
        norm2(v)
    }

    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        gaussian_vec(rng, self.dim)
    }

    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        let r = (self.sc * t / 2.0).tanh() / self.sc;
        Ok(v.coords().iter().map(|c| r * c).collect())
    }

    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if self.gap(x) < NEAR_BOUNDARY {
            let xl = ball_to_lorentz(x, self.k);
            return self.lorentz.geodesic_coord(&self.lorentz_direction(v), &xl);
        }
        let s = self.s_coord(x, v.coords());
        let arg = (self.sc * s).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
        Ok(2.0 / self.sc * arg.atanh())
    }

    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let gap = self.gap(x);
        if gap < NEAR_BOUNDARY {
            let xl = ball_to_lorentz(x, self.k);
            return self.lorentz.busemann_coord(&self.lorentz_direction(v), &xl);
        }
        let num: f64 = v
            .coords()
            .iter()
            .zip(x)
            .map(|(a, b)| (a - self.sc * b).powi(2))
            .sum();
        Ok((num / gap).ln() / self.sc)
    }

    fn grad_busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if self.k == -1.0 && self.gap(x) >= NEAR_BOUNDARY {
            return Ok(self.grad_busemann_unit_curvature(v, x));
        }
        self.gradient_via_lorentz(v, x, |l, d, p| l.grad_busemann_coord(d, p))
    }

    fn grad_geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.gradient_via_lorentz(v, x, |l, d, p| l.grad_geodesic_coord(d, p))
    }
}
