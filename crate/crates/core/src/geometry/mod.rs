//! Manifold abstraction shared by every Cartan-Hadamard geometry.
//!
//! Points and tangent vectors are flat `f64` slices in the manifold's
//! ambient layout (Lorentz: `d + 1` coordinates, SPD: `n²` row-major entries,
//! products: concatenated blocks). A [`Direction`] is a unit tangent vector
//! at the origin and indexes one slice of the sliced distance.

mod euclidean;
mod hyperbolic;
pub mod oracle;
mod product;
mod spd;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use euclidean::{Euclidean, Mahalanobis};
pub use hyperbolic::{ball_to_lorentz, lorentz_to_ball, minkowski_inner, Lorentz, Poincare};
pub use oracle::{numeric_busemann, numeric_geodesic_coord};
pub use product::Product;
pub use spd::{ai_busemann_coord, le_grad_coord, Spd, SpdMetric};

/// Tolerance on `‖v‖_o = 1` for directions.
pub const DIRECTION_TOL: f64 = 1e-10;

/// Unit tangent vector at the manifold origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        Direction { coords }
    }
}

/// How points are mapped onto the slicing geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Closest point on the geodesic, coordinate `P^v`.
    Geodesic,
    /// Along horospheres, coordinate `−B^v`.
    Horospherical,
}

impl Projection {
    pub fn name(self) -> &'static str {
        match self {
            Projection::Geodesic => "geodesic",
            Projection::Horospherical => "horospherical",
        }
    }

    /// Coordinate of `x` along the geodesic indexed by `v`.
    pub fn coord<G: Geometry + ?Sized>(self, m: &G, v: &Direction, x: &[f64]) -> Result<f64> {
        match self {
            Projection::Geodesic => m.geodesic_coord(v, x),
            Projection::Horospherical => Ok(-m.busemann_coord(v, x)?),
        }
    }

    /// Riemannian gradient of [`Projection::coord`] at `x`.
    pub fn grad<G: Geometry + ?Sized>(self, m: &G, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Projection::Geodesic => m.grad_geodesic_coord(v, x),
            Projection::Horospherical => {
                let mut g = m.grad_busemann_coord(v, x)?;
                g.iter_mut().for_each(|c| *c = -*c);
                Ok(g)
            }
        }
    }

    /// `exp_o(coord · v)`: the projected point on the geodesic.
    pub fn project_point<G: Geometry + ?Sized>(
        self,
        m: &G,
        v: &Direction,
        x: &[f64],
    ) -> Result<Vec<f64>> {
        m.geodesic_point(v, self.coord(m, v, x)?)
    }
}

/// Geometry of one Cartan-Hadamard manifold.
pub trait Geometry {
    fn kind(&self) -> &'static str;

    /// Length of the flat coordinate vector of a point (and of a tangent vector).
    fn point_len(&self) -> usize;

    fn origin(&self) -> Vec<f64>;

    fn check_point(&self, x: &[f64]) -> Result<()>;

    fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        check_len(x, self.point_len())?;
        check_len(v, self.point_len())
    }

    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    /// Riemannian inner product `⟨u, w⟩_x`.
    fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<f64>;

    fn norm(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.inner(x, u, u)?.max(0.0).sqrt())
    }

    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>>;

    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>>;

    /// Projects an ambient vector onto `T_x`.
    fn to_tangent(&self, _x: &[f64], u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }

    /// Pulls a slightly perturbed point back onto the manifold.
    fn retract(&self, _x: &mut [f64]) {}

    /// Residual of the manifold constraint at `x` (0 when not applicable).
    fn constraint_residual(&self, _x: &[f64]) -> f64 {
        0.0
    }

    /// Norm of a tangent vector at the origin in the convention used for
    /// directions (Poincaré directions are ideal points of unit Euclidean norm).
    fn direction_norm(&self, v: &[f64]) -> f64;

    fn check_direction(&self, v: &[f64]) -> Result<()> {
        check_len(v, self.point_len())?;
        let n = self.direction_norm(v);
        if (n - 1.0).abs() > DIRECTION_TOL {
            return Err(Error::Domain(format!("direction norm {n} is not 1")));
        }
        Ok(())
    }

    /// Draw from the standard Gaussian of `T_o` in the metric at the origin.
    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Unit-speed geodesic through the origin, `t ↦ exp_o(t v)`.
    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>>;

    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64>;

    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64>;

    fn grad_geodesic_coord(&self, _v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported {
            kind: self.kind(),
            what: "geodesic projection gradient",
        })
    }

    fn grad_busemann_coord(&self, _v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported {
            kind: self.kind(),
            what: "Busemann gradient",
        })
    }

    /// Builds a direction by rescaling `coords` to unit norm.
    fn normalize_direction(&self, mut coords: Vec<f64>) -> Result<Direction> {
        check_len(&coords, self.point_len())?;
        let n = self.direction_norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero direction".into()));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        self.check_direction(&coords)?;
        Ok(Direction { coords })
    }

    /// Validates an existing unit direction.
    fn direction(&self, coords: Vec<f64>) -> Result<Direction> {
        self.check_direction(&coords)?;
        Ok(Direction { coords })
    }

    /// Uniform draw on the unit tangent sphere at the origin.
    fn sample_direction(&self, rng: &mut dyn RngCore) -> Direction {
        loop {
            let g = self.sample_tangent_gaussian(rng);
            if let Ok(d) = self.normalize_direction(g) {
                return d;
            }
        }
    }
}

/// Serializable description of a manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Descriptor {
    Euclidean { dim: usize },
    Mahalanobis { metric: Vec<Vec<f64>> },
    Lorentz { dim: usize, curvature: f64 },
    Poincare { dim: usize, curvature: f64 },
    SpdLogEuclidean { n: usize },
    SpdOnq { n: usize, p: f64, q: f64 },
    SpdLogCholesky { n: usize },
    SpdAffineInvariant { n: usize },
    Product { components: Vec<Descriptor> },
}

/// Any supported manifold.
#[derive(Debug, Clone)]
pub enum Manifold {
    Euclidean(Euclidean),
    Mahalanobis(Mahalanobis),
    Lorentz(Lorentz),
    Poincare(Poincare),
    Spd(Spd),
    Product(Product),
}

impl Manifold {
    pub fn from_descriptor(d: &Descriptor) -> Result<Self> {
        Ok(match d {
            Descriptor::Euclidean { dim } => Manifold::Euclidean(Euclidean::new(*dim)?),
            Descriptor::Mahalanobis { metric } => {
                let n = metric.len();
                let mut flat = Vec::with_capacity(n * n);
                for row in metric {
                    if row.len() != n {
                        return Err(Error::InvalidConfig("metric matrix must be square".into()));
                    }
                    flat.extend_from_slice(row);
                }
                let a = crate::linalg::from_row_major(n, &flat)?;
                Manifold::Mahalanobis(Mahalanobis::new(a)?)
            }
            Descriptor::Lorentz { dim, curvature } => Manifold::Lorentz(Lorentz::new(*dim, *curvature)?),
            Descriptor::Poincare { dim, curvature } => {
                Manifold::Poincare(Poincare::new(*dim, *curvature)?)
            }
            Descriptor::SpdLogEuclidean { n } => Manifold::Spd(Spd::new(*n, SpdMetric::LogEuclidean)?),
            Descriptor::SpdOnq { n, p, q } => Manifold::Spd(Spd::new(*n, SpdMetric::Onq { p: *p, q: *q })?),
            Descriptor::SpdLogCholesky { n } => Manifold::Spd(Spd::new(*n, SpdMetric::LogCholesky)?),
            Descriptor::SpdAffineInvariant { n } => {
                Manifold::Spd(Spd::new(*n, SpdMetric::AffineInvariant)?)
            }
            Descriptor::Product { components } => {
                let comps = components
                    .iter()
                    .map(Manifold::from_descriptor)
                    .collect::<Result<Vec<_>>>()?;
                Manifold::Product(Product::new(comps)?)
            }
        })
    }

    pub fn descriptor(&self) -> Descriptor {
        match self {
            Manifold::Euclidean(m) => Descriptor::Euclidean { dim: m.dim() },
            Manifold::Mahalanobis(m) => {
                let a = m.metric();
                Descriptor::Mahalanobis {
                    metric: (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect(),
                }
            }
            Manifold::Lorentz(m) => Descriptor::Lorentz {
                dim: m.dim(),
                curvature: m.curvature(),
            },
            Manifold::Poincare(m) => Descriptor::Poincare {
                dim: m.dim(),
                curvature: m.curvature(),
            },
            Manifold::Spd(m) => match m.metric() {
                SpdMetric::LogEuclidean => Descriptor::SpdLogEuclidean { n: m.n() },
                SpdMetric::Onq { p, q } => Descriptor::SpdOnq { n: m.n(), p, q },
                SpdMetric::LogCholesky => Descriptor::SpdLogCholesky { n: m.n() },
                SpdMetric::AffineInvariant => Descriptor::SpdAffineInvariant { n: m.n() },
            },
            Manifold::Product(m) => Descriptor::Product {
                components: m.components().iter().map(Manifold::descriptor).collect(),
            },
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Manifold::Euclidean($m) => $e,
            Manifold::Mahalanobis($m) => $e,
            Manifold::Lorentz($m) => $e,
            Manifold::Poincare($m) => $e,
            Manifold::Spd($m) => $e,
            Manifold::Product($m) => $e,
        }
    };
}

impl Geometry for Manifold {
    fn kind(&self) -> &'static str {
        dispatch!(self, m => m.kind())
    }
    fn point_len(&self) -> usize {
        dispatch!(self, m => m.point_len())
    }
    fn origin(&self) -> Vec<f64> {
        dispatch!(self, m => m.origin())
    }
    fn check_point(&self, x: &[f64]) -> Result<()> {
        dispatch!(self, m => m.check_point(x))
    }
    fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        dispatch!(self, m => m.check_tangent(x, v))
    }
    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        dispatch!(self, m => m.dist(x, y))
    }
    fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        dispatch!(self, m => m.inner(x, u, w))
    }
    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self, m => m.exp(x, v))
    }
    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self, m => m.log(x, y))
    }
    fn to_tangent(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        dispatch!(self, m => m.to_tangent(x, u))
    }
    fn retract(&self, x: &mut [f64]) {
        dispatch!(self, m => m.retract(x))
    }
    fn constraint_residual(&self, x: &[f64]) -> f64 {
        dispatch!(self, m => m.constraint_residual(x))
    }
    fn direction_norm(&self, v: &[f64]) -> f64 {
        dispatch!(self, m => m.direction_norm(v))
    }
    fn check_direction(&self, v: &[f64]) -> Result<()> {
        dispatch!(self, m => m.check_direction(v))
    }
    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        dispatch!(self, m => m.sample_tangent_gaussian(rng))
    }
    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        dispatch!(self, m => m.geodesic_point(v, t))
    }
    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        dispatch!(self, m => m.geodesic_coord(v, x))
    }
    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        dispatch!(self, m => m.busemann_coord(v, x))
    }
    fn grad_geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self, m => m.grad_geodesic_coord(v, x))
    }
    fn grad_busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self, m => m.grad_busemann_coord(v, x))
    }
}

pub(crate) fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn gaussian_vec(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `ln(α + √(α² − 1))` written in terms of `δ = α − 1 ≥ 0`.
pub(crate) fn acosh1p(delta: f64) -> f64 {
    let d = delta.max(0.0);
    (d + (d * (2.0 + d)).sqrt()).ln_1p()
}
