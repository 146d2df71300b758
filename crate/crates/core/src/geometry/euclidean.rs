use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{check_len, dot, gaussian_vec, norm2, Direction, Geometry};
use crate::error::{Error, Result};
use crate::linalg;

/// Flat `ℝ^d`.
#[derive(Debug, Clone)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("euclidean dimension must be positive".into()));
        }
        Ok(Euclidean { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Geometry for Euclidean {
    fn kind(&self) -> &'static str {
        "euclidean"
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
        Ok(())
    }
    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(x, self.dim)?;
        check_len(y, self.dim)?;
        Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
    fn inner(&self, _x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        Ok(dot(u, w))
    }
    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.dim)?;
        Ok(x.iter().zip(v).map(|(a, b)| a + b).collect())
    }
    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.dim)?;
        Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
    }
    fn direction_norm(&self, v: &[f64]) -> f64 {
        norm2(v)
    }
    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        gaussian_vec(rng, self.dim)
    }
    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        Ok(v.coords().iter().map(|c| c * t).collect())
    }
    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim)?;
        Ok(dot(x, v.coords()))
    }
    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim)?;
        Ok(-dot(x, v.coords()))
    }
    fn grad_geodesic_coord(&self, v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(v.coords().to_vec())
    }
    fn grad_busemann_coord(&self, v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(v.coords().iter().map(|c| -c).collect())
    }
}

/// `ℝ^d` with the Mahalanobis metric `d(x, y)² = (x − y)ᵀ A (x − y)`, the
/// pullback of the Euclidean metric by `x ↦ A^{1/2} x`.
#[derive(Debug, Clone)]
pub struct Mahalanobis {
    a: DMatrix<f64>,
    a_sqrt: DMatrix<f64>,
    a_inv_sqrt: DMatrix<f64>,
}

impl Mahalanobis {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        linalg::check_symmetric(&a)?;
        let eig = linalg::spd_eigen(&a)?;
        let a_sqrt = eig.map(f64::sqrt);
        let a_inv_sqrt = eig.map(|l| 1.0 / l.sqrt());
        Ok(Mahalanobis {
            a,
            a_sqrt,
            a_inv_sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn metric_sqrt(&self) -> &DMatrix<f64> {
        &self.a_sqrt
    }

    pub fn metric_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.a_inv_sqrt
    }

    fn apply(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        (m * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    fn quad(&self, u: &[f64], w: &[f64]) -> f64 {
        let aw = Self::apply(&self.a, w);
        dot(u, &aw)
    }

    /// Isometric map into Euclidean space, `x ↦ A^{1/2} x`.
    pub fn to_flat(&self, x: &[f64]) -> Vec<f64> {
        Self::apply(&self.a_sqrt, x)
    }

    /// Image of a direction under the differential of [`Mahalanobis::to_flat`].
    pub fn direction_to_flat(&self, v: &Direction) -> Vec<f64> {
        Self::apply(&self.a_sqrt, v.coords())
    }

    pub fn mahalanobis_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.quad(&diff, &diff).max(0.0).sqrt()
    }

    /// `P^v(x) = xᵀ A v`.
    pub fn mahalanobis_coord(&self, v: &Direction, x: &[f64]) -> f64 {
        self.quad(x, v.coords())
    }
}

impl Geometry for Mahalanobis {
    fn kind(&self) -> &'static str {
        "mahalanobis"
    }
    fn point_len(&self) -> usize {
        self.dim()
    }
    fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(x, self.dim())?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::ConstraintViolation("non-finite coordinate".into()));
        }
        Ok(())
    }
    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(x, self.dim())?;
        check_len(y, self.dim())?;
        Ok(self.mahalanobis_dist(x, y))
    }
    fn inner(&self, _x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        Ok(self.quad(u, w))
    }
    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.dim())?;
        Ok(x.iter().zip(v).map(|(a, b)| a + b).collect())
    }
    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.dim())?;
        Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
    }
    fn direction_norm(&self, v: &[f64]) -> f64 {
        self.quad(v, v).max(0.0).sqrt()
    }
    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let g = gaussian_vec(rng, self.dim());
        Self::apply(&self.a_inv_sqrt, &g)
    }
    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        Ok(v.coords().iter().map(|c| c * t).collect())
    }
    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim())?;
        Ok(self.mahalanobis_coord(v, x))
    }
    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.dim())?;
        Ok(-self.mahalanobis_coord(v, x))
    }
    fn grad_geodesic_coord(&self, v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        // A^{-1/2}(A^{-1/2}(A v)) = v
        Ok(v.coords().to_vec())
    }
    fn grad_busemann_coord(&self, v: &Direction, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(v.coords().iter().map(|c| -c).collect())
    }
}
