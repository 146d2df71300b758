//! Monte-Carlo sliced Wasserstein estimators on Cartan-Hadamard manifolds.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Descriptor, Direction, Geometry, Manifold, Projection, SpdMetric};
use crate::ot1d::{check_simplex, w1d, Projected1D};

/// Finitely supported probability measure on a manifold, points stored
/// contiguously.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    manifold: Manifold,
    coords: Vec<f64>,
    stride: usize,
    weights: Option<Vec<f64>>,
}

impl DiscreteMeasure {
    /// Validates every point and, when given, the weight simplex. `None`
    /// means uniform weights.
    pub fn new(manifold: Manifold, points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let stride = manifold.point_len();
        let mut coords = Vec::with_capacity(points.len() * stride);
        for p in &points {
            manifold.check_point(p)?;
            coords.extend_from_slice(p);
        }
        if let Some(w) = &weights {
            if w.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: w.len(),
                });
            }
            check_simplex(w)?;
        }
        Ok(DiscreteMeasure {
            manifold,
            coords,
            stride,
            weights,
        })
    }

    pub fn uniform(manifold: Manifold, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(manifold, points, None)
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn descriptor(&self) -> Descriptor {
        self.manifold.descriptor()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.stride
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.stride..(i + 1) * self.stride]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.stride)
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }

    /// Raw coordinates, mutated in place by the flow without re-validation.
    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    /// Projects every point onto the geodesic indexed by `v`.
    pub fn project(&self, v: &Direction, projection: Projection) -> Result<Projected1D> {
        let vals = self
            .points()
            .map(|x| projection.coord(&self.manifold, v, x))
            .collect::<Result<Vec<f64>>>()?;
        match &self.weights {
            Some(w) => Projected1D::weighted(vals, w.clone()),
            None => Projected1D::uniform(vals),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChswConfig {
    pub p: f64,
    pub num_projections: usize,
    pub projection: Projection,
    pub seed: u64,
}

impl ChswConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidConfig(format!("p must be at least 1, got {}", self.p)));
        }
        if self.num_projections == 0 {
            return Err(Error::InvalidConfig("num_projections must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChswEstimate {
    pub value: f64,
    pub value_p: f64,
    pub per_direction: Vec<f64>,
    pub directions_used: usize,
}

impl ChswEstimate {
    fn from_per_direction(per_direction: Vec<f64>, p: f64) -> Self {
        let l = per_direction.len();
        // sequential sum: bitwise independent of the thread schedule
        let value_p = per_direction.iter().sum::<f64>() / l as f64;
        ChswEstimate {
            value: value_p.max(0.0).powf(1.0 / p),
            value_p,
            per_direction,
            directions_used: l,
        }
    }

    /// Sample mean and standard deviation of the per-direction terms.
    pub fn per_direction_stats(&self) -> (f64, f64) {
        let l = self.per_direction.len() as f64;
        let mean = self.value_p;
        if self.per_direction.len() < 2 {
            return (mean, 0.0);
        }
        let var = self.per_direction.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (l - 1.0);
        (mean, var.sqrt())
    }

    /// Monte-Carlo standard error of `value_p`.
    pub fn stderr_p(&self) -> f64 {
        self.per_direction_stats().1 / (self.per_direction.len() as f64).sqrt()
    }

    /// Standard error of `value` by the delta method.
    pub fn stderr(&self, p: f64) -> f64 {
        if self.value_p <= 0.0 {
            return self.stderr_p().powf(1.0 / p);
        }
        self.stderr_p() * self.value / (p * self.value_p)
    }
}

/// Generator for direction `ℓ` under `seed`: one ChaCha stream per index, so
/// a direction does not depend on how many others were drawn before it.
pub fn direction_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `L` directions from streams `0..L`.
pub fn sample_directions<G: Geometry + ?Sized>(m: &G, seed: u64, count: usize) -> Vec<Direction> {
    sample_directions_from(m, seed, 0, count)
}

/// `count` directions from streams `first..first + count`.
pub fn sample_directions_from<G: Geometry + ?Sized>(
    m: &G,
    seed: u64,
    first: u64,
    count: usize,
) -> Vec<Direction> {
    (0..count as u64)
        .map(|l| m.sample_direction(&mut direction_rng(seed, first + l)))
        .collect()
}

pub(crate) fn check_compatible(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    let (a, b) = (mu.descriptor(), nu.descriptor());
    if a != b {
        return Err(Error::DescriptorMismatch(format!(
            "{} vs {}",
            serde_json::to_string(&a).unwrap_or_default(),
            serde_json::to_string(&b).unwrap_or_default()
        )));
    }
    Ok(())
}

pub(crate) fn check_projection(m: &Manifold, projection: Projection) -> Result<()> {
    let affine = matches!(m, Manifold::Spd(s) if s.metric() == SpdMetric::AffineInvariant);
    if projection == Projection::Geodesic && affine {
        return Err(Error::InvalidConfig(
            "geodesic projection has no closed form on spd_affine_invariant".into(),
        ));
    }
    Ok(())
}

/// Estimate with caller-supplied directions.
pub fn chsw_with_directions(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    directions: &[Direction],
    projection: Projection,
) -> Result<ChswEstimate> {
    check_compatible(mu, nu)?;
    check_projection(mu.manifold(), projection)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidConfig(format!("p must be at least 1, got {p}")));
    }
    if directions.is_empty() {
        return Err(Error::InvalidConfig("at least one direction is required".into()));
    }
    let per_direction = directions
        .par_iter()
        .map(|v| {
            let a = mu.project(v, projection)?;
            let b = nu.project(v, projection)?;
            Ok(w1d(&a, &b, p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ChswEstimate::from_per_direction(per_direction, p))
}

pub fn chsw(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cfg: &ChswConfig) -> Result<ChswEstimate> {
    cfg.validate()?;
    check_compatible(mu, nu)?;
    check_projection(mu.manifold(), cfg.projection)?;
    let dirs = sample_directions(mu.manifold(), cfg.seed, cfg.num_projections);
    chsw_with_directions(mu, nu, cfg.p, &dirs, cfg.projection)
}

fn check_kernel(gamma: f64, cfg: &ChswConfig) -> Result<()> {
    if cfg.p != 2.0 {
        return Err(Error::InvalidConfig(format!("the Gaussian kernel needs p = 2, got {}", cfg.p)));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// `exp(−γ·CHSW₂²(μ, ν))`.
pub fn gaussian_kernel(mu: &DiscreteMeasure, nu: &DiscreteMeasure, gamma: f64, cfg: &ChswConfig) -> Result<f64> {
    check_kernel(gamma, cfg)?;
    Ok((-gamma * chsw(mu, nu, cfg)?.value_p).exp())
}

/// Kernel Gram matrix over `measures`, all pairs sharing one direction set.
pub fn gram_matrix(measures: &[DiscreteMeasure], gamma: f64, cfg: &ChswConfig) -> Result<DMatrix<f64>> {
    check_kernel(gamma, cfg)?;
    cfg.validate()?;
    let n = measures.len();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    for m in &measures[1..] {
        check_compatible(&measures[0], m)?;
    }
    let manifold = measures[0].manifold();
    check_projection(manifold, cfg.projection)?;
    let dirs = sample_directions(manifold, cfg.seed, cfg.num_projections);
    let mut k = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let e = chsw_with_directions(&measures[i], &measures[j], 2.0, &dirs, cfg.projection)?;
            let v = (-gamma * e.value_p).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}
