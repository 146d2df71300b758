//! Samplers for experiment targets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::chsw::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::geometry::{lorentz_to_ball, minkowski_inner, Geometry, Lorentz, Manifold, Spd};
use crate::linalg;
use crate::ot1d::check_simplex;

/// Wrapped normal on `𝕃^d_K`: a tangent Gaussian at the origin carried to
/// `mean`.
#[derive(Debug, Clone)]
pub struct WrappedNormalParams {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
}

impl WrappedNormalParams {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Self {
        WrappedNormalParams { mean, cov }
    }

    /// Isotropic covariance `σ²·I` about `mean`.
    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Self {
        let d = mean.len().saturating_sub(1);
        WrappedNormalParams {
            mean,
            cov: DMatrix::identity(d, d) * (sigma * sigma),
        }
    }
}

/// Parallel transport of `v ∈ T_x𝕃` to `T_y𝕃` along the connecting geodesic.
pub fn lorentz_transport(l: &Lorentz, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
    let k = l.curvature();
    let coef = k * minkowski_inner(y, v) / (1.0 + k * minkowski_inner(x, y));
    v.iter()
        .zip(x.iter().zip(y))
        .map(|(vi, (xi, yi))| vi - coef * (xi + yi))
        .collect()
}

fn hyperbolic_target(m: &Manifold) -> Result<(Lorentz, bool)> {
    match m {
        Manifold::Lorentz(l) => Ok((l.clone(), false)),
        Manifold::Poincare(p) => Ok((p.lorentz().clone(), true)),
        other => Err(Error::Unsupported {
            kind: other.kind(),
            what: "wrapped normal sampling",
        }),
    }
}

struct WrappedSampler<'a> {
    l: &'a Lorentz,
    origin: Vec<f64>,
    mean: &'a [f64],
    chol: DMatrix<f64>,
}

impl<'a> WrappedSampler<'a> {
    fn new(l: &'a Lorentz, params: &'a WrappedNormalParams) -> Result<Self> {
        l.check_point(&params.mean)?;
        let d = l.dim();
        if params.cov.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: params.cov.nrows(),
            });
        }
        linalg::check_symmetric(&params.cov)?;
        let chol = linalg::cholesky_lower(&params.cov)?;
        Ok(WrappedSampler {
            l,
            origin: l.origin(),
            mean: &params.mean,
            chol,
        })
    }

    fn draw(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let d = self.l.dim();
        let g = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z = &self.chol * g;
        let mut v = Vec::with_capacity(d + 1);
        v.push(0.0);
        v.extend(z.iter());
        let moved = lorentz_transport(self.l, &self.origin, self.mean, &v);
        self.l.exp(self.mean, &moved)
    }
}

fn finish(m: &Manifold, poincare: bool, k: f64, pts: Vec<Vec<f64>>) -> Result<DiscreteMeasure> {
    let pts = if poincare {
        pts.iter().map(|x| lorentz_to_ball(x, k)).collect()
    } else {
        pts
    };
    DiscreteMeasure::uniform(m.clone(), pts)
}

/// `n` draws from a wrapped normal. `m` is a Lorentz or Poincaré manifold;
/// `params.mean` is always given on the hyperboloid.
pub fn sample_wrapped_normal(
    m: &Manifold,
    params: &WrappedNormalParams,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<DiscreteMeasure> {
    let (l, poincare) = hyperbolic_target(m)?;
    let s = WrappedSampler::new(&l, params)?;
    let pts = (0..n).map(|_| s.draw(rng)).collect::<Result<Vec<_>>>()?;
    finish(m, poincare, l.curvature(), pts)
}

/// Mixture of wrapped normals: a categorical draw picks the component.
pub fn sample_mixture(
    m: &Manifold,
    components: &[(f64, WrappedNormalParams)],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<DiscreteMeasure> {
    if components.is_empty() {
        return Err(Error::InvalidConfig("a mixture needs at least one component".into()));
    }
    let weights: Vec<f64> = components.iter().map(|c| c.0).collect();
    check_simplex(&weights)?;
    let (l, poincare) = hyperbolic_target(m)?;
    let samplers = components
        .iter()
        .map(|(_, p)| WrappedSampler::new(&l, p))
        .collect::<Result<Vec<_>>>()?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let k = if samplers.len() == 1 {
            0
        } else {
            pick(&weights, rng.random::<f64>())
        };
        pts.push(samplers[k].draw(rng)?);
    }
    finish(m, poincare, l.curvature(), pts)
}

/// Index `k` with `Σ_{i<k} wᵢ ≤ u < Σ_{i≤k} wᵢ`, never a zero-weight entry.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = k;
        acc += w;
        if u < acc {
            return k;
        }
    }
    last
}

/// Euclidean Gaussian `N(mean, σ²I)`.
pub fn sample_gaussian(mean: &[f64], sigma: f64, n: usize, rng: &mut dyn RngCore) -> Result<DiscreteMeasure> {
    let m = Manifold::Euclidean(crate::geometry::Euclidean::new(mean.len())?);
    let pts = (0..n)
        .map(|_| {
            mean.iter()
                .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    DiscreteMeasure::uniform(m, pts)
}

/// Symmetric matrix with `N(0, 1)` diagonal and `N(0, ½)` off-diagonal entries,
/// a standard Gaussian in the isometric flat coordinates.
fn symmetric_gaussian(n: usize, rng: &mut dyn RngCore) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = rng.sample::<f64, _>(StandardNormal);
        for j in i + 1..n {
            let v = rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// `exp(log base + scale·S)` with `S` from [`symmetric_gaussian`].
pub fn sample_spd_log_gaussian(
    spd: &Spd,
    base: &DMatrix<f64>,
    scale: f64,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<DiscreteMeasure> {
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let log_base = linalg::spd_log(base)?;
    let pts = (0..n)
        .map(|_| {
            let s = symmetric_gaussian(spd.n(), rng);
            linalg::sym_exp(&(&log_base + s * scale)).map(|x| linalg::to_row_major(&x))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::uniform(Manifold::Spd(spd.clone()), pts)
}
