use chsw_core::geometry::{Euclidean, Lorentz, Mahalanobis, Poincare, Product, Spd, SpdMetric};
use chsw_core::{Geometry, Manifold};
use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Verdict::new(false, detail)
    }
}

/// Turns an early error into a failed verdict.
macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return $crate::support::Verdict::fail(format!("{}: {err}", stringify!($e))),
        }
    };
}
pub(crate) use attempt;

pub fn rng(seed: u64) -> impl Rng {
    chsw_core::chsw::direction_rng(seed, 0xacce)
}

pub fn mahalanobis() -> Manifold {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
    Manifold::Mahalanobis(Mahalanobis::new(a).unwrap())
}

pub fn spd(n: usize, metric: SpdMetric) -> Manifold {
    Manifold::Spd(Spd::new(n, metric).unwrap())
}

pub fn kinds() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean(Euclidean::new(3).unwrap()),
        mahalanobis(),
        Manifold::Lorentz(Lorentz::new(2, -1.0).unwrap()),
        Manifold::Lorentz(Lorentz::new(3, -0.5).unwrap()),
        Manifold::Poincare(Poincare::new(2, -1.0).unwrap()),
        Manifold::Poincare(Poincare::new(3, -2.0).unwrap()),
        spd(3, SpdMetric::LogEuclidean),
        spd(3, SpdMetric::Onq { p: 0.5, q: 2.0 }),
        spd(3, SpdMetric::LogCholesky),
        spd(3, SpdMetric::AffineInvariant),
        Manifold::Product(
            Product::new(vec![
                Manifold::Euclidean(Euclidean::new(2).unwrap()),
                Manifold::Lorentz(Lorentz::new(2, -1.0).unwrap()),
            ])
            .unwrap(),
        ),
    ]
}

pub fn label(m: &Manifold) -> String {
    serde_json::to_string(&m.descriptor()).unwrap()
}

/// Point at geodesic distance uniform in `[0, radius]` from the origin.
pub fn random_point(m: &Manifold, rng: &mut dyn RngCore, radius: f64) -> Vec<f64> {
    let v = m.sample_direction(rng);
    let r = radius * rng.random::<f64>();
    m.geodesic_point(&v, r).unwrap()
}

pub fn random_unit_tangent(m: &Manifold, rng: &mut dyn RngCore, x: &[f64]) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..m.point_len()).map(|_| rng.sample(StandardNormal)).collect();
        let t = m.to_tangent(x, &g);
        let n = m.norm(x, &t).unwrap();
        if n > 1e-6 {
            return t.iter().map(|c| c / n).collect();
        }
    }
}

pub fn random_symmetric(rng: &mut dyn RngCore, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    (&g + g.transpose()) * (0.5 * scale)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
