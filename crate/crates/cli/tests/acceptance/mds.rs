use std::time::Instant;

use chsw_core::geometry::Lorentz;
use chsw_core::mds::{mds_fit, MdsProblem};
use chsw_core::sampling::{sample_wrapped_normal, WrappedNormalParams};
use chsw_core::{Geometry, Manifold};
use nalgebra::DMatrix;

use crate::support::{attempt, rng, Verdict};

const POINTS: usize = 10;
const STRESS_TOL: f64 = 1e-6;
const BUDGET_S: f64 = 10.0;

pub fn self_embedding() -> Verdict {
    let mut rng = rng(13);
    let m = Manifold::Lorentz(Lorentz::new(2, -1.0).unwrap());
    let cloud = attempt!(sample_wrapped_normal(&m, &WrappedNormalParams::isotropic(m.origin(), 1.0), POINTS, &mut rng));
    let pts: Vec<&[f64]> = cloud.points().collect();
    let delta = DMatrix::from_fn(POINTS, POINTS, |i, j| m.dist(pts[i], pts[j]).unwrap());
    let mut problem = MdsProblem::new(delta, 2);
    problem.seed = 13;
    let start = Instant::now();
    let fit = attempt!(mds_fit(&problem));
    let secs = start.elapsed().as_secs_f64();
    let rel = fit.loss / problem.total_sq();
    Verdict::new(
        rel <= STRESS_TOL && secs < BUDGET_S,
        format!(
            "stress / sum delta^2 = {rel:.3e} (tol {STRESS_TOL:e}) after {} iterations, {secs:.2}s (budget {BUDGET_S}s)",
            fit.iterations
        ),
    )
}
