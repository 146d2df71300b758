use std::time::Instant;

use chsw_core::chsw::sample_directions;
use chsw_core::exact::{measure_wasserstein, transport_cost};
use chsw_core::geometry::{lorentz_to_ball, Euclidean, Lorentz, Poincare, SpdMetric};
use chsw_core::ot1d::{w1d_sorted, w1d_weighted, Projected1D};
use chsw_core::sampling::{sample_wrapped_normal, WrappedNormalParams};
use chsw_core::{
    chsw, chsw_with_directions, gram_matrix, ChswConfig, DiscreteMeasure, Geometry, Manifold, Projection,
};
use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use crate::support::{attempt, kinds, label, mahalanobis, random_point, rng, spd, std_dev, Verdict};

const PULLBACK_N: usize = 200;
const PULLBACK_L: usize = 64;
const PULLBACK_TOL: f64 = 1e-9;

const ISOMETRY_L: usize = 64;
const ISOMETRY_N: usize = 100;
const ISOMETRY_REL_TOL: f64 = 1e-7;

const BOUND_INSTANCES: usize = 50;
const BOUND_N: usize = 48;
const BOUND_L: usize = 64;
const BOUND_SIGMAS: f64 = 3.0;

const OT_CASES: usize = 10_000;
const OT_MAX_ATOMS: usize = 8;
const OT_TOL: f64 = 1e-10;

const RATE_SEEDS: u64 = 200;
const RATE_LS: [usize; 3] = [16, 64, 256];
const RATE_LO: f64 = 2.0 * 0.65;
const RATE_HI: f64 = 2.0 * 1.35;
const RATE_BUDGET_S: f64 = 120.0;

const KERNEL_COLLECTIONS: usize = 20;
const KERNEL_MEASURES: usize = 10;
const KERNEL_GAMMA: f64 = 1.0;
const KERNEL_TOL: f64 = 1e-8;

fn cloud(m: &Manifold, rng: &mut dyn RngCore, n: usize, radius: f64) -> DiscreteMeasure {
    let pts = (0..n).map(|_| random_point(m, rng, radius)).collect();
    DiscreteMeasure::uniform(m.clone(), pts).unwrap()
}

fn random_simplex(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn config(projection: Projection, num_projections: usize, seed: u64) -> ChswConfig {
    ChswConfig {
        p: 2.0,
        num_projections,
        projection,
        seed,
    }
}

pub fn pullback_reduces_to_euclidean() -> Verdict {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    let spaces = [
        mahalanobis(),
        spd(3, SpdMetric::LogEuclidean),
        spd(3, SpdMetric::Onq { p: 0.5, q: 2.0 }),
        spd(3, SpdMetric::LogCholesky),
    ];
    for m in &spaces {
        let flat = |x: &[f64]| match m {
            Manifold::Mahalanobis(a) => Ok(a.to_flat(x)),
            Manifold::Spd(s) => s.flat_embedding(x),
            _ => unreachable!(),
        };
        let mu = cloud(m, &mut rng, PULLBACK_N, 1.0);
        let nu = cloud(m, &mut rng, PULLBACK_N, 2.0);
        let dim = flat(mu.point(0)).unwrap().len();
        let e = Manifold::Euclidean(Euclidean::new(dim).unwrap());
        let map = |c: &DiscreteMeasure| {
            let pts = c.points().map(flat).collect::<chsw_core::Result<Vec<_>>>()?;
            DiscreteMeasure::uniform(e.clone(), pts)
        };
        let (mu_e, nu_e) = (attempt!(map(&mu)), attempt!(map(&nu)));
        for (k, proj) in [Projection::Geodesic, Projection::Horospherical].into_iter().enumerate() {
            let cfg = config(proj, PULLBACK_L, 30 + k as u64);
            let a = attempt!(chsw(&mu, &nu, &cfg));
            let b = attempt!(chsw(&mu_e, &nu_e, &cfg));
            worst = worst.max((a.value_p - b.value_p).abs());
        }
    }
    Verdict::new(
        worst <= PULLBACK_TOL,
        format!("max |CHSW_2^2 - SW_2^2| {worst:.2e} over Mahalanobis and 3 SPD pullbacks (tol {PULLBACK_TOL:e})"),
    )
}

pub fn lorentz_and_poincare_agree() -> Verdict {
    let mut rng = rng(4);
    let mut worst = 0.0f64;
    for k in [-1.0, -0.5] {
        for d in [2, 3] {
            let l = Lorentz::new(d, k).unwrap();
            let ball = Manifold::Poincare(Poincare::new(d, k).unwrap());
            let lm = Manifold::Lorentz(l.clone());
            let far = l.geodesic_point(&l.sample_direction(&mut rng), 1.2).unwrap();
            let mu = attempt!(sample_wrapped_normal(
                &lm,
                &WrappedNormalParams::isotropic(lm.origin(), 0.6),
                ISOMETRY_N,
                &mut rng
            ));
            let nu = attempt!(sample_wrapped_normal(
                &lm,
                &WrappedNormalParams::isotropic(far, 0.4),
                ISOMETRY_N,
                &mut rng
            ));
            let to_ball = |c: &DiscreteMeasure| {
                DiscreteMeasure::uniform(ball.clone(), c.points().map(|x| lorentz_to_ball(x, k)).collect())
            };
            let (mu_b, nu_b) = (attempt!(to_ball(&mu)), attempt!(to_ball(&nu)));
            let dirs = sample_directions(&lm, 40 + d as u64, ISOMETRY_L);
            let ideal = attempt!(dirs
                .iter()
                .map(|v| ball.direction(v.coords()[1..].to_vec()))
                .collect::<chsw_core::Result<Vec<_>>>());
            for proj in [Projection::Geodesic, Projection::Horospherical] {
                let a = attempt!(chsw_with_directions(&mu, &nu, 2.0, &dirs, proj)).value;
                let b = attempt!(chsw_with_directions(&mu_b, &nu_b, 2.0, &ideal, proj)).value;
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    Verdict::new(
        worst <= ISOMETRY_REL_TOL,
        format!("max relative gap {worst:.2e} for GHSW_2 and HHSW_2, K in {{-1, -0.5}}, d in {{2, 3}} (tol {ISOMETRY_REL_TOL:e})"),
    )
}

pub fn bounded_by_exact_wasserstein() -> Verdict {
    let mut rng = rng(5);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = String::new();
    let mut violations = 0;
    let mut count = 0;
    for m in kinds() {
        let affine = matches!(&m, Manifold::Spd(s) if s.metric() == SpdMetric::AffineInvariant);
        for i in 0..BOUND_INSTANCES {
            let mu = cloud(&m, &mut rng, BOUND_N, 1.5);
            let nu_pts = (0..BOUND_N).map(|_| random_point(&m, &mut rng, 2.5)).collect();
            let weights = (i % 2 == 1).then(|| random_simplex(&mut rng, BOUND_N));
            let nu = attempt!(DiscreteMeasure::new(m.clone(), nu_pts, weights));
            let w = attempt!(measure_wasserstein(&mu, &nu, 2.0));
            for proj in [Projection::Geodesic, Projection::Horospherical] {
                if affine && proj == Projection::Geodesic {
                    continue;
                }
                let e = attempt!(chsw(&mu, &nu, &config(proj, BOUND_L, i as u64)));
                let se = e.stderr(2.0);
                let excess = e.value - w - BOUND_SIGMAS * se;
                if excess > 0.0 {
                    violations += 1;
                }
                if excess > worst {
                    worst = excess;
                    worst_at = format!("{} {} #{i}", label(&m), proj.name());
                }
                count += 1;
            }
        }
    }
    Verdict::new(
        violations == 0,
        format!(
            "{count} instances, {violations} with CHSW > W_2 + {BOUND_SIGMAS}·stderr, largest excess {worst:.3e} ({worst_at})"
        ),
    )
}

pub fn one_dimensional_ot_is_exact() -> Verdict {
    let mut rng = rng(6);
    let mut worst = 0.0f64;
    for case in 0..OT_CASES {
        let n = rng.random_range(1..=OT_MAX_ATOMS);
        let m = if case % 3 == 0 { n } else { rng.random_range(1..=OT_MAX_ATOMS) };
        // a coarse grid produces ties
        let mut draw = |k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| {
                    if rng.random::<f64>() < 0.3 {
                        rng.random_range(-3i32..=3) as f64
                    } else {
                        rng.random_range(-4.0..4.0)
                    }
                })
                .collect()
        };
        let (xs, ys) = (draw(n), draw(m));
        let p = [1.0, 1.5, 2.0, 3.0][case % 4];
        let uniform = case % 2 == 0;
        let weights = |k: usize, rng: &mut dyn RngCore| -> Vec<f64> {
            if uniform {
                return vec![1.0 / k as f64; k];
            }
            let mut w = random_simplex(rng, k);
            if k > 1 && rng.random::<f64>() < 0.2 {
                let z = rng.random_range(0..k);
                let s = 1.0 - w[z];
                w[z] = 0.0;
                w.iter_mut().for_each(|x| *x /= s);
            }
            w
        };
        let (a, b) = (weights(n, &mut rng), weights(m, &mut rng));
        let (px, py) = if uniform {
            (Projected1D::uniform(xs.clone()), Projected1D::uniform(ys.clone()))
        } else {
            (Projected1D::weighted(xs.clone(), a.clone()), Projected1D::weighted(ys.clone(), b.clone()))
        };
        let (px, py) = (attempt!(px), attempt!(py));
        let cost = DMatrix::from_fn(n, m, |i, j| (xs[i] - ys[j]).abs().powf(p));
        let lp = attempt!(transport_cost(&cost, &a, &b));
        let e = (w1d_sorted(&px, &py, p) - lp).abs().max((w1d_weighted(&px, &py, p) - lp).abs());
        worst = worst.max(e);
    }
    Verdict::new(
        worst <= OT_TOL,
        format!("{OT_CASES} cases with n, m <= {OT_MAX_ATOMS}, max |closed form - LP| {worst:.2e} (tol {OT_TOL:e})"),
    )
}

pub fn monte_carlo_rate() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(7);
    let lm = Manifold::Lorentz(Lorentz::new(2, -1.0).unwrap());
    let far = lm.geodesic_point(&lm.sample_direction(&mut rng), 1.0).unwrap();
    let mu = attempt!(sample_wrapped_normal(&lm, &WrappedNormalParams::isotropic(lm.origin(), 0.5), 64, &mut rng));
    let nu = attempt!(sample_wrapped_normal(&lm, &WrappedNormalParams::isotropic(far, 0.5), 64, &mut rng));
    let mut pass = true;
    let mut parts = Vec::new();
    for proj in [Projection::Geodesic, Projection::Horospherical] {
        let mut stds = Vec::new();
        for l in RATE_LS {
            let vals = attempt!((0..RATE_SEEDS)
                .map(|s| chsw(&mu, &nu, &config(proj, l, 1000 + s)).map(|e| e.value_p))
                .collect::<chsw_core::Result<Vec<_>>>());
            stds.push(std_dev(&vals));
        }
        let ratios: Vec<f64> = stds.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= ratios.iter().all(|r| (RATE_LO..=RATE_HI).contains(r));
        parts.push(format!("{}: std {:.3e} -> {:.3e} -> {:.3e}, ratios {:.3}, {:.3}", proj.name(), stds[0], stds[1], stds[2], ratios[0], ratios[1]));
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        pass && secs < RATE_BUDGET_S,
        format!("{} (allowed [{RATE_LO}, {RATE_HI}]), {secs:.1}s (budget {RATE_BUDGET_S}s)", parts.join("; ")),
    )
}

pub fn gaussian_kernel_is_psd() -> Verdict {
    let mut rng = rng(8);
    let spaces = [Manifold::Lorentz(Lorentz::new(2, -1.0).unwrap()), spd(3, SpdMetric::LogEuclidean)];
    let mut worst = f64::INFINITY;
    for m in &spaces {
        for c in 0..KERNEL_COLLECTIONS {
            let measures: Vec<DiscreteMeasure> = (0..KERNEL_MEASURES)
                .map(|_| {
                    let centre = random_point(m, &mut rng, 1.5);
                    let n = rng.random_range(5..25);
                    let pts = (0..n)
                        .map(|_| {
                            let v = m.sample_direction(&mut rng);
                            let step = m.geodesic_point(&v, 0.5 * rng.random::<f64>()).unwrap();
                            let t = m.log(&m.origin(), &step).unwrap();
                            m.exp(&centre, &m.to_tangent(&centre, &t)).unwrap()
                        })
                        .collect();
                    DiscreteMeasure::uniform(m.clone(), pts).unwrap()
                })
                .collect();
            for proj in [Projection::Geodesic, Projection::Horospherical] {
                let k = attempt!(gram_matrix(&measures, KERNEL_GAMMA, &config(proj, 32, c as u64)));
                let eig = k.symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                worst = worst.min(lo / hi);
            }
        }
    }
    Verdict::new(
        worst >= -KERNEL_TOL,
        format!(
            "{} Gram matrices of {KERNEL_MEASURES} measures, min lambda_min/lambda_max {worst:.3e} (floor -{KERNEL_TOL:e})",
            2 * 2 * KERNEL_COLLECTIONS
        ),
    )
}
