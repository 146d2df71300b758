use std::time::Instant;

use chsw_core::geometry::oracle::sample_oracle_direction;
use chsw_core::geometry::{ai_busemann_coord, minkowski_inner, numeric_busemann, numeric_geodesic_coord, Spd, SpdMetric};
use chsw_core::linalg::{self, sym_exp};
use chsw_core::{Error, Geometry, Manifold, Projection};
use nalgebra::DMatrix;
use rand::Rng;

use crate::support::{attempt, kinds, label, random_point, random_symmetric, random_unit_tangent, rng, Verdict};

const INPUTS_PER_KIND: usize = 1000;
const T_MAX: f64 = 20.0;
const ORACLE_RADIUS: f64 = 0.25;
const GEODESIC_TOL: f64 = 1e-6;
const BUSEMANN_TOL: f64 = 2e-3;
const CLOSED_FORM_BUDGET_S: f64 = 30.0;

const GRAD_RADIUS: f64 = 1.0;
const FD_STEP: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_FLOOR: f64 = 1e-7;
const LORENTZ_TANGENT_TOL: f64 = 1e-8;
const GRADIENT_BUDGET_S: f64 = 60.0;

const AI_PAIRS: usize = 200;
const AI_ORACLE_TOL: f64 = 2e-3;
const AI_INVARIANCE_TOL: f64 = 1e-7;
/// The truncated limit carries a bias of about |P⊥ log M|²/(2 t_max); points
/// are drawn from the geodesic ball of this radius around the identity.
const AI_POINT_RADIUS: f64 = 0.25;

pub fn closed_forms_match_oracles() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(1);
    let (mut geo_err, mut bus_err) = (0.0f64, 0.0f64);
    let mut worst = String::new();
    let mut degenerate = 0;
    for m in kinds() {
        for _ in 0..INPUTS_PER_KIND {
            let v = sample_oracle_direction(&m, &mut rng, T_MAX);
            let x = random_point(&m, &mut rng, ORACLE_RADIUS);
            match m.geodesic_coord(&v, &x) {
                Ok(g) => {
                    let e = (g - attempt!(numeric_geodesic_coord(&m, &v, &x))).abs();
                    if e > geo_err {
                        geo_err = e;
                        worst = label(&m);
                    }
                }
                Err(Error::Unsupported { .. }) => {}
                Err(e) => return Verdict::fail(format!("{}: {e}", label(&m))),
            }
            match m.busemann_coord(&v, &x) {
                Ok(b) => {
                    let e = (b - attempt!(numeric_busemann(&m, &v, &x, T_MAX))).abs();
                    bus_err = bus_err.max(e);
                }
                Err(Error::DegenerateDirection(_)) => degenerate += 1,
                Err(e) => return Verdict::fail(format!("{}: {e}", label(&m))),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        geo_err <= GEODESIC_TOL && bus_err <= BUSEMANN_TOL && secs < CLOSED_FORM_BUDGET_S,
        format!(
            "max geodesic err {geo_err:.2e} (tol {GEODESIC_TOL:e}, worst {worst}), max Busemann err {bus_err:.2e} \
             (tol {BUSEMANN_TOL:e}), {degenerate} degenerate directions skipped, {secs:.1}s (budget {CLOSED_FORM_BUDGET_S}s)"
        ),
    )
}

pub fn gradients_match_finite_differences() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut worst_ratio = 0.0f64;
    let mut worst = String::new();
    let mut tangent_err = 0.0f64;
    let mut checked = 0usize;
    for m in kinds() {
        for _ in 0..INPUTS_PER_KIND {
            let v = m.sample_direction(&mut rng);
            let x = random_point(&m, &mut rng, GRAD_RADIUS);
            let u = random_unit_tangent(&m, &mut rng, &x);
            let plus = attempt!(m.exp(&x, &u.iter().map(|c| c * FD_STEP).collect::<Vec<_>>()));
            let minus = attempt!(m.exp(&x, &u.iter().map(|c| -c * FD_STEP).collect::<Vec<_>>()));
            for proj in [Projection::Geodesic, Projection::Horospherical] {
                let g = match proj.grad(&m, &v, &x) {
                    Ok(g) => g,
                    Err(Error::Unsupported { .. }) => continue,
                    Err(e) => return Verdict::fail(format!("{} {}: {e}", label(&m), proj.name())),
                };
                let fd = (attempt!(proj.coord(&m, &v, &plus)) - attempt!(proj.coord(&m, &v, &minus))) / (2.0 * FD_STEP);
                let an = attempt!(m.inner(&x, &g, &u));
                let ratio = (fd - an).abs() / (GRAD_REL_TOL * an.abs()).max(GRAD_FLOOR);
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst = format!("{} {}", label(&m), proj.name());
                }
                if let Manifold::Lorentz(_) = m {
                    tangent_err = tangent_err.max(minkowski_inner(&x, &g).abs());
                }
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        worst_ratio <= 1.0 && tangent_err <= LORENTZ_TANGENT_TOL && secs < GRADIENT_BUDGET_S,
        format!(
            "{checked} gradients, worst err/tol {worst_ratio:.3} ({worst}), Lorentz tangency {tangent_err:.1e} \
             (tol {LORENTZ_TANGENT_TOL:e}), {secs:.1}s (budget {GRADIENT_BUDGET_S}s)"
        ),
    )
}

pub fn affine_invariant_busemann() -> Verdict {
    let spd = Spd::new(3, SpdMetric::AffineInvariant).unwrap();
    let mut rng = rng(12);
    let (mut oracle_err, mut inv_err) = (0.0f64, 0.0f64);
    let mut done = 0;
    let mut degenerate = 0;
    while done < AI_PAIRS {
        let v = sample_oracle_direction(&spd, &mut rng, T_MAX);
        let a = spd.matrix(v.coords()).unwrap();
        let s = random_symmetric(&mut rng, 3, 1.0);
        let r = AI_POINT_RADIUS * rng.random::<f64>();
        let m = attempt!(sym_exp(&(&s * (r / s.norm()))));
        let b = match ai_busemann_coord(&a, &m) {
            Ok(b) => b,
            Err(Error::DegenerateDirection(_)) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Verdict::fail(e.to_string()),
        };
        let truncated = attempt!(numeric_busemann(&spd, &v, &linalg::to_row_major(&m), T_MAX));
        oracle_err = oracle_err.max((b - truncated).abs());

        // unit upper-triangular action in the eigenframe of A fixes the ideal point
        let u = attempt!(linalg::sym_eigen(&a)).u;
        let mut g = DMatrix::<f64>::identity(3, 3);
        for i in 0..3 {
            for j in i + 1..3 {
                g[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        // the invariance needs no oracle, so it is also checked far from the identity
        let far = attempt!(sym_exp(&random_symmetric(&mut rng, 3, 1.0)));
        for (x, bx) in [(&m, b), (&far, attempt!(ai_busemann_coord(&a, &far)))] {
            let moved = &u * (&g * (u.transpose() * x * &u) * g.transpose()) * u.transpose();
            let b_moved = attempt!(ai_busemann_coord(&a, &linalg::symmetrize(&moved).0));
            inv_err = inv_err.max((bx - b_moved).abs() / bx.abs().max(1.0));
        }
        done += 1;
    }
    Verdict::new(
        oracle_err <= AI_ORACLE_TOL && inv_err <= AI_INVARIANCE_TOL,
        format!(
            "{done} pairs, truncated-limit err {oracle_err:.2e} (tol {AI_ORACLE_TOL:e}), invariance err \
             {inv_err:.2e} (relative beyond 1) (tol {AI_INVARIANCE_TOL:e}), {degenerate} degenerate skipped"
        ),
    )
}
