use std::time::Instant;

use chsw_core::flows::{run_flow, FlowConfig};
use chsw_core::geometry::{Lorentz, Spd, SpdMetric};
use chsw_core::sampling::{sample_gaussian, sample_spd_log_gaussian, sample_wrapped_normal, WrappedNormalParams};
use chsw_core::{Geometry, Manifold, Projection};
use nalgebra::{DMatrix, DVector};

use crate::support::{attempt, rng, Verdict};

const N: usize = 500;
const TAU: f64 = 0.1;
const STEPS: usize = 200;
const L: usize = 64;

const EUCLIDEAN_RATIO: f64 = 0.25;
const EUCLIDEAN_BUDGET_S: f64 = 60.0;

const HYPERBOLIC_EVAL_EVERY: usize = 10;
const BURN_IN_STEPS: usize = STEPS / 10;
const HYPERBOLIC_RATIO: f64 = 0.5;
const HYPERBOLOID_TOL: f64 = 1e-7;

const SPD_N: usize = 100;
const SPD_RATIO: f64 = 0.3;

fn flow_config(projection: Projection, seed: u64, eval_every: usize, exact_w2: bool) -> FlowConfig {
    FlowConfig {
        step_size: TAU,
        num_steps: STEPS,
        num_projections: L,
        projection,
        seed,
        eval_every,
        resample_directions: true,
        exact_w2,
    }
}

pub fn euclidean_flow_converges() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(9);
    let init = attempt!(sample_gaussian(&[0.0, 0.0], 1.0, N, &mut rng));
    let target = attempt!(sample_gaussian(&[3.0, 2.0], 1.0, N, &mut rng));
    let state = attempt!(run_flow(init, &target, &flow_config(Projection::Geodesic, 90, STEPS, true)));
    let first = state.history.first().and_then(|r| r.w2_exact).unwrap_or(f64::NAN);
    let last = state.history.last().and_then(|r| r.w2_exact).unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        last <= EUCLIDEAN_RATIO * first && secs < EUCLIDEAN_BUDGET_S,
        format!(
            "W_2 {first:.4} -> {last:.4} (ratio {:.3}, limit {EUCLIDEAN_RATIO}), {secs:.1}s (budget {EUCLIDEAN_BUDGET_S}s)",
            last / first
        ),
    )
}

pub fn hyperbolic_flow_converges() -> Verdict {
    let mut rng = rng(10);
    let l = Lorentz::new(2, -1.0).unwrap();
    let m = Manifold::Lorentz(l.clone());
    let start_mean = l.geodesic_point(&l.direction(vec![0.0, 1.0, 0.0]).unwrap(), 2.0).unwrap();
    let init = attempt!(sample_wrapped_normal(&m, &WrappedNormalParams::isotropic(start_mean, 0.3), N, &mut rng));
    let target = attempt!(sample_wrapped_normal(&m, &WrappedNormalParams::isotropic(m.origin(), 0.5), N, &mut rng));
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, proj) in [Projection::Geodesic, Projection::Horospherical].into_iter().enumerate() {
        let cfg = flow_config(proj, 100 + k as u64, HYPERBOLIC_EVAL_EVERY, true);
        let state = attempt!(run_flow(init.clone(), &target, &cfg));
        let logged: Vec<(usize, f64)> = state
            .history
            .iter()
            .map(|r| (r.step, r.w2_exact.unwrap_or(f64::NAN)))
            .collect();
        let after: Vec<f64> = logged.iter().filter(|(s, _)| *s >= BURN_IN_STEPS).map(|&(_, w)| w).collect();
        let rises: Vec<String> = after
            .windows(2)
            .filter(|w| w[1] > w[0] || w[1].is_nan())
            .map(|w| format!("{:.4}->{:.4}", w[0], w[1]))
            .collect();
        let (first, last) = (logged[0].1, logged[logged.len() - 1].1);
        let residual = state
            .particles
            .points()
            .map(|x| m.constraint_residual(x))
            .fold(0.0f64, f64::max);
        let ok = rises.is_empty() && last <= HYPERBOLIC_RATIO * first && residual <= HYPERBOLOID_TOL;
        pass &= ok;
        parts.push(format!(
            "{}: W_2 {first:.4} -> {last:.4} (ratio {:.3}), {} increases after step {BURN_IN_STEPS}{}, residual {residual:.1e}",
            proj.name(),
            last / first,
            rises.len(),
            if rises.is_empty() { String::new() } else { format!(" [{}]", rises.join(", ")) }
        ));
    }
    Verdict::new(
        pass,
        format!(
            "{} (ratio limit {HYPERBOLIC_RATIO}, residual tol {HYPERBOLOID_TOL:e})",
            parts.join("; ")
        ),
    )
}

pub fn spd_flow_converges() -> Verdict {
    let mut rng = rng(11);
    let spd = Spd::new(2, SpdMetric::LogEuclidean).unwrap();
    let identity = DMatrix::<f64>::identity(2, 2);
    let shifted = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0f64.exp(), (-0.5f64).exp()]));
    let init = attempt!(sample_spd_log_gaussian(&spd, &identity, 0.3, SPD_N, &mut rng));
    let target = attempt!(sample_spd_log_gaussian(&spd, &shifted, 0.3, SPD_N, &mut rng));
    let state = attempt!(run_flow(init, &target, &flow_config(Projection::Geodesic, 110, STEPS / 10, false)));
    let first = state.history[0].chsw;
    let last = state.history[state.history.len() - 1].chsw;
    Verdict::new(
        last <= SPD_RATIO * first,
        format!(
            "CHSW_2 {first:.4} -> {last:.4} (ratio {:.3}, limit {SPD_RATIO}) over {} steps without divergence",
            last / first,
            state.step
        ),
    )
}
