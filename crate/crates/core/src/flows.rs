//! Forward-Euler particle scheme for the Wasserstein gradient flow of
//! `½·CHSW₂²(·, ν)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chsw::{
    check_compatible, check_projection, chsw_with_directions, sample_directions, sample_directions_from,
    DiscreteMeasure,
};
use crate::error::{Error, Result};
use crate::exact::measure_wasserstein;
use crate::geometry::{Direction, Geometry, Manifold, Projection};
use crate::ot1d::potential_derivative;

/// Residual above which particles are pulled back onto the manifold.
pub const RETRACT_RESIDUAL: f64 = 1e-9;
/// Frobenius cap on a single SPD step.
pub const SPD_STEP_CLIP: f64 = 10.0;
/// Largest particle/target count for which exact W₂ is logged.
pub const EXACT_W2_MAX_POINTS: usize = 512;

/// Offset separating diagnostic directions from step directions.
const EVAL_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub step_size: f64,
    pub num_steps: usize,
    pub num_projections: usize,
    pub projection: Projection,
    pub seed: u64,
    /// Steps between diagnostics; 0 logs only the first and last state.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default = "default_true")]
    pub resample_directions: bool,
    #[serde(default)]
    pub exact_w2: bool,
}

fn default_true() -> bool {
    true
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig(format!("step size must be nonnegative, got {}", self.step_size)));
        }
        if self.num_steps == 0 {
            return Err(Error::InvalidConfig("num_steps must be positive".into()));
        }
        if self.num_projections == 0 {
            return Err(Error::InvalidConfig("num_projections must be positive".into()));
        }
        Ok(())
    }

    /// Directions used by step `step` (0-based).
    pub fn step_directions(&self, m: &Manifold, step: usize) -> Vec<Direction> {
        if self.resample_directions {
            sample_directions_from(m, self.seed, (step as u64 + 1) << 32, self.num_projections)
        } else {
            sample_directions(m, self.seed, self.num_projections)
        }
    }

    /// Fixed directions for the logged CHSW, shared by all checkpoints.
    pub fn eval_directions(&self, m: &Manifold) -> Vec<Direction> {
        sample_directions(m, self.seed.wrapping_add(EVAL_SEED_OFFSET), self.num_projections)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub step: usize,
    pub chsw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2_exact: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub particles: DiscreteMeasure,
    pub step: usize,
    pub history: Vec<FlowRecord>,
}

impl FlowState {
    pub fn new(particles: DiscreteMeasure) -> Self {
        FlowState {
            particles,
            step: 0,
            history: Vec::new(),
        }
    }
}

/// `v̂(xᵢ) = −(1/L) Σ_ℓ ψ'_ℓ(P^{v_ℓ}(xᵢ))·grad P^{v_ℓ}(xᵢ)` for every particle.
pub fn velocity(
    particles: &DiscreteMeasure,
    target: &DiscreteMeasure,
    directions: &[Direction],
    projection: Projection,
) -> Result<Vec<Vec<f64>>> {
    check_compatible(particles, target)?;
    let m = particles.manifold();
    check_projection(m, projection)?;
    if directions.is_empty() {
        return Err(Error::InvalidConfig("at least one direction is required".into()));
    }
    let psi: Vec<Vec<f64>> = directions
        .par_iter()
        .map(|v| {
            let a = particles.project(v, projection)?;
            let b = target.project(v, projection)?;
            Ok(a.values().iter().map(|&t| potential_derivative(&a, &b, t)).collect())
        })
        .collect::<Result<_>>()?;

    let scale = -1.0 / directions.len() as f64;
    (0..particles.len())
        .into_par_iter()
        .map(|i| {
            let x = particles.point(i);
            let mut acc = vec![0.0; x.len()];
            for (v, psi_v) in directions.iter().zip(&psi) {
                let s = psi_v[i];
                if s == 0.0 {
                    continue;
                }
                let g = projection.grad(m, v, x)?;
                acc.iter_mut().zip(&g).for_each(|(a, gi)| *a += s * gi);
            }
            acc.iter_mut().for_each(|a| *a *= scale);
            Ok(acc)
        })
        .collect()
}

fn diverged(step: usize, reason: impl Into<String>) -> Error {
    Error::FlowDivergence {
        step,
        reason: reason.into(),
    }
}

/// Moves every particle along `exp(τ·v̂)` with the given directions.
pub fn apply_velocity(state: &mut FlowState, vel: &[Vec<f64>], tau: f64) -> Result<()> {
    let step = state.step;
    let m = state.particles.manifold().clone();
    let stride = state.particles.stride();
    let clip = matches!(m, Manifold::Spd(_));
    state
        .particles
        .coords_mut()
        .par_chunks_mut(stride)
        .zip(vel.par_iter())
        .try_for_each(|(x, v)| -> Result<()> {
            if tau == 0.0 || v.iter().all(|&c| c == 0.0) {
                return Ok(());
            }
            let mut u: Vec<f64> = v.iter().map(|c| tau * c).collect();
            if u.iter().any(|c| !c.is_finite()) {
                return Err(diverged(step, "non-finite velocity"));
            }
            if clip {
                let f = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                if f > SPD_STEP_CLIP {
                    u.iter_mut().for_each(|c| *c *= SPD_STEP_CLIP / f);
                }
            }
            let mut y = m.exp(x, &u).map_err(|e| diverged(step, e.to_string()))?;
            if y.iter().any(|c| !c.is_finite()) {
                return Err(diverged(step, "non-finite particle coordinate"));
            }
            if m.constraint_residual(&y) > RETRACT_RESIDUAL {
                m.retract(&mut y);
            }
            m.check_point(&y).map_err(|e| diverged(step, e.to_string()))?;
            x.copy_from_slice(&y);
            Ok(())
        })?;
    state.step += 1;
    Ok(())
}

/// One Euler step: draw directions, evaluate the velocity, move particles.
pub fn flow_step(state: &mut FlowState, target: &DiscreteMeasure, cfg: &FlowConfig) -> Result<()> {
    let dirs = cfg.step_directions(state.particles.manifold(), state.step);
    let vel = velocity(&state.particles, target, &dirs, cfg.projection)?;
    apply_velocity(state, &vel, cfg.step_size)
}

/// Diagnostic record for the current particles.
pub fn evaluate(state: &FlowState, target: &DiscreteMeasure, cfg: &FlowConfig) -> Result<FlowRecord> {
    let dirs = cfg.eval_directions(state.particles.manifold());
    let chsw = chsw_with_directions(&state.particles, target, 2.0, &dirs, cfg.projection)?.value;
    let small = state.particles.len() <= EXACT_W2_MAX_POINTS && target.len() <= EXACT_W2_MAX_POINTS;
    let w2_exact = if cfg.exact_w2 && small {
        Some(measure_wasserstein(&state.particles, target, 2.0)?)
    } else {
        None
    };
    Ok(FlowRecord {
        step: state.step,
        chsw,
        w2_exact,
    })
}

/// Runs `num_steps` steps from `init`, logging every `eval_every` steps.
pub fn run_flow(init: DiscreteMeasure, target: &DiscreteMeasure, cfg: &FlowConfig) -> Result<FlowState> {
    run_flow_with(init, target, cfg, |_| Ok(()))
}

/// [`run_flow`] with a callback invoked after each logged checkpoint.
pub fn run_flow_with(
    init: DiscreteMeasure,
    target: &DiscreteMeasure,
    cfg: &FlowConfig,
    mut on_checkpoint: impl FnMut(&FlowState) -> Result<()>,
) -> Result<FlowState> {
    cfg.validate()?;
    check_compatible(&init, target)?;
    check_projection(init.manifold(), cfg.projection)?;
    let mut state = FlowState::new(init);
    let rec = evaluate(&state, target, cfg)?;
    state.history.push(rec);
    on_checkpoint(&state)?;
    for k in 1..=cfg.num_steps {
        flow_step(&mut state, target, cfg)?;
        let due = cfg.eval_every > 0 && k % cfg.eval_every == 0;
        if due || k == cfg.num_steps {
            let rec = evaluate(&state, target, cfg)?;
            state.history.push(rec);
            on_checkpoint(&state)?;
        }
    }
    Ok(state)
}
