//! Hyperbolic multidimensional scaling on the unit hyperboloid `𝕃^d_{−1}`,
//! optimized in tangent coordinates at the origin.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::acosh1p;

/// Below this tangent norm the lift uses its Taylor expansion.
const SERIES_RADIUS: f64 = 1e-3;
const CONVERGENCE_RTOL: f64 = 1e-9;
const GROWTH: f64 = 1.1;
const MIN_STEP: f64 = 1e-30;
const INIT_SCALE: f64 = 0.1;
/// Relative stress at which further restarts are skipped.
const EXACT_FIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsProblem {
    pub delta: DMatrix<f64>,
    /// Multiplier `√α` applied to the target distances.
    pub scale: f64,
    /// Intrinsic dimension `d` of the target `𝕃^d`.
    pub target_dim: usize,
    pub max_iters: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Independent random starts; the lowest-stress run is returned.
    pub restarts: usize,
}

impl MdsProblem {
    pub fn new(delta: DMatrix<f64>, target_dim: usize) -> Self {
        MdsProblem {
            delta,
            scale: 1.0,
            target_dim,
            max_iters: 5000,
            step_size: 0.01,
            seed: 0,
            restarts: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.delta.nrows();
        if self.delta.ncols() != n {
            return Err(Error::InvalidConfig("distance matrix must be square".into()));
        }
        for i in 0..n {
            if self.delta[(i, i)] != 0.0 {
                return Err(Error::InvalidConfig(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let d = self.delta[(i, j)];
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::InvalidConfig(format!("invalid distance {d} at ({i}, {j})")));
                }
                if (d - self.delta[(j, i)]).abs() > 1e-12 * (1.0 + d) {
                    return Err(Error::InvalidConfig(format!("distance matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {}", self.scale)));
        }
        if self.target_dim == 0 {
            return Err(Error::InvalidConfig("target dimension must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be positive".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidConfig(format!("step size must be positive, got {}", self.step_size)));
        }
        Ok(())
    }

    /// `Σ_{i<j} (√α·δᵢⱼ)²`, the stress of the all-zero embedding.
    pub fn total_sq(&self) -> f64 {
        let n = self.delta.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += (self.scale * self.delta[(i, j)]).powi(2);
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct MdsResult {
    pub tangent: DMatrix<f64>,
    pub embedding: Vec<Vec<f64>>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `sinh(r)/r` and `(r cosh r − sinh r)/r³`.
fn radial_factors(r: f64) -> (f64, f64) {
    if r < SERIES_RADIUS {
        let r2 = r * r;
        (1.0 + r2 / 6.0 + r2 * r2 / 120.0, 1.0 / 3.0 + r2 / 30.0)
    } else {
        let (s, c) = (r.sinh(), r.cosh());
        (s / r, (r * c - s) / (r * r * r))
    }
}

/// `(cosh‖z̃‖, sinh‖z̃‖·z̃/‖z̃‖)`.
pub fn lift(zt: &[f64]) -> Vec<f64> {
    let r = zt.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (f, _) = radial_factors(r);
    let mut z = Vec::with_capacity(zt.len() + 1);
    z.push(r.cosh());
    z.extend(zt.iter().map(|x| f * x));
    z
}

/// `δ = −⟨zᵢ, zⱼ⟩_𝕃 − 1` and its ambient gradient in `zᵢ`, choosing the
/// cancellation-free form for each regime.
fn gap_and_grad(zi: &[f64], zj: &[f64]) -> (f64, Vec<f64>) {
    let mink = |a: &[f64], b: &[f64]| -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>();
    let direct = -mink(zi, zj) - 1.0;
    if direct > 1.0 {
        let mut g: Vec<f64> = zj.iter().map(|x| -x).collect();
        g[0] = zj[0];
        (direct, g)
    } else {
        let diff: Vec<f64> = zi.iter().zip(zj).map(|(a, b)| a - b).collect();
        let delta = (mink(&diff, &diff) / 2.0).max(0.0);
        let mut g = diff;
        g[0] = -g[0];
        (delta, g)
    }
}

fn lifted(zt: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..zt.nrows())
        .map(|i| lift(&zt.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

/// `Σ_{i<j} (d_𝕃(zᵢ, zⱼ) − √α·δᵢⱼ)²`.
pub fn mds_loss(zt: &DMatrix<f64>, problem: &MdsProblem) -> f64 {
    let z = lifted(zt);
    let n = z.len();
    let mut loss = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (gap, _) = gap_and_grad(&z[i], &z[j]);
            loss += (acosh1p(gap) - problem.scale * problem.delta[(i, j)]).powi(2);
        }
    }
    loss
}

/// Loss and its gradient with respect to the tangent coordinates.
pub fn mds_loss_grad(zt: &DMatrix<f64>, problem: &MdsProblem) -> (f64, DMatrix<f64>) {
    let z = lifted(zt);
    let (n, d) = zt.shape();
    let mut loss = 0.0;
    let mut ambient = vec![vec![0.0; d + 1]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (gap_ij, g_ij) = gap_and_grad(&z[i], &z[j]);
            let (_, g_ji) = gap_and_grad(&z[j], &z[i]);
            let dist = acosh1p(gap_ij);
            let resid = dist - problem.scale * problem.delta[(i, j)];
            loss += resid * resid;
            let sinh = (gap_ij * (2.0 + gap_ij)).sqrt();
            if sinh == 0.0 {
                continue;
            }
            let c = 2.0 * resid / sinh;
            ambient[i].iter_mut().zip(&g_ij).for_each(|(a, g)| *a += c * g);
            ambient[j].iter_mut().zip(&g_ji).for_each(|(a, g)| *a += c * g);
        }
    }
    let mut grad = DMatrix::zeros(n, d);
    for i in 0..n {
        let row: Vec<f64> = zt.row(i).iter().copied().collect();
        let r = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (f, fp) = radial_factors(r);
        let g = &ambient[i];
        let radial: f64 = row.iter().zip(&g[1..]).map(|(x, y)| x * y).sum();
        for k in 0..d {
            grad[(i, k)] = f * g[0] * row[k] + f * g[k + 1] + fp * radial * row[k];
        }
    }
    (loss, grad)
}

/// Seeded `0.1·N(0, I)` starting point for restart `restart`.
pub fn initial_tangent(problem: &MdsProblem, restart: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    rng.set_stream(restart as u64);
    DMatrix::from_fn(problem.delta.nrows(), problem.target_dim, |_, _| {
        INIT_SCALE * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Best of `restarts` descents from seeded initializations. The stress is
/// not convex and single starts regularly stall in folded configurations.
pub fn mds_fit(problem: &MdsProblem) -> Result<MdsResult> {
    problem.validate()?;
    let floor = EXACT_FIT * problem.total_sq();
    let mut best: Option<MdsResult> = None;
    for r in 0..problem.restarts {
        let run = mds_fit_from(problem, initial_tangent(problem, r))?;
        let done = run.loss <= floor;
        if best.as_ref().is_none_or(|b| run.loss < b.loss) {
            best = Some(run);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Gradient descent with backtracking from `init`: halve the step on an
/// increase, grow it by 10% on success.
pub fn mds_fit_from(problem: &MdsProblem, init: DMatrix<f64>) -> Result<MdsResult> {
    problem.validate()?;
    if init.shape() != (problem.delta.nrows(), problem.target_dim) {
        return Err(Error::DimensionMismatch {
            expected: problem.target_dim,
            got: init.ncols(),
        });
    }
    let mut zt = init;
    let mut eta = problem.step_size;
    let (mut loss, mut grad) = mds_loss_grad(&zt, problem);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < problem.max_iters {
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite stress at iteration {iterations}")));
        }
        if loss == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let trial = &zt - &grad * eta;
        let (trial_loss, trial_grad) = mds_loss_grad(&trial, problem);
        if trial_loss < loss {
            let rel = (loss - trial_loss) / loss;
            zt = trial;
            loss = trial_loss;
            grad = trial_grad;
            eta *= GROWTH;
            if rel < CONVERGENCE_RTOL {
                converged = true;
                break;
            }
        } else {
            eta /= 2.0;
            if eta < MIN_STEP {
                converged = true;
                break;
            }
        }
    }
    Ok(MdsResult {
        embedding: lifted(&zt),
        tangent: zt,
        loss,
        iterations,
        converged,
    })
}
