//! Exact discrete optimal transport, used for reference Wasserstein distances.

use nalgebra::DMatrix;

use crate::chsw::{check_compatible, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::ot1d::check_simplex;

/// Masses below this are treated as exhausted.
const MASS_EPS: f64 = 1e-15;

/// Minimum-cost perfect matching on a square cost matrix. Returns the
/// column assigned to each row.
pub fn assignment(cost: &DMatrix<f64>) -> Result<Vec<usize>> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cost.ncols(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // shortest augmenting paths with row/column potentials, 1-based sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return Err(Error::Domain("non-finite transport cost".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    Ok(col_of)
}

/// Optimal coupling between weight vectors `a` (rows) and `b` (columns) by
/// successive shortest paths on the bipartite residual graph.
pub fn transport_plan(cost: &DMatrix<f64>, a: &[f64], b: &[f64]) -> Result<DMatrix<f64>> {
    let (n, m) = cost.shape();
    if a.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    if n == 0 || m == 0 {
        return Err(Error::EmptyMeasure);
    }
    check_simplex(a)?;
    check_simplex(b)?;
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("non-finite transport cost".into()));
    }

    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = DMatrix::<f64>::zeros(n, m);
    // node potentials: rows 0..n, columns n..n+m
    let mut pot = vec![0.0; n + m];
    let min_cost = cost.iter().copied().fold(f64::INFINITY, f64::min);
    for p in pot[n..].iter_mut() {
        *p = min_cost;
    }

    loop {
        let remaining: f64 = supply.iter().sum::<f64>().min(demand.iter().sum());
        if remaining <= MASS_EPS || supply.iter().all(|&s| s <= MASS_EPS) || demand.iter().all(|&d| d <= MASS_EPS) {
            break;
        }
        // dense Dijkstra with reduced costs from every row with supply left
        let mut dist = vec![f64::INFINITY; n + m];
        let mut prev = vec![usize::MAX; n + m];
        let mut done = vec![false; n + m];
        for i in 0..n {
            if supply[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut best = usize::MAX;
            let mut bd = f64::INFINITY;
            for k in 0..n + m {
                if !done[k] && dist[k] < bd {
                    bd = dist[k];
                    best = k;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < n {
                let i = best;
                for j in 0..m {
                    let k = n + j;
                    let rc = (cost[(i, j)] + pot[i] - pot[k]).max(0.0);
                    if bd + rc < dist[k] {
                        dist[k] = bd + rc;
                        prev[k] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if flow[(i, j)] > MASS_EPS {
                        let rc = (-cost[(i, j)] + pot[best] - pot[i]).max(0.0);
                        if bd + rc < dist[i] {
                            dist[i] = bd + rc;
                            prev[i] = best;
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| demand[j] > MASS_EPS && dist[n + j].is_finite())
            .min_by(|&x, &y| dist[n + x].total_cmp(&dist[n + y]));
        let Some(tj) = target else {
            return Err(Error::NumericFailure { residual: remaining });
        };
        let horizon = dist[n + tj];
        for k in 0..n + m {
            pot[k] += dist[k].min(horizon);
        }

        // walk back to the source row, tracking the bottleneck
        let mut bottleneck = demand[tj];
        let mut k = n + tj;
        while prev[k] != usize::MAX {
            let p = prev[k];
            if p >= n {
                bottleneck = bottleneck.min(flow[(k, p - n)]);
            }
            k = p;
        }
        bottleneck = bottleneck.min(supply[k]);
        supply[k] -= bottleneck;
        demand[tj] -= bottleneck;
        let mut k = n + tj;
        while prev[k] != usize::MAX {
            let p = prev[k];
            if p < n {
                flow[(p, k - n)] += bottleneck;
            } else {
                flow[(k, p - n)] -= bottleneck;
            }
            k = p;
        }
    }
    Ok(flow)
}

/// `min_π Σ πᵢⱼ Cᵢⱼ` over couplings of `a` and `b`.
pub fn transport_cost(cost: &DMatrix<f64>, a: &[f64], b: &[f64]) -> Result<f64> {
    let (n, m) = cost.shape();
    let uniform = |w: &[f64]| w.iter().all(|&x| x == w[0]);
    if n == m && n > 0 && uniform(a) && uniform(b) {
        check_simplex(a)?;
        check_simplex(b)?;
        let cols = assignment(cost)?;
        return Ok(cols.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>() / n as f64);
    }
    let plan = transport_plan(cost, a, b)?;
    Ok(plan.component_mul(cost).sum())
}

/// Exact `W_p` between discrete measures on `m`, from pairwise geodesic
/// distances.
pub fn wasserstein<G: Geometry + ?Sized>(
    m: &G,
    x: &[&[f64]],
    a: &[f64],
    y: &[&[f64]],
    b: &[f64],
    p: f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidConfig(format!("p must be at least 1, got {p}")));
    }
    let mut cost = DMatrix::zeros(x.len(), y.len());
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            cost[(i, j)] = m.dist(xi, yj)?.powf(p);
        }
    }
    Ok(transport_cost(&cost, a, b)?.powf(1.0 / p))
}

/// Exact `W_p(μ, ν)` between two discrete measures.
pub fn measure_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_compatible(mu, nu)?;
    let x: Vec<&[f64]> = mu.points().collect();
    let y: Vec<&[f64]> = nu.points().collect();
    wasserstein(mu.manifold(), &x, &mu.weights(), &y, &nu.weights(), p)
}
