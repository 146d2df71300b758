//! One-dimensional optimal transport between discrete measures.
//!
//! The interpolated CDF has knots `(x₍ᵢ₎, cᵢ)` where `cᵢ` is the cumulative
//! weight up to and including the i-th order statistic (`i/n` for uniform
//! weights). It is 0 strictly below the first atom, 1 at and above the last,
//! and linear in between. The quantile function is its inverse, clamped to
//! the extreme atoms outside `[c₁, 1]`.

use crate::error::{Error, Result};

/// Tolerance on `Σ weights = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A discrete measure on the real line with its sorting permutation.
#[derive(Debug, Clone)]
pub struct Projected1D {
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
    sorted_perm: Vec<usize>,
    knots_x: Vec<f64>,
    knots_c: Vec<f64>,
}

impl Projected1D {
    /// Equal weights `1/n`.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: weights.len(),
            });
        }
        check_simplex(&weights)?;
        Self::build(values, Some(weights))
    }

    fn build(values: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite projected value {bad}")));
        }
        let mut sorted_perm: Vec<usize> = (0..values.len()).collect();
        // stable: ties keep their original index order
        sorted_perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let n = values.len();
        let mut knots_x: Vec<f64> = Vec::with_capacity(n);
        let mut knots_c: Vec<f64> = Vec::with_capacity(n);
        let mut acc = 0.0;
        for (rank, &i) in sorted_perm.iter().enumerate() {
            let w = match &weights {
                Some(w) => w[i],
                None => 1.0 / n as f64,
            };
            acc = match &weights {
                Some(_) => acc + w,
                None => (rank + 1) as f64 / n as f64,
            };
            if w == 0.0 {
                continue;
            }
            if knots_x.last() == Some(&values[i]) {
                *knots_c.last_mut().unwrap() = acc;
            } else {
                knots_x.push(values[i]);
                knots_c.push(acc);
            }
        }
        if let Some(last) = knots_c.last_mut() {
            *last = 1.0;
        }
        Ok(Projected1D {
            values,
            weights,
            sorted_perm,
            knots_x,
            knots_c,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.values.len() as f64,
        }
    }

    pub fn sorted_perm(&self) -> &[usize] {
        &self.sorted_perm
    }

    pub fn sorted_values(&self) -> Vec<f64> {
        self.sorted_perm.iter().map(|&i| self.values[i]).collect()
    }

    /// Sorted atoms with their cumulative weights, the last forced to 1.
    fn cumulative(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut xs = Vec::with_capacity(n);
        let mut cs = Vec::with_capacity(n);
        let mut acc = 0.0;
        for (rank, &i) in self.sorted_perm.iter().enumerate() {
            acc = match &self.weights {
                Some(w) => acc + w[i],
                None => (rank + 1) as f64 / n as f64,
            };
            xs.push(self.values[i]);
            cs.push(acc);
        }
        cs[n - 1] = 1.0;
        (xs, cs)
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    if let Some(bad) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("invalid weight {bad}")));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Domain(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// `W_p^p` between equal-count uniform measures from order statistics.
/// Other inputs are routed to [`w1d_weighted`].
pub fn w1d_sorted(x: &Projected1D, y: &Projected1D, p: f64) -> f64 {
    if x.len() != y.len() || !x.is_uniform() || !y.is_uniform() {
        return w1d_weighted(x, y, p);
    }
    let n = x.len();
    let s: f64 = x
        .sorted_perm
        .iter()
        .zip(&y.sorted_perm)
        .map(|(&i, &j)| (x.values[i] - y.values[j]).abs().powf(p))
        .sum();
    s / n as f64
}

/// `W_p^p = ∫₀¹ |F_x⁻¹(u) − F_y⁻¹(u)|^p du` with piecewise-constant quantiles.
pub fn w1d_weighted(x: &Projected1D, y: &Projected1D, p: f64) -> f64 {
    let (xs, cx) = x.cumulative();
    let (ys, cy) = y.cumulative();
    let (mut i, mut j) = (0, 0);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < xs.len() && j < ys.len() {
        let next = cx[i].min(cy[j]);
        if next > u {
            total += (next - u) * (xs[i] - ys[j]).abs().powf(p);
            u = next;
        }
        if cx[i] <= next {
            i += 1;
        }
        if cy[j] <= next {
            j += 1;
        }
    }
    total
}

/// Dispatches to the sorted fast path when possible.
pub fn w1d(x: &Projected1D, y: &Projected1D, p: f64) -> f64 {
    w1d_sorted(x, y, p)
}

/// Piecewise-linear CDF through the cumulative-weight knots.
pub fn interp_cdf(m: &Projected1D, t: f64) -> f64 {
    let (xs, cs) = (&m.knots_x, &m.knots_c);
    if t < xs[0] {
        return 0.0;
    }
    // last knot with x ≤ t
    let k = xs.partition_point(|&x| x <= t) - 1;
    if k + 1 == xs.len() {
        return 1.0;
    }
    let (x0, x1) = (xs[k], xs[k + 1]);
    cs[k] + (cs[k + 1] - cs[k]) * (t - x0) / (x1 - x0)
}

/// Inverse of [`interp_cdf`], clamped to the extreme atoms.
pub fn interp_quantile(m: &Projected1D, u: f64) -> f64 {
    let (xs, cs) = (&m.knots_x, &m.knots_c);
    if u <= cs[0] {
        return xs[0];
    }
    if u >= cs[cs.len() - 1] {
        return xs[xs.len() - 1];
    }
    // first knot with c ≥ u, k ≥ 1
    let k = cs.partition_point(|&c| c < u);
    if cs[k] == u {
        return xs[k];
    }
    let (c0, c1) = (cs[k - 1], cs[k]);
    xs[k - 1] + (xs[k] - xs[k - 1]) * (u - c0) / (c1 - c0)
}

/// `ψ'(t) = t − F_ν⁻¹(F_μ(t))`.
pub fn potential_derivative(mu: &Projected1D, nu: &Projected1D, t: f64) -> f64 {
    t - interp_quantile(nu, interp_cdf(mu, t))
}
