//! Dense symmetric-matrix kernels.
//!
//! Eigendecomposition is Householder tridiagonalization followed by the
//! implicit QL iteration, with a hard cap on the number of sweeps. Matrix
//! functions (log, exp, square roots) go through the eigendecomposition.
//! Everything here works on small dense matrices (d up to a few dozen).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative closeness below which two eigenvalues use the series form of the
/// divided difference of `log`.
pub const EIG_CLOSENESS: f64 = 1e-7;

/// Relative floor on the smallest eigenvalue of an SPD matrix.
pub const SPD_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition `x = u · diag(lambda) · uᵀ` with `lambda` sorted
/// descending.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub u: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `u · diag(f(lambda)) · uᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.u.clone();
        for j in 0..n {
            let s = f(self.lambda[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        let mut out = &scaled * self.u.transpose();
        symmetrize_in_place(&mut out);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|l| l)
    }
}

/// Divided-difference matrix of `log` at the eigenvalues.
#[derive(Debug, Clone)]
pub struct LoewnerMatrix {
    pub gamma: DMatrix<f64>,
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// Largest asymmetry `|x_ij − x_ji|` relative to `max(1, ‖x‖_F)`.
pub fn asymmetry(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((x[(i, j)] - x[(j, i)]).abs());
        }
    }
    worst / x.norm().max(1.0)
}

pub fn symmetrize_in_place(x: &mut DMatrix<f64>) {
    let n = x.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (x[(i, j)] + x[(j, i)]);
            x[(i, j)] = m;
            x[(j, i)] = m;
        }
    }
}

/// Returns `(x + xᵀ)/2` and whether the input exceeded the symmetry tolerance.
pub fn symmetrize(x: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let loud = asymmetry(x) > SYMMETRY_TOL;
    let mut out = x.clone();
    symmetrize_in_place(&mut out);
    (out, loud)
}

pub fn check_square(x: &DMatrix<f64>) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    Ok(x.nrows())
}

pub fn check_symmetric(x: &DMatrix<f64>) -> Result<()> {
    check_square(x)?;
    let a = asymmetry(x);
    if a > SYMMETRY_TOL {
        return Err(Error::Domain(format!("matrix is not symmetric (asymmetry {a:e})")));
    }
    Ok(())
}

/// Builds a square matrix from row-major entries.
pub fn from_row_major(n: usize, entries: &[f64]) -> Result<DMatrix<f64>> {
    if entries.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: entries.len(),
        });
    }
    Ok(DMatrix::from_row_slice(n, n, entries))
}

pub fn to_row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = x.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
pub fn sym_eigen(x: &DMatrix<f64>) -> Result<EigenDecomp> {
    let n = check_square(x)?;
    if n == 0 {
        return Ok(EigenDecomp {
            u: DMatrix::zeros(0, 0),
            lambda: DVector::zeros(0),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    let mut v = x.clone();
    symmetrize_in_place(&mut v);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    implicit_ql(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let lambda = DVector::from_iterator(n, order.iter().map(|&k| d[k]));
    let mut u = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        u.set_column(col, &v.column(k));
    }
    Ok(EigenDecomp { u, lambda })
}

// Householder reduction to tridiagonal form (EISPACK tred2). On exit `v`
// holds the accumulated orthogonal transform, `d` the diagonal and `e` the
// subdiagonal in e[1..].
fn tridiagonalize(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (EISPACK tql2), capped at 30·n sweeps.
fn implicit_ql(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let max_sweeps = 30 * n.max(1);
    let mut sweeps = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::NumericFailure {
                        residual: e[l].abs(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigendecomposition of an SPD matrix, rejecting eigenvalues below the
/// relative positivity floor.
pub fn spd_eigen(x: &DMatrix<f64>) -> Result<EigenDecomp> {
    let eig = sym_eigen(x)?;
    check_spd_spectrum(&eig)?;
    Ok(eig)
}

fn check_spd_spectrum(eig: &EigenDecomp) -> Result<()> {
    let n = eig.dim();
    if n == 0 {
        return Ok(());
    }
    let max = eig.lambda[0];
    let min = eig.lambda[n - 1];
    if !(max > 0.0) || !(min > SPD_FLOOR * max) {
        return Err(Error::IllConditioned { min, max });
    }
    Ok(())
}

pub fn is_spd(x: &DMatrix<f64>) -> bool {
    check_symmetric(x).is_ok() && spd_eigen(x).is_ok()
}

pub fn spd_log(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(x)?.map(f64::ln))
}

pub fn sym_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(sym_eigen(a)?.map(f64::exp))
}

pub fn spd_sqrt(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(x)?.map(f64::sqrt))
}

pub fn spd_inv_sqrt(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_eigen(x)?.map(|l| 1.0 / l.sqrt()))
}

/// Lower-triangular Cholesky factor with positive diagonal.
pub fn cholesky_lower(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(x)?;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = x[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = x[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `m = g · diag(d) · gᵀ` with `g` unit upper triangular, computed from the
/// last row upward.
pub fn udu_unit_upper(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = check_square(m)?;
    let mut g = DMatrix::identity(n, n);
    let mut d = DVector::zeros(n);
    for j in (0..n).rev() {
        let mut dj = m[(j, j)];
        for k in (j + 1)..n {
            dj -= g[(j, k)] * g[(j, k)] * d[k];
        }
        if !(dj > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: dj });
        }
        d[j] = dj;
        for i in 0..j {
            let mut s = m[(i, j)];
            for k in (j + 1)..n {
                s -= g[(i, k)] * g[(j, k)] * d[k];
            }
            g[(i, j)] = s / dj;
        }
    }
    Ok((g, d))
}

/// Loewner matrix of `log` at positive eigenvalues `lambda`.
pub fn loewner(lambda: &DVector<f64>) -> Result<LoewnerMatrix> {
    let n = lambda.len();
    if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Domain(format!("non-positive eigenvalue {bad:e}")));
    }
    let mut gamma = DMatrix::zeros(n, n);
    for i in 0..n {
        gamma[(i, i)] = 1.0 / lambda[i];
        for j in 0..i {
            let v = log_divided_difference(lambda[i], lambda[j]);
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }
    Ok(LoewnerMatrix { gamma })
}

fn log_divided_difference(a: f64, b: f64) -> f64 {
    let delta = a - b;
    if delta.abs() > EIG_CLOSENESS * a.max(b) {
        (delta / b).ln_1p() / delta
    } else {
        let r = delta / b;
        (1.0 - r / 2.0 + r * r / 3.0) / b
    }
}

/// Differential of the matrix logarithm at `x` applied to `v`, given the
/// eigendecomposition of `x`.
pub fn log_differential_with(eig: &EigenDecomp, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gamma = loewner(&eig.lambda)?.gamma;
    let inner = eig.u.transpose() * v * &eig.u;
    let mut out = &eig.u * inner.component_mul(&gamma) * eig.u.transpose();
    symmetrize_in_place(&mut out);
    Ok(out)
}

pub fn log_differential_inverse_with(
    eig: &EigenDecomp,
    w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let gamma = loewner(&eig.lambda)?.gamma;
    let inner = eig.u.transpose() * w * &eig.u;
    let mut out = &eig.u * inner.component_div(&gamma) * eig.u.transpose();
    symmetrize_in_place(&mut out);
    Ok(out)
}

pub fn log_differential(x: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    log_differential_with(&spd_eigen(x)?, v)
}

pub fn log_differential_inverse(x: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    log_differential_inverse_with(&spd_eigen(x)?, w)
}
