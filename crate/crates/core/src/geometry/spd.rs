//! Symmetric positive definite matrices.
//!
//! Points and tangent vectors are `n × n` matrices stored row-major. Three
//! metrics are pullbacks of a flat metric through a diffeomorphism `φ`:
//!
//! * Log-Euclidean: `φ(X) = log X`;
//! * O(n)-invariant Log-Euclidean: `φ(X) = F(log X)` with
//!   `F(A) = qA + ((p − q)/n)·Tr(A)·I`;
//! * Log-Cholesky: `φ(X) = ⌊L⌋ + log diag(L)` with `X = LLᵀ`.
//!
//! The affine-invariant metric has closed-form distance, exp/log and
//! Busemann function but no closed-form geodesic projection.

use nalgebra::DMatrix;
use rand::RngCore;

use super::{check_len, gaussian_vec, Direction, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{self, EigenDecomp};

const SYMMETRY_TOL: f64 = 1e-8;
/// Minimum relative gap between consecutive eigenvalues of an affine-invariant
/// direction.
pub const AI_EIGEN_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpdMetric {
    LogEuclidean,
    Onq { p: f64, q: f64 },
    LogCholesky,
    AffineInvariant,
}

#[derive(Debug, Clone)]
pub struct Spd {
    n: usize,
    metric: SpdMetric,
}

/// Strictly lower-triangular part.
fn strict_lower(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i > j { m[(i, j)] } else { 0.0 })
}

fn mat_sqrt_pair(eig: &EigenDecomp) -> (DMatrix<f64>, DMatrix<f64>) {
    (eig.map(f64::sqrt), eig.map(|l| 1.0 / l.sqrt()))
}

/// Busemann coordinate of `m` along `t ↦ exp(tA)` under the affine-invariant
/// metric. `A` must have unit Frobenius norm and simple eigenvalues.
pub fn ai_busemann_coord(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let eig = linalg::sym_eigen(a)?;
    let lam = &eig.lambda;
    let scale = lam.iter().fold(1.0f64, |s, l| s.max(l.abs()));
    for i in 1..lam.len() {
        if lam[i - 1] - lam[i] <= AI_EIGEN_GAP * scale {
            return Err(Error::DegenerateDirection(format!(
                "eigenvalues {} and {} of the direction are not separated",
                lam[i - 1],
                lam[i]
            )));
        }
    }
    let p = &eig.u;
    let mut mt = p.transpose() * m * p;
    linalg::symmetrize_in_place(&mut mt);
    let (_, d) = linalg::udu_unit_upper(&mt)?;
    Ok(-lam.iter().zip(d.iter()).map(|(a, d)| a * d.ln()).sum::<f64>())
}

/// Riemannian gradient of `X ↦ ⟨log X, A⟩_F` under the Log-Euclidean metric,
/// `D⁻¹(D⁻¹(U(UᵀAU ⊙ Γ)Uᵀ))` with `D` the differential of `log` at `X`.
pub fn le_grad_coord(a: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = linalg::spd_eigen(x)?;
    let euclid = linalg::log_differential_with(&eig, a)?;
    let once = linalg::log_differential_inverse_with(&eig, &euclid)?;
    linalg::log_differential_inverse_with(&eig, &once)
}

impl Spd {
    pub fn new(n: usize, metric: SpdMetric) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("SPD size must be positive".into()));
        }
        if let SpdMetric::Onq { p, q } = metric {
            if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "O(n)-invariant metric needs p > 0 and q > 0, got p = {p}, q = {q}"
                )));
            }
        }
        Ok(Spd { n, metric })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> SpdMetric {
        self.metric
    }

    /// Dimension of the flat space `φ` maps into, `n(n + 1)/2`.
    pub fn flat_dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_len(x, self.n * self.n)?;
        Ok(DMatrix::from_row_slice(self.n, self.n, x))
    }

    fn spd_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.matrix(x)?;
        if linalg::asymmetry(&m) > SYMMETRY_TOL {
            return Err(Error::ConstraintViolation("matrix is not symmetric".into()));
        }
        Ok(linalg::symmetrize(&m).0)
    }

    fn flat(m: &DMatrix<f64>) -> Vec<f64> {
        linalg::to_row_major(m)
    }

    fn pullback(&self) -> bool {
        !matches!(self.metric, SpdMetric::AffineInvariant)
    }

    fn onq_f(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self.metric {
            SpdMetric::Onq { p, q } => {
                let shift = (p - q) / self.n as f64 * a.trace();
                let mut out = a * q;
                for i in 0..self.n {
                    out[(i, i)] += shift;
                }
                out
            }
            _ => a.clone(),
        }
    }

    fn onq_f_inv(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self.metric {
            SpdMetric::Onq { p, q } => {
                let m = b.trace() / self.n as f64;
                let mut out = b / q;
                for i in 0..self.n {
                    out[(i, i)] += m / p - m / q;
                }
                out
            }
            _ => b.clone(),
        }
    }

    /// Flat image `φ(X)`.
    pub fn phi(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let l = linalg::cholesky_lower(x)?;
                let mut w = strict_lower(&l);
                for i in 0..self.n {
                    w[(i, i)] = l[(i, i)].ln();
                }
                Ok(w)
            }
            SpdMetric::AffineInvariant => Err(Error::Unsupported {
                kind: self.kind(),
                what: "flat chart",
            }),
            _ => Ok(self.onq_f(&linalg::spd_log(x)?)),
        }
    }

    /// `φ⁻¹(W)`.
    pub fn phi_inv(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let mut l = strict_lower(w);
                for i in 0..self.n {
                    l[(i, i)] = w[(i, i)].exp();
                }
                let mut x = &l * l.transpose();
                linalg::symmetrize_in_place(&mut x);
                Ok(x)
            }
            SpdMetric::AffineInvariant => Err(Error::Unsupported {
                kind: self.kind(),
                what: "flat chart",
            }),
            _ => linalg::sym_exp(&linalg::symmetrize(&self.onq_f_inv(w)).0),
        }
    }

    /// Differential `φ_{*,X}(V)`.
    pub fn push(&self, x: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let l = linalg::cholesky_lower(x)?;
                let m = solve_sandwich(&l, v)?;
                let mut inner = strict_lower(&m);
                for i in 0..self.n {
                    inner[(i, i)] = 0.5 * m[(i, i)];
                }
                let dl = &l * inner;
                let mut out = strict_lower(&dl);
                for i in 0..self.n {
                    out[(i, i)] = dl[(i, i)] / l[(i, i)];
                }
                Ok(out)
            }
            SpdMetric::AffineInvariant => Err(Error::Unsupported {
                kind: self.kind(),
                what: "flat chart",
            }),
            _ => Ok(self.onq_f(&linalg::log_differential(x, v)?)),
        }
    }

    /// Inverse differential `φ_{*,X}⁻¹(W)`.
    pub fn pull(&self, x: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let l = linalg::cholesky_lower(x)?;
                let mut dl = strict_lower(w);
                for i in 0..self.n {
                    dl[(i, i)] = l[(i, i)] * w[(i, i)];
                }
                let mut v = &dl * l.transpose() + &l * dl.transpose();
                linalg::symmetrize_in_place(&mut v);
                Ok(v)
            }
            SpdMetric::AffineInvariant => Err(Error::Unsupported {
                kind: self.kind(),
                what: "flat chart",
            }),
            _ => linalg::log_differential_inverse(x, &linalg::symmetrize(&self.onq_f_inv(w)).0),
        }
    }

    /// `φ_{*,I}(A)`.
    pub fn push_origin(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let mut out = strict_lower(a);
                for i in 0..self.n {
                    out[(i, i)] = 0.5 * a[(i, i)];
                }
                out
            }
            _ => self.onq_f(a),
        }
    }

    /// `φ_{*,I}⁻¹(W)`.
    pub fn pull_origin(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        match self.metric {
            SpdMetric::LogCholesky => {
                let lo = strict_lower(w);
                let mut out = &lo + lo.transpose();
                for i in 0..self.n {
                    out[(i, i)] = 2.0 * w[(i, i)];
                }
                out
            }
            _ => self.onq_f_inv(w),
        }
    }

    /// Matrix in the flat space from isometric coordinates: symmetric with
    /// off-diagonals scaled by `1/√2`, or lower triangular for Log-Cholesky.
    fn flat_from_coords(&self, g: &[f64]) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        let mut k = 0;
        let lc = matches!(self.metric, SpdMetric::LogCholesky);
        for i in 0..self.n {
            for j in i..self.n {
                if i == j {
                    w[(i, i)] = g[k];
                } else if lc {
                    w[(j, i)] = g[k];
                } else {
                    let s = g[k] / std::f64::consts::SQRT_2;
                    w[(i, j)] = s;
                    w[(j, i)] = s;
                }
                k += 1;
            }
        }
        w
    }

    /// Isometric coordinates of `φ(X)` in `ℝ^{n(n+1)/2}`, in the order used for
    /// direction sampling.
    pub fn flat_embedding(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.phi(&self.spd_matrix(x)?)?;
        let lc = matches!(self.metric, SpdMetric::LogCholesky);
        let mut out = Vec::with_capacity(self.flat_dim());
        for i in 0..self.n {
            for j in i..self.n {
                out.push(if i == j {
                    w[(i, i)]
                } else if lc {
                    w[(j, i)]
                } else {
                    std::f64::consts::SQRT_2 * w[(i, j)]
                });
            }
        }
        Ok(out)
    }

    fn ai_dist(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        let (_, xis) = mat_sqrt_pair(&linalg::spd_eigen(x)?);
        linalg::spd_eigen(y)?;
        let mut c = &xis * y * &xis;
        linalg::symmetrize_in_place(&mut c);
        // the congruence can be worse conditioned than either input
        let eig = linalg::sym_eigen(&c)?;
        let min = eig.lambda[self.n - 1];
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: self.n - 1,
                pivot: min,
            });
        }
        Ok(eig.lambda.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
    }
}

/// `L⁻¹ V L⁻ᵀ` for lower-triangular `L`.
fn solve_sandwich(l: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let fail = || Error::NumericFailure { residual: f64::NAN };
    let a = l.solve_lower_triangular(v).ok_or_else(fail)?;
    let b = l.solve_lower_triangular(&a.transpose()).ok_or_else(fail)?;
    Ok(b.transpose())
}

impl Geometry for Spd {
    fn kind(&self) -> &'static str {
        match self.metric {
            SpdMetric::LogEuclidean => "spd_log_euclidean",
            SpdMetric::Onq { .. } => "spd_onq",
            SpdMetric::LogCholesky => "spd_log_cholesky",
            SpdMetric::AffineInvariant => "spd_affine_invariant",
        }
    }

    fn point_len(&self) -> usize {
        self.n * self.n
    }

    fn origin(&self) -> Vec<f64> {
        Self::flat(&linalg::identity(self.n))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::ConstraintViolation("non-finite entry".into()));
        }
        let m = self.spd_matrix(x)?;
        linalg::spd_eigen(&m)?;
        Ok(())
    }

    fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        check_len(x, self.point_len())?;
        let m = self.matrix(v)?;
        if linalg::asymmetry(&m) > SYMMETRY_TOL {
            return Err(Error::ConstraintViolation("tangent matrix is not symmetric".into()));
        }
        Ok(())
    }

    fn constraint_residual(&self, x: &[f64]) -> f64 {
        self.matrix(x).map(|m| linalg::asymmetry(&m)).unwrap_or(f64::INFINITY)
    }

    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (xm, ym) = (self.spd_matrix(x)?, self.spd_matrix(y)?);
        if !self.pullback() {
            return self.ai_dist(&xm, &ym);
        }
        Ok((self.phi(&xm)? - self.phi(&ym)?).norm())
    }

    fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        let xm = self.spd_matrix(x)?;
        let (um, wm) = (self.matrix(u)?, self.matrix(w)?);
        if !self.pullback() {
            let xi = linalg::spd_eigen(&xm)?.map(|l| 1.0 / l);
            return Ok((&xi * um * &xi * wm).trace());
        }
        match self.metric {
            SpdMetric::LogCholesky => Ok(linalg::frobenius_inner(&self.push(&xm, &um)?, &self.push(&xm, &wm)?)),
            _ => {
                let eig = linalg::spd_eigen(&xm)?;
                let du = self.onq_f(&linalg::log_differential_with(&eig, &um)?);
                let dw = self.onq_f(&linalg::log_differential_with(&eig, &wm)?);
                Ok(linalg::frobenius_inner(&du, &dw))
            }
        }
    }

    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_tangent(x, v)?;
        let xm = self.spd_matrix(x)?;
        let vm = linalg::symmetrize(&self.matrix(v)?).0;
        let out = match self.metric {
            SpdMetric::AffineInvariant => {
                let (xs, xis) = mat_sqrt_pair(&linalg::spd_eigen(&xm)?);
                let inner = linalg::symmetrize(&(&xis * vm * &xis)).0;
                &xs * linalg::sym_exp(&inner)? * &xs
            }
            SpdMetric::LogCholesky => self.phi_inv(&(self.phi(&xm)? + self.push(&xm, &vm)?))?,
            _ => {
                let eig = linalg::spd_eigen(&xm)?;
                let logx = eig.map(f64::ln);
                linalg::sym_exp(&(logx + linalg::log_differential_with(&eig, &vm)?))?
            }
        };
        Ok(Self::flat(&linalg::symmetrize(&out).0))
    }

    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let (xm, ym) = (self.spd_matrix(x)?, self.spd_matrix(y)?);
        let out = match self.metric {
            SpdMetric::AffineInvariant => {
                let (xs, xis) = mat_sqrt_pair(&linalg::spd_eigen(&xm)?);
                let inner = linalg::symmetrize(&(&xis * ym * &xis)).0;
                &xs * linalg::spd_log(&inner)? * &xs
            }
            SpdMetric::LogCholesky => self.pull(&xm, &(self.phi(&ym)? - self.phi(&xm)?))?,
            _ => {
                let eig = linalg::spd_eigen(&xm)?;
                let diff = linalg::spd_log(&ym)? - eig.map(f64::ln);
                linalg::log_differential_inverse_with(&eig, &diff)?
            }
        };
        Ok(Self::flat(&linalg::symmetrize(&out).0))
    }

    fn to_tangent(&self, _x: &[f64], u: &[f64]) -> Vec<f64> {
        match self.matrix(u) {
            Ok(m) => Self::flat(&linalg::symmetrize(&m).0),
            Err(_) => u.to_vec(),
        }
    }

    fn retract(&self, x: &mut [f64]) {
        if let Ok(m) = self.matrix(x) {
            x.copy_from_slice(&Self::flat(&linalg::symmetrize(&m).0));
        }
    }

    fn direction_norm(&self, v: &[f64]) -> f64 {
        match self.matrix(v) {
            Ok(a) => self.push_origin(&a).norm(),
            Err(_) => f64::NAN,
        }
    }

    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let g = gaussian_vec(rng, self.flat_dim());
        Self::flat(&self.pull_origin(&self.flat_from_coords(&g)))
    }

    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        let a = self.matrix(v.coords())?;
        let out = match self.metric {
            SpdMetric::LogCholesky => self.phi_inv(&(self.push_origin(&a) * t))?,
            _ => linalg::sym_exp(&(a * t))?,
        };
        Ok(Self::flat(&out))
    }

    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        if !self.pullback() {
            return Err(Error::Unsupported {
                kind: self.kind(),
                what: "geodesic projection",
            });
        }
        let xm = self.spd_matrix(x)?;
        let a = self.matrix(v.coords())?;
        Ok(linalg::frobenius_inner(&self.phi(&xm)?, &self.push_origin(&a)))
    }

    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        if !self.pullback() {
            return ai_busemann_coord(&self.matrix(v.coords())?, &self.spd_matrix(x)?);
        }
        Ok(-self.geodesic_coord(v, x)?)
    }

    fn grad_geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        let a = self.matrix(v.coords())?;
        let xm = self.spd_matrix(x)?;
        let g = match self.metric {
            SpdMetric::AffineInvariant => {
                return Err(Error::Unsupported {
                    kind: self.kind(),
                    what: "geodesic projection gradient",
                })
            }
            SpdMetric::LogEuclidean => le_grad_coord(&a, &xm)?,
            _ => self.pull(&xm, &self.push_origin(&a))?,
        };
        Ok(Self::flat(&g))
    }

    fn grad_busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        if !self.pullback() {
            return Err(Error::Unsupported {
                kind: self.kind(),
                what: "Busemann gradient",
            });
        }
        let mut g = self.grad_geodesic_coord(v, x)?;
        g.iter_mut().for_each(|c| *c = -*c);
        Ok(g)
    }
}
