use rand::RngCore;

use super::{check_len, oracle, Direction, Geometry, Manifold};
use crate::error::{Error, Result};

/// Components whose direction weight falls below this contribute nothing.
const ZERO_WEIGHT: f64 = 1e-12;

/// Riemannian product `M₁ × … × Mₙ` with concatenated coordinates.
#[derive(Debug, Clone)]
pub struct Product {
    components: Vec<Manifold>,
    offsets: Vec<usize>,
}

impl Product {
    pub fn new(components: Vec<Manifold>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidConfig("a product needs at least two components".into()));
        }
        let mut offsets = vec![0];
        for c in &components {
            offsets.push(offsets.last().unwrap() + c.point_len());
        }
        Ok(Product { components, offsets })
    }

    pub fn components(&self) -> &[Manifold] {
        &self.components
    }

    /// Slice boundaries of each component in the flat coordinate vector.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.offsets[i]..self.offsets[i + 1]]
    }

    fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Component weights `λᵢ` and unit component directions (`None` for
    /// zero-weight components).
    pub fn split_direction(&self, v: &Direction) -> Vec<(f64, Option<Direction>)> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let vi = self.block(v.coords(), i);
                let lam = c.direction_norm(vi);
                if lam < ZERO_WEIGHT {
                    (lam, None)
                } else {
                    let unit = vi.iter().map(|x| x / lam).collect();
                    (lam, Some(Direction::from_unit(unit)))
                }
            })
            .collect()
    }

    fn map_blocks(
        &self,
        x: &[f64],
        y: &[f64],
        f: impl Fn(&Manifold, &[f64], &[f64]) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        check_len(x, self.total())?;
        check_len(y, self.total())?;
        let mut out = Vec::with_capacity(self.total());
        for (i, c) in self.components.iter().enumerate() {
            out.extend(f(c, self.block(x, i), self.block(y, i))?);
        }
        Ok(out)
    }
}

impl Geometry for Product {
    fn kind(&self) -> &'static str {
        "product"
    }

    fn point_len(&self) -> usize {
        self.total()
    }

    fn origin(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.origin()).collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(x, self.total())?;
        for (i, c) in self.components.iter().enumerate() {
            c.check_point(self.block(x, i))?;
        }
        Ok(())
    }

    fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        check_len(x, self.total())?;
        check_len(v, self.total())?;
        for (i, c) in self.components.iter().enumerate() {
            c.check_tangent(self.block(x, i), self.block(v, i))?;
        }
        Ok(())
    }

    fn constraint_residual(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| c.constraint_residual(self.block(x, i)))
            .fold(0.0, f64::max)
    }

    fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(x, self.total())?;
        check_len(y, self.total())?;
        let mut s = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            s += c.dist(self.block(x, i), self.block(y, i))?.powi(2);
        }
        Ok(s.sqrt())
    }

    fn inner(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            s += c.inner(self.block(x, i), self.block(u, i), self.block(w, i))?;
        }
        Ok(s)
    }

    fn exp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.map_blocks(x, v, |c, a, b| c.exp(a, b))
    }

    fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.map_blocks(x, y, |c, a, b| c.log(a, b))
    }

    fn to_tangent(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.to_tangent(self.block(x, i), self.block(u, i)))
            .collect()
    }

    fn retract(&self, x: &mut [f64]) {
        for (i, c) in self.components.iter().enumerate() {
            c.retract(&mut x[self.offsets[i]..self.offsets[i + 1]]);
        }
    }

    fn direction_norm(&self, v: &[f64]) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| c.direction_norm(self.block(v, i)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn sample_tangent_gaussian(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.sample_tangent_gaussian(rng))
            .collect()
    }

    fn geodesic_point(&self, v: &Direction, t: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.total());
        for (c, (lam, unit)) in self.components.iter().zip(self.split_direction(v)) {
            match unit {
                Some(u) => out.extend(c.geodesic_point(&u, lam * t)?),
                None => out.extend(c.origin()),
            }
        }
        Ok(out)
    }

    fn geodesic_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.total())?;
        oracle::numeric_geodesic_coord(self, v, x)
    }

    fn busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<f64> {
        check_len(x, self.total())?;
        let mut s = 0.0;
        for (i, (c, (lam, unit))) in self.components.iter().zip(self.split_direction(v)).enumerate() {
            if let Some(u) = unit {
                s += lam * c.busemann_coord(&u, self.block(x, i))?;
            }
        }
        Ok(s)
    }

    fn grad_busemann_coord(&self, v: &Direction, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.total())?;
        let mut out = Vec::with_capacity(self.total());
        for (i, (c, (lam, unit))) in self.components.iter().zip(self.split_direction(v)).enumerate() {
            match unit {
                Some(u) => out.extend(c.grad_busemann_coord(&u, self.block(x, i))?.iter().map(|g| lam * g)),
                None => out.extend(std::iter::repeat_n(0.0, c.point_len())),
            }
        }
        Ok(out)
    }
}
