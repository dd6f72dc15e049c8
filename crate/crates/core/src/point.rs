use crate::error::{check_dim, Error, Result};
use crate::scalar::Real;

/// Dense vector in the feasible parameter space. Entries are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<F> {
    coords: Vec<F>,
}

impl<F: Real> Point<F> {
    pub fn new(coords: Vec<F>) -> Result<Self> {
        if coords.iter().all(|c| c.is_finite()) {
            Ok(Self { coords })
        } else {
            Err(Error::NonFinite("point coordinates"))
        }
    }

    /// Builds a point from `f64` literals. Panics on non-finite input.
    pub fn from_f64(coords: &[f64]) -> Self {
        Self::new(coords.iter().map(|&c| F::lit(c)).collect()).expect("finite literals")
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![F::zero(); dim],
        }
    }

    /// Wraps coordinates without the finiteness check. Callers validate the
    /// final result with [`Point::ensure_finite`].
    pub(crate) fn raw(coords: Vec<F>) -> Self {
        Self { coords }
    }

    pub(crate) fn ensure_finite(self, what: &'static str) -> Result<Self> {
        if self.coords.iter().all(|c| c.is_finite()) {
            Ok(self)
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<F> {
        self.coords
    }

    pub fn dot(&self, other: &Self) -> F {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> F {
        self.dot(self)
    }

    pub fn norm(&self) -> F {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> F {
        self.coords.iter().fold(F::zero(), |acc, &c| acc + c.abs())
    }

    pub fn distance(&self, other: &Self) -> F {
        self.sub(other).norm()
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lincomb(F::one(), other, F::one())
    }

    pub fn scale(&self, alpha: F) -> Self {
        Self::raw(self.coords.iter().map(|&c| alpha * c).collect())
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: F, other: &Self, b: F) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
    }

    /// `self + alpha * dir`.
    pub fn axpy(&self, alpha: F, dir: &Self) -> Self {
        self.lincomb(F::one(), dir, alpha)
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self::raw(self.coords.iter().map(|&c| f(c)).collect())
    }

    /// Radial projection onto the centered ball of the given radius.
    pub fn project_ball(&self, radius: F) -> Self {
        let n = self.norm();
        if n <= radius {
            self.clone()
        } else {
            self.scale(radius / n)
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.dim())
    }
}

impl<F> std::ops::Index<usize> for Point<F> {
    type Output = F;

    fn index(&self, i: usize) -> &F {
        &self.coords[i]
    }
}

/// One observation `(features, response)` from the data process, tagged with
/// its time index along the generating trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<F> {
    pub features: Point<F>,
    pub response: F,
    pub index: u64,
}

impl<F: Real> Sample<F> {
    pub fn new(features: Point<F>, response: F, index: u64) -> Result<Self> {
        if !response.is_finite() {
            return Err(Error::NonFinite("sample response"));
        }
        Ok(Self {
            features,
            response,
            index,
        })
    }

    pub fn from_f64(features: &[f64], response: f64) -> Self {
        Self::new(Point::from_f64(features), F::lit(response), 0).expect("finite literals")
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    /// `<x, features> - response`.
    pub fn residual(&self, x: &Point<F>) -> F {
        x.dot(&self.features) - self.response
    }

    /// Squared loss `(<x, features> - response)^2`.
    pub fn squared_loss(&self, x: &Point<F>) -> F {
        let r = self.residual(x);
        r * r
    }

    /// A placeholder used when an operator does not depend on the sample.
    pub fn empty(dim: usize) -> Self {
        Self {
            features: Point::zeros(dim),
            response: F::zero(),
            index: 0,
        }
    }
}
