use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::error::{check_dim, Error, Result};
use crate::point::{Point, Sample};
use crate::scalar::Real;

/// Sparse linear regression driven by a first-order vector autoregression:
///
/// `ξ¹_k = A ξ¹_{k-1} + e₁ W_k`, `ξ²_k = <x_true, ξ¹_k> + E_k`
///
/// with `A` strictly subdiagonal, `W_k ~ N(0, w_scale²)` and `E_k` Laplace
/// with standard deviation `e_scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArProcess<F> {
    /// `A[i][i-1]` for `i = 1..d`; length `d - 1`.
    subdiag: Vec<F>,
    truth: Point<F>,
    w_scale: F,
    e_scale: F,
    initial: Point<F>,
}

/// Parameters for drawing a random [`ArProcess`].
#[derive(Clone, Debug, PartialEq)]
pub struct ArGenerator {
    pub dim: usize,
    pub sparsity: usize,
    pub subdiag_range: (f64, f64),
    pub truth_range: (f64, f64),
    pub w_scale: f64,
    pub e_scale: f64,
}

impl Default for ArGenerator {
    fn default() -> Self {
        Self {
            dim: 1000,
            sparsity: 50,
            subdiag_range: (0.8, 0.99),
            truth_range: (-1.0, 1.0),
            w_scale: 1.0,
            e_scale: 1.0,
        }
    }
}

impl ArGenerator {
    /// Draws the subdiagonal entries and the leading `sparsity` entries of the
    /// true parameter uniformly from their ranges.
    pub fn draw<F: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ArProcess<F>> {
        if self.dim == 0 || self.sparsity > self.dim {
            return Err(Error::Validation(format!(
                "need 0 < dim and sparsity <= dim, got dim={} sparsity={}",
                self.dim, self.sparsity
            )));
        }
        let uniform = |(lo, hi): (f64, f64)| {
            Uniform::new_inclusive(lo, hi)
                .map_err(|e| Error::Validation(format!("bad range [{lo}, {hi}]: {e}")))
        };
        let a_dist = uniform(self.subdiag_range)?;
        let x_dist = uniform(self.truth_range)?;
        let subdiag = (1..self.dim).map(|_| F::lit(a_dist.sample(rng))).collect();
        let mut truth = vec![F::zero(); self.dim];
        for t in truth.iter_mut().take(self.sparsity) {
            // A zero draw would break the exact-sparsity invariant.
            let mut v = 0.0;
            while v == 0.0 {
                v = x_dist.sample(rng);
            }
            *t = F::lit(v);
        }
        ArProcess::new(
            subdiag,
            Point::new(truth)?,
            F::lit(self.w_scale),
            F::lit(self.e_scale),
        )
    }
}

impl<F: Real> ArProcess<F> {
    pub fn new(subdiag: Vec<F>, truth: Point<F>, w_scale: F, e_scale: F) -> Result<Self> {
        let dim = truth.dim();
        if dim == 0 {
            return Err(Error::Validation("AR dimension must be positive".into()));
        }
        check_dim(dim - 1, subdiag.len())?;
        if subdiag.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("AR subdiagonal"));
        }
        if !(w_scale >= F::zero()) || !(e_scale >= F::zero()) {
            return Err(Error::Validation("noise scales must be >= 0".into()));
        }
        Ok(Self {
            subdiag,
            truth,
            w_scale,
            e_scale,
            initial: Point::zeros(dim),
        })
    }

    /// Starts trajectories from `initial` instead of the zero vector.
    pub fn with_initial(mut self, initial: Point<F>) -> Result<Self> {
        initial.check_dim(self.dim())?;
        self.initial = initial;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.truth.dim()
    }

    pub fn truth(&self) -> &Point<F> {
        &self.truth
    }

    pub fn subdiag(&self) -> &[F] {
        &self.subdiag
    }

    pub fn sparsity(&self) -> usize {
        self.truth
            .as_slice()
            .iter()
            .filter(|v| **v != F::zero())
            .count()
    }

    pub fn initial(&self) -> &Point<F> {
        &self.initial
    }

    /// One transition with explicit noise draws `w = W_k`, `e = E_k`.
    pub fn step_with(&self, prev: &Point<F>, w: F, e: F, index: u64) -> Result<Sample<F>> {
        prev.check_dim(self.dim())?;
        let p = prev.as_slice();
        let mut next = Vec::with_capacity(p.len());
        next.push(w);
        next.extend(self.subdiag.iter().zip(p).map(|(&a, &v)| a * v));
        let features = Point::new(next)?;
        let response = features.dot(&self.truth) + e;
        Sample::new(features, response, index)
    }

    /// Draws `(W_k, E_k)`.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (F, F) {
        let w: f64 = StandardNormal.sample(rng);
        // Difference of two unit exponentials is Laplace(0, 1) with variance 2.
        let e1: f64 = Exp1.sample(rng);
        let e2: f64 = Exp1.sample(rng);
        let laplace = (e1 - e2) * std::f64::consts::FRAC_1_SQRT_2;
        (self.w_scale * F::lit(w), self.e_scale * F::lit(laplace))
    }
}

/// One AR transition from `prev` with explicit draws.
pub fn ar_step<F: Real>(spec: &ArProcess<F>, prev: &Sample<F>, w: F, e: F) -> Result<Sample<F>> {
    spec.step_with(&prev.features, w, e, prev.index + 1)
}
