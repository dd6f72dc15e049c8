//! Full-batch empirical squared loss, stored as second-moment statistics so
//! that loss and gradient evaluations cost `O(d^2)` regardless of the number
//! of samples.

use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::operators::FunctionSpec;
use crate::point::{Point, Sample};
use crate::scalar::Real;

/// `L(x) = (1/n) Σ (<x, a_i> - b_i)^2 = xᵀ G x - 2 cᵀ x + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares<F> {
    dim: usize,
    count: usize,
    /// Row-major `(1/n) Σ a_i a_iᵀ`.
    gram: Vec<F>,
    /// `(1/n) Σ b_i a_i`.
    cross: Vec<F>,
    /// `(1/n) Σ b_i^2`.
    mean_sq_response: F,
}

impl<F: Real> LeastSquares<F> {
    pub fn from_samples(samples: &[Sample<F>]) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("dataset"))?;
        let dim = first.dim();
        let mut gram = vec![F::zero(); dim * dim];
        let mut cross = vec![F::zero(); dim];
        let mut sq = F::zero();
        for s in samples {
            check_dim(dim, s.dim())?;
            let a = s.features.as_slice();
            for (i, &ai) in a.iter().enumerate() {
                if ai == F::zero() {
                    continue;
                }
                cross[i] = cross[i] + s.response * ai;
                let row = &mut gram[i * dim..(i + 1) * dim];
                // Fill the upper triangle; mirrored below.
                for j in i..dim {
                    row[j] = row[j] + ai * a[j];
                }
            }
            sq = sq + s.response * s.response;
        }
        let inv_n = F::one() / F::from_usize(samples.len()).unwrap();
        for i in 0..dim {
            for j in i..dim {
                let v = gram[i * dim + j] * inv_n;
                gram[i * dim + j] = v;
                gram[j * dim + i] = v;
            }
            cross[i] = cross[i] * inv_n;
        }
        Ok(Self {
            dim,
            count: samples.len(),
            gram,
            cross,
            mean_sq_response: sq * inv_n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn gram_entry(&self, i: usize, j: usize) -> F {
        self.gram[i * self.dim + j]
    }

    fn gram_times(&self, x: &[F]) -> Vec<F> {
        self.gram
            .chunks_exact(self.dim)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(F::zero(), |acc, (&g, &v)| acc + g * v)
            })
            .collect()
    }

    pub fn value(&self, x: &Point<F>) -> F {
        let gx = self.gram_times(x.as_slice());
        let two = F::lit(2.0);
        x.as_slice()
            .iter()
            .zip(&gx)
            .zip(&self.cross)
            .fold(self.mean_sq_response, |acc, ((&xi, &gi), &ci)| {
                acc + xi * gi - two * ci * xi
            })
    }

    /// `2 (G x - c)`.
    pub fn gradient(&self, x: &Point<F>) -> Point<F> {
        let two = F::lit(2.0);
        let gx = self.gram_times(x.as_slice());
        Point::raw(
            gx.into_iter()
                .zip(&self.cross)
                .map(|(g, &c)| two * (g - c))
                .collect(),
        )
    }

    /// Lipschitz constant of the gradient, `2 λ_max(G)`, by power iteration
    /// with a small safety margin.
    pub fn lipschitz(&self) -> F {
        let d = self.dim;
        if d == 0 {
            return F::zero();
        }
        let mut v = vec![F::one() / F::from_usize(d).unwrap().sqrt(); d];
        let mut est = F::zero();
        for _ in 0..500 {
            let w = self.gram_times(&v);
            let norm = w.iter().fold(F::zero(), |a, &x| a + x * x).sqrt();
            if norm == F::zero() {
                return F::zero();
            }
            let prev = est;
            est = norm;
            v = w.into_iter().map(|x| x / norm).collect();
            if (est - prev).abs() <= F::lit(1e-10) * est {
                break;
            }
        }
        // Gershgorin bound caps the estimate from above.
        let gersh = self
            .gram
            .chunks_exact(d)
            .map(|row| row.iter().fold(F::zero(), |a, &x| a + x.abs()))
            .fold(F::zero(), F::max);
        F::lit(2.0) * (est * F::lit(1.01)).min(gersh)
    }
}

/// Empirical composite loss `(1/n) Σ f(x; ξ_i) + g(x)` with squared-loss `f`.
#[derive(Clone, Debug)]
pub struct CompositeObjective<F> {
    pub smooth: Arc<LeastSquares<F>>,
    pub regularizer: FunctionSpec<F>,
}

impl<F: Real> CompositeObjective<F> {
    pub fn new(smooth: Arc<LeastSquares<F>>, regularizer: FunctionSpec<F>) -> Self {
        Self {
            smooth,
            regularizer,
        }
    }

    pub fn from_samples(samples: &[Sample<F>], regularizer: FunctionSpec<F>) -> Result<Self> {
        Ok(Self::new(
            Arc::new(LeastSquares::from_samples(samples)?),
            regularizer,
        ))
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn value(&self, x: &Point<F>) -> Result<F> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.smooth.value(x) + self.regularizer.value(x, None)?)
    }

    /// `L(x) - L(x_ref)`.
    pub fn regret(&self, x: &Point<F>, x_ref: &Point<F>) -> Result<F> {
        Ok(self.value(x)? - self.value(x_ref)?)
    }
}

/// Regret of `x` against `x_ref` under the full-sample composite loss with
/// squared-loss data term and regularizer `g`.
pub fn regret<F: Real>(
    x: &Point<F>,
    dataset: &[Sample<F>],
    g: &FunctionSpec<F>,
    x_ref: &Point<F>,
) -> Result<F> {
    CompositeObjective::from_samples(dataset, g.clone())?.regret(x, x_ref)
}
