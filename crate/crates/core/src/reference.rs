//! Reference solutions for regret and distance metrics.
//!
//! The empirical minimizer is computed by full-batch accelerated proximal
//! gradient (FISTA) with gradient-based adaptive restart. Convergence is
//! declared on the fixed point residual of the plain proximal gradient map,
//! `‖prox_{γg}(x - γ∇L(x)) - x‖²`.

use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::least_squares::CompositeObjective;
use crate::point::Point;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Parameter of the data generator.
    GeneratorTruth,
    /// Minimizer of the full-batch composite loss.
    EmpiricalMinimizer,
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GeneratorTruth => "generator-truth",
            Self::EmpiricalMinimizer => "empirical-minimizer",
        })
    }
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "generator-truth" => Ok(Self::GeneratorTruth),
            "empirical-minimizer" => Ok(Self::EmpiricalMinimizer),
            other => Err(Error::Validation(format!(
                "unknown reference kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution<F> {
    pub x: Point<F>,
    pub kind: ReferenceKind,
    /// Squared proximal gradient residual at `x` (zero for generator truth).
    pub residual: F,
    pub iterations: usize,
}

impl<F: Real> ReferenceSolution<F> {
    pub fn generator_truth(x: Point<F>) -> Self {
        Self {
            x,
            kind: ReferenceKind::GeneratorTruth,
            residual: F::zero(),
            iterations: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions<F> {
    /// Step size; `1/L` of the smooth part when absent.
    pub gamma: Option<F>,
    /// Target for the squared residual.
    pub tol: F,
    pub max_iters: usize,
    /// Starting point; the origin when absent.
    pub x0: Option<Point<F>>,
}

impl<F: Real> Default for SolverOptions<F> {
    fn default() -> Self {
        Self {
            gamma: None,
            // Attainable in f64; f32 falls back to a precision-scaled floor.
            tol: F::lit(1e-12).max((F::epsilon() * F::lit(100.0)).powi(2)),
            max_iters: 100_000,
            x0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ReferenceError<F: Real> {
    #[error(transparent)]
    Invalid(#[from] Error),
    /// The iteration cap was hit; `best` holds the lowest-residual iterate.
    #[error("reference solver stopped after {} iterations at residual {}", best.iterations, best.residual)]
    NotConverged { best: Box<ReferenceSolution<F>> },
}

impl<F: Real> From<ReferenceError<F>> for Error {
    fn from(e: ReferenceError<F>) -> Self {
        match e {
            ReferenceError::Invalid(e) => e,
            ReferenceError::NotConverged { best } => Error::NotConverged {
                iterations: best.iterations,
                residual: best.residual.as_f64(),
            },
        }
    }
}

/// `prox_{γg}(x - γ∇L(x))`.
fn pgd_map<F: Real>(obj: &CompositeObjective<F>, gamma: F, x: &Point<F>) -> Result<Point<F>> {
    let grad = obj.smooth.gradient(x);
    obj.regularizer.prox(gamma, &x.axpy(-gamma, &grad), None)
}

/// Squared proximal gradient residual of `x`.
pub fn pgd_residual<F: Real>(obj: &CompositeObjective<F>, gamma: F, x: &Point<F>) -> Result<F> {
    Ok(pgd_map(obj, gamma, x)?.sub(x).norm_sq())
}

/// Full-batch minimizer of `obj`.
pub fn solve_reference<F: Real>(
    obj: &CompositeObjective<F>,
    opts: &SolverOptions<F>,
) -> std::result::Result<ReferenceSolution<F>, ReferenceError<F>> {
    let d = obj.dim();
    let gamma = match opts.gamma {
        Some(g) if g > F::zero() && g.is_finite() => g,
        Some(g) => return Err(Error::Domain(format!("step must be > 0, got {g}")).into()),
        None => {
            let l = obj.smooth.lipschitz();
            if l > F::zero() {
                F::one() / l
            } else {
                F::one()
            }
        }
    };
    if !(opts.tol > F::zero()) {
        return Err(Error::Validation(format!("tolerance must be > 0, got {}", opts.tol)).into());
    }
    let mut x = match &opts.x0 {
        Some(p) => {
            check_dim(d, p.dim())?;
            p.clone()
        }
        None => Point::zeros(d),
    };
    let solution = |x: Point<F>, residual, iterations| ReferenceSolution {
        x,
        kind: ReferenceKind::EmpiricalMinimizer,
        residual,
        iterations,
    };

    let mut residual = pgd_residual(obj, gamma, &x)?;
    let mut best = (residual, x.clone(), 0);
    if residual <= opts.tol {
        return Ok(solution(x, residual, 0));
    }
    let mut y = x.clone();
    let mut t = F::one();
    let four = F::lit(4.0);
    let half = F::lit(0.5);
    for it in 1..=opts.max_iters {
        let x_new = pgd_map(obj, gamma, &y)?.ensure_finite("reference iterate")?;
        let t_new = half * (F::one() + (F::one() + four * t * t).sqrt());
        let moved = x_new.sub(&x);
        if y.sub(&x_new).dot(&moved) > F::zero() {
            // Momentum points uphill: restart from the prox-gradient point.
            y = x_new.clone();
            t = F::one();
        } else {
            y = x_new.axpy((t - F::one()) / t_new, &moved);
            t = t_new;
        }
        x = x_new;
        residual = pgd_residual(obj, gamma, &x)?;
        if residual < best.0 {
            best = (residual, x.clone(), it);
        }
        if residual <= opts.tol {
            return Ok(solution(x, residual, it));
        }
    }
    log::warn!(
        "reference solver hit {} iterations; best residual {}",
        opts.max_iters,
        best.0
    );
    Err(ReferenceError::NotConverged {
        best: Box::new(ReferenceSolution {
            iterations: opts.max_iters,
            ..solution(best.1, best.0, best.2)
        }),
    })
}
