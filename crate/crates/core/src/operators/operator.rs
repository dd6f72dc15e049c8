use crate::error::{Error, Result};
use crate::operators::function::{check_step, FunctionSpec};
use crate::point::{Point, Sample};
use crate::scalar::Real;

/// A nonexpansive map `T(·; ξ)` built from proximal, gradient and reflection
/// steps. Immutable once built; evaluation is pure.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSpec<F> {
    Identity,
    /// `x - γ ∇f(x; ξ)`.
    GradStep {
        f: FunctionSpec<F>,
        gamma: F,
    },
    /// `prox_{γg}(x)`.
    Prox {
        g: FunctionSpec<F>,
        gamma: F,
    },
    /// `2 prox_{γg}(x) - x`.
    Reflect {
        g: FunctionSpec<F>,
        gamma: F,
    },
    /// `(1 - λ) x + λ T(x)`.
    Averaged {
        inner: Box<OperatorSpec<F>>,
        lambda: F,
    },
    /// `first ∘ second`: applies `second`, then `first`.
    Compose {
        first: Box<OperatorSpec<F>>,
        second: Box<OperatorSpec<F>>,
    },
}

impl<F: Real> OperatorSpec<F> {
    pub fn grad_step(f: FunctionSpec<F>, gamma: F) -> Result<Self> {
        check_step(gamma)?;
        if !f.is_differentiable() {
            return Err(Error::Capability(format!("gradient step on {f}")));
        }
        Ok(Self::GradStep { f, gamma })
    }

    pub fn prox(g: FunctionSpec<F>, gamma: F) -> Result<Self> {
        check_step(gamma)?;
        if !g.has_prox() {
            return Err(Error::Capability(format!("prox of {g}")));
        }
        Ok(Self::Prox { g, gamma })
    }

    pub fn reflect(g: FunctionSpec<F>, gamma: F) -> Result<Self> {
        check_step(gamma)?;
        if !g.has_prox() {
            return Err(Error::Capability(format!("reflection of {g}")));
        }
        Ok(Self::Reflect { g, gamma })
    }

    pub fn averaged(inner: Self, lambda: F) -> Result<Self> {
        if !(lambda > F::zero() && lambda <= F::one()) {
            return Err(Error::Domain(format!(
                "averaging weight must lie in (0, 1], got {lambda}"
            )));
        }
        Ok(Self::Averaged {
            inner: Box::new(inner),
            lambda,
        })
    }

    pub fn compose(first: Self, second: Self) -> Self {
        Self::Compose {
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    /// Evaluates `T(x; ξ)`. The result is checked for finiteness.
    pub fn apply(&self, x: &Point<F>, sample: &Sample<F>) -> Result<Point<F>> {
        if sample.dim() != x.dim() && self.uses_sample() {
            return Err(Error::Shape {
                expected: x.dim(),
                found: sample.dim(),
            });
        }
        self.eval(x, sample)?.ensure_finite("operator output")
    }

    fn eval(&self, x: &Point<F>, sample: &Sample<F>) -> Result<Point<F>> {
        match self {
            Self::Identity => Ok(x.clone()),
            Self::GradStep { f, gamma } => Ok(x.axpy(-*gamma, &f.gradient(x, Some(sample))?)),
            Self::Prox { g, gamma } => g.prox(*gamma, x, Some(sample)),
            Self::Reflect { g, gamma } => {
                let p = g.prox(*gamma, x, Some(sample))?;
                Ok(p.lincomb(F::lit(2.0), x, -F::one()))
            }
            Self::Averaged { inner, lambda } => {
                let t = inner.eval(x, sample)?;
                Ok(x.lincomb(F::one() - *lambda, &t, *lambda))
            }
            Self::Compose { first, second } => first.eval(&second.eval(x, sample)?, sample),
        }
    }

    /// Whether any leaf reads the per-sample data.
    pub fn uses_sample(&self) -> bool {
        match self {
            Self::Identity => false,
            Self::GradStep { f, .. } | Self::Prox { g: f, .. } | Self::Reflect { g: f, .. } => {
                matches!(f, FunctionSpec::SquaredLoss)
            }
            Self::Averaged { inner, .. } => inner.uses_sample(),
            Self::Compose { first, second } => first.uses_sample() || second.uses_sample(),
        }
    }

    /// Visits every gradient step `(f, γ)` in the tree.
    pub fn grad_steps(&self) -> Vec<(&FunctionSpec<F>, F)> {
        let mut out = Vec::new();
        self.collect_grad_steps(&mut out);
        out
    }

    fn collect_grad_steps<'a>(&'a self, out: &mut Vec<(&'a FunctionSpec<F>, F)>) {
        match self {
            Self::GradStep { f, gamma } => out.push((f, *gamma)),
            Self::Averaged { inner, .. } => inner.collect_grad_steps(out),
            Self::Compose { first, second } => {
                first.collect_grad_steps(out);
                second.collect_grad_steps(out);
            }
            _ => {}
        }
    }

    /// `true` when every gradient step satisfies `γ < 2β` at this sample.
    pub fn step_condition_holds(&self, sample: &Sample<F>) -> bool {
        self.grad_steps()
            .into_iter()
            .all(|(f, gamma)| match f.inverse_lipschitz(Some(sample)) {
                Some(beta) => gamma < F::lit(2.0) * beta,
                None => true,
            })
    }
}

/// Fixed point residual `‖T(x; ξ) - x‖²`.
pub fn fpr<F: Real>(spec: &OperatorSpec<F>, x: &Point<F>, sample: &Sample<F>) -> Result<F> {
    Ok(spec.apply(x, sample)?.sub(x).norm_sq())
}
