//! Nonexpansive operators for first-order splitting methods.
//!
//! Every scheme is an [`OperatorSpec`] tree evaluated at a point and a sample;
//! see [`build_algorithm`] for the catalog.

mod algorithm;
mod function;
mod operator;

pub use algorithm::{build_algorithm, Algorithm, AlgorithmDescriptor};
pub use function::FunctionSpec;
pub use operator::{fpr, OperatorSpec};

use crate::error::{Error, Result};
use crate::point::{Point, Sample};
use crate::scalar::Real;

pub fn prox<F: Real>(
    g: &FunctionSpec<F>,
    gamma: F,
    x: &Point<F>,
    sample: Option<&Sample<F>>,
) -> Result<Point<F>> {
    g.prox(gamma, x, sample)?.ensure_finite("prox")
}

/// `x - γ ∇f(x; ξ)`. A zero step returns `x`.
pub fn grad_step<F: Real>(
    f: &FunctionSpec<F>,
    gamma: F,
    x: &Point<F>,
    sample: &Sample<F>,
) -> Result<Point<F>> {
    if !(gamma >= F::zero()) {
        return Err(Error::Domain(format!(
            "step size must be >= 0, got {gamma}"
        )));
    }
    let grad = f.gradient(x, Some(sample))?;
    x.axpy(-gamma, &grad).ensure_finite("gradient step")
}

/// `2 prox_{γg}(x) - x`.
pub fn reflect<F: Real>(
    g: &FunctionSpec<F>,
    gamma: F,
    x: &Point<F>,
    sample: Option<&Sample<F>>,
) -> Result<Point<F>> {
    let p = g.prox(gamma, x, sample)?;
    p.lincomb(F::lit(2.0), x, -F::one())
        .ensure_finite("reflection")
}

pub fn apply<F: Real>(
    spec: &OperatorSpec<F>,
    x: &Point<F>,
    sample: &Sample<F>,
) -> Result<Point<F>> {
    spec.apply(x, sample)
}

/// Auxiliary points `(x^f, x^g)` of the PRS family:
/// `x^g = prox_{γg}(x)` and `x^f = prox_{γf}(refl_{γg}(x))`.
pub fn auxiliary_points<F: Real>(
    x: &Point<F>,
    f: &FunctionSpec<F>,
    g: &FunctionSpec<F>,
    gamma: F,
    sample: Option<&Sample<F>>,
) -> Result<(Point<F>, Point<F>)> {
    let xg = prox(g, gamma, x, sample)?;
    let refl = xg.lincomb(F::lit(2.0), x, -F::one());
    let xf = prox(f, gamma, &refl, sample)?;
    Ok((xf, xg))
}
