use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::least_squares::LeastSquares;
use crate::point::{Point, Sample};
use crate::scalar::Real;

/// Closed, convex, proper functions with closed-form proximal maps.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec<F> {
    /// `(<x, ξ¹> - ξ²)^2` for the current sample.
    SquaredLoss,
    /// Full-batch empirical squared loss; ignores the current sample.
    EmpiricalSquaredLoss(Arc<LeastSquares<F>>),
    /// `weight * ‖x‖₁`.
    L1 {
        weight: F,
    },
    Zero,
    /// Indicator of the centered ball `{‖x‖ ≤ radius}`.
    Ball {
        radius: F,
    },
    /// Indicator of `{0}`.
    Origin,
}

impl<F: Real> FunctionSpec<F> {
    pub fn l1(weight: F) -> Result<Self> {
        if !(weight >= F::zero()) || !weight.is_finite() {
            return Err(Error::Domain(format!(
                "l1 weight must be >= 0, got {weight}"
            )));
        }
        Ok(Self::L1 { weight })
    }

    pub fn ball(radius: F) -> Result<Self> {
        if !(radius > F::zero()) || !radius.is_finite() {
            return Err(Error::Domain(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        Ok(Self::Ball { radius })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::L1 { weight } if *weight == F::zero())
    }

    pub fn is_differentiable(&self) -> bool {
        matches!(
            self,
            Self::SquaredLoss | Self::EmpiricalSquaredLoss(_) | Self::Zero
        )
    }

    pub fn has_prox(&self) -> bool {
        !matches!(self, Self::EmpiricalSquaredLoss(_))
    }

    /// Function value; indicators evaluate to `+inf` outside their set.
    pub fn value(&self, x: &Point<F>, sample: Option<&Sample<F>>) -> Result<F> {
        Ok(match self {
            Self::SquaredLoss => {
                let s = need_sample(sample)?;
                check_dim(x.dim(), s.dim())?;
                s.squared_loss(x)
            }
            Self::EmpiricalSquaredLoss(ls) => {
                check_dim(ls.dim(), x.dim())?;
                ls.value(x)
            }
            Self::L1 { weight } => *weight * x.norm_l1(),
            Self::Zero => F::zero(),
            Self::Ball { radius } => {
                if x.norm() <= *radius {
                    F::zero()
                } else {
                    F::infinity()
                }
            }
            Self::Origin => {
                if x.as_slice().iter().all(|c| *c == F::zero()) {
                    F::zero()
                } else {
                    F::infinity()
                }
            }
        })
    }

    /// `argmin_y { g(y) + ‖y - x‖² / (2γ) }`.
    pub fn prox(&self, gamma: F, x: &Point<F>, sample: Option<&Sample<F>>) -> Result<Point<F>> {
        check_step(gamma)?;
        Ok(match self {
            Self::SquaredLoss => {
                let s = need_sample(sample)?;
                check_dim(x.dim(), s.dim())?;
                // Stationarity: y = x - 2γ(<a,y> - b) a, solved for <a,y> in closed form.
                let two_gamma = F::lit(2.0) * gamma;
                let coef =
                    two_gamma * s.residual(x) / (F::one() + two_gamma * s.features.norm_sq());
                x.axpy(-coef, &s.features)
            }
            Self::EmpiricalSquaredLoss(_) => {
                return Err(Error::Capability(
                    "prox of the full-batch squared loss".into(),
                ))
            }
            Self::L1 { weight } => {
                let t = gamma * *weight;
                x.map(|v| v.signum() * (v.abs() - t).max(F::zero()))
            }
            Self::Zero => x.clone(),
            Self::Ball { radius } => x.project_ball(*radius),
            Self::Origin => Point::zeros(x.dim()),
        })
    }

    pub fn gradient(&self, x: &Point<F>, sample: Option<&Sample<F>>) -> Result<Point<F>> {
        match self {
            Self::SquaredLoss => {
                let s = need_sample(sample)?;
                check_dim(x.dim(), s.dim())?;
                Ok(s.features.scale(F::lit(2.0) * s.residual(x)))
            }
            Self::EmpiricalSquaredLoss(ls) => {
                check_dim(ls.dim(), x.dim())?;
                Ok(ls.gradient(x))
            }
            Self::Zero => Ok(Point::zeros(x.dim())),
            other => Err(Error::Capability(format!(
                "gradient of non-differentiable function {other}"
            ))),
        }
    }

    /// Inverse Lipschitz constant `β` of the gradient at the given sample.
    /// `None` when the gradient is constant (`β = ∞`) or undefined.
    pub fn inverse_lipschitz(&self, sample: Option<&Sample<F>>) -> Option<F> {
        let lip = match self {
            Self::SquaredLoss => F::lit(2.0) * sample?.features.norm_sq(),
            Self::EmpiricalSquaredLoss(ls) => ls.lipschitz(),
            _ => return None,
        };
        (lip > F::zero()).then(|| F::one() / lip)
    }
}

fn need_sample<F>(sample: Option<&Sample<F>>) -> Result<&Sample<F>> {
    sample.ok_or_else(|| Error::Capability("squared loss requires a sample".into()))
}

pub(crate) fn check_step<F: Real>(gamma: F) -> Result<()> {
    if gamma > F::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("step size must be > 0, got {gamma}")))
    }
}

impl<F: Real> fmt::Display for FunctionSpec<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SquaredLoss => write!(f, "squared-loss"),
            Self::EmpiricalSquaredLoss(_) => write!(f, "empirical-squared-loss"),
            Self::L1 { weight } => write!(f, "l1:{weight}"),
            Self::Zero => write!(f, "zero"),
            Self::Ball { radius } => write!(f, "ball:{radius}"),
            Self::Origin => write!(f, "origin"),
        }
    }
}

/// Parses `squared-loss`, `l1:<weight>`, `zero`, `ball:<radius>`, `origin`.
impl<F: Real + FromStr> FromStr for FunctionSpec<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<F> {
            let a = a.ok_or_else(|| Error::Validation(format!("`{kind}` needs a parameter")))?;
            a.parse::<F>()
                .map_err(|_| Error::Validation(format!("bad number `{a}` in `{s}`")))
        };
        match (kind, arg) {
            ("squared-loss", None) => Ok(Self::SquaredLoss),
            ("zero", None) => Ok(Self::Zero),
            ("origin", None) => Ok(Self::Origin),
            ("l1", a) => Self::l1(number(a)?),
            ("ball", a) => Self::ball(number(a)?),
            _ => Err(Error::Validation(format!("unknown function kind `{s}`"))),
        }
    }
}
