use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::function::FunctionSpec;
use crate::operators::operator::OperatorSpec;
use crate::scalar::Real;

/// First-order splitting schemes expressible as a single nonexpansive operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Gradient descent, `I - γ∇f`.
    Sgd,
    /// Proximal point, `prox_{γf}`.
    Ppa,
    /// Proximal gradient, `prox_{γg} ∘ (I - γ∇f)`.
    Pgd,
    /// Douglas–Rachford, `½ (I + refl_{γf} ∘ refl_{γg})`.
    Drs,
    /// Relaxed Peaceman–Rachford, `(1-λ) I + λ refl_{γf} ∘ refl_{γg}`.
    Rprs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::Sgd, Self::Ppa, Self::Pgd, Self::Drs, Self::Rprs];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sgd => "SGD",
            Self::Ppa => "PPA",
            Self::Pgd => "PGD",
            Self::Drs => "DRS",
            Self::Rprs => "rPRS",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "ppa" => Ok(Self::Ppa),
            "pgd" => Ok(Self::Pgd),
            "drs" => Ok(Self::Drs),
            "rprs" | "prs" => Ok(Self::Rprs),
            _ => Err(Error::Validation(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Builds the operator of `name` for the problem `min f + g`.
///
/// `lambda` is the relaxation of rPRS and is ignored by the other schemes
/// (DRS always uses ½).
pub fn build_algorithm<F: Real>(
    name: Algorithm,
    f: &FunctionSpec<F>,
    g: &FunctionSpec<F>,
    gamma: F,
    lambda: F,
) -> Result<OperatorSpec<F>> {
    let needs_zero_g = |what: &str| -> Result<()> {
        if g.is_zero() {
            Ok(())
        } else {
            Err(Error::Capability(format!("{what} requires g = 0, got {g}")))
        }
    };
    match name {
        Algorithm::Sgd => {
            needs_zero_g("SGD")?;
            OperatorSpec::grad_step(f.clone(), gamma)
        }
        Algorithm::Ppa => {
            needs_zero_g("PPA")?;
            OperatorSpec::prox(f.clone(), gamma)
        }
        Algorithm::Pgd => Ok(OperatorSpec::compose(
            OperatorSpec::prox(g.clone(), gamma)?,
            OperatorSpec::grad_step(f.clone(), gamma)?,
        )),
        Algorithm::Drs => relaxed_prs(f, g, gamma, F::lit(0.5)),
        Algorithm::Rprs => relaxed_prs(f, g, gamma, lambda),
    }
}

fn relaxed_prs<F: Real>(
    f: &FunctionSpec<F>,
    g: &FunctionSpec<F>,
    gamma: F,
    lambda: F,
) -> Result<OperatorSpec<F>> {
    OperatorSpec::averaged(
        OperatorSpec::compose(
            OperatorSpec::reflect(f.clone(), gamma)?,
            OperatorSpec::reflect(g.clone(), gamma)?,
        ),
        lambda,
    )
}

/// Text form of an algorithm choice, as `key = value` lines with keys
/// `name`, `f`, `g`, `gamma`, `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmDescriptor<F> {
    pub name: Algorithm,
    pub f: FunctionSpec<F>,
    pub g: FunctionSpec<F>,
    pub gamma: F,
    pub lambda: F,
}

impl<F: Real + FromStr> AlgorithmDescriptor<F> {
    pub fn build(&self) -> Result<OperatorSpec<F>> {
        build_algorithm(self.name, &self.f, &self.g, self.gamma, self.lambda)
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("name", self.name.to_string()),
            ("f", self.f.to_string()),
            ("g", self.g.to_string()),
            ("gamma", self.gamma.to_string()),
            ("lambda", self.lambda.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Parses the pairs produced by [`Self::to_pairs`]. `lambda` defaults
    /// to ½; unknown or missing required keys are errors.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let (mut name, mut f, mut g, mut gamma, mut lambda) = (None, None, None, None, None);
        for (k, v) in pairs {
            let num = |v: &str| {
                v.trim()
                    .parse::<F>()
                    .map_err(|_| Error::Validation(format!("bad number for `{k}`: `{v}`")))
            };
            match k.trim() {
                "name" => name = Some(v.parse()?),
                "f" => f = Some(v.parse()?),
                "g" => g = Some(v.parse()?),
                "gamma" => gamma = Some(num(v)?),
                "lambda" => lambda = Some(num(v)?),
                other => {
                    return Err(Error::Validation(format!(
                        "unknown algorithm key `{other}`"
                    )))
                }
            }
        }
        let missing = |k: &str| Error::Validation(format!("missing algorithm key `{k}`"));
        Ok(Self {
            name: name.ok_or_else(|| missing("name"))?,
            f: f.ok_or_else(|| missing("f"))?,
            g: g.unwrap_or(FunctionSpec::Zero),
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            lambda: lambda.unwrap_or_else(|| F::lit(0.5)),
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Validation(format!("expected `key = value`, got `{line}`"))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        Self::from_pairs(pairs)
    }
}
