use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relaxation weights `λ_k ∈ (0, 1)` of the KM iteration, indexed from 1.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSchedule<F> {
    Constant(F),
    Sequence(Vec<F>),
}

fn check_weight<F: Real>(l: F) -> Result<()> {
    if l > F::zero() && l < F::one() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "relaxation weight must lie in (0, 1), got {l}"
        )))
    }
}

impl<F: Real> StepSchedule<F> {
    pub fn constant(lambda: F) -> Result<Self> {
        check_weight(lambda)?;
        Ok(Self::Constant(lambda))
    }

    pub fn sequence(weights: Vec<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Validation("empty relaxation sequence".into()));
        }
        for &w in &weights {
            check_weight(w)?;
        }
        Ok(Self::Sequence(weights))
    }

    /// Number of iterations covered, `None` when unbounded.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Self::Constant(_) => None,
            Self::Sequence(w) => Some(w.len()),
        }
    }

    /// `λ_k` for `k ≥ 1`.
    pub fn lambda(&self, k: usize) -> Result<F> {
        match self {
            Self::Constant(l) => Ok(*l),
            Self::Sequence(w) => k
                .checked_sub(1)
                .and_then(|i| w.get(i).copied())
                .ok_or_else(|| Error::Validation(format!("relaxation sequence has no entry {k}"))),
        }
    }

    /// `Λ_K = Σ_{k ≤ K} λ_k`.
    pub fn lambda_sum(&self, horizon: usize) -> Result<F> {
        (1..=horizon).map(|k| self.lambda(k)).sum()
    }

    /// `τ̲ = min_{k ≤ K} λ_k (1 - λ_k)`.
    pub fn tau_min(&self, horizon: usize) -> Result<F> {
        let mut tau = F::infinity();
        for k in 1..=horizon.max(1) {
            let l = self.lambda(k)?;
            tau = tau.min(l * (F::one() - l));
        }
        Ok(tau)
    }
}

impl<F: Real> Default for StepSchedule<F> {
    fn default() -> Self {
        Self::Constant(F::lit(0.5))
    }
}
