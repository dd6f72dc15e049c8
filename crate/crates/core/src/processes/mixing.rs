//! Total variation distance and φ-mixing coefficients of finite chains.
//!
//! The supremum over conditioning events in the φ-mixing coefficient is taken
//! over singleton last-state events; by the Markov property this is exact,
//! so `φ(l) = max_b 2 d_TV(P^l(b, ·), π)` over states `b` in the support of
//! the stationary distribution `π`.

use crate::error::{check_dim, Error, Result};
use crate::processes::markov::MarkovChain;
use crate::scalar::Real;

const NORMALIZATION_TOL: f64 = 1e-9;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
const TAIL_RATIO_CAP: f64 = 0.999;
const DECREASING_WINDOW: usize = 3;

fn check_distribution<F: Real>(p: &[F], name: &str) -> Result<()> {
    if p.iter().any(|&v| !(v >= F::zero()) || !v.is_finite()) {
        return Err(Error::Validation(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let sum: F = p.iter().copied().sum();
    if (sum - F::one()).abs() > F::lit(NORMALIZATION_TOL) {
        return Err(Error::Validation(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

/// `½ Σ |p_i - q_i|`.
pub fn tv_distance<F: Real>(p: &[F], q: &[F]) -> Result<F> {
    check_dim(p.len(), q.len())?;
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(half_l1(p, q))
}

fn half_l1<F: Real>(p: &[F], q: &[F]) -> F {
    let s: F = p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum();
    (F::lit(0.5) * s).min(F::one())
}

/// Stationary distribution by power iteration on the lazy chain `(I + P)/2`,
/// which shares `π` with `P` and is aperiodic.
pub fn stationary_distribution<F: Real>(chain: &MarkovChain<F>) -> Result<Vec<F>> {
    if !chain.has_unique_stationary() {
        return Err(Error::Diagnostic(
            "chain is not ergodic: stationary distribution is not unique".into(),
        ));
    }
    let n = chain.states();
    if let Some(row) = common_row(chain) {
        return Ok(row.to_vec());
    }
    let tol = F::lit(STATIONARY_TOL).max(F::epsilon() * F::lit(64.0) * F::from_usize(n).unwrap());
    let half = F::lit(0.5);
    let mut pi = vec![F::one() / F::from_usize(n).unwrap(); n];
    let mut residual = F::infinity();
    for _ in 0..STATIONARY_MAX_ITERS {
        let moved = chain.left_multiply(&pi);
        residual = moved.iter().zip(&pi).map(|(&a, &b)| (a - b).abs()).sum();
        if residual <= tol {
            return Ok(pi);
        }
        pi = pi
            .iter()
            .zip(&moved)
            .map(|(&a, &b)| half * (a + b))
            .collect();
        let total: F = pi.iter().copied().sum();
        pi.iter_mut().for_each(|v| *v = *v / total);
    }
    Err(Error::Diagnostic(format!(
        "power iteration did not reach residual {tol} (last {residual})"
    )))
}

/// The shared row when all rows of `P` are equal (an i.i.d. source); then
/// `P^l = P` for every `l ≥ 1` and `π` is that row.
fn common_row<F: Real>(chain: &MarkovChain<F>) -> Option<&[F]> {
    let first = chain.row(0);
    (1..chain.states())
        .all(|i| chain.row(i) == first)
        .then_some(first)
}

/// φ(1), …, φ(l_max) for an ergodic chain.
pub fn phi_coefficients<F: Real>(chain: &MarkovChain<F>, l_max: usize) -> Result<Vec<F>> {
    let pi = stationary_distribution(chain)?;
    let n = chain.states();
    if common_row(chain).is_some() {
        return Ok(vec![F::zero(); l_max]);
    }
    let support: Vec<usize> = (0..n).filter(|&b| pi[b] > F::zero()).collect();
    // rows[b] = P^l(b, ·), advanced one power per coefficient.
    let mut rows: Vec<Vec<F>> = support
        .iter()
        .map(|&b| {
            let mut e = vec![F::zero(); n];
            e[b] = F::one();
            e
        })
        .collect();
    let mut out = Vec::with_capacity(l_max);
    for _ in 0..l_max {
        let mut phi = F::zero();
        for row in rows.iter_mut() {
            *row = chain.left_multiply(row);
            phi = phi.max(F::lit(2.0) * half_l1(row, &pi));
        }
        out.push(phi);
    }
    Ok(out)
}

pub fn phi_coefficient<F: Real>(chain: &MarkovChain<F>, l: usize) -> Result<F> {
    if l == 0 {
        return Err(Error::Domain("mixing lag must be >= 1".into()));
    }
    Ok(*phi_coefficients(chain, l)?.last().expect("l >= 1"))
}

/// Tabulated mixing coefficients with a tail-sum estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingProfile<F> {
    /// `φ(1), …, φ(l_max)`.
    pub coefficients: Vec<F>,
    /// `Σ φ(k)`: the tabulated sum plus a geometric tail when extrapolated.
    pub tail_sum: F,
    /// Last tabulated lag.
    pub truncation: usize,
    /// Ratio used for the geometric tail, when one was fitted.
    pub tail_ratio: Option<F>,
    /// Set when the coefficients are not decreasing over the final window;
    /// `tail_sum` is then only the tabulated lower bound.
    pub truncated: bool,
    pub c_value: F,
}

impl<F: Real> MixingProfile<F> {
    pub fn phi(&self, l: usize) -> Option<F> {
        l.checked_sub(1)
            .and_then(|i| self.coefficients.get(i).copied())
    }

    /// `-1 / ln ρ` for the fitted tail ratio ρ; the number of steps for the
    /// coefficients to shrink by a factor e.
    pub fn geometric_scale(&self) -> Option<F> {
        let rho = self.tail_ratio?;
        (rho > F::zero() && rho < F::one()).then(|| -F::one() / rho.ln())
    }
}

/// Builds a [`MixingProfile`] from `l_max` coefficients. The tail beyond
/// `l_max` is extrapolated geometrically with ratio `φ(l_max)/φ(l_max-1)`,
/// capped at 0.999.
pub fn mixing_profile<F: Real>(
    chain: &MarkovChain<F>,
    l_max: usize,
    c_value: F,
) -> Result<MixingProfile<F>> {
    if l_max == 0 {
        return Err(Error::Domain("l_max must be >= 1".into()));
    }
    if !(c_value > F::zero()) {
        return Err(Error::Domain(format!("C value must be > 0, got {c_value}")));
    }
    let coefficients = phi_coefficients(chain, l_max)?;
    Ok(profile_from_coefficients(coefficients, c_value))
}

pub fn profile_from_coefficients<F: Real>(coefficients: Vec<F>, c_value: F) -> MixingProfile<F> {
    let l_max = coefficients.len();
    let partial: F = coefficients.iter().copied().sum();
    let last = coefficients[l_max - 1];
    let (tail, ratio, truncated) = if last == F::zero() {
        (F::zero(), Some(F::zero()), false)
    } else {
        let start = l_max.saturating_sub(DECREASING_WINDOW);
        let window = &coefficients[start..];
        let decreasing = window.len() >= 2 && window.windows(2).all(|w| w[1] < w[0]);
        if decreasing {
            let rho = (last / coefficients[l_max - 2]).min(F::lit(TAIL_RATIO_CAP));
            (last * rho / (F::one() - rho), Some(rho), false)
        } else {
            (F::zero(), None, true)
        }
    };
    MixingProfile {
        coefficients,
        tail_sum: partial + tail,
        truncation: l_max,
        tail_ratio: ratio,
        truncated,
        c_value,
    }
}
