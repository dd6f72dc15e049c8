use crate::error::{check_dim, Error, Result};
use crate::point::Sample;
use crate::scalar::Real;

/// Finite-state Markov chain whose states carry data payloads. States are
/// indexed from 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain<F> {
    n: usize,
    /// Row-major `n × n` row-stochastic matrix.
    transition: Vec<F>,
    payloads: Vec<Sample<F>>,
    initial: usize,
}

const STOCHASTIC_TOL: f64 = 1e-12;

impl<F: Real> MarkovChain<F> {
    pub fn new(transition: Vec<Vec<F>>, payloads: Vec<Sample<F>>, initial: usize) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::Validation("chain needs at least one state".into()));
        }
        check_dim(n, payloads.len())?;
        if initial >= n {
            return Err(Error::Validation(format!(
                "initial state {initial} out of range 0..{n}"
            )));
        }
        let dim = payloads[0].dim();
        for p in &payloads {
            check_dim(dim, p.dim())?;
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in transition.iter().enumerate() {
            check_dim(n, row.len())?;
            if row.iter().any(|&p| !(p >= F::zero() && p <= F::one())) {
                return Err(Error::Validation(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: F = row.iter().copied().sum();
            if (sum - F::one()).abs() > F::lit(STOCHASTIC_TOL) {
                return Err(Error::Validation(format!("row {i} sums to {sum}, not 1")));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            n,
            transition: flat,
            payloads,
            initial,
        })
    }

    /// Like [`MarkovChain::new`] but also requires column sums of 1.
    pub fn doubly_stochastic(
        transition: Vec<Vec<F>>,
        payloads: Vec<Sample<F>>,
        initial: usize,
    ) -> Result<Self> {
        let chain = Self::new(transition, payloads, initial)?;
        for j in 0..chain.n {
            let col: F = (0..chain.n).map(|i| chain.prob(i, j)).sum();
            if (col - F::one()).abs() > F::lit(STOCHASTIC_TOL) {
                return Err(Error::Validation(format!(
                    "column {j} sums to {col}, not 1"
                )));
            }
        }
        Ok(chain)
    }

    /// An i.i.d. source: every row equals `weights`.
    pub fn iid(weights: Vec<F>, payloads: Vec<Sample<F>>) -> Result<Self> {
        let rows = vec![weights; payloads.len()];
        Self::new(rows, payloads, 0)
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn prob(&self, from: usize, to: usize) -> F {
        self.transition[from * self.n + to]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.transition[i * self.n..(i + 1) * self.n]
    }

    pub fn payload(&self, state: usize) -> &Sample<F> {
        &self.payloads[state]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn dim(&self) -> usize {
        self.payloads[0].dim()
    }

    /// `π P` for a row vector `π`.
    pub fn left_multiply(&self, pi: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.n];
        for (i, &p) in pi.iter().enumerate() {
            if p == F::zero() {
                continue;
            }
            for (o, &t) in out.iter_mut().zip(self.row(i)) {
                *o = *o + p * t;
            }
        }
        out
    }

    /// Next state by inverse-CDF lookup with a uniform draw `u ∈ [0, 1)`.
    pub fn next_state(&self, state: usize, u: F) -> Result<usize> {
        if state >= self.n {
            return Err(Error::Validation(format!(
                "state {state} out of range 0..{}",
                self.n
            )));
        }
        let row = self.row(state);
        let mut acc = F::zero();
        for (j, &p) in row.iter().enumerate() {
            acc = acc + p;
            if u < acc {
                return Ok(j);
            }
        }
        // Rounding left u above the accumulated mass: take the last reachable state.
        Ok(row.iter().rposition(|&p| p > F::zero()).unwrap_or(state))
    }

    /// Boolean reachability in the transition graph (including `i → i`).
    pub(crate) fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.n;
        let mut reach = vec![vec![false; n]; n];
        for (start, r) in reach.iter_mut().enumerate() {
            let mut stack = vec![start];
            r[start] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if self.prob(i, j) > F::zero() && !r[j] {
                        r[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        reach
    }

    /// `true` when the chain has exactly one closed communicating class, i.e.
    /// a unique stationary distribution.
    pub fn has_unique_stationary(&self) -> bool {
        let reach = self.reachability();
        let recurrent: Vec<usize> = (0..self.n)
            .filter(|&i| (0..self.n).all(|j| !reach[i][j] || reach[j][i]))
            .collect();
        recurrent
            .iter()
            .all(|&i| recurrent.iter().all(|&j| reach[i][j]))
    }
}

/// Samples the next state from row `state` using the uniform draw `u` and
/// returns it together with its payload.
pub fn markov_step<F: Real>(
    spec: &MarkovChain<F>,
    state: usize,
    u: F,
) -> Result<(usize, Sample<F>)> {
    let next = spec.next_state(state, u)?;
    Ok((next, spec.payload(next).clone()))
}
