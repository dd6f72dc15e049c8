use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::point::{Point, Sample};
use crate::processes::ar::ArProcess;
use crate::processes::markov::MarkovChain;
use crate::processes::rng::{rng_from_seed, split_rng, SeedRng};
use crate::scalar::Real;

/// A dependent data source.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessSpec<F> {
    Ar(ArProcess<F>),
    Markov(MarkovChain<F>),
}

/// Position of a trajectory: current features for the AR process, current
/// state for a chain.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessState<F> {
    Ar(Point<F>),
    Markov(usize),
}

impl<F: Real> ProcessSpec<F> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ar(p) => p.dim(),
            Self::Markov(c) => c.dim(),
        }
    }

    pub fn initial_state(&self) -> ProcessState<F> {
        match self {
            Self::Ar(p) => ProcessState::Ar(p.initial().clone()),
            Self::Markov(c) => ProcessState::Markov(c.initial()),
        }
    }

    /// Advances `state` by one step and returns the new observation.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        state: &mut ProcessState<F>,
        index: u64,
        rng: &mut R,
    ) -> Result<Sample<F>> {
        match (self, state) {
            (Self::Ar(p), ProcessState::Ar(prev)) => {
                let (w, e) = p.draw_noise(rng);
                let s = p.step_with(prev, w, e, index)?;
                *prev = s.features.clone();
                Ok(s)
            }
            (Self::Markov(c), ProcessState::Markov(cur)) => {
                let u = F::lit(rng.random::<f64>());
                let next = c.next_state(*cur, u)?;
                *cur = next;
                let mut s = c.payload(next).clone();
                s.index = index;
                Ok(s)
            }
            _ => Err(Error::Validation(
                "process state does not match process kind".into(),
            )),
        }
    }

    /// A trajectory `ξ_1, ξ_2, …` from the initial state.
    pub fn trajectory(&self, rng: SeedRng) -> Trajectory<'_, F> {
        Trajectory {
            process: self,
            state: self.initial_state(),
            rng,
            t: 0,
        }
    }
}

/// Iterator over one trajectory. Holds mutable RNG state; not shareable.
pub struct Trajectory<'a, F> {
    process: &'a ProcessSpec<F>,
    state: ProcessState<F>,
    rng: SeedRng,
    t: u64,
}

impl<F: Real> Trajectory<'_, F> {
    pub fn state(&self) -> &ProcessState<F> {
        &self.state
    }

    /// Advances `n` steps without returning the observations.
    pub fn burn_in(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.next_sample()?;
        }
        Ok(())
    }

    pub fn next_sample(&mut self) -> Result<Sample<F>> {
        self.t += 1;
        self.process.advance(&mut self.state, self.t, &mut self.rng)
    }
}

impl<F: Real> Iterator for Trajectory<'_, F> {
    type Item = Result<Sample<F>>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_sample())
    }
}

/// How training samples are taken from the process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplingStrategy {
    /// Every element of a single trajectory.
    Sp,
    /// Every `m`-th element of a single trajectory (`m ≥ 2`).
    SpEvery(usize),
    /// The `s`-th element of `K` independent trajectories (`s ≥ 1`).
    MultipleReplication(usize),
}

impl SamplingStrategy {
    pub fn validate(self) -> Result<Self> {
        match self {
            Self::SpEvery(m) if m < 2 => {
                Err(Error::Validation(format!("SP-m needs m >= 2, got {m}")))
            }
            Self::MultipleReplication(0) => Err(Error::Validation("MR-s needs s >= 1".into())),
            s => Ok(s),
        }
    }

    /// Raw process draws consumed to produce the first `k` training samples.
    pub fn draws_through(self, k: usize) -> usize {
        if k == 0 {
            return 0;
        }
        match self {
            Self::Sp => k,
            Self::SpEvery(m) => 1 + (k - 1) * m,
            Self::MultipleReplication(s) => k * s,
        }
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sp => write!(f, "SP"),
            Self::SpEvery(m) => write!(f, "SP-{m}"),
            Self::MultipleReplication(s) => write!(f, "MR-{s}"),
        }
    }
}

/// Parses `SP`, `SP-<m>`, `MR-<s>` (case-insensitive).
impl FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let parse = |n: &str| {
            n.parse::<usize>()
                .map_err(|_| Error::Validation(format!("bad sampling strategy `{s}`")))
        };
        let strategy = if up == "SP" {
            Self::Sp
        } else if let Some(m) = up.strip_prefix("SP-") {
            Self::SpEvery(parse(m)?)
        } else if let Some(n) = up.strip_prefix("MR-") {
            Self::MultipleReplication(parse(n)?)
        } else {
            return Err(Error::Validation(format!("bad sampling strategy `{s}`")));
        };
        strategy.validate()
    }
}

/// Training samples together with their draw accounting.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet<F> {
    pub strategy: SamplingStrategy,
    pub samples: Vec<Sample<F>>,
    pub raw_draws: usize,
}

impl<F> TrainingSet<F> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn draws_through(&self, k: usize) -> usize {
        self.strategy.draws_through(k)
    }
}

/// Draws `k` training samples with the given strategy.
///
/// SP and SP-m read one trajectory seeded by `seed`; MR-s runs trajectory
/// `j` with the child stream `split(seed, j)`, all from the initial state.
pub fn draw_training_set<F: Real>(
    process: &ProcessSpec<F>,
    strategy: SamplingStrategy,
    k: usize,
    seed: u64,
) -> Result<TrainingSet<F>> {
    strategy.validate()?;
    if k == 0 {
        return Err(Error::Validation("training set size must be >= 1".into()));
    }
    let mut samples = Vec::with_capacity(k);
    match strategy {
        SamplingStrategy::Sp | SamplingStrategy::SpEvery(_) => {
            let stride = match strategy {
                SamplingStrategy::SpEvery(m) => m,
                _ => 1,
            };
            let mut traj = process.trajectory(rng_from_seed(seed));
            for i in 0..k {
                let s = traj.next_sample()?;
                samples.push(s);
                if i + 1 < k {
                    traj.burn_in(stride - 1)?;
                }
            }
        }
        SamplingStrategy::MultipleReplication(s) => {
            for j in 0..k {
                let mut traj = process.trajectory(split_rng(seed, j as u64));
                traj.burn_in(s - 1)?;
                samples.push(traj.next_sample()?);
            }
        }
    }
    Ok(TrainingSet {
        strategy,
        samples,
        raw_draws: strategy.draws_through(k),
    })
}
