//! Experiment configuration.
//!
//! Configuration files are TOML, read as a flat map of dotted keys; nested
//! tables and dotted keys are interchangeable (`[process.ar] dim = 100` is the
//! same as `process.ar.dim = 100`). Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use skm_core::engine::AnchorMode;
use skm_core::operators::Algorithm;
use skm_core::processes::{ArGenerator, SamplingStrategy};
use skm_core::reference::ReferenceKind;

use crate::HarnessError;

/// Every accepted key with its meaning, as shown by `skm --help`.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed (integer, default 0)"),
    ("output", "output directory (default `out`)"),
    ("problem.lambda_reg", "lasso weight λ_reg (required)"),
    ("process.seed", "seed for the AR parameters (default: derived from seed; one draw per experiment)"),
    ("process.ar.dim", "dimension d (default 1000)"),
    ("process.ar.sparsity", "non-zeros s₀ of x_true (default 50)"),
    ("process.ar.subdiag_min", "lower end of the A_{i,i-1} range (default 0.8)"),
    ("process.ar.subdiag_max", "upper end of the A_{i,i-1} range (default 0.99)"),
    ("process.ar.truth_min", "lower end of the x_true entry range (default -1)"),
    ("process.ar.truth_max", "upper end of the x_true entry range (default 1)"),
    ("process.ar.w_scale", "standard deviation of W_k (default 1)"),
    ("process.ar.e_scale", "standard deviation of the Laplace noise E_k (default 1)"),
    ("algorithm.name", "SGD | PPA | PGD | DRS | rPRS (default PGD)"),
    ("algorithm.gamma", "step size γ (default 0.05)"),
    ("algorithm.lambda", "rPRS relaxation inside the operator (default 0.5)"),
    ("algorithm.relaxation", "S-KM weight λ_k, constant (default 0.5)"),
    ("algorithm.mode", "raw | averaged-anchor (default raw)"),
    ("algorithm.delta", "stopping threshold δ on the FPR (default 1e-10)"),
    ("algorithm.radius", "projection radius r (default radius_factor·‖x_true‖)"),
    ("algorithm.radius_factor", "multiplier for the default radius (default 10)"),
    ("experiment.strategies", "list such as [\"SP\", \"SP-2\", \"MR-4\"] (default: SP, SP-2, SP-3, MR-4, MR-6, MR-8, MR-10)"),
    ("experiment.budget", "samples per run K (default 1000)"),
    ("experiment.replications", "replications M (default 10)"),
    ("reference.kind", "empirical-minimizer | generator-truth, the regret reference (default empirical-minimizer)"),
    ("reference.pool_size", "held-out stationary samples defining the evaluation loss (default 5000)"),
    ("reference.burn_in", "burn-in steps before any stationary pool (default 500, raised to d)"),
    ("bounds.c_value", "concentration constant C (default 1)"),
    ("bounds.beta", "confidence level β (default 0.1)"),
    ("bounds.phi1", "φ(1) (default 0)"),
    ("bounds.tau", "lag τ of the deviation bound (default 0)"),
    ("bounds.phi_tau1", "φ(τ+1) (default 0)"),
    ("bounds.tail_sum", "Σφ(k), echoed in reports"),
    ("bounds.r_expect", "R_{K-1} (default: measured contraction sum)"),
    ("bounds.kappa_sum", "κ sum (default: measured sum of successive-iterate distances)"),
    ("bounds.noise_sum", "Σ E‖λ_k ε_k‖ (default: Λ_K Δ)"),
    ("bounds.loss_cap", "loss bound L (default: max loss over the evaluation pool)"),
    ("bounds.j_hat", "empirical optimum Ĵ (default: SAA optimum of the training set)"),
    ("bounds.beta_lip", "inverse Lipschitz constant β of ∇f (default: from the evaluation pool)"),
    ("coverage.replications", "replications of the coverage study (default 200)"),
    ("coverage.test_pool", "test samples per replication (default 20000)"),
    ("simulate.length", "samples emitted by `simulate` (default: experiment.budget)"),
];

/// Parsed configuration value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<String>),
}

/// Flat dotted-key view of a TOML document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, Value>,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries)?;
        for key in entries.keys() {
            if !KEYS.iter().any(|(k, _)| k == key) {
                return Err(config_err(format!("unknown key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn float(&self, key: &str) -> Result<Option<f64>, HarnessError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Int(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(config_err(format!(
                "`{key}` must be a number, got {other:?}"
            ))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, HarnessError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Int(v)) if *v >= 0 => Ok(Some(*v as u64)),
            Some(other) => Err(config_err(format!(
                "`{key}` must be a non-negative integer, got {other:?}"
            ))),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, HarnessError> {
        Ok(self.uint(key)?.map(|v| v as usize))
    }

    fn string(&self, key: &str) -> Result<Option<&str>, HarnessError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s)),
            Some(other) => Err(config_err(format!(
                "`{key}` must be a string, got {other:?}"
            ))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<&[String]>, HarnessError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::List(v)) => Ok(Some(v)),
            Some(Value::Str(s)) => Err(config_err(format!(
                "`{key}` must be a list of strings, got \"{s}\""
            ))),
            Some(other) => Err(config_err(format!("`{key}` must be a list, got {other:?}"))),
        }
    }
}

fn flatten(
    prefix: &str,
    table: &toml::Table,
    out: &mut BTreeMap<String, Value>,
) -> Result<(), HarnessError> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        let value = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::Integer(i) => Value::Int(*i),
            toml::Value::Float(f) => Value::Float(*f),
            toml::Value::String(s) => Value::Str(s.clone()),
            toml::Value::Array(items) => Value::List(
                items
                    .iter()
                    .map(|i| match i {
                        toml::Value::String(s) => Ok(s.clone()),
                        other => Err(config_err(format!(
                            "`{key}` entries must be strings, got {other}"
                        ))),
                    })
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(config_err(format!("`{key}` has unsupported type: {other}"))),
        };
        out.insert(key, value);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
    pub gamma: f64,
    pub lambda: f64,
    pub relaxation: f64,
    pub mode: AnchorMode,
    pub delta: f64,
    pub radius: Option<f64>,
    pub radius_factor: f64,
}

/// User-supplied bound inputs; measured or derived values fill the gaps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundOverrides {
    pub phi1: Option<f64>,
    pub tau: Option<usize>,
    pub phi_tau1: Option<f64>,
    pub tail_sum: Option<f64>,
    pub r_expect: Option<f64>,
    pub kappa_sum: Option<f64>,
    pub noise_sum: Option<f64>,
    pub loss_cap: Option<f64>,
    pub j_hat: Option<f64>,
    pub beta_lip: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub lambda_reg: f64,
    pub generator: ArGenerator,
    pub process_seed: Option<u64>,
    pub algorithm: AlgorithmConfig,
    pub strategies: Vec<SamplingStrategy>,
    pub budget: usize,
    pub replications: usize,
    pub reference_kind: ReferenceKind,
    pub pool_size: usize,
    pub burn_in: usize,
    pub c_value: f64,
    pub beta: f64,
    pub bounds: BoundOverrides,
    pub coverage_replications: usize,
    pub coverage_test_pool: usize,
    pub simulate_length: Option<usize>,
}

pub fn default_strategies() -> Vec<SamplingStrategy> {
    use SamplingStrategy::*;
    vec![
        Sp,
        SpEvery(2),
        SpEvery(3),
        MultipleReplication(4),
        MultipleReplication(6),
        MultipleReplication(8),
        MultipleReplication(10),
    ]
}

pub fn parse_strategies(names: &[String]) -> Result<Vec<SamplingStrategy>, HarnessError> {
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let s: SamplingStrategy = n.parse().map_err(|e| config_err(format!("{e}")))?;
        if out.contains(&s) {
            return Err(config_err(format!("strategy `{s}` listed twice")));
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(config_err("at least one strategy is required"));
    }
    Ok(out)
}

fn positive(key: &str, v: f64) -> Result<f64, HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("`{key}` must be > 0, got {v}")))
    }
}

fn nonneg(key: &str, v: f64) -> Result<f64, HarnessError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("`{key}` must be >= 0, got {v}")))
    }
}

fn in_unit(key: &str, v: f64) -> Result<f64, HarnessError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(config_err(format!("`{key}` must lie in (0, 1), got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize, HarnessError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(config_err(format!("`{key}` must be >= 1")))
    }
}

impl ExperimentConfig {
    pub fn from_flat(flat: &FlatConfig) -> Result<Self, HarnessError> {
        let lambda_reg = flat
            .float("problem.lambda_reg")?
            .ok_or_else(|| config_err("`problem.lambda_reg` is required"))?;
        let lambda_reg = nonneg("problem.lambda_reg", lambda_reg)?;

        let defaults = ArGenerator::default();
        let generator = ArGenerator {
            dim: flat.usize("process.ar.dim")?.unwrap_or(defaults.dim),
            sparsity: flat
                .usize("process.ar.sparsity")?
                .unwrap_or(defaults.sparsity),
            subdiag_range: (
                flat.float("process.ar.subdiag_min")?
                    .unwrap_or(defaults.subdiag_range.0),
                flat.float("process.ar.subdiag_max")?
                    .unwrap_or(defaults.subdiag_range.1),
            ),
            truth_range: (
                flat.float("process.ar.truth_min")?
                    .unwrap_or(defaults.truth_range.0),
                flat.float("process.ar.truth_max")?
                    .unwrap_or(defaults.truth_range.1),
            ),
            w_scale: nonneg(
                "process.ar.w_scale",
                flat.float("process.ar.w_scale")?
                    .unwrap_or(defaults.w_scale),
            )?,
            e_scale: nonneg(
                "process.ar.e_scale",
                flat.float("process.ar.e_scale")?
                    .unwrap_or(defaults.e_scale),
            )?,
        };
        if generator.dim == 0 || generator.sparsity > generator.dim {
            return Err(config_err(format!(
                "need 0 < process.ar.dim and sparsity <= dim, got {} and {}",
                generator.dim, generator.sparsity
            )));
        }
        let (lo, hi) = generator.subdiag_range;
        if !(lo <= hi) || !(lo.is_finite() && hi.is_finite()) {
            return Err(config_err(format!("bad subdiagonal range [{lo}, {hi}]")));
        }
        let (lo, hi) = generator.truth_range;
        if !(lo <= hi) || !(lo.is_finite() && hi.is_finite()) || (lo == 0.0 && hi == 0.0) {
            return Err(config_err(format!("bad truth range [{lo}, {hi}]")));
        }

        let name = match flat.string("algorithm.name")? {
            Some(s) => s.parse().map_err(|e| config_err(format!("{e}")))?,
            None => Algorithm::Pgd,
        };
        let mode = match flat.string("algorithm.mode")? {
            Some(s) => s.parse().map_err(|e| config_err(format!("{e}")))?,
            None => AnchorMode::Raw,
        };
        let lambda = flat.float("algorithm.lambda")?.unwrap_or(0.5);
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(config_err(format!(
                "`algorithm.lambda` must lie in (0, 1], got {lambda}"
            )));
        }
        let algorithm = AlgorithmConfig {
            name,
            gamma: positive(
                "algorithm.gamma",
                flat.float("algorithm.gamma")?.unwrap_or(0.05),
            )?,
            lambda,
            relaxation: in_unit(
                "algorithm.relaxation",
                flat.float("algorithm.relaxation")?.unwrap_or(0.5),
            )?,
            mode,
            delta: positive(
                "algorithm.delta",
                flat.float("algorithm.delta")?.unwrap_or(1e-10),
            )?,
            radius: flat
                .float("algorithm.radius")?
                .map(|r| positive("algorithm.radius", r))
                .transpose()?,
            radius_factor: positive(
                "algorithm.radius_factor",
                flat.float("algorithm.radius_factor")?.unwrap_or(10.0),
            )?,
        };

        let strategies = match flat.list("experiment.strategies")? {
            Some(names) => parse_strategies(names)?,
            None => default_strategies(),
        };
        let reference_kind = match flat.string("reference.kind")? {
            Some(s) => s.parse().map_err(|e| config_err(format!("{e}")))?,
            None => ReferenceKind::EmpiricalMinimizer,
        };

        let opt_phi = |key: &str| -> Result<Option<f64>, HarnessError> {
            match flat.float(key)? {
                Some(v) if (0.0..=2.0).contains(&v) => Ok(Some(v)),
                Some(v) => Err(config_err(format!("`{key}` must lie in [0, 2], got {v}"))),
                None => Ok(None),
            }
        };
        let opt_nonneg = |key: &str| -> Result<Option<f64>, HarnessError> {
            flat.float(key)?.map(|v| nonneg(key, v)).transpose()
        };
        let bounds = BoundOverrides {
            phi1: opt_phi("bounds.phi1")?,
            tau: flat.usize("bounds.tau")?,
            phi_tau1: opt_phi("bounds.phi_tau1")?,
            tail_sum: opt_nonneg("bounds.tail_sum")?,
            r_expect: opt_nonneg("bounds.r_expect")?,
            kappa_sum: opt_nonneg("bounds.kappa_sum")?,
            noise_sum: opt_nonneg("bounds.noise_sum")?,
            loss_cap: flat
                .float("bounds.loss_cap")?
                .map(|v| positive("bounds.loss_cap", v))
                .transpose()?,
            j_hat: flat.float("bounds.j_hat")?,
            beta_lip: flat
                .float("bounds.beta_lip")?
                .map(|v| positive("bounds.beta_lip", v))
                .transpose()?,
        };

        Ok(Self {
            seed: flat.uint("seed")?.unwrap_or(0),
            output: PathBuf::from(flat.string("output")?.unwrap_or("out")),
            lambda_reg,
            generator,
            process_seed: flat.uint("process.seed")?,
            algorithm,
            strategies,
            budget: at_least_one(
                "experiment.budget",
                flat.usize("experiment.budget")?.unwrap_or(1000),
            )?,
            replications: at_least_one(
                "experiment.replications",
                flat.usize("experiment.replications")?.unwrap_or(10),
            )?,
            reference_kind,
            pool_size: at_least_one(
                "reference.pool_size",
                flat.usize("reference.pool_size")?.unwrap_or(5000),
            )?,
            burn_in: flat.usize("reference.burn_in")?.unwrap_or(500),
            c_value: positive(
                "bounds.c_value",
                flat.float("bounds.c_value")?.unwrap_or(1.0),
            )?,
            beta: in_unit("bounds.beta", flat.float("bounds.beta")?.unwrap_or(0.1))?,
            bounds,
            coverage_replications: at_least_one(
                "coverage.replications",
                flat.usize("coverage.replications")?.unwrap_or(200),
            )?,
            coverage_test_pool: at_least_one(
                "coverage.test_pool",
                flat.usize("coverage.test_pool")?.unwrap_or(20_000),
            )?,
            simulate_length: flat
                .usize("simulate.length")?
                .map(|v| at_least_one("simulate.length", v))
                .transpose()?,
        })
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Self::from_flat(&FlatConfig::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_flat(&FlatConfig::load(path)?)
    }

    /// Burn-in before stationary pools. The AR matrix is nilpotent, so `d`
    /// steps from the zero state already give the stationary law.
    pub fn stationary_burn_in(&self) -> usize {
        self.burn_in.max(self.generator.dim)
    }
}

/// `--help` text listing every key.
pub fn keys_help() -> String {
    let width = KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Configuration keys (TOML, dotted or nested):\n");
    for (k, d) in KEYS {
        out.push_str(&format!("  {k:<width$}  {d}\n"));
    }
    out
}
