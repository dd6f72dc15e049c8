//! The sampling-strategy comparison on the autoregressive lasso.
//!
//! Seeds: replication `i` uses `s_i = split(seed, i)`. Within a replication
//! stream 0 draws the AR parameters, stream 1 the evaluation pool, stream 2
//! the training trajectories (shared by all strategies) and stream 3 the
//! coverage test pool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use skm_core::engine::{
    self, Evaluator, RunConfig, RunRecord, RunStatus, StepSchedule, CSV_HEADER,
};
use skm_core::operators::{build_algorithm, FunctionSpec, OperatorSpec};
use skm_core::processes::{
    draw_training_set, rng_from_seed, split_seed, ArProcess, ProcessSpec, SamplingStrategy,
};
use skm_core::reference::{
    solve_reference, ReferenceError, ReferenceKind, ReferenceSolution, SolverOptions,
};
use skm_core::{CompositeObjective, Point64, Sample64};

use crate::config::ExperimentConfig;
use crate::{charts, HarnessError};

pub const SUMMARY_HEADER: &str = "strategy,rep,final_regret,final_fpr,final_dist,samples,raw_draws";
pub const CURVES_HEADER: &str = "strategy,k,regret,fpr,dist,samples";
pub const TIMING_HEADER: &str = "strategy,rep,wall_seconds";

/// Experiment-level stream for the AR parameters; replications use the
/// indices `0..M` of the master seed.
const PROCESS_STREAM: u64 = u64::MAX;
pub(crate) const STREAM_POOL: u64 = 1;
pub(crate) const STREAM_TRAIN: u64 = 2;
pub(crate) const STREAM_TEST: u64 = 3;

/// Shared per-replication state: the data source and the metric oracle.
#[derive(Clone, Debug)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub process: ProcessSpec<f64>,
    pub truth: Point64,
    pub evaluator: Evaluator<f64>,
    pub reference: ReferenceSolution<f64>,
    pub radius: f64,
}

impl Replication {
    pub fn stream(&self, stream: u64) -> u64 {
        split_seed(self.seed, stream)
    }
}

pub fn regularizer(lambda_reg: f64) -> Result<FunctionSpec<f64>, HarnessError> {
    if lambda_reg == 0.0 {
        Ok(FunctionSpec::Zero)
    } else {
        Ok(FunctionSpec::l1(lambda_reg)?)
    }
}

/// The AR parameters, drawn once per experiment: from `process.seed` when
/// set, else from a stream of the master seed that no replication uses.
pub fn draw_process(cfg: &ExperimentConfig) -> Result<ArProcess<f64>, HarnessError> {
    let seed = cfg
        .process_seed
        .unwrap_or_else(|| split_seed(cfg.seed, PROCESS_STREAM));
    Ok(cfg.generator.draw(&mut rng_from_seed(seed))?)
}

/// `n` consecutive samples of one trajectory after `burn_in` steps.
pub fn stationary_pool(
    process: &ProcessSpec<f64>,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<Sample64>, HarnessError> {
    let mut traj = process.trajectory(rng_from_seed(seed));
    traj.burn_in(burn_in)?;
    Ok(traj.take(n).collect::<Result<_, _>>()?)
}

/// Minimizer of `obj`; on hitting the iteration cap the best iterate is used
/// with a warning.
pub fn minimize(obj: &CompositeObjective<f64>) -> Result<ReferenceSolution<f64>, HarnessError> {
    match solve_reference(obj, &SolverOptions::default()) {
        Ok(s) => Ok(s),
        Err(ReferenceError::NotConverged { best }) => {
            log::warn!(
                "reference solver did not reach tolerance; using best iterate (residual {:e})",
                best.residual
            );
            Ok(*best)
        }
        Err(ReferenceError::Invalid(e)) => Err(e.into()),
    }
}

pub fn prepare_replication(
    cfg: &ExperimentConfig,
    rep: usize,
) -> Result<Replication, HarnessError> {
    let seed = split_seed(cfg.seed, rep as u64);
    let ar = draw_process(cfg)?;
    let truth = ar.truth().clone();
    let process = ProcessSpec::Ar(ar);
    let pool = stationary_pool(
        &process,
        cfg.pool_size,
        cfg.stationary_burn_in(),
        split_seed(seed, STREAM_POOL),
    )?;
    let objective = CompositeObjective::from_samples(&pool, regularizer(cfg.lambda_reg)?)?;
    let reference = match cfg.reference_kind {
        ReferenceKind::EmpiricalMinimizer => minimize(&objective)?,
        ReferenceKind::GeneratorTruth => ReferenceSolution::generator_truth(truth.clone()),
    };
    let radius = cfg
        .algorithm
        .radius
        .unwrap_or(cfg.algorithm.radius_factor * truth.norm());
    if !(radius > 0.0) {
        return Err(HarnessError::Config(
            "projection radius is zero; set algorithm.radius".into(),
        ));
    }
    let evaluator = Evaluator::new(objective, reference.x.clone()).with_truth(truth.clone());
    Ok(Replication {
        rep,
        seed,
        process,
        truth,
        evaluator,
        reference,
        radius,
    })
}

pub fn build_operator(cfg: &ExperimentConfig) -> Result<OperatorSpec<f64>, HarnessError> {
    let a = &cfg.algorithm;
    build_algorithm(
        a.name,
        &FunctionSpec::SquaredLoss,
        &regularizer(cfg.lambda_reg)?,
        a.gamma,
        a.lambda,
    )
    .map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn run_config(
    cfg: &ExperimentConfig,
    strategy: SamplingStrategy,
    radius: f64,
) -> Result<RunConfig<f64>, HarnessError> {
    let mut rc = RunConfig::new(cfg.budget);
    rc.schedule = StepSchedule::constant(cfg.algorithm.relaxation)?;
    rc.delta = cfg.algorithm.delta;
    rc.mode = cfg.algorithm.mode;
    rc.radius = Some(radius);
    rc.accounting = Some(strategy);
    Ok(rc)
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub strategy: SamplingStrategy,
    pub rep: usize,
    pub record: RunRecord<f64>,
    /// Raw process draws made to build the training set.
    pub training_draws: usize,
    pub wall: Duration,
}

impl RunOutcome {
    pub fn file_stem(&self) -> String {
        format!("{}_rep{:03}", self.strategy, self.rep)
    }

    /// Raw draws consumed through the last recorded iteration.
    pub fn raw_draws(&self) -> usize {
        self.record.last_row().map_or(0, |r| r.samples)
    }

    pub fn summary_line(&self) -> String {
        let nan = f64::NAN;
        let (regret, fpr, dist) = self
            .record
            .last_row()
            .map_or((nan, nan, nan), |r| (r.regret, r.fpr, r.dist));
        format!(
            "{},{},{},{},{},{},{}",
            self.strategy,
            self.rep,
            regret,
            fpr,
            dist,
            self.record.rows.len(),
            self.raw_draws()
        )
    }
}

/// Runs one strategy on one replication.
pub fn run_strategy(
    cfg: &ExperimentConfig,
    op: &OperatorSpec<f64>,
    rep: &Replication,
    strategy: SamplingStrategy,
) -> Result<RunOutcome, HarnessError> {
    let start = Instant::now();
    let dim = rep.truth.dim();
    let failed = |message: String| RunRecord {
        rows: vec![],
        status: RunStatus::Failed { k: 0, message },
        x: Point64::zeros(dim),
        x_bar: Point64::zeros(dim),
        residuals: None,
        diagnostics: Default::default(),
        radius: Some(rep.radius),
    };
    let (record, training_draws) =
        match draw_training_set(&rep.process, strategy, cfg.budget, rep.stream(STREAM_TRAIN)) {
            Ok(training) => {
                if training.raw_draws != strategy.draws_through(cfg.budget) {
                    return Err(HarnessError::Runtime(format!(
                        "{strategy}: drew {} raw samples, expected {}",
                        training.raw_draws,
                        strategy.draws_through(cfg.budget)
                    )));
                }
                let rc = run_config(cfg, strategy, rep.radius)?;
                let record = engine::run(
                    op,
                    &training.samples,
                    Point64::zeros(dim),
                    &rc,
                    Some(&rep.evaluator),
                )?;
                (record, training.raw_draws)
            }
            Err(e) => (failed(e.to_string()), 0),
        };
    if let RunStatus::Failed { k, message } = &record.status {
        log::warn!("{strategy} rep {}: run failed at k={k}: {message}", rep.rep);
    }
    for row in &record.rows {
        if row.samples != strategy.draws_through(row.k) {
            return Err(HarnessError::Runtime(format!(
                "{strategy}: draw count {} at k={} does not match {}",
                row.samples,
                row.k,
                strategy.draws_through(row.k)
            )));
        }
    }
    Ok(RunOutcome {
        strategy,
        rep: rep.rep,
        record,
        training_draws,
        wall: start.elapsed(),
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub strategies: Vec<SamplingStrategy>,
    pub replications: Vec<Replication>,
    /// Ordered by strategy (config order), then replication.
    pub runs: Vec<RunOutcome>,
}

impl ExperimentResult {
    pub fn run(&self, strategy: SamplingStrategy, rep: usize) -> Option<&RunOutcome> {
        self.runs
            .iter()
            .find(|r| r.strategy == strategy && r.rep == rep)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.runs {
            out.push_str(&r.summary_line());
            out.push('\n');
        }
        out
    }

    /// Per-iteration means over replications, one block per strategy.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from(CURVES_HEADER);
        out.push('\n');
        for &s in &self.strategies {
            let runs: Vec<_> = self.runs.iter().filter(|r| r.strategy == s).collect();
            let horizon = runs.iter().map(|r| r.record.rows.len()).max().unwrap_or(0);
            for i in 0..horizon {
                let rows: Vec<_> = runs.iter().filter_map(|r| r.record.rows.get(i)).collect();
                let n = rows.len() as f64;
                let mean = |f: fn(&skm_core::engine::MetricRow<f64>) -> f64| {
                    rows.iter().map(|r| f(r)).sum::<f64>() / n
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s,
                    i + 1,
                    mean(|r| r.regret),
                    mean(|r| r.fpr),
                    mean(|r| r.dist),
                    s.draws_through(i + 1)
                );
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from(TIMING_HEADER);
        out.push('\n');
        for r in &self.runs {
            let _ = writeln!(out, "{},{},{:.6}", r.strategy, r.rep, r.wall.as_secs_f64());
        }
        out
    }
}

/// Runs every strategy on every replication. Replications run in parallel;
/// results are assembled in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let op = build_operator(cfg)?;
    let replications: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| prepare_replication(cfg, i))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(SamplingStrategy, &Replication)> = cfg
        .strategies
        .iter()
        .flat_map(|&s| replications.iter().map(move |r| (s, r)))
        .collect();
    let runs = jobs
        .into_par_iter()
        .map(|(s, r)| run_strategy(cfg, &op, r, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult {
        strategies: cfg.strategies.clone(),
        replications,
        runs,
    })
}

/// Writes per-run CSVs with `.status` sidecars, `summary.csv`, `curves.csv`,
/// `timing.csv` and the three charts. Returns the paths written.
pub fn write_experiment(
    result: &ExperimentResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let runs_dir = dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    let mut written = Vec::new();
    for r in &result.runs {
        let csv = runs_dir.join(format!("{}.csv", r.file_stem()));
        std::fs::write(&csv, r.record.to_csv())?;
        let status = runs_dir.join(format!("{}.status", r.file_stem()));
        std::fs::write(&status, format!("{}\n", r.record.status_line()))?;
        written.push(csv);
        written.push(status);
    }
    for (name, body) in [
        ("summary.csv", result.summary_csv()),
        ("curves.csv", result.curves_csv()),
        ("timing.csv", result.timing_csv()),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    written.extend(charts::emit_charts(&result.curves_csv(), dir)?);
    Ok(written)
}

/// Raw draws after which the regret curve first reaches `target`.
pub fn draws_to_regret(record: &RunRecord<f64>, target: f64) -> Option<usize> {
    record
        .rows
        .iter()
        .find(|r| r.regret <= target)
        .map(|r| r.samples)
}

/// Samples each run needs to first reach the regret that both eventually
/// attain, the larger of the two final regrets.
pub fn samples_to_equal_regret(a: &RunRecord<f64>, b: &RunRecord<f64>) -> Option<(usize, usize)> {
    let target = a.last_row()?.regret.max(b.last_row()?.regret);
    Some((draws_to_regret(a, target)?, draws_to_regret(b, target)?))
}

/// Reads the rows of a per-run CSV written by [`write_experiment`].
pub fn read_run_csv(text: &str) -> Result<Vec<[f64; 5]>, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(HarnessError::Runtime("unexpected run CSV header".into()));
    }
    lines
        .map(|l| {
            let mut out = [0.0; 5];
            let mut parts = l.split(',');
            for v in out.iter_mut() {
                *v = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| {
                    HarnessError::Runtime(format!("malformed run CSV line `{l}`"))
                })?;
            }
            Ok(out)
        })
        .collect()
}
