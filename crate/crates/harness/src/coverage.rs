//! Monte-Carlo check of the out-of-sample guarantee.
//!
//! Each replication fits the lasso SAA problem on an SP training trajectory,
//! then estimates the expected loss of the fitted point on a fresh stationary
//! test pool. The loss bound `L` is the largest per-sample loss seen in that
//! pool unless configured.

use std::fmt::Write as _;

use rayon::prelude::*;
use skm_core::bounds::out_of_sample_bound;
use skm_core::processes::{draw_training_set, split_seed, ProcessSpec, SamplingStrategy};
use skm_core::CompositeObjective;

use crate::config::ExperimentConfig;
use crate::experiment::{
    draw_process, minimize, regularizer, stationary_pool, STREAM_TEST, STREAM_TRAIN,
};
use crate::HarnessError;

/// Test pools smaller than this give noisy expectations and are flagged.
pub const MIN_TEST_POOL: usize = 1000;

pub const COVERAGE_HEADER: &str = "rep,j_hat,test_mean,loss_cap,bound,violated";

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    pub rep: usize,
    /// SAA optimum on the training set.
    pub j_hat: f64,
    /// Mean test loss of the SAA solution.
    pub test_mean: f64,
    pub loss_cap: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub beta: f64,
    pub c_value: f64,
    pub samples: usize,
    pub test_pool: usize,
    pub small_pool: bool,
}

impl CoverageReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }

    pub fn violation_fraction(&self) -> f64 {
        self.violations() as f64 / self.rows.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(COVERAGE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.rep, r.j_hat, r.test_mean, r.loss_cap, r.bound, r.violated as u8
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "violations={}/{} fraction={:.4} nominal_beta={} expected_count={:.1} C={} K={} test_pool={}{}",
            self.violations(),
            self.rows.len(),
            self.violation_fraction(),
            self.beta,
            self.beta * self.rows.len() as f64,
            self.c_value,
            self.samples,
            self.test_pool,
            if self.small_pool { " warning=small-test-pool" } else { "" }
        )
    }
}

fn coverage_rep(cfg: &ExperimentConfig, rep: usize) -> Result<CoverageRow, HarnessError> {
    let seed = split_seed(cfg.seed, rep as u64);
    let process = ProcessSpec::Ar(draw_process(cfg)?);
    let g = regularizer(cfg.lambda_reg)?;
    let train = draw_training_set(
        &process,
        SamplingStrategy::Sp,
        cfg.budget,
        split_seed(seed, STREAM_TRAIN),
    )?;
    let saa = CompositeObjective::from_samples(&train.samples, g.clone())?;
    let x_hat = minimize(&saa)?.x;
    let j_hat = saa.value(&x_hat)?;

    let penalty = g.value(&x_hat, None)?;
    let pool = stationary_pool(
        &process,
        cfg.coverage_test_pool,
        cfg.stationary_burn_in(),
        split_seed(seed, STREAM_TEST),
    )?;
    let losses: Vec<f64> = pool
        .iter()
        .map(|s| s.squared_loss(&x_hat) + penalty)
        .collect();
    let test_mean = losses.iter().sum::<f64>() / losses.len() as f64;
    let observed_max = losses.iter().copied().fold(0.0, f64::max);
    let loss_cap = cfg.bounds.loss_cap.unwrap_or(observed_max);
    let bound = if loss_cap > 0.0 {
        out_of_sample_bound(j_hat, loss_cap, cfg.budget, cfg.beta, cfg.c_value)?
    } else {
        // Zero loss everywhere: nothing can exceed Ĵ.
        j_hat
    };
    Ok(CoverageRow {
        rep,
        j_hat,
        test_mean,
        loss_cap,
        bound,
        violated: test_mean > bound,
    })
}

/// Runs `cfg.coverage_replications` replications in parallel.
pub fn coverage_study(cfg: &ExperimentConfig) -> Result<CoverageReport, HarnessError> {
    let small_pool = cfg.coverage_test_pool < MIN_TEST_POOL;
    if small_pool {
        log::warn!(
            "test pool of {} samples is below {MIN_TEST_POOL}; the expectation estimate is noisy",
            cfg.coverage_test_pool
        );
    }
    if cfg.coverage_replications < 50 {
        log::warn!("fewer than 50 replications; the violation rate is not meaningful");
    }
    let rows = (0..cfg.coverage_replications)
        .into_par_iter()
        .map(|rep| coverage_rep(cfg, rep))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverageReport {
        rows,
        beta: cfg.beta,
        c_value: cfg.c_value,
        samples: cfg.budget,
        test_pool: cfg.coverage_test_pool,
        small_pool,
    })
}
