//! Bound reports and trajectory dumps for the `bounds` and `simulate`
//! subcommands.

use std::fmt::Write as _;

use skm_core::bounds::{BoundInputs, BoundReport};
use skm_core::engine::StepSchedule;
use skm_core::operators::Algorithm;
use skm_core::processes::{
    draw_training_set, split_seed, ProcessSpec, SamplingStrategy, TrainingSet,
};
use skm_core::CompositeObjective;

use crate::config::ExperimentConfig;
use crate::experiment::{
    build_operator, draw_process, minimize, prepare_replication, regularizer, run_strategy,
    stationary_pool, Replication, STREAM_TEST, STREAM_TRAIN,
};
use crate::HarnessError;

/// Bound inputs for `strategy` on replication 0, filling unset values from a
/// measured run: the radius in force, the contraction and step sums of the
/// engine, the SAA optimum of the training set and the largest loss over the
/// evaluation pool.
pub fn bound_inputs(
    cfg: &ExperimentConfig,
    strategy: SamplingStrategy,
) -> Result<(BoundInputs<f64>, Replication), HarnessError> {
    let rep = prepare_replication(cfg, 0)?;
    let op = build_operator(cfg)?;
    let outcome = run_strategy(cfg, &op, &rep, strategy)?;
    let diag = &outcome.record.diagnostics;
    let schedule = StepSchedule::constant(cfg.algorithm.relaxation)?;
    let radius = outcome.record.radius.unwrap_or(rep.radius);
    let mut inputs = BoundInputs::new(cfg.budget, cfg.beta, cfg.c_value, radius, &schedule)?;
    let b = &cfg.bounds;

    inputs.tail_sum = b.tail_sum;
    inputs.phi1 = b.phi1.unwrap_or(0.0);
    inputs.tau = b.tau.unwrap_or(0);
    inputs.phi_tau1 = b.phi_tau1.unwrap_or(0.0);
    inputs.gamma = Some(cfg.algorithm.gamma);
    inputs.lambda = match cfg.algorithm.name {
        Algorithm::Rprs => Some(cfg.algorithm.lambda),
        Algorithm::Drs => Some(0.5),
        _ => None,
    };
    inputs.beta_lip = match cfg.algorithm.name {
        Algorithm::Pgd | Algorithm::Sgd => Some(b.beta_lip.unwrap_or_else(|| {
            let l = rep.evaluator.objective.smooth.lipschitz();
            if l > 0.0 {
                1.0 / l
            } else {
                f64::INFINITY
            }
        })),
        _ => None,
    }
    .filter(|v| v.is_finite());
    inputs.r_expect = b.r_expect.or(diag.contraction_sum);
    inputs.kappa_sum = Some(b.kappa_sum.unwrap_or(diag.step_sum));
    inputs.noise_sum = b.noise_sum;

    let training = draw_training_set(&rep.process, strategy, cfg.budget, rep.stream(STREAM_TRAIN))?;
    let g = regularizer(cfg.lambda_reg)?;
    let saa = CompositeObjective::from_samples(&training.samples, g.clone())?;
    let x_hat = minimize(&saa)?.x;
    inputs.j_hat = Some(match b.j_hat {
        Some(j) => j,
        None => saa.value(&x_hat)?,
    });
    inputs.loss_cap = match b.loss_cap {
        Some(l) => Some(l),
        None => {
            let penalty = g.value(&x_hat, None)?;
            let pool = stationary_pool(
                &rep.process,
                cfg.pool_size,
                cfg.stationary_burn_in(),
                rep.stream(STREAM_TEST),
            )?;
            let max = pool
                .iter()
                .map(|s| s.squared_loss(&x_hat) + penalty)
                .fold(0.0, f64::max);
            (max > 0.0).then_some(max)
        }
    };
    Ok((inputs, rep))
}

pub fn bounds_report(
    cfg: &ExperimentConfig,
    strategy: SamplingStrategy,
) -> Result<BoundReport<f64>, HarnessError> {
    let (inputs, _) = bound_inputs(cfg, strategy)?;
    Ok(BoundReport::evaluate(&inputs)?)
}

/// Training samples as CSV: `index,response,a1,…,ad`.
pub fn trajectory_csv(set: &TrainingSet<f64>) -> String {
    let dim = set.samples.first().map_or(0, |s| s.dim());
    let mut out = String::from("index,response");
    for i in 1..=dim {
        let _ = write!(out, ",a{i}");
    }
    out.push('\n');
    for s in &set.samples {
        let _ = write!(out, "{},{}", s.index, s.response);
        for v in s.features.as_slice() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Draws `length` samples of replication 0 with `strategy`.
pub fn simulate(
    cfg: &ExperimentConfig,
    strategy: SamplingStrategy,
    length: usize,
) -> Result<TrainingSet<f64>, HarnessError> {
    let seed = split_seed(cfg.seed, 0);
    let process = ProcessSpec::Ar(draw_process(cfg)?);
    Ok(draw_training_set(
        &process,
        strategy,
        length,
        split_seed(seed, STREAM_TRAIN),
    )?)
}
