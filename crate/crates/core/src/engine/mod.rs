//! The stochastic Krasnosel'skii–Mann loop.
//!
//! Each iteration draws the next training sample `ξ_k`, evaluates the operator
//! at the anchor point and relaxes towards it:
//!
//! `x^k = a + λ_k (T(a; ξ_k) - a)`, with `a = x^{k-1}` ([`AnchorMode::Raw`])
//! or `a = x̄^{k-1}` ([`AnchorMode::AveragedAnchor`]),
//!
//! followed by the running mean `x̄^k = ((k-1)/k) x̄^{k-1} + x^k / k`. The loop
//! stops once `‖T(a; ξ_k) - a‖² ≤ δ` or the sample budget is spent.

mod record;
mod schedule;

pub use record::{MetricRow, RunDiagnostics, RunRecord, RunStatus, CSV_HEADER};
pub use schedule::StepSchedule;

use crate::error::{Error, Result};
use crate::least_squares::CompositeObjective;
use crate::operators::OperatorSpec;
use crate::point::{Point, Sample};
use crate::processes::SamplingStrategy;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AnchorMode {
    /// Relax from the previous raw iterate.
    #[default]
    Raw,
    /// Relax from the previous ergodic average.
    AveragedAnchor,
}

impl std::str::FromStr for AnchorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "raw" => Ok(Self::Raw),
            "averaged-anchor" | "averaged" => Ok(Self::AveragedAnchor),
            other => Err(Error::Validation(format!("unknown anchor mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationState<F> {
    pub k: usize,
    pub x: Point<F>,
    pub x_bar: Point<F>,
    pub last_fpr: F,
    pub samples_consumed: usize,
}

impl<F: Real> IterationState<F> {
    /// State before the first iteration, with `x̄⁰ = x⁰`.
    pub fn new(x0: Point<F>) -> Self {
        Self {
            k: 0,
            x_bar: x0.clone(),
            x: x0,
            last_fpr: F::zero(),
            samples_consumed: 0,
        }
    }

    fn anchor(&self, mode: AnchorMode) -> &Point<F> {
        match mode {
            AnchorMode::Raw => &self.x,
            AnchorMode::AveragedAnchor => &self.x_bar,
        }
    }
}

fn check_lambda<F: Real>(lambda: F) -> Result<()> {
    if lambda > F::zero() && lambda < F::one() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "relaxation weight must lie in (0, 1), got {lambda}"
        )))
    }
}

/// Outcome of evaluating the operator at the anchor.
struct Evaluated<F> {
    residual: Point<F>,
    fpr: F,
}

fn evaluate<F: Real>(
    state: &IterationState<F>,
    op: &OperatorSpec<F>,
    sample: &Sample<F>,
    mode: AnchorMode,
) -> Result<Evaluated<F>> {
    let anchor = state.anchor(mode);
    let residual = op.apply(anchor, sample)?.sub(anchor);
    let fpr = residual.norm_sq();
    Ok(Evaluated { residual, fpr })
}

fn advance<F: Real>(
    state: &IterationState<F>,
    eval: &Evaluated<F>,
    lambda: F,
    mode: AnchorMode,
    radius: Option<F>,
) -> Result<IterationState<F>> {
    let relaxed = state.anchor(mode).axpy(lambda, &eval.residual);
    let x = match radius {
        Some(r) => relaxed.project_ball(r),
        None => relaxed,
    }
    .ensure_finite("iterate")?;
    let k = state.k + 1;
    let w = F::one() / F::from_usize(k).unwrap();
    let x_bar = state.x_bar.lincomb(F::one() - w, &x, w);
    Ok(IterationState {
        k,
        x,
        x_bar,
        last_fpr: eval.fpr,
        samples_consumed: state.samples_consumed + 1,
    })
}

/// One S-KM update with sample `ξ` and weight `λ ∈ (0, 1)`.
pub fn km_step<F: Real>(
    state: &IterationState<F>,
    op: &OperatorSpec<F>,
    sample: &Sample<F>,
    lambda: F,
    mode: AnchorMode,
) -> Result<IterationState<F>> {
    check_lambda(lambda)?;
    let eval = evaluate(state, op, sample, mode)?;
    advance(state, &eval, lambda, mode, None)
}

/// Reference quantities for the per-iteration metrics.
#[derive(Clone, Debug)]
pub struct Evaluator<F> {
    /// Loss whose regret is reported.
    pub objective: CompositeObjective<F>,
    pub x_ref: Point<F>,
    /// Target of the distance metric; `x_ref` when absent.
    pub truth: Option<Point<F>>,
}

impl<F: Real> Evaluator<F> {
    pub fn new(objective: CompositeObjective<F>, x_ref: Point<F>) -> Self {
        Self {
            objective,
            x_ref,
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: Point<F>) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn regret(&self, x: &Point<F>) -> Result<F> {
        self.objective.regret(x, &self.x_ref)
    }

    pub fn distance(&self, x: &Point<F>) -> F {
        x.distance(self.truth.as_ref().unwrap_or(&self.x_ref))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<F> {
    pub schedule: StepSchedule<F>,
    /// δ of the stopping test.
    pub delta: F,
    /// Maximum number of samples (iterations) to consume.
    pub max_iters: usize,
    pub mode: AnchorMode,
    /// Iterates are projected onto the centered ball of this radius.
    pub radius: Option<F>,
    /// Keep every residual vector (needed for [`ergodic_fpr`]).
    pub store_residuals: bool,
    /// Maps iteration counts to raw process draws; `k` draws when absent.
    pub accounting: Option<SamplingStrategy>,
}

impl<F: Real> RunConfig<F> {
    pub fn new(max_iters: usize) -> Self {
        Self {
            schedule: StepSchedule::default(),
            delta: F::lit(1e-10),
            max_iters,
            mode: AnchorMode::Raw,
            radius: None,
            store_residuals: false,
            accounting: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > F::zero()) {
            return Err(Error::Validation(format!(
                "δ must be > 0, got {}",
                self.delta
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("iteration budget must be >= 1".into()));
        }
        if let Some(r) = self.radius {
            if !(r > F::zero()) {
                return Err(Error::Validation(format!(
                    "projection radius must be > 0, got {r}"
                )));
            }
        }
        if let Some(h) = self.schedule.horizon() {
            if h < self.max_iters {
                return Err(Error::Validation(format!(
                    "relaxation sequence covers {h} iterations, budget is {}",
                    self.max_iters
                )));
            }
        }
        Ok(())
    }

    fn draws_through(&self, k: usize) -> usize {
        self.accounting.map_or(k, |s| s.draws_through(k))
    }
}

/// Runs S-KM over `samples` (in order) from `x0`.
///
/// Configuration errors are returned as `Err`; a failure while evaluating the
/// operator ends the run with [`RunStatus::Failed`] and the rows so far.
pub fn run<F: Real>(
    op: &OperatorSpec<F>,
    samples: &[Sample<F>],
    x0: Point<F>,
    config: &RunConfig<F>,
    evaluator: Option<&Evaluator<F>>,
) -> Result<RunRecord<F>> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("sample sequence"));
    }
    if let Some(r) = config.radius {
        if x0.norm() > r {
            log::debug!("projecting x0 onto the feasible ball of radius {r}");
        }
    }
    let x0 = match config.radius {
        Some(r) => x0.project_ball(r),
        None => x0,
    };
    let budget = config.max_iters.min(samples.len());
    let mut state = IterationState::new(x0);
    let mut rows = Vec::with_capacity(budget);
    let mut residuals = config.store_residuals.then(Vec::new);
    let mut diag = RunDiagnostics {
        step_sum: F::zero(),
        step_max: F::zero(),
        contraction_sum: evaluator.map(|_| F::zero()),
        step_warnings: 0,
    };
    let mut status = RunStatus::BudgetExhausted;

    for (i, sample) in samples.iter().take(budget).enumerate() {
        let k = i + 1;
        let lambda = config.schedule.lambda(k)?;
        let step = evaluate(&state, op, sample, config.mode).and_then(|eval| {
            if eval.fpr <= config.delta {
                return Ok(None);
            }
            let next = advance(&state, &eval, lambda, config.mode, config.radius)?;
            Ok(Some((eval, next)))
        });
        let (eval, next) = match step {
            Ok(Some(pair)) => pair,
            Ok(None) => {
                let fpr = evaluate(&state, op, sample, config.mode)?.fpr;
                status = RunStatus::Converged {
                    k,
                    fpr,
                    delta: config.delta,
                };
                break;
            }
            Err(e) => {
                status = RunStatus::Failed {
                    k,
                    message: e.to_string(),
                };
                break;
            }
        };

        if !op.step_condition_holds(sample) {
            diag.step_warnings += 1;
        }
        let step_len = next.x.distance(&state.x);
        diag.step_sum = diag.step_sum + step_len;
        diag.step_max = diag.step_max.max(step_len);
        if let (Some(ev), Some(acc)) = (evaluator, diag.contraction_sum.as_mut()) {
            let relaxed = state.anchor(config.mode).axpy(lambda, &eval.residual);
            match op.apply(&ev.x_ref, sample) {
                Ok(t_ref) => {
                    let relaxed_ref = ev.x_ref.lincomb(F::one() - lambda, &t_ref, lambda);
                    *acc = *acc + relaxed.distance(&relaxed_ref);
                }
                Err(e) => log::debug!("reference operator evaluation failed: {e}"),
            }
        }

        let (regret, dist) = match evaluator {
            Some(ev) => match ev.regret(&next.x_bar) {
                Ok(r) => (r, ev.distance(&next.x_bar)),
                Err(e) => {
                    status = RunStatus::Failed {
                        k,
                        message: e.to_string(),
                    };
                    break;
                }
            },
            None => (F::nan(), F::nan()),
        };
        rows.push(MetricRow {
            k,
            fpr: eval.fpr,
            regret,
            dist,
            samples: config.draws_through(k),
        });
        if let Some(res) = residuals.as_mut() {
            res.push(eval.residual);
        }
        state = next;
    }

    if diag.step_warnings > 0 {
        log::warn!(
            "{} of {} iterations used a step size outside (0, 2β) for their sample",
            diag.step_warnings,
            rows.len()
        );
    }
    Ok(RunRecord {
        rows,
        status,
        x: state.x,
        x_bar: state.x_bar,
        residuals,
        diagnostics: diag,
        radius: config.radius,
    })
}

/// `‖Λ_K⁻¹ Σ λ_k e_k‖` over the stored residual vectors.
pub fn ergodic_fpr<F: Real>(record: &RunRecord<F>, schedule: &StepSchedule<F>) -> Result<F> {
    let residuals = record
        .residuals
        .as_ref()
        .ok_or_else(|| Error::Capability("residual vectors were not stored for this run".into()))?;
    let first = residuals.first().ok_or(Error::Empty("run record"))?;
    let mut acc = Point::zeros(first.dim());
    let mut total = F::zero();
    for (i, e) in residuals.iter().enumerate() {
        let l = schedule.lambda(i + 1)?;
        acc = acc.axpy(l, e);
        total = total + l;
    }
    Ok(acc.norm() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FunctionSpec;

    fn pt(v: &[f64]) -> Point<f64> {
        Point::from_f64(v)
    }

    fn negation() -> OperatorSpec<f64> {
        OperatorSpec::reflect(FunctionSpec::Origin, 1.0).unwrap()
    }

    #[test]
    fn identity_leaves_iterate_unchanged() {
        for mode in [AnchorMode::Raw, AnchorMode::AveragedAnchor] {
            let s = IterationState::new(pt(&[1.0, -2.0]));
            let next = km_step(&s, &OperatorSpec::Identity, &Sample::empty(2), 0.5, mode).unwrap();
            assert_eq!(next.x, s.x);
            assert_eq!(next.last_fpr, 0.0);
            assert_eq!(next.k, 1);
        }
    }

    #[test]
    fn negation_halves_to_zero() {
        let s = IterationState::new(pt(&[4.0]));
        let next = km_step(&s, &negation(), &Sample::empty(1), 0.5, AnchorMode::Raw).unwrap();
        assert_eq!(next.x, pt(&[0.0]));
        assert_eq!(next.last_fpr, 64.0);
    }

    #[test]
    fn fixed_point_anchor_is_stationary() {
        let s = IterationState::new(pt(&[0.0, 0.0]));
        let next = km_step(&s, &negation(), &Sample::empty(2), 0.3, AnchorMode::Raw).unwrap();
        assert_eq!(next.x, s.x);
    }

    #[test]
    fn rejects_bad_lambda() {
        let s = IterationState::new(pt(&[1.0]));
        for l in [0.0, 1.0, -0.2, 1.5] {
            assert!(km_step(&s, &negation(), &Sample::empty(1), l, AnchorMode::Raw).is_err());
        }
    }

    #[test]
    fn modes_agree_on_first_step() {
        let op = OperatorSpec::grad_step(FunctionSpec::SquaredLoss, 0.1).unwrap();
        let sample = Sample::from_f64(&[1.0, 0.5], 2.0);
        let s = IterationState::new(pt(&[0.3, -0.1]));
        let a = km_step(&s, &op, &sample, 0.5, AnchorMode::Raw).unwrap();
        let b = km_step(&s, &op, &sample, 0.5, AnchorMode::AveragedAnchor).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_delta_stops_at_first_evaluation() {
        let samples = vec![Sample::empty(1); 5];
        let mut cfg = RunConfig::new(5);
        cfg.delta = 1e6;
        let rec = run(&negation(), &samples, pt(&[2.0]), &cfg, None).unwrap();
        assert!(rec.rows.is_empty());
        assert!(matches!(rec.status, RunStatus::Converged { k: 1, .. }));
        assert_eq!(rec.x, pt(&[2.0]));
    }

    #[test]
    fn budget_and_accounting() {
        let samples = vec![Sample::empty(1); 10];
        let mut cfg = RunConfig::new(4);
        cfg.schedule = StepSchedule::constant(0.25).unwrap();
        cfg.accounting = Some(SamplingStrategy::SpEvery(3));
        let rec = run(&negation(), &samples, pt(&[2.0]), &cfg, None).unwrap();
        assert_eq!(rec.status, RunStatus::BudgetExhausted);
        let draws: Vec<usize> = rec.rows.iter().map(|r| r.samples).collect();
        assert_eq!(draws, vec![1, 4, 7, 10]);
    }

    #[test]
    fn projection_enforces_radius() {
        // x - γ∇f pushes far outside a small ball.
        let op = OperatorSpec::grad_step(FunctionSpec::SquaredLoss, 0.4).unwrap();
        let samples: Vec<_> = (0..50)
            .map(|i| Sample::from_f64(&[1.0], 100.0 + i as f64))
            .collect();
        let mut cfg = RunConfig::new(50);
        cfg.radius = Some(3.0);
        let rec = run(&op, &samples, pt(&[0.0]), &cfg, None).unwrap();
        assert!(rec.x.norm() <= 3.0 + 1e-12);
        assert!(rec.x_bar.norm() <= 3.0 + 1e-12);
    }

    #[test]
    fn failure_keeps_partial_record() {
        // Huge step on a huge sample overflows.
        let op = OperatorSpec::grad_step(FunctionSpec::SquaredLoss, 1e300).unwrap();
        let samples = vec![
            Sample::from_f64(&[1e10], 1.0),
            Sample::from_f64(&[1e200], 1e200),
        ];
        let rec = run(&op, &samples, pt(&[0.0]), &RunConfig::new(2), None).unwrap();
        assert!(matches!(rec.status, RunStatus::Failed { .. }));
    }

    #[test]
    fn config_validation() {
        let samples = vec![Sample::empty(1)];
        let mut cfg = RunConfig::<f64>::new(1);
        cfg.delta = 0.0;
        assert!(run(&negation(), &samples, pt(&[1.0]), &cfg, None).is_err());
        let cfg = RunConfig::<f64>::new(0);
        assert!(run(&negation(), &samples, pt(&[1.0]), &cfg, None).is_err());
        assert!(run(&negation(), &[], pt(&[1.0]), &RunConfig::new(1), None).is_err());
    }

    #[test]
    fn ergodic_fpr_examples() {
        let schedule = StepSchedule::constant(0.5).unwrap();
        let mut rec = RunRecord {
            rows: vec![],
            status: RunStatus::BudgetExhausted,
            x: pt(&[0.0, 0.0]),
            x_bar: pt(&[0.0, 0.0]),
            residuals: Some(vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]),
            diagnostics: RunDiagnostics::default(),
            radius: None,
        };
        let v = ergodic_fpr(&rec, &schedule).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let seq = StepSchedule::sequence(vec![0.2, 0.7, 0.4]).unwrap();
        rec.residuals = Some(vec![pt(&[3.0, 4.0]); 3]);
        assert!((ergodic_fpr(&rec, &seq).unwrap() - 5.0).abs() < 1e-14);

        rec.residuals = Some(vec![pt(&[0.0, 0.0]); 3]);
        assert_eq!(ergodic_fpr(&rec, &seq).unwrap(), 0.0);

        rec.residuals = None;
        assert!(matches!(ergodic_fpr(&rec, &seq), Err(Error::Capability(_))));
    }

    #[test]
    fn csv_layout() {
        let samples = vec![Sample::empty(1); 2];
        let mut cfg = RunConfig::new(2);
        cfg.schedule = StepSchedule::constant(0.25).unwrap();
        let rec = run(&negation(), &samples, pt(&[2.0]), &cfg, None).unwrap();
        let csv = rec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("1,16,NaN,NaN,1"));
        assert_eq!(rec.status_line(), "status=budget-exhausted rows=2");
    }
}
