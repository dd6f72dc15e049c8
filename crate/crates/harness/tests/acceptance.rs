//! The nine acceptance criteria, one PASS/FAIL line each. Runs without the
//! libtest harness so the report is always printed in order.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use skm_core::bounds::{
    approx_error_bound, deviation_bound, epsilon_radius, fpr_bound, out_of_sample_bound,
    pgd_regret_bound, prs_regret_bound,
};
use skm_core::engine::{run, RunConfig};
use skm_core::operators::{build_algorithm, prox, Algorithm, FunctionSpec, OperatorSpec};
use skm_core::processes::{phi_coefficient, rng_from_seed, MarkovChain, SamplingStrategy, SeedRng};
use skm_core::reference::{solve_reference, SolverOptions};
use skm_core::{CompositeObjective, LeastSquares, Point, Sample};
use skm_harness::config::ExperimentConfig;
use skm_harness::coverage::coverage_study;
use skm_harness::experiment::{
    run_experiment, samples_to_equal_regret, write_experiment, ExperimentResult,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk_config() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    ExperimentConfig::load(&path).expect("desk config")
}

fn random_point(rng: &mut SeedRng, d: usize, scale: f64) -> Point<f64> {
    Point::new((0..d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_sample(rng: &mut SeedRng, d: usize) -> Sample<f64> {
    Sample::new(random_point(rng, d, 2.0), rng.random_range(-3.0..3.0), 0).unwrap()
}

fn prox_oracle() -> Outcome {
    let mut rng = rng_from_seed(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let gamma: f64 = rng.random_range(0.05..2.0);
        let weight: f64 = rng.random_range(0.0..2.0);
        let obj = |y: f64| weight * y.abs() + (y - x).powi(2) / (2.0 * gamma);
        let lo = x.min(0.0) - 1.0;
        let n = ((x.max(0.0) + 1.0 - lo) / 1e-4).ceil() as usize;
        let grid = (0..=n)
            .map(|i| lo + i as f64 * 1e-4)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        let g = FunctionSpec::l1(weight).unwrap();
        let closed = prox(&g, gamma, &Point::from_f64(&[x]), None)
            .unwrap()
            .as_slice()[0];
        worst = worst.max((closed - grid).abs());
    }
    outcome(
        worst <= 2e-4,
        format!("max |prox - grid| = {worst:.2e} over 100 instances (tol 2e-4)"),
    )
}

/// Operators that are firmly nonexpansive by construction: proximal maps,
/// DRS, and the gradient step with γ ≤ β. PGD and rPRS with λ > ½ are only
/// averaged and are checked for nonexpansiveness.
fn firmly_nonexpansive(name: Algorithm) -> bool {
    matches!(name, Algorithm::Ppa | Algorithm::Drs | Algorithm::Sgd)
}

fn operator_laws() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst_ne = f64::NEG_INFINITY;
    let mut worst_fne = f64::NEG_INFINITY;
    let mut worst_avg = 0.0f64;
    let mut worst_drs = 0.0f64;
    for name in Algorithm::ALL {
        for _ in 0..200 {
            let d = rng.random_range(1..=6);
            let s = random_sample(&mut rng, d);
            let x = random_point(&mut rng, d, 5.0);
            let y = random_point(&mut rng, d, 5.0);
            let f = FunctionSpec::SquaredLoss;
            let g = match name {
                Algorithm::Sgd | Algorithm::Ppa => FunctionSpec::Zero,
                _ => FunctionSpec::l1(rng.random_range(0.0..2.0)).unwrap(),
            };
            let beta = f.inverse_lipschitz(Some(&s)).unwrap_or(1.0);
            // SGD needs γ ≤ β to be firmly nonexpansive; the rest accept any γ in (0, 2β).
            let gamma = if name == Algorithm::Sgd {
                beta
            } else {
                1.9 * beta
            };
            let relax = rng.random_range(0.05..1.0);
            let op = build_algorithm(name, &f, &g, gamma, relax).unwrap();
            let (tx, ty) = (op.apply(&x, &s).unwrap(), op.apply(&y, &s).unwrap());
            let dxy = x.distance(&y);
            worst_ne = worst_ne.max(tx.distance(&ty) - dxy * (1.0 + 1e-10));
            if firmly_nonexpansive(name) {
                let dt = tx.sub(&ty);
                worst_fne = worst_fne.max(dt.norm_sq() - dt.dot(&x.sub(&y)) - 1e-10);
            }
            for h in [
                FunctionSpec::SquaredLoss,
                g.clone(),
                FunctionSpec::ball(1.5).unwrap(),
                FunctionSpec::Origin,
            ] {
                let px = prox(&h, gamma, &x, Some(&s)).unwrap();
                let py = prox(&h, gamma, &y, Some(&s)).unwrap();
                let dp = px.sub(&py);
                worst_fne = worst_fne.max(dp.norm_sq() - dp.dot(&x.sub(&y)) - 1e-10);
            }
            let lambda = rng.random_range(0.01..=1.0);
            let avg = OperatorSpec::averaged(op.clone(), lambda)
                .unwrap()
                .apply(&x, &s)
                .unwrap();
            let manual = x.lincomb(1.0 - lambda, &tx, lambda);
            for (a, b) in avg.as_slice().iter().zip(manual.as_slice()) {
                worst_avg = worst_avg.max((a - b).abs());
            }
            let l1 = FunctionSpec::l1(0.3).unwrap();
            let drs = build_algorithm(Algorithm::Drs, &f, &l1, gamma, relax).unwrap();
            let prs = build_algorithm(Algorithm::Rprs, &f, &l1, gamma, 0.5).unwrap();
            let (a, b) = (drs.apply(&x, &s).unwrap(), prs.apply(&x, &s).unwrap());
            for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                worst_drs = worst_drs.max((u - v).abs());
            }
        }
    }
    let pass = worst_ne <= 0.0 && worst_fne <= 0.0 && worst_avg <= 1e-12 && worst_drs <= 1e-12;
    outcome(
        pass,
        format!(
            "nonexpansive slack {worst_ne:.1e}, firm slack {worst_fne:.1e}, averaged {worst_avg:.1e}, DRS-rPRS {worst_drs:.1e}"
        ),
    )
}

fn full_batch_pgd(
    samples: &[Sample<f64>],
    weight: f64,
) -> (OperatorSpec<f64>, CompositeObjective<f64>) {
    let ls = Arc::new(LeastSquares::from_samples(samples).unwrap());
    let g = FunctionSpec::l1(weight).unwrap();
    let f = FunctionSpec::EmpiricalSquaredLoss(ls.clone());
    let op = build_algorithm(Algorithm::Pgd, &f, &g, 1.0 / ls.lipschitz(), 0.5).unwrap();
    (op, CompositeObjective::new(ls, g))
}

fn deterministic_convergence() -> Outcome {
    let mut rng = rng_from_seed(3);
    let mut monotone = true;
    let mut worst = 0.0f64;
    for i in 0..10 {
        let d = 2 + i % 9;
        let samples: Vec<Sample<f64>> = (0..3 * d).map(|_| random_sample(&mut rng, d)).collect();
        let (op, obj) = full_batch_pgd(&samples, rng.random_range(0.01..0.5));
        let reference = solve_reference(
            &obj,
            &SolverOptions {
                tol: 1e-26,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        let budget = 20_000;
        let mut cfg = RunConfig::new(budget);
        cfg.delta = 1e-30;
        let rec = run(
            &op,
            &vec![Sample::empty(d); budget],
            Point::zeros(d),
            &cfg,
            None,
        )
        .unwrap();
        // Residuals below a few ulps of the iterate are rounding noise.
        let floor = (8.0 * f64::EPSILON * rec.x.norm().max(1.0)).powi(2);
        monotone &= rec
            .rows
            .windows(2)
            .all(|w| w[1].fpr <= w[0].fpr * (1.0 + 1e-12) + floor);
        worst = worst.max(rec.x.distance(&reference.x));
    }
    let r2 = std::f64::consts::SQRT_2;
    let (b1, b2, w) = (1.7, -0.3, 0.8);
    let (op, _) = full_batch_pgd(
        &[
            Sample::from_f64(&[r2, 0.0], b1),
            Sample::from_f64(&[0.0, r2], b2),
        ],
        w,
    );
    let mut cfg = RunConfig::new(500);
    cfg.delta = 1e-30;
    let rec = run(
        &op,
        &vec![Sample::empty(2); 500],
        Point::zeros(2),
        &cfg,
        None,
    )
    .unwrap();
    let soft = |c: f64| c.signum() * (c.abs() - w / 2.0).max(0.0);
    let ortho = rec
        .x
        .as_slice()
        .iter()
        .zip([soft(b1 / r2), soft(b2 / r2)])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        monotone && worst <= 1e-6 && ortho <= 1e-8,
        format!("FPR non-increasing: {monotone}, max distance to reference {worst:.1e} (tol 1e-6), orthonormal error {ortho:.1e} (tol 1e-8)"),
    )
}

fn mixing_oracle() -> Outcome {
    let payloads = vec![Sample::from_f64(&[0.0], 0.0), Sample::from_f64(&[1.0], 1.0)];
    let p: [[f64; 2]; 2] = [[0.9, 0.1], [0.1, 0.9]];
    let chain =
        MarkovChain::new(p.iter().map(|r| r.to_vec()).collect(), payloads.clone(), 0).unwrap();
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut worst = 0.0f64;
    for l in 1..=20 {
        m = [
            [
                m[0][0] * p[0][0] + m[0][1] * p[1][0],
                m[0][0] * p[0][1] + m[0][1] * p[1][1],
            ],
            [
                m[1][0] * p[0][0] + m[1][1] * p[1][0],
                m[1][0] * p[0][1] + m[1][1] * p[1][1],
            ],
        ];
        let oracle = m
            .iter()
            .map(|row| (row[0] - 0.5).abs() + (row[1] - 0.5).abs())
            .fold(0.0, f64::max);
        let phi = phi_coefficient(&chain, l).unwrap();
        worst = worst
            .max((phi - oracle).abs())
            .max((phi - 0.8f64.powi(l as i32)).abs());
    }
    let iid = MarkovChain::iid(vec![0.3, 0.7], payloads).unwrap();
    let phi_iid = phi_coefficient(&iid, 1).unwrap();
    outcome(
        worst <= 1e-10 && phi_iid == 0.0,
        format!("max |φ(l) - 0.8^l| = {worst:.1e} for l <= 20, i.i.d. φ(1) = {phi_iid}"),
    )
}

fn bound_formulas() -> Outcome {
    let e = std::f64::consts::E;
    let oos_beta = 2.0 * (-2.0f64).exp();
    let checks: [(&str, f64, f64); 7] = [
        ("epsilon K=2", epsilon_radius(2, 2.0 / e, 2.0).unwrap(), 1.0),
        (
            "epsilon K=1000",
            epsilon_radius(1000, 2.0 / e, 2.0).unwrap(),
            0.002,
        ),
        (
            "out-of-sample",
            out_of_sample_bound(0.3, 2.0, 20, oos_beta, 1.0).unwrap(),
            0.5,
        ),
        (
            "approx error",
            approx_error_bound(1.0, 1.0, 1).unwrap(),
            (8.0 * std::f64::consts::PI).sqrt(),
        ),
        ("fpr", fpr_bound(1.0, 0.0, 0.0, 2.0).unwrap(), 1.0),
        (
            "deviation",
            deviation_bound(1.0, 10, 2, 0.1, 0.04, 3.0, 4.0).unwrap(),
            16.5,
        ),
        (
            "pgd regret",
            pgd_regret_bound(1.0, 10, 0.5, 0.5, 0.1, 1.0).unwrap(),
            0.1,
        ),
    ];
    let prs = (
        "prs regret",
        prs_regret_bound(1.0, 5, 0.5, 1.0, 0.1, 1.0).unwrap(),
        0.1,
    );
    let mut failed: Vec<&str> = checks
        .iter()
        .chain(std::iter::once(&prs))
        .filter(|(_, got, want)| (got - want).abs() > 1e-9)
        .map(|c| c.0)
        .collect();
    let halving = (1..=2000).all(|k| {
        epsilon_radius(2 * k, 0.1, 1.3).unwrap() == epsilon_radius(k, 0.1, 1.3).unwrap() / 2.0
    });
    if !halving {
        failed.push("halving");
    }
    let (r, k, g, tau, c) = (1.3, 40usize, 0.7, 0.2, 2.5);
    if pgd_regret_bound(r, k, g, g, tau, c).unwrap() != r * r / (2.0 * k as f64 * g) {
        failed.push("pgd vanishing term");
    }
    if prs_regret_bound(r, k, g, 1.0, tau, c).unwrap() != r * r / (4.0 * g * k as f64) {
        failed.push("prs vanishing terms");
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "8 worked values within 1e-9, exact halving, exact vanishing terms".to_string()
        } else {
            format!("mismatch: {}", failed.join(", "))
        },
    )
}

fn figure_ordering(result: &ExperimentResult, reps: usize) -> Outcome {
    let sp = SamplingStrategy::Sp;
    let run = |s, r| result.run(s, r).expect("run present");
    let mr4 = SamplingStrategy::MultipleReplication(4);
    let mut regret_wins = 0;
    let mut dist_wins = 0;
    for r in 0..reps {
        // A run stopped before its first update has no final row and counts
        // as a loss for SP.
        if let (Some(a), Some(b)) = (run(sp, r).record.last_row(), run(mr4, r).record.last_row()) {
            regret_wins += (a.regret < b.regret) as usize;
            dist_wins += (a.dist < b.dist) as usize;
        }
    }
    let mut sample_wins = Vec::new();
    for m in [2, 3] {
        let other = SamplingStrategy::SpEvery(m);
        let wins = (0..reps)
            .filter(|&r| {
                matches!(samples_to_equal_regret(&run(sp, r).record, &run(other, r).record), Some((a, b)) if a < b)
            })
            .count();
        sample_wins.push(wins);
    }
    let need = (reps * 8).div_ceil(10);
    let pass = regret_wins >= need && dist_wins >= need && sample_wins.iter().all(|&w| w >= need);
    outcome(
        pass,
        format!(
            "SP vs MR-4: regret {regret_wins}/{reps}, distance {dist_wins}/{reps}; samples-to-equal-regret vs SP-2 {}/{reps}, vs SP-3 {}/{reps}",
            sample_wins[0], sample_wins[1]
        ),
    )
}

fn sample_accounting(result: &ExperimentResult, budget: usize) -> Outcome {
    let mut bad = Vec::new();
    for r in &result.runs {
        let s = r.strategy;
        let expected = match s {
            SamplingStrategy::Sp => budget,
            SamplingStrategy::SpEvery(m) => 1 + (budget - 1) * m,
            SamplingStrategy::MultipleReplication(n) => budget * n,
        };
        let rows_ok = r
            .record
            .rows
            .iter()
            .all(|row| row.samples == s.draws_through(row.k));
        if r.training_draws != expected || !rows_ok {
            bad.push(r.file_stem());
        }
    }
    let example = SamplingStrategy::SpEvery(3);
    let kept: Vec<usize> = (1..=4).map(|k| example.draws_through(k)).collect();
    let example_ok = kept == [1, 4, 7, 10];
    outcome(
        bad.is_empty() && example_ok,
        format!(
            "{} runs checked, {} mismatches; SP-3 with K=4 keeps {kept:?}",
            result.runs.len(),
            bad.len()
        ),
    )
}

fn determinism(cfg: &ExperimentConfig, first: &ExperimentResult) -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let second = run_experiment(cfg).expect("repeat experiment");
    write_experiment(first, dirs[0].path()).unwrap();
    write_experiment(&second, dirs[1].path()).unwrap();
    let read = |i: usize| std::fs::read(dirs[i].path().join("summary.csv")).unwrap();
    let same = read(0) == read(1);
    outcome(
        same,
        format!("summary.csv byte-identical across two runs: {same}"),
    )
}

fn coverage(cfg: &ExperimentConfig) -> Outcome {
    let report = coverage_study(cfg).expect("coverage study");
    let limit = cfg.beta + 0.05;
    outcome(
        report.violation_fraction() <= limit
            && report.rows.len() == 200
            && cfg.bounds.loss_cap.is_none(),
        format!("{} (limit {limit:.2})", report.summary()),
    )
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(l) = limit {
        if elapsed > l {
            o.pass = false;
        }
        o.detail = format!(
            "{}; {:.2}s (limit {}s)",
            o.detail,
            elapsed.as_secs_f64(),
            l.as_secs()
        );
    } else {
        o.detail = format!("{}; {:.2}s", o.detail, elapsed.as_secs_f64());
    }
    o
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let cfg = desk_config();
    let mut results = vec![
        ("1 prox oracle", timed(secs(1), prox_oracle)),
        ("2 operator laws", timed(secs(5), operator_laws)),
        (
            "3 deterministic convergence",
            timed(secs(10), deterministic_convergence),
        ),
        ("4 mixing oracle", timed(secs(1), mixing_oracle)),
        ("5 bound formulas", timed(secs(1), bound_formulas)),
    ];
    let start = Instant::now();
    let experiment = run_experiment(&cfg).expect("desk experiment");
    let experiment_time = start.elapsed();
    let mut ordering = figure_ordering(&experiment, cfg.replications);
    ordering.pass &= experiment_time <= Duration::from_secs(120)
        && (
            cfg.generator.dim,
            cfg.generator.sparsity,
            cfg.budget,
            cfg.replications,
        ) == (100, 10, 1000, 10);
    ordering.detail = format!(
        "{}; d={} s0={} K={} M={}; {:.2}s (limit 120s)",
        ordering.detail,
        cfg.generator.dim,
        cfg.generator.sparsity,
        cfg.budget,
        cfg.replications,
        experiment_time.as_secs_f64()
    );
    results.push(("6 sampling-strategy ordering", ordering));
    results.push((
        "7 out-of-sample coverage",
        timed(secs(300), || coverage(&cfg)),
    ));
    results.push((
        "8 sample accounting",
        sample_accounting(&experiment, cfg.budget),
    ));
    results.push((
        "9 determinism",
        timed(None, || determinism(&cfg, &experiment)),
    ));

    let mut all = true;
    for (name, o) in &results {
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all &= o.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
