use std::sync::Arc;

use proptest::prelude::*;
use skm_core::operators::{build_algorithm, fpr, prox, Algorithm, FunctionSpec, OperatorSpec};
use skm_core::{CompositeObjective, LeastSquares, Point, Sample};

fn pt(v: &[f64]) -> Point<f64> {
    Point::from_f64(v)
}

/// Dimension, one sample and two points of that dimension.
fn instance() -> impl Strategy<Value = (Sample<f64>, Point<f64>, Point<f64>)> {
    (1usize..=6).prop_flat_map(|d| {
        (
            prop::collection::vec(-2.0..2.0f64, d),
            -3.0..3.0f64,
            prop::collection::vec(-5.0..5.0f64, d),
            prop::collection::vec(-5.0..5.0f64, d),
        )
            .prop_map(|(a, b, x, y)| (Sample::from_f64(&a, b), pt(&x), pt(&y)))
    })
}

/// Builds `name` for the lasso with a step inside `(0, 2β)` of the sample.
fn lasso_operator(
    name: Algorithm,
    s: &Sample<f64>,
    lambda_reg: f64,
    relax: f64,
) -> OperatorSpec<f64> {
    let f = FunctionSpec::SquaredLoss;
    let g = match name {
        Algorithm::Sgd | Algorithm::Ppa => FunctionSpec::Zero,
        _ => FunctionSpec::l1(lambda_reg).unwrap(),
    };
    let gamma = match f.inverse_lipschitz(Some(s)) {
        Some(beta) => 1.9 * beta,
        None => 0.7,
    };
    build_algorithm(name, &f, &g, gamma, relax).unwrap()
}

fn contracts(op: &OperatorSpec<f64>, s: &Sample<f64>, x: &Point<f64>, y: &Point<f64>) -> bool {
    let tx = op.apply(x, s).unwrap();
    let ty = op.apply(y, s).unwrap();
    tx.distance(&ty) <= x.distance(y) * (1.0 + 1e-10) + 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_algorithm_is_nonexpansive(
        (s, x, y) in instance(),
        lambda_reg in 0.0..2.0f64,
        relax in 0.05..1.0f64,
    ) {
        for name in Algorithm::ALL {
            let op = lasso_operator(name, &s, lambda_reg, relax);
            prop_assert!(op.step_condition_holds(&s));
            prop_assert!(contracts(&op, &s, &x, &y), "{name} expanded");
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive(
        (s, x, y) in instance(),
        gamma in 0.01..5.0f64,
        weight in 0.0..3.0f64,
        radius in 0.1..4.0f64,
    ) {
        let kinds = [
            FunctionSpec::SquaredLoss,
            FunctionSpec::l1(weight).unwrap(),
            FunctionSpec::Zero,
            FunctionSpec::ball(radius).unwrap(),
            FunctionSpec::Origin,
        ];
        for g in &kinds {
            let px = prox(g, gamma, &x, Some(&s)).unwrap();
            let py = prox(g, gamma, &y, Some(&s)).unwrap();
            let dp = px.sub(&py);
            prop_assert!(dp.norm_sq() <= dp.dot(&x.sub(&y)) + 1e-10, "{g}");
        }
    }

    #[test]
    fn averaged_operator_is_the_convex_combination(
        (s, x, _y) in instance(),
        lambda in 0.01..=1.0f64,
    ) {
        let inner = lasso_operator(Algorithm::Pgd, &s, 0.3, 0.5);
        let avg = OperatorSpec::averaged(inner.clone(), lambda).unwrap();
        let lhs = avg.apply(&x, &s).unwrap();
        let tx = inner.apply(&x, &s).unwrap();
        for ((l, xi), ti) in lhs.as_slice().iter().zip(x.as_slice()).zip(tx.as_slice()) {
            prop_assert!((l - ((1.0 - lambda) * xi + lambda * ti)).abs() <= 1e-12);
        }
    }

    #[test]
    fn drs_is_relaxed_prs_at_one_half((s, x, _y) in instance(), gamma in 0.01..3.0f64) {
        let f = FunctionSpec::SquaredLoss;
        let g = FunctionSpec::l1(0.4).unwrap();
        let drs = build_algorithm(Algorithm::Drs, &f, &g, gamma, 0.9).unwrap();
        let prs = build_algorithm(Algorithm::Rprs, &f, &g, gamma, 0.5).unwrap();
        let a = drs.apply(&x, &s).unwrap();
        let b = prs.apply(&x, &s).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn evaluation_is_deterministic((s, x, _y) in instance()) {
        for name in Algorithm::ALL {
            let op = lasso_operator(name, &s, 0.2, 0.7);
            prop_assert_eq!(op.apply(&x, &s).unwrap(), op.apply(&x, &s).unwrap());
        }
    }
}

fn soft_threshold_grid(x: f64, gamma: f64, weight: f64) -> f64 {
    let obj = |y: f64| weight * y.abs() + (y - x).powi(2) / (2.0 * gamma);
    let lo = x.min(0.0) - 1.0;
    let n = ((x.max(0.0) + 1.0 - lo) / 1e-4).ceil() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * 1e-4)
        .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn l1_prox_matches_grid_search(x in -3.0..3.0f64, gamma in 0.05..2.0f64, weight in 0.0..2.0f64) {
        let g = FunctionSpec::l1(weight).unwrap();
        let closed = prox(&g, gamma, &pt(&[x]), None).unwrap().as_slice()[0];
        prop_assert!((closed - soft_threshold_grid(x, gamma, weight)).abs() <= 2e-4);
    }
}

fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|a, b| m[*a][c].abs().total_cmp(&m[*b][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut out = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * out[k]).sum();
        out[c] = (rhs[c] - s) / m[c][c];
    }
    Some(out)
}

/// Exact lasso minimizer of `xᵀGx - 2cᵀx + w‖x‖₁` by enumerating sign
/// patterns and checking the optimality conditions.
fn lasso_by_enumeration(ls: &LeastSquares<f64>, weight: f64, cross: &[f64]) -> Point<f64> {
    let d = ls.dim();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(d as u32) {
        let signs: Vec<i32> = (0..d)
            .map(|i| (code / 3usize.pow(i as u32) % 3) as i32 - 1)
            .collect();
        let support: Vec<usize> = (0..d).filter(|&i| signs[i] != 0).collect();
        let m: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| support.iter().map(|&j| 2.0 * ls.gram_entry(i, j)).collect())
            .collect();
        let rhs: Vec<f64> = support
            .iter()
            .map(|&i| 2.0 * cross[i] - weight * signs[i] as f64)
            .collect();
        let Some(sol) = solve_dense(m, rhs) else {
            continue;
        };
        let mut x = vec![0.0; d];
        for (k, &i) in support.iter().enumerate() {
            x[i] = sol[k];
        }
        if support.iter().any(|&i| x[i] * signs[i] as f64 <= 0.0) {
            continue;
        }
        let grad = ls.gradient(&pt(&x));
        if (0..d).any(|i| signs[i] == 0 && grad.as_slice()[i].abs() > weight + 1e-12) {
            continue;
        }
        let value = ls.value(&pt(&x)) + weight * x.iter().map(|v| v.abs()).sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    }
    pt(&best.expect("a lasso minimizer exists").1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn lasso_minimizers_are_exactly_the_pgd_fixed_points(
        d in 1usize..=3,
        seed_rows in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 4), 8),
        weight in 0.0..1.5f64,
        shift in prop::collection::vec(0.05..1.0f64, 3),
    ) {
        let samples: Vec<Sample<f64>> = seed_rows
            .iter()
            .map(|r| Sample::from_f64(&r[..d], r[3]))
            .collect();
        let ls = Arc::new(LeastSquares::from_samples(&samples).unwrap());
        // (1/n) Σ b_i a_i, recomputed independently of the library.
        let cross: Vec<f64> = (0..d)
            .map(|i| samples.iter().map(|s| s.response * s.features.as_slice()[i]).sum::<f64>() / samples.len() as f64)
            .collect();
        let f = FunctionSpec::EmpiricalSquaredLoss(ls.clone());
        let g = FunctionSpec::l1(weight).unwrap();
        let gamma = 1.0 / ls.lipschitz();
        let op = build_algorithm(Algorithm::Pgd, &f, &g, gamma, 0.5).unwrap();
        let empty = Sample::empty(d);

        let x_star = lasso_by_enumeration(&ls, weight, &cross);
        prop_assert!(fpr(&op, &x_star, &empty).unwrap() <= 1e-16);

        // Moving off the minimizer strictly raises the objective of a strongly
        // convex problem, so the residual must become visible.
        let obj = CompositeObjective::new(ls.clone(), g.clone());
        let off = x_star.add(&pt(&shift[..d]));
        prop_assume!(obj.value(&off).unwrap() > obj.value(&x_star).unwrap() + 1e-6);
        prop_assert!(fpr(&op, &off, &empty).unwrap() > 1e-16);
    }
}

#[test]
fn single_precision_operators_share_the_laws() {
    let s = skm_core::Sample32::from_f64(&[0.5, -1.0], 0.3);
    let f = FunctionSpec::<f32>::SquaredLoss;
    let g = FunctionSpec::l1(0.2f32).unwrap();
    let op = build_algorithm(Algorithm::Drs, &f, &g, 0.3, 0.5).unwrap();
    let x = skm_core::Point32::from_f64(&[1.0, 2.0]);
    let y = skm_core::Point32::from_f64(&[-0.5, 0.25]);
    let d = op
        .apply(&x, &s)
        .unwrap()
        .distance(&op.apply(&y, &s).unwrap());
    assert!(d <= x.distance(&y) * (1.0 + 1e-6));
}
