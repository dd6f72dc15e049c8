//! Closed-form finite-sample guarantees.
//!
//! Every bound depends on the concentration constant `C` of the mixing
//! process, which is supplied as a positive scalar (`c_value`) rather than
//! derived; reports echo it so results stay explicitly conditional on it.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::engine::StepSchedule;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn domain(msg: String) -> Error {
    Error::Domain(msg)
}

fn check_count(k: usize) -> Result<()> {
    if k == 0 {
        return Err(domain("sample count K must be >= 1".into()));
    }
    Ok(())
}

fn check_positive<F: Real>(name: &str, v: F) -> Result<()> {
    if v > F::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_nonneg<F: Real>(name: &str, v: F) -> Result<()> {
    if v >= F::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_confidence<F: Real>(beta: F) -> Result<()> {
    if beta > F::zero() && beta < F::one() {
        Ok(())
    } else {
        Err(domain(format!(
            "confidence level β must lie in (0, 1), got {beta}"
        )))
    }
}

fn check_phi<F: Real>(name: &str, v: F) -> Result<()> {
    if v >= F::zero() && v <= F::lit(2.0) {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 2], got {v}")))
    }
}

fn count<F: Real>(k: usize) -> F {
    F::from_usize(k).expect("count fits the scalar type")
}

/// Radius `ε_K(β) = √(2 C log(2/β)) / K` of the concentration ball.
pub fn epsilon_radius<F: Real>(k: usize, beta: F, c_value: F) -> Result<F> {
    check_count(k)?;
    check_confidence(beta)?;
    check_positive("C", c_value)?;
    let two = F::lit(2.0);
    Ok((two * c_value * (two / beta).ln()).sqrt() / count::<F>(k))
}

/// `Ĵ + L ε_K(β)`: with probability at least `1 - β` the expected loss of the
/// SAA solution does not exceed this value.
pub fn out_of_sample_bound<F: Real>(
    j_hat: F,
    l_cap: F,
    k: usize,
    beta: F,
    c_value: F,
) -> Result<F> {
    if !j_hat.is_finite() {
        return Err(domain(format!(
            "empirical optimum must be finite, got {j_hat}"
        )));
    }
    check_positive("loss bound L", l_cap)?;
    Ok(j_hat + l_cap * epsilon_radius(k, beta, c_value)?)
}

/// `Δ = (r / K) √(8 π C)`, the expected norm of the sampling error.
pub fn approx_error_bound<F: Real>(r: F, c_value: F, k: usize) -> Result<F> {
    check_positive("radius r", r)?;
    check_positive("C", c_value)?;
    check_count(k)?;
    Ok(r / count::<F>(k) * (F::lit(8.0 * PI) * c_value).sqrt())
}

/// `(2r(1 + φ(1)) + 2 noise_sum) / Λ_K`, bounding `E‖ē_K‖`.
pub fn fpr_bound<F: Real>(r: F, phi1: F, noise_sum: F, lambda_sum: F) -> Result<F> {
    check_nonneg("radius r", r)?;
    check_phi("φ(1)", phi1)?;
    check_nonneg("noise sum", noise_sum)?;
    check_positive("Λ_K", lambda_sum)?;
    let two = F::lit(2.0);
    Ok((two * r * (F::one() + phi1) + two * noise_sum) / lambda_sum)
}

/// `(1 + φ(1)) R + 2 (K - τ) r √φ(τ+1) + τ (κ_sum + r)`.
pub fn deviation_bound<F: Real>(
    r: F,
    k: usize,
    tau: usize,
    phi1: F,
    phi_tau1: F,
    r_expect: F,
    kappa_sum: F,
) -> Result<F> {
    check_nonneg("radius r", r)?;
    if tau > k {
        return Err(domain(format!("need 0 <= τ <= K, got τ={tau}, K={k}")));
    }
    check_phi("φ(1)", phi1)?;
    check_phi("φ(τ+1)", phi_tau1)?;
    check_nonneg("R", r_expect)?;
    check_nonneg("κ sum", kappa_sum)?;
    let two = F::lit(2.0);
    Ok((F::one() + phi1) * r_expect
        + two * count::<F>(k - tau) * r * phi_tau1.sqrt()
        + count::<F>(tau) * (kappa_sum + r))
}

/// Regret bound for stochastic PGD:
/// `r²/(2Kγ) + (1/β_lip - 1/γ)(4r² + 8r²πC/(K τ̲))`.
pub fn pgd_regret_bound<F: Real>(
    r: F,
    k: usize,
    gamma: F,
    beta_lip: F,
    tau_min: F,
    c_value: F,
) -> Result<F> {
    Ok(pgd_regret_terms(r, k, gamma, beta_lip, tau_min, c_value)?
        .iter()
        .copied()
        .sum())
}

fn pgd_regret_terms<F: Real>(
    r: F,
    k: usize,
    gamma: F,
    beta_lip: F,
    tau_min: F,
    c_value: F,
) -> Result<[F; 2]> {
    check_positive("radius r", r)?;
    check_count(k)?;
    check_positive("β_lip", beta_lip)?;
    if !(gamma > F::zero() && gamma < F::lit(2.0) * beta_lip) {
        return Err(domain(format!(
            "step γ must lie in (0, 2β_lip), got γ={gamma}, β_lip={beta_lip}"
        )));
    }
    check_positive("τ̲", tau_min)?;
    check_positive("C", c_value)?;
    let kf = count::<F>(k);
    let r2 = r * r;
    let first = r2 / (F::lit(2.0) * kf * gamma);
    let coeff = F::one() / beta_lip - F::one() / gamma;
    let second = coeff * (F::lit(4.0) * r2 + F::lit(8.0 * PI) * r2 * c_value / (kf * tau_min));
    Ok([first, second])
}

/// Regret bound for stochastic relaxed PRS:
/// `r²/(4γλK) + 2(λ-1)r²/(γλ²) + (4r²π/(γλτ̲))(1 - 1/λ) C/K`.
///
/// The last two terms are non-positive for `λ < 1`; the sum is returned as is.
pub fn prs_regret_bound<F: Real>(
    r: F,
    k: usize,
    gamma: F,
    lambda: F,
    tau_min: F,
    c_value: F,
) -> Result<F> {
    Ok(prs_regret_terms(r, k, gamma, lambda, tau_min, c_value)?
        .iter()
        .copied()
        .sum())
}

fn prs_regret_terms<F: Real>(
    r: F,
    k: usize,
    gamma: F,
    lambda: F,
    tau_min: F,
    c_value: F,
) -> Result<[F; 3]> {
    check_positive("radius r", r)?;
    check_count(k)?;
    check_positive("step γ", gamma)?;
    if !(lambda > F::zero() && lambda <= F::one()) {
        return Err(domain(format!("λ must lie in (0, 1], got {lambda}")));
    }
    check_positive("τ̲", tau_min)?;
    check_positive("C", c_value)?;
    let kf = count::<F>(k);
    let r2 = r * r;
    let one = F::one();
    let first = r2 / (F::lit(4.0) * gamma * lambda * kf);
    let second = F::lit(2.0) * (lambda - one) * r2 / (gamma * lambda * lambda);
    let third =
        F::lit(4.0 * PI) * r2 / (gamma * lambda * tau_min) * (one - one / lambda) * c_value / kf;
    Ok([first, second, third])
}

/// Everything the bounds may consume. Optional fields switch off the bounds
/// that need them.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs<F> {
    pub k: usize,
    /// Confidence level β.
    pub beta: F,
    pub c_value: F,
    /// `Σ φ(k)` from a mixing profile, echoed for reference.
    pub tail_sum: Option<F>,
    pub phi1: F,
    pub phi_tau1: F,
    pub tau: usize,
    /// Radius of the feasible set.
    pub radius: F,
    /// Uniform loss bound `L`.
    pub loss_cap: Option<F>,
    /// Empirical optimum `Ĵ`.
    pub j_hat: Option<F>,
    pub gamma: Option<F>,
    /// Constant relaxation weight, when the schedule is constant.
    pub lambda: Option<F>,
    /// `Λ_K`.
    pub lambda_sum: F,
    /// `τ̲ = min λ_k (1 - λ_k)`.
    pub tau_min: F,
    /// Inverse Lipschitz constant of the smooth gradient.
    pub beta_lip: Option<F>,
    /// Measured `R_{K-1}`.
    pub r_expect: Option<F>,
    pub kappa_sum: Option<F>,
    /// `Σ E‖λ_k ε_k‖`; replaced by `Λ_K Δ` when absent.
    pub noise_sum: Option<F>,
}

impl<F: Real> BoundInputs<F> {
    /// Inputs for `K` iterations of `schedule`, with the i.i.d. mixing
    /// defaults `φ(1) = φ(τ+1) = 0`, `τ = 0`.
    pub fn new(
        k: usize,
        beta: F,
        c_value: F,
        radius: F,
        schedule: &StepSchedule<F>,
    ) -> Result<Self> {
        check_count(k)?;
        let lambda = match schedule {
            StepSchedule::Constant(l) => Some(*l),
            StepSchedule::Sequence(_) => None,
        };
        Ok(Self {
            k,
            beta,
            c_value,
            tail_sum: None,
            phi1: F::zero(),
            phi_tau1: F::zero(),
            tau: 0,
            radius,
            loss_cap: None,
            j_hat: None,
            gamma: None,
            lambda,
            lambda_sum: schedule.lambda_sum(k)?,
            tau_min: schedule.tau_min(k)?,
            beta_lip: None,
            r_expect: None,
            kappa_sum: None,
            noise_sum: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_count(self.k)?;
        check_confidence(self.beta)?;
        check_positive("C", self.c_value)?;
        check_positive("radius r", self.radius)?;
        check_phi("φ(1)", self.phi1)?;
        check_phi("φ(τ+1)", self.phi_tau1)?;
        if self.tau > self.k {
            return Err(domain(format!("τ={} exceeds K={}", self.tau, self.k)));
        }
        check_positive("Λ_K", self.lambda_sum)?;
        check_positive("τ̲", self.tau_min)?;
        for (name, v) in [
            ("Σφ", self.tail_sum),
            ("L", self.loss_cap),
            ("γ", self.gamma),
            ("β_lip", self.beta_lip),
            ("R", self.r_expect),
            ("κ sum", self.kappa_sum),
            ("noise sum", self.noise_sum),
        ] {
            if let Some(v) = v {
                check_nonneg(name, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundEntry<F> {
    pub name: &'static str,
    pub value: F,
    /// Which guarantee the value instantiates.
    pub guarantee: &'static str,
    pub flags: Vec<String>,
    /// Formula inputs in the order they enter the formula.
    pub inputs: Vec<(&'static str, F)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<F> {
    pub entries: Vec<BoundEntry<F>>,
    pub c_value: F,
}

/// Column order of [`BoundReport::to_csv`]. The last field is a JSON object
/// holding the formula inputs (and a `flags` array) and runs to the end of
/// the line.
pub const BOUNDS_CSV_HEADER: &str = "bound_name,value,inputs_json";

impl<F: Real> BoundReport<F> {
    /// Evaluates every bound whose inputs are present.
    pub fn evaluate(inputs: &BoundInputs<F>) -> Result<Self> {
        inputs.validate()?;
        let i = inputs;
        let mut entries = Vec::new();
        let mut push =
            |name, guarantee, value: F, flags: Vec<String>, used: Vec<(&'static str, F)>| {
                let mut flags = flags;
                if value < F::zero() {
                    flags.push("negative-value".into());
                }
                entries.push(BoundEntry {
                    name,
                    value,
                    guarantee,
                    flags,
                    inputs: used,
                });
            };
        let kf = count::<F>(i.k);

        let eps = epsilon_radius(i.k, i.beta, i.c_value)?;
        push(
            "epsilon_radius",
            "concentration radius",
            eps,
            vec![],
            vec![("K", kf), ("beta", i.beta), ("C", i.c_value)],
        );

        if let (Some(j), Some(l)) = (i.j_hat, i.loss_cap) {
            if l > F::zero() {
                push(
                    "out_of_sample",
                    "out-of-sample guarantee",
                    out_of_sample_bound(j, l, i.k, i.beta, i.c_value)?,
                    vec![],
                    vec![
                        ("J_hat", j),
                        ("L", l),
                        ("K", kf),
                        ("beta", i.beta),
                        ("C", i.c_value),
                    ],
                );
            }
        }

        let delta = approx_error_bound(i.radius, i.c_value, i.k)?;
        push(
            "approx_error",
            "approximation error",
            delta,
            vec![],
            vec![("r", i.radius), ("C", i.c_value), ("K", kf)],
        );

        let (noise, noise_flags) = match i.noise_sum {
            Some(n) => (n, vec![]),
            None => (
                i.lambda_sum * delta,
                vec!["noise-sum-from-approx-error".to_string()],
            ),
        };
        push(
            "fpr",
            "fixed point residual",
            fpr_bound(i.radius, i.phi1, noise, i.lambda_sum)?,
            noise_flags,
            vec![
                ("r", i.radius),
                ("phi1", i.phi1),
                ("noise_sum", noise),
                ("Lambda_K", i.lambda_sum),
            ],
        );

        if let (Some(r_exp), Some(kappa)) = (i.r_expect, i.kappa_sum) {
            push(
                "deviation",
                "iterate deviation",
                deviation_bound(i.radius, i.k, i.tau, i.phi1, i.phi_tau1, r_exp, kappa)?,
                vec![],
                vec![
                    ("r", i.radius),
                    ("K", kf),
                    ("tau", count(i.tau)),
                    ("phi1", i.phi1),
                    ("phi_tau1", i.phi_tau1),
                    ("R", r_exp),
                    ("kappa_sum", kappa),
                ],
            );
        }

        if let (Some(g), Some(b)) = (i.gamma, i.beta_lip) {
            let used = vec![
                ("r", i.radius),
                ("K", kf),
                ("gamma", g),
                ("beta_lip", b),
                ("tau_min", i.tau_min),
                ("C", i.c_value),
            ];
            match pgd_regret_terms(i.radius, i.k, g, b, i.tau_min, i.c_value) {
                Ok(terms) => {
                    let flags = if terms[1] < F::zero() {
                        vec!["negative-term:2".to_string()]
                    } else {
                        vec![]
                    };
                    push(
                        "pgd_regret",
                        "S-PGD regret",
                        terms.iter().copied().sum(),
                        flags,
                        used,
                    );
                }
                Err(e) => log::warn!("pgd_regret skipped: {e}"),
            }
        }

        if let (Some(g), Some(l)) = (i.gamma, i.lambda) {
            let terms = prs_regret_terms(i.radius, i.k, g, l, i.tau_min, i.c_value)?;
            let flags = terms
                .iter()
                .enumerate()
                .filter(|(_, t)| **t < F::zero())
                .map(|(n, _)| format!("negative-term:{}", n + 1))
                .collect();
            push(
                "prs_regret",
                "S-rPRS regret",
                terms.iter().copied().sum(),
                flags,
                vec![
                    ("r", i.radius),
                    ("K", kf),
                    ("gamma", g),
                    ("lambda", l),
                    ("tau_min", i.tau_min),
                    ("C", i.c_value),
                ],
            );
        }

        Ok(Self {
            entries,
            c_value: i.c_value,
        })
    }

    pub fn get(&self, name: &str) -> Option<&BoundEntry<F>> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Aligned, human-readable table.
    pub fn to_text(&self) -> String {
        let name_w = self
            .entries
            .iter()
            .map(|e| e.name.len())
            .max()
            .unwrap_or(4)
            .max(5);
        let guar_w = self
            .entries
            .iter()
            .map(|e| e.guarantee.chars().count())
            .max()
            .unwrap_or(9)
            .max(9);
        let mut out = String::new();
        let _ = writeln!(out, "C = {}", self.c_value);
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>14}  {:<guar_w$}  flags",
            "bound", "value", "guarantee"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>14.6e}  {:<guar_w$}  {}",
                e.name,
                e.value.as_f64(),
                e.guarantee,
                e.flags.join(" ")
            );
        }
        out
    }

    /// CSV with [`BOUNDS_CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BOUNDS_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let mut obj = serde_json::Map::new();
            for (k, v) in &e.inputs {
                obj.insert((*k).to_string(), serde_json::json!(v.as_f64()));
            }
            obj.insert("flags".into(), serde_json::json!(e.flags));
            let json = serde_json::Value::Object(obj);
            let _ = writeln!(out, "{},{},{}", e.name, e.value, json);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn epsilon_examples() {
        assert!((epsilon_radius(2, 2.0 / E, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((epsilon_radius(1000, 2.0 / E, 2.0).unwrap() - 0.002).abs() < 1e-12);
        for k in [1, 3, 17, 500] {
            let a = epsilon_radius(k, 0.1, 1.5).unwrap();
            let b = epsilon_radius(2 * k, 0.1, 1.5).unwrap();
            assert_eq!(b, a / 2.0);
        }
        assert!(epsilon_radius(0, 0.1, 1.0).is_err());
        assert!(epsilon_radius(5, 1.0, 1.0).is_err());
        assert!(epsilon_radius(5, 0.5, 0.0).is_err());
    }

    #[test]
    fn out_of_sample_examples() {
        // ε = 0.1 at K = 20, C = 1, β = 2 e^{-2}.
        let beta = 2.0 * (-2.0f64).exp();
        assert!((epsilon_radius(20, beta, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert!((out_of_sample_bound(0.3, 2.0, 20, beta, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(out_of_sample_bound(0.3, 0.0, 2, beta, 2.0).is_err());
    }

    #[test]
    fn approx_error_examples() {
        let d = approx_error_bound(1.0, 1.0, 1).unwrap();
        assert!((d - (8.0 * PI).sqrt()).abs() < 1e-12);
        assert!((d - 5.0133).abs() < 1e-4);
        let alt = (8.0 * 3.0f64.powi(2) * 2.0 / 7.0f64.powi(2)).sqrt() * PI.sqrt();
        assert!((approx_error_bound(3.0, 2.0, 7).unwrap() - alt).abs() < 1e-12);
    }

    #[test]
    fn fpr_and_deviation_examples() {
        assert!((fpr_bound(1.0f64, 0.0, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fpr_bound(1.0, 0.0, 0.0, 0.0).is_err());
        let v = deviation_bound(1.0f64, 10, 2, 0.1, 0.04, 3.0, 4.0).unwrap();
        assert!((v - 16.5).abs() < 1e-12);
        assert_eq!(
            deviation_bound(1.0, 10, 0, 0.0, 0.5, 3.0, 4.0).unwrap(),
            3.0 + 20.0 * 0.5f64.sqrt()
        );
        assert!(deviation_bound(1.0, 3, 4, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn regret_examples() {
        assert!((pgd_regret_bound(1.0f64, 10, 0.5, 0.5, 0.25, 1.0).unwrap() - 0.1).abs() < 1e-12);
        let t = pgd_regret_terms(2.0, 10, 0.5, 0.5, 0.25, 3.0).unwrap();
        assert_eq!(t[1], 0.0);
        assert!(pgd_regret_bound(1.0, 10, 1.0, 0.5, 0.25, 1.0).is_err());

        assert!((prs_regret_bound(1.0f64, 5, 0.5, 1.0, 0.25, 1.0).unwrap() - 0.1).abs() < 1e-12);
        let t = prs_regret_terms(2.0, 5, 0.5, 1.0, 0.25, 7.0).unwrap();
        assert_eq!((t[1], t[2]), (0.0, 0.0));
        let t = prs_regret_terms(1.0, 5, 0.5, 0.5, 0.25, 1.0).unwrap();
        assert!(t[1] < 0.0 && t[2] < 0.0);
    }

    #[test]
    fn report_flags_and_csv() {
        let sched = StepSchedule::constant(0.5).unwrap();
        let mut inputs = BoundInputs::<f64>::new(4, 0.1, 1.0, 1.0, &sched).unwrap();
        inputs.gamma = Some(0.5);
        inputs.beta_lip = Some(0.5);
        inputs.noise_sum = Some(0.0);
        let report = BoundReport::evaluate(&inputs).unwrap();
        assert!((report.get("fpr").unwrap().value - 1.0).abs() < 1e-12);
        let prs = report.get("prs_regret").unwrap();
        assert!(prs.flags.iter().any(|f| f == "negative-term:2"));
        assert!(report.get("deviation").is_none());

        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(BOUNDS_CSV_HEADER));
        let first = lines.next().unwrap();
        let (name, rest) = first.split_once(',').unwrap();
        let (_, json) = rest.split_once(',').unwrap();
        assert_eq!(name, "epsilon_radius");
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["K"], 4.0);
        assert_eq!(
            report.to_text(),
            BoundReport::evaluate(&inputs).unwrap().to_text()
        );
    }
}
