use std::fmt::{self, Write as _};

use crate::point::Point;
use crate::scalar::Real;

/// Per-iteration metrics: `fpr = e_k²`, `regret = L(x̄^k) - L(x_ref)`,
/// `dist = ‖x̄^k - x_true‖`, `samples` = raw process draws consumed so far.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow<F> {
    pub k: usize,
    pub fpr: F,
    pub regret: F,
    pub dist: F,
    pub samples: usize,
}

pub const CSV_HEADER: &str = "k,fpr,regret,dist,samples";

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus<F> {
    /// The FPR test passed at iteration `k` (evaluated before the update).
    Converged {
        k: usize,
        fpr: F,
        delta: F,
    },
    BudgetExhausted,
    /// Operator evaluation failed at iteration `k`; rows hold the partial run.
    Failed {
        k: usize,
        message: String,
    },
}

impl<F: Real> fmt::Display for RunStatus<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Converged { k, fpr, delta } => {
                write!(f, "status=converged k={k} fpr={fpr} delta={delta}")
            }
            Self::BudgetExhausted => write!(f, "status=budget-exhausted"),
            Self::Failed { k, message } => write!(f, "status=failed k={k} error={message}"),
        }
    }
}

/// Empirical counterparts of the stability quantities used by the iterate
/// deviation bound.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunDiagnostics<F> {
    /// `Σ ‖x^k - x^{k-1}‖`.
    pub step_sum: F,
    /// `max ‖x^k - x^{k-1}‖`.
    pub step_max: F,
    /// `Σ ‖T_λ(x^{k-1}; ξ_k) - T_λ(x_ref; ξ_k)‖`, when a reference is known.
    pub contraction_sum: Option<F>,
    /// Iterations whose sample violated `γ < 2β` for a gradient step.
    pub step_warnings: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord<F> {
    pub rows: Vec<MetricRow<F>>,
    pub status: RunStatus<F>,
    /// Final raw iterate.
    pub x: Point<F>,
    /// Final ergodic average.
    pub x_bar: Point<F>,
    /// Residual vectors `T(anchor) - anchor`, when requested.
    pub residuals: Option<Vec<Point<F>>>,
    pub diagnostics: RunDiagnostics<F>,
    /// Projection radius in force for the run.
    pub radius: Option<F>,
}

impl<F: Real> RunRecord<F> {
    pub fn last_row(&self) -> Option<&MetricRow<F>> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k, r.fpr, r.regret, r.dist, r.samples
            );
        }
        out
    }

    pub fn status_line(&self) -> String {
        format!("{} rows={}", self.status, self.rows.len())
    }
}
