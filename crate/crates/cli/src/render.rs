//! Aligned-text versions of the JSON records.

use std::fmt::Write as _;

use welfare_bounds::inference::{BoundsEstimate, InferenceKind};
use welfare_bounds::simulation::{OracleTarget, OracleValue};

fn interval(ci: Option<[f64; 2]>) -> String {
    match ci {
        Some([lo, hi]) => format!("({lo:.0}, {hi:.0})"),
        None => String::new(),
    }
}

/// One block per regime: point estimates, then confidence intervals
/// underneath.
pub fn estimates(rows: &[BoundsEstimate]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        let _ = writeln!(
            out,
            "welfare gain of switching from {} to {} (n = {}, k = {}, {:.0}% intervals)",
            first.policy.delta_star,
            first.policy.delta,
            first.n,
            first.k,
            first.alpha * 100.0
        );
    }
    let _ = writeln!(out, "{:<16} {:>24} {:>24}", "assumptions", "lower bound", "upper bound");
    for r in rows {
        let _ = writeln!(out, "{:<16} {:>24.0} {:>24.0}", r.regime.to_string(), r.beta_l, r.beta_u);
        if r.inference == InferenceKind::Asymptotic {
            let _ = writeln!(out, "{:<16} {:>24} {:>24}", "", interval(r.ci_l), interval(r.ci_u));
        }
        for d in &r.diagnostics {
            let _ = writeln!(out, "  note: {d}");
        }
    }
    out
}

pub fn oracle(target: &OracleTarget, value: &OracleValue) -> String {
    match value {
        OracleValue::Gain { gain } => format!("{target}: {gain:.4}\n"),
        OracleValue::Bounds { beta_l, beta_u } => format!("{target}: [{beta_l:.4}, {beta_u:.4}]\n"),
    }
}
