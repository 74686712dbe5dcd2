//! Plain-text fit reports.

use std::fmt::Write;

use super::nlls::{FitOutcome, FitStatus};

fn status_str(s: FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::MaxIterations => "max_iterations",
        FitStatus::Degenerate => "degenerate",
    }
}

/// One `key: value` header block followed by a whitespace-aligned table with
/// columns name, value, ci_low, ci_high, unit. Angular parameters are shown
/// in kHz.
pub fn format_report(outcome: &FitOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}", outcome.model_id);
    let _ = writeln!(s, "status: {}", status_str(outcome.status));
    let _ = writeln!(s, "iterations: {}", outcome.iterations);
    let _ = writeln!(s, "rss: {:.6e}", outcome.rss);
    let _ = writeln!(s, "dof: {}", outcome.dof);
    if !outcome.unidentifiable.is_empty() {
        let _ = writeln!(s, "unidentifiable: {}", outcome.unidentifiable.join(", "));
    }
    let _ = writeln!(s, "{:<14} {:>16} {:>16} {:>16}  unit", "name", "value", "ci_low", "ci_high");
    for i in 0..outcome.names.len() {
        let u = outcome.units[i];
        let (lo, hi) = outcome.ci[i];
        let frozen = if outcome.frozen[i] { " (fixed)" } else { "" };
        let _ = writeln!(
            s,
            "{:<14} {:>16.8e} {:>16.8e} {:>16.8e}  {}{}",
            outcome.names[i],
            u.to_display(outcome.values[i]),
            u.to_display(lo),
            u.to_display(hi),
            u.label(),
            frozen
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_fitting::nlls::ParamUnit;

    #[test]
    fn report_lists_every_parameter() {
        let out = FitOutcome {
            model_id: "ramsey_mp".into(),
            names: vec!["omega".into(), "t2".into()],
            units: vec![ParamUnit::AngularKhz, ParamUnit::Microseconds],
            values: vec![crate::units::khz_to_angular(581.0), 13.5],
            frozen: vec![false, true],
            covariance: vec![vec![1e-6]],
            ci: vec![(3.6, 3.7), (13.5, 13.5)],
            rss: 0.01,
            dof: 10,
            iterations: 7,
            status: FitStatus::Converged,
            unidentifiable: vec![],
        };
        let text = format_report(&out);
        assert!(text.contains("status: converged"));
        assert!(text.contains("5.81000000e2"));
        assert!(text.lines().any(|l| l.starts_with("t2") && l.ends_with("us (fixed)")));
    }
}
