//! Flat text renderings of a report. JSON (serde) is the canonical form.

use std::fmt::Write;

use super::ExperimentReport;

/// `outcome,count,probability` rows, most frequent first.
pub fn to_csv(report: &ExperimentReport) -> String {
    let total = report.total_counts().max(1) as f64;
    let mut out = String::from("outcome,count,probability\n");
    for (k, n) in sorted(report) {
        writeln!(out, "{k},{n},{:.6}", n as f64 / total).unwrap();
    }
    out
}

fn sorted(report: &ExperimentReport) -> Vec<(&String, u64)> {
    let mut rows: Vec<_> = report.histogram.iter().map(|(k, &n)| (k, n)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    rows
}

pub fn to_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let spec = &report.spec;
    writeln!(out, "experiment   {}", spec.name).unwrap();
    if let Some(d) = spec.delta {
        writeln!(out, "delta        {d}").unwrap();
    }
    if let Some(a) = spec.acceptance_angle {
        writeln!(out, "angle        {a:.6}").unwrap();
    }
    writeln!(out, "shots        {}", spec.shots).unwrap();
    writeln!(out, "seed         {}", spec.seed).unwrap();
    match &spec.noise {
        Some(n) => writeln!(
            out,
            "noise        p1={} p2={} p_meas={} ({:?})",
            n.p1, n.p2, n.p_meas, n.attach
        )
        .unwrap(),
        None => writeln!(out, "noise        none").unwrap(),
    }
    if !report.bit_order.is_empty() {
        writeln!(out, "bit order    {}", report.bit_order.join(" ")).unwrap();
        let total = report.total_counts().max(1) as f64;
        writeln!(out, "\n{:<12} {:>8} {:>9}", "outcome", "count", "prob (%)").unwrap();
        for (k, n) in sorted(report) {
            writeln!(out, "{k:<12} {n:>8} {:>9.2}", 100.0 * n as f64 / total).unwrap();
        }
        writeln!(out).unwrap();
    }
    let d = &report.derived;
    if let Some(s) = report.success_count {
        writeln!(out, "successes    {s}").unwrap();
    }
    if let Some(r) = d.success_rate {
        writeln!(out, "success rate {r:.4}").unwrap();
    }
    if let (Some(dist), Some(order)) = (&d.conditional_distribution, &d.conditional_bit_order) {
        let cells: Vec<String> = dist.iter().map(|(k, n)| format!("{k}: {n}")).collect();
        writeln!(out, "given success, {}: {}", order.join(","), cells.join(", ")).unwrap();
    }
    if let Some(m) = &d.mean_estimate_histogram {
        let cells: Vec<String> = m.iter().map(|(k, n)| format!("{k}: {n}")).collect();
        writeln!(out, "mean estimates {}", cells.join(", ")).unwrap();
    }
    if let Some(o) = d.overlap_estimate {
        writeln!(out, "overlap      {o:.4}").unwrap();
    }
    if let Some(r) = d.eigenstate_residual {
        writeln!(out, "residual     {r:.3e}").unwrap();
    }
    if let Some(f) = d.ideal_support_fraction {
        writeln!(out, "in support   {f:.4}").unwrap();
    }
    if let Some(s) = &d.spectral {
        writeln!(out, "encoding     {}", s.encoding).unwrap();
        writeln!(out, "{:>12}  {:<28} {:>10}", "lambda", "walk phases", "error").unwrap();
        for e in &s.entries {
            let phases: Vec<String> = e.matched_phases.iter().map(|p| format!("{p:+.6}")).collect();
            writeln!(
                out,
                "{:>12.6}  {:<28} {:>10.2e}",
                e.lambda,
                phases.join(" "),
                e.max_phase_error
            )
            .unwrap();
        }
        writeln!(
            out,
            "max error    {:.3e} ({})",
            s.max_error,
            if s.passed() { "pass" } else { "FAIL" }
        )
        .unwrap();
    }
    if let Some(c) = &report.comparison {
        writeln!(
            out,
            "vs {:<24} tvd {:.4}, max |z| {:.2}",
            c.reference,
            c.tvd,
            c.max_abs_z()
        )
        .unwrap();
    }
    out
}
