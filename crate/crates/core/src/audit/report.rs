//! Markdown rendering of a [`FairUseReport`].

use std::fmt::Write;

use super::{FairUseReport, MetricReport, TestKind, Verdict};

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

fn signed(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:+.4}"),
        None => "n/a".into(),
    }
}

fn test_name(t: TestKind) -> &'static str {
    match t {
        TestKind::Bootstrap => "bootstrap",
        TestKind::McNemar => "mcnemar",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::SignificantGain => "gain",
        Verdict::SignificantViolation => "VIOLATION",
        Verdict::Inconclusive => "inconclusive",
        Verdict::NotTestable => "not testable",
    }
}

fn metric_section(out: &mut String, r: &MetricReport) {
    let _ = writeln!(out, "## Metric: {}\n", r.metric);
    out.push_str("| Row | Value |\n|---|---|\n");
    let _ = writeln!(out, "| Personalized | {} |", num(r.population.personalized));
    let _ = writeln!(out, "| Generic | {} |", num(r.population.generic));
    let _ = writeln!(out, "| Gain | {} |", signed(r.population.gain));
    let _ = writeln!(out, "| Best/Worst Gain | {} / {} |", signed(r.best_gain), signed(r.worst_gain));
    for s in &r.summary {
        let c = &s.counts;
        let t = test_name(s.test);
        let _ = writeln!(out, "| Rat. Gains/Viols ({t}) | {}/{} |", c.rationality_gains, c.rationality_violations);
        let _ = writeln!(out, "| EF Gains/Viols ({t}) | {}/{} |", c.envy_gains, c.envy_violations);
    }
    let _ = writeln!(out, "| Point-estimate fair use | {} |", if r.point_fair_use { "holds" } else { "violated" });

    out.push_str("\n### Groups\n\n");
    out.push_str("| Group | n | Personalized | Generic | Rationality gain | Gain (rows) | Envy min-gain | Most envied report | Rationality verdicts |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for g in &r.groups {
        let verdicts: Vec<String> = r
            .hypotheses
            .iter()
            .filter(|h| h.kind.is_rationality() && h.kind.group() == g.group)
            .map(|h| format!("{}: {} (p_adj {:.4})", test_name(h.test), verdict_name(h.verdict), h.p_violation_adjusted.min(h.p_gain_adjusted)))
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            g.group,
            g.n,
            num(g.personalized),
            num(g.generic),
            signed(g.rationality_gain),
            signed(g.rationality_gain_count),
            signed(g.envy_min_gain),
            g.envy_argmin.as_deref().unwrap_or("n/a"),
            if verdicts.is_empty() { "n/a".to_string() } else { verdicts.join("; ") }
        );
    }

    out.push_str("\n### Misreporting matrix (rows: true group, columns: reported group)\n\n");
    out.push_str("| True group |");
    for g in &r.matrix.groups {
        let _ = write!(out, " {g} |");
    }
    out.push_str(" withheld |\n|---|");
    for _ in 0..=r.matrix.m() {
        out.push_str("---|");
    }
    out.push('\n');
    for (gi, g) in r.matrix.groups.iter().enumerate() {
        let _ = write!(out, "| {g} |");
        for e in &r.matrix.entries[gi] {
            let _ = write!(out, " {} |", num(e.value));
        }
        out.push('\n');
    }
    let violations: Vec<String> = r
        .hypotheses
        .iter()
        .filter(|h| h.verdict == Verdict::SignificantViolation)
        .map(|h| match &h.kind {
            super::HypothesisKind::Rationality { group } => {
                format!("- rationality, {group} ({}, p_adj {:.4})", test_name(h.test), h.p_violation_adjusted)
            }
            super::HypothesisKind::EnvyFreeness { group, reported } => format!(
                "- envy-freeness, {group} reporting {reported} ({}, p_adj {:.4})",
                test_name(h.test),
                h.p_violation_adjusted
            ),
        })
        .collect();
    if !violations.is_empty() {
        out.push_str("\n### Significant violations\n\n");
        for v in violations {
            out.push_str(&v);
            out.push('\n');
        }
    }
    out.push('\n');
}

pub(super) fn markdown(report: &FairUseReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    out.push_str("# Fair use audit\n\n");
    out.push_str("| Setting | Value |\n|---|---|\n");
    let metrics: Vec<String> = c.metrics.iter().map(|m| m.to_string()).collect();
    let rows = [
        ("strategy", c.strategy.to_string()),
        ("metrics", metrics.join(", ")),
        ("loss", c.train.loss.to_string()),
        ("l2_penalty", format!("{:e}", c.train.l2_penalty)),
        ("gradient_tolerance", format!("{:e}", c.train.gradient_tolerance)),
        ("max_iterations", c.train.max_iterations.to_string()),
        ("bootstrap replicates", c.bootstrap.to_string()),
        ("alpha", c.alpha.to_string()),
        ("correction", "Bonferroni per family".to_string()),
        ("ece_bins", c.ece_bins.to_string()),
        ("tests", format!("{:?}", c.tests).to_lowercase()),
        ("bound delta", c.delta.to_string()),
        ("seed", c.seed.to_string()),
        ("rows (train / test)", format!("{} / {}", report.n_train, report.n_test)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "| {k} | {v} |");
    }
    let _ = writeln!(
        out,
        "\n**Result:** {}\n",
        if report.violation {
            "significant fair use violation"
        } else if report.point_violation {
            "no significant violation (point estimates show a violation)"
        } else {
            "no violation"
        }
    );
    for r in &report.metrics {
        metric_section(&mut out, r);
    }
    if !report.generalization.is_empty() {
        out.push_str("## Generalization bounds\n\n");
        out.push_str("| Metric | Group | n | VC | Rationality required n | Envy required n |\n|---|---|---|---|---|---|\n");
        for b in &report.generalization {
            let fmt = |v: &Option<crate::theory::BoundVerdict>| match v {
                Some(v) => format!("{}{}", v.required_n, if v.satisfied { " (met)" } else { "" }),
                None => "n/a".into(),
            };
            let _ = writeln!(out, "| {} | {} | {} | {} | {} | {} |", b.metric, b.group, b.n_g, b.vc, fmt(&b.rationality), fmt(&b.envy));
        }
        out.push('\n');
    }
    if let Some(iv) = &report.interventions {
        let _ = writeln!(out, "## Suggested interventions ({})\n", iv.metric);
        for a in &iv.plan.assignments {
            let _ = writeln!(out, "- {}: {}", a.group, a.source);
        }
        for a in &iv.advice {
            let _ = writeln!(out, "- {a}");
        }
        out.push('\n');
    }
    if !report.warnings.is_empty() {
        out.push_str("## Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
        out.push('\n');
    }
    out
}
