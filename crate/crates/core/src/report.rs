//! Cost metrics and the text/CSV report for a set of solved variants.

use std::fmt::Write as _;

use thiserror::Error;

use crate::bnb::{SolveOutcome, SolveStatus};
use crate::builder::{LineKind, Plan, Variant};
use crate::case::Case;

/// Savings of a switching plan against the plain expansion plan. Positive
/// values mean the switching plan is cheaper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tcr: f64,
    pub rho: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("baseline total cost must be positive (got {0})")]
pub struct MetricsError(pub f64);

pub fn compute_metrics(tc_tep: f64, tc_sno: f64) -> Result<Metrics, MetricsError> {
    if !(tc_tep > 0.0) {
        return Err(MetricsError(tc_tep));
    }
    let tcr = tc_tep - tc_sno;
    Ok(Metrics {
        tcr,
        rho: tcr / tc_tep,
    })
}

/// Whole dollars with thousands separators, e.g. `9,921,190,000`.
pub fn format_dollars(v: f64) -> String {
    if !v.is_finite() {
        return "-".into();
    }
    let rounded = v.round();
    let digits = format!("{:.0}", rounded.abs());
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if rounded < 0.0 {
        out.insert(0, '-');
    }
    out
}

/// A fraction as a percentage with `places` decimals.
pub fn format_percent(fraction: f64, places: usize) -> String {
    if !fraction.is_finite() {
        return "-".into();
    }
    let v = fraction * 100.0;
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.places$}%")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
}

impl From<&SolveOutcome> for SolveSummary {
    fn from(o: &SolveOutcome) -> Self {
        SolveSummary {
            status: o.status,
            best_bound: o.best_bound,
            gap: o.gap,
            nodes: o.nodes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub plan: Plan,
    pub solve: Option<SolveSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
}

/// New-line ids per epoch, `" | "` between epochs and `N/A` for an epoch
/// without builds.
pub fn investment_row(case: &Case, plan: &Plan) -> String {
    (0..plan.epochs)
        .map(|e| {
            let ids: Vec<&str> = plan.builds_in(e).map(|c| case.candidates[c].id.as_str()).collect();
            if ids.is_empty() {
                "N/A".to_string()
            } else {
                ids.join(", ")
            }
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn line_label(case: &Case, kind: LineKind, line: usize) -> String {
    match kind {
        LineKind::Existing => case.branches[line].id.clone(),
        LineKind::Candidate => format!("new {}", case.candidates[line].id),
    }
}

/// Open lines as `[season][epoch]` cells.
pub fn switching_cells(case: &Case, plan: &Plan) -> Vec<Vec<String>> {
    (0..plan.seasons)
        .map(|s| {
            (0..plan.epochs)
                .map(|e| {
                    plan.open_in(s, e)
                        .map(|o| line_label(case, o.kind, o.line))
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .collect()
        })
        .collect()
}

fn table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut width = vec![0; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i == 0 {
                let _ = write!(line, "{cell:<w$}", w = width[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = width[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn metrics_for(runs: &[VariantRun], plan: &Plan) -> Option<Metrics> {
    let base = runs.iter().find(|r| r.plan.variant == Variant::Tep)?;
    compute_metrics(base.plan.tc, plan.tc).ok()
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_else(|| "-".into())
}

pub fn render_report(case: &Case, header: &[(String, String)], runs: &[VariantRun]) -> Report {
    let mut text = String::new();
    let _ = writeln!(text, "Case: {}", case.name.as_deref().unwrap_or("(unnamed)"));
    for (k, v) in header {
        let _ = writeln!(text, "{k}: {v}");
    }

    text.push_str("\nCost summary\n");
    let mut rows = vec![std::iter::once("Model".to_string())
        .chain(runs.iter().map(|r| r.plan.variant.label().to_string()))
        .collect::<Vec<_>>()];
    let metrics: Vec<Option<Metrics>> = runs.iter().map(|r| metrics_for(runs, &r.plan)).collect();
    let mut add = |label: &str, f: &dyn Fn(usize, &VariantRun) -> String| {
        let mut row = vec![label.to_string()];
        row.extend(runs.iter().enumerate().map(|(i, r)| f(i, r)));
        rows.push(row);
    };
    add("Total cost ($)", &|_, r| format_dollars(r.plan.tc));
    add("TCR ($) [1]", &|i, r| {
        if r.plan.variant == Variant::Tep {
            "-".into()
        } else {
            opt(metrics[i], |m| format_dollars(m.tcr))
        }
    });
    add("rho [1]", &|i, r| {
        if r.plan.variant == Variant::Tep {
            "-".into()
        } else {
            opt(metrics[i], |m| format_percent(m.rho, 2))
        }
    });
    add("Investment cost ($)", &|_, r| format_dollars(r.plan.tc_i));
    add("Generation cost ($)", &|_, r| format_dollars(r.plan.tc_g));
    add("Best bound ($)", &|_, r| opt(r.solve, |s| format_dollars(s.best_bound)));
    add("Gap", &|_, r| opt(r.solve, |s| format_percent(s.gap, 4)));
    add("Status", &|_, r| opt(r.solve, |s| s.status.to_string()));
    add("Nodes", &|_, r| opt(r.solve, |s| s.nodes.to_string()));
    table(&mut text, &rows);
    text.push_str("[1] TCR = TC(TEP) - TC(model), positive when switching saves money; rho = TCR / TC(TEP).\n");

    text.push_str("\nInvestment decisions (new line ids per epoch)\n");
    let epochs = case.horizon.epochs;
    let mut rows = vec![vec![
        "Model".to_string(),
        (1..=epochs).map(|e| format!("Epoch {e}")).collect::<Vec<_>>().join(" | "),
    ]];
    for r in runs {
        rows.push(vec![r.plan.variant.label().to_string(), investment_row(case, &r.plan)]);
    }
    left_table(&mut text, &rows);

    for r in runs.iter().filter(|r| r.plan.variant != Variant::Tep) {
        let _ = writeln!(text, "\nOpen lines, {} (season x epoch)", r.plan.variant.label());
        let mut rows = vec![{
            let mut h = vec!["Season".to_string()];
            h.extend((1..=r.plan.epochs).map(|e| format!("Epoch {e}")));
            h
        }];
        for (s, cells) in switching_cells(case, &r.plan).into_iter().enumerate() {
            let mut row = vec![case.horizon.season_name(s)];
            row.extend(cells);
            rows.push(row);
        }
        pipe_table(&mut text, &rows);
    }

    let files = vec![
        ("costs.csv".to_string(), costs_csv(runs, &metrics)),
        ("investments.csv".to_string(), investments_csv(case, runs)),
        ("switching.csv".to_string(), switching_csv(case, runs)),
    ]
    .into_iter()
    .chain(
        runs.iter()
            .map(|r| (format!("plan_{}.csv", r.plan.variant.tag()), plan_csv(case, &r.plan))),
    )
    .collect();
    Report { text, files }
}

fn left_table(out: &mut String, rows: &[Vec<String>]) {
    let w = rows.iter().map(|r| r[0].chars().count()).max().unwrap_or(0);
    for row in rows {
        let _ = writeln!(out, "{:<w$}  {}", row[0], row[1]);
    }
}

fn pipe_table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut width = vec![0; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = width[i]))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
    }
}

fn costs_csv(runs: &[VariantRun], metrics: &[Option<Metrics>]) -> String {
    let mut out = String::from("variant,tc,tc_i,tc_g,tcr,rho,status,best_bound,gap,nodes\n");
    for (r, m) in runs.iter().zip(metrics) {
        let p = &r.plan;
        let (tcr, rho) = m.map(|m| (m.tcr.to_string(), m.rho.to_string())).unwrap_or_default();
        let (status, bound, gap, nodes) = r
            .solve
            .map(|s| (s.status.to_string(), s.best_bound.to_string(), s.gap.to_string(), s.nodes.to_string()))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{tcr},{rho},{status},{bound},{gap},{nodes}",
            p.variant.tag(),
            p.tc,
            p.tc_i,
            p.tc_g
        );
    }
    out
}

fn investments_csv(case: &Case, runs: &[VariantRun]) -> String {
    let mut out = String::from("variant,candidate,from_bus,to_bus,epoch\n");
    for r in runs {
        for b in &r.plan.builds {
            let c = &case.candidates[b.candidate];
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.plan.variant.tag(),
                c.id,
                c.from_bus,
                c.to_bus,
                b.epoch + 1
            );
        }
    }
    out
}

fn switching_csv(case: &Case, runs: &[VariantRun]) -> String {
    let mut out = String::from("variant,kind,line,season,epoch\n");
    for r in runs {
        for o in &r.plan.switching {
            let (kind, id) = match o.kind {
                LineKind::Existing => ("existing", &case.branches[o.line].id),
                LineKind::Candidate => ("candidate", &case.candidates[o.line].id),
            };
            let _ = writeln!(
                out,
                "{},{kind},{id},{},{}",
                r.plan.variant.tag(),
                case.horizon.season_name(o.season),
                o.epoch + 1
            );
        }
    }
    out
}

/// Long-format per-interval values of one plan. Epochs, seasons and hours
/// are one-based.
pub fn plan_csv(case: &Case, plan: &Plan) -> String {
    let mut out = String::from("quantity,element,epoch,season,hour,value\n");
    let series: [(&str, &[f64], Vec<&str>); 4] = [
        ("dispatch", &plan.dispatch, case.generators.iter().map(|g| g.id.as_str()).collect()),
        ("angle", &plan.angles, case.buses.iter().map(|b| b.id.as_str()).collect()),
        ("branch_flow", &plan.branch_flows, case.branches.iter().map(|b| b.id.as_str()).collect()),
        (
            "candidate_flow",
            &plan.candidate_flows,
            case.candidates.iter().map(|c| c.id.as_str()).collect(),
        ),
    ];
    for (quantity, values, ids) in &series {
        if ids.is_empty() {
            continue;
        }
        for (i, v) in values.iter().enumerate() {
            let interval = i / ids.len();
            let hour = interval % plan.hours;
            let season = (interval / plan.hours) % plan.seasons;
            let epoch = interval / (plan.hours * plan.seasons);
            let _ = writeln!(
                out,
                "{quantity},{},{},{},{},{v}",
                ids[i % ids.len()],
                epoch + 1,
                season + 1,
                hour + 1
            );
        }
    }
    out
}
