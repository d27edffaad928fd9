//! Branch-and-bound over the binary columns of a [`Milp`], and an exhaustive
//! enumeration oracle used to check it.
//!
//! Search: depth-first plunging until the first incumbent, best-bound after.
//! Branching picks the most fractional binary, ties to the lowest column.
//! Pruning compares node bounds with the incumbent only, so the node sequence
//! does not depend on `mip_gap`; the gap only decides when to stop.

use crate::lp::{solve_lp_with_bounds, LpOptions, LpOutcome, LpStatus};
use crate::milp::{Milp, VarKind};
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Largest binary count `enumerate_exact` accepts unless told otherwise.
pub const DEFAULT_MAX_BINARIES: usize = 20;

#[derive(Debug, Clone)]
pub struct SolveParams {
    /// Relative gap at which the search stops (default 0.001%).
    pub mip_gap: f64,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    /// LP values this close to 0 or 1 count as integral.
    pub integrality_tol: f64,
    /// Print one progress line per improvement to stderr.
    pub verbose: bool,
    pub lp: LpOptions,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            mip_gap: 1e-5,
            time_limit: Duration::from_secs(3000),
            node_limit: None,
            integrality_tol: 1e-6,
            verbose: false,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Search tree exhausted.
    Optimal,
    /// Stopped with open nodes because the gap reached `mip_gap`.
    GapLimit,
    TimeLimit,
    NodeLimit,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    /// True when the incumbent is proven within the requested gap.
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapLimit => "gap_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub nodes: usize,
    pub incumbent: Option<f64>,
    pub bound: f64,
    pub gap: f64,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.incumbent {
            Some(inc) => write!(
                f,
                "nodes {:>7}  incumbent {:>18.4}  bound {:>18.4}  gap {:>9.4}%",
                self.nodes,
                inc,
                self.bound,
                100.0 * self.gap
            ),
            None => write!(
                f,
                "nodes {:>7}  incumbent {:>18}  bound {:>18.4}  gap {:>10}",
                self.nodes, "-", self.bound, "-"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Incumbent objective, `+inf` without one.
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_solves: usize,
    /// Set when the time limit ended the run; such runs are not reproducible.
    pub time_limited: bool,
    pub progress: Vec<Progress>,
    pub diagnostics: Option<String>,
}

/// `(incumbent - bound) / max(|incumbent|, eps)`.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1e-10)).max(0.0)
}

struct Node {
    fixings: Vec<(usize, f64)>,
    bound: f64,
    id: usize,
}

struct Search<'a> {
    model: &'a Milp,
    params: &'a SolveParams,
    base_lower: Vec<f64>,
    base_upper: Vec<f64>,
    lp_solves: usize,
}

impl Search<'_> {
    fn solve_with(&mut self, fixings: &[(usize, f64)]) -> LpOutcome {
        let mut lower = self.base_lower.clone();
        let mut upper = self.base_upper.clone();
        for &(j, v) in fixings {
            lower[j] = v;
            upper[j] = v;
        }
        self.lp_solves += 1;
        solve_lp_with_bounds(self.model, &lower, &upper, &self.params.lp)
    }
}

/// Solve `model` to the requested gap by branch-and-bound.
pub fn solve_milp(model: &Milp, params: &SolveParams) -> SolveOutcome {
    let start = Instant::now();
    let binaries: Vec<usize> = model.binary_columns().collect();
    let (base_lower, base_upper): (Vec<f64>, Vec<f64>) =
        model.variables().iter().map(|v| (v.lower, v.upper)).unzip();
    let mut search = Search {
        model,
        params,
        base_lower,
        base_upper,
        lp_solves: 0,
    };

    let mut open = vec![Node {
        fixings: Vec::new(),
        bound: f64::NEG_INFINITY,
        id: 0,
    }];
    let mut next_id = 1;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    let mut bound = f64::NEG_INFINITY;
    let mut nodes = 0usize;
    let mut progress = Vec::new();
    let mut diagnostics = None;

    let status = loop {
        if open.is_empty() {
            break if incumbent.is_some() {
                bound = inc_obj;
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
        }
        if incumbent.is_some() && relative_gap(inc_obj, bound) <= params.mip_gap {
            break SolveStatus::GapLimit;
        }
        if start.elapsed() >= params.time_limit {
            break SolveStatus::TimeLimit;
        }
        if params.node_limit.is_some_and(|limit| nodes >= limit) {
            break SolveStatus::NodeLimit;
        }

        let pick = if incumbent.is_none() {
            open.len() - 1
        } else {
            let mut best = 0;
            for (i, node) in open.iter().enumerate() {
                let b = &open[best];
                if node.bound < b.bound || (node.bound == b.bound && node.id < b.id) {
                    best = i;
                }
            }
            best
        };
        let node = open.remove(pick);
        let prune_tol = 1e-9 * (1.0 + inc_obj.abs().min(1e300));
        if node.bound >= inc_obj - prune_tol {
            continue;
        }

        nodes += 1;
        let lp = search.solve_with(&node.fixings);
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                update_bound(&open, &mut bound, incumbent.is_some(), inc_obj, nodes, &mut progress, params);
                continue;
            }
            LpStatus::Unbounded => {
                break SolveStatus::Unbounded;
            }
            LpStatus::NumericalFailure => {
                diagnostics = lp.diagnostics;
                break SolveStatus::NumericalFailure;
            }
        }
        let node_bound = lp.objective.max(node.bound);
        if node_bound >= inc_obj - prune_tol {
            update_bound(&open, &mut bound, incumbent.is_some(), inc_obj, nodes, &mut progress, params);
            continue;
        }

        let mut branch: Option<(usize, f64)> = None;
        let mut worst = params.integrality_tol;
        for &j in &binaries {
            let frac = (lp.x[j] - lp.x[j].round()).abs();
            if frac > worst {
                worst = frac;
                branch = Some((j, lp.x[j]));
            }
        }

        match branch {
            None => {
                // Integral within tolerance: re-solve with the rounded
                // binaries fixed so the incumbent is exactly integral.
                let exact = if binaries.iter().all(|&j| lp.x[j] == lp.x[j].round()) {
                    lp
                } else {
                    let mut fixings = node.fixings.clone();
                    for &j in &binaries {
                        if !fixings.iter().any(|&(c, _)| c == j) {
                            fixings.push((j, lp.x[j].round()));
                        }
                    }
                    search.solve_with(&fixings)
                };
                if exact.is_optimal() && exact.objective < inc_obj {
                    inc_obj = exact.objective;
                    incumbent = Some(exact.x);
                    open.retain(|n| n.bound < inc_obj - 1e-9 * (1.0 + inc_obj.abs()));
                    record(&mut progress, nodes, Some(inc_obj), bound.min(inc_obj), params);
                } else if exact.status == LpStatus::NumericalFailure {
                    diagnostics = exact.diagnostics;
                    break SolveStatus::NumericalFailure;
                }
            }
            Some((j, value)) => {
                let up_first = value >= 0.5;
                let child = |v: f64, id: usize| {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    Node {
                        fixings,
                        bound: node_bound,
                        id,
                    }
                };
                let (second, first) = if up_first { (0.0, 1.0) } else { (1.0, 0.0) };
                open.push(child(second, next_id));
                open.push(child(first, next_id + 1));
                next_id += 2;
            }
        }
        update_bound(&open, &mut bound, incumbent.is_some(), inc_obj, nodes, &mut progress, params);
    };

    let lp_solves = search.lp_solves;
    if status == SolveStatus::Infeasible {
        bound = f64::INFINITY;
    }
    if incumbent.is_some() {
        bound = bound.min(inc_obj);
    }
    let out = SolveOutcome {
        status,
        gap: relative_gap(inc_obj, bound),
        incumbent,
        objective: inc_obj,
        best_bound: bound,
        nodes,
        lp_solves,
        time_limited: status == SolveStatus::TimeLimit,
        progress,
        diagnostics,
    };
    if params.verbose {
        eprintln!(
            "branch-and-bound {}: {} nodes, {} LP solves, objective {}, bound {}, gap {:.6}%",
            out.status,
            out.nodes,
            out.lp_solves,
            out.objective,
            out.best_bound,
            100.0 * out.gap
        );
    }
    out
}

fn record(progress: &mut Vec<Progress>, nodes: usize, incumbent: Option<f64>, bound: f64, params: &SolveParams) {
    let gap = incumbent.map_or(f64::INFINITY, |inc| relative_gap(inc, bound));
    let entry = Progress {
        nodes,
        incumbent,
        bound,
        gap,
    };
    if params.verbose {
        eprintln!("{entry}");
    }
    progress.push(entry);
}

/// Raise the global bound to the smallest open-node bound. The bound only
/// moves up: child bounds are never below their parent's.
fn update_bound(
    open: &[Node],
    bound: &mut f64,
    has_incumbent: bool,
    inc_obj: f64,
    nodes: usize,
    progress: &mut Vec<Progress>,
    params: &SolveParams,
) {
    let mut candidate = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    if has_incumbent {
        candidate = candidate.min(inc_obj);
    }
    if !candidate.is_finite() {
        return;
    }
    if candidate > *bound {
        *bound = candidate;
        record(progress, nodes, has_incumbent.then_some(inc_obj), *bound, params);
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnumerationError {
    #[error("model has {binaries} binary columns, enumeration is capped at {max}")]
    TooManyBinaries { binaries: usize, max: usize },
}

/// Solve the LP for every assignment of the binary columns and keep the best.
///
/// Rows touching only binary columns are checked before any LP is solved;
/// assignments violating them are infeasible regardless of the continuous
/// part.
pub fn enumerate_exact(model: &Milp, max_binaries: usize) -> Result<SolveOutcome, EnumerationError> {
    let binaries: Vec<usize> = model.binary_columns().collect();
    if binaries.len() > max_binaries {
        return Err(EnumerationError::TooManyBinaries {
            binaries: binaries.len(),
            max: max_binaries,
        });
    }
    let is_binary: Vec<bool> = model.variables().iter().map(|v| v.kind == VarKind::Binary).collect();
    let binary_rows: Vec<_> = model
        .constraints()
        .iter()
        .filter(|c| c.terms.iter().all(|&(j, _)| is_binary[j]))
        .collect();

    let (lower, upper): (Vec<f64>, Vec<f64>) =
        model.variables().iter().map(|v| (v.lower, v.upper)).unzip();
    let opts = LpOptions::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lp_solves = 0;
    let mut x = vec![0.0; model.num_variables()];
    let mut status = SolveStatus::Infeasible;
    let mut diagnostics = None;

    'outer: for mask in 0u64..(1u64 << binaries.len()) {
        for (bit, &j) in binaries.iter().enumerate() {
            x[j] = ((mask >> bit) & 1) as f64;
            if x[j] < lower[j] || x[j] > upper[j] {
                continue 'outer;
            }
        }
        if binary_rows.iter().any(|c| c.violation(&x) > 1e-9) {
            continue;
        }
        let mut lo = lower.clone();
        let mut hi = upper.clone();
        for &j in &binaries {
            lo[j] = x[j];
            hi[j] = x[j];
        }
        lp_solves += 1;
        let lp = solve_lp_with_bounds(model, &lo, &hi, &opts);
        match lp.status {
            LpStatus::Optimal => {
                if best.as_ref().is_none_or(|(obj, _)| lp.objective < *obj) {
                    best = Some((lp.objective, lp.x));
                }
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => {
                status = SolveStatus::Unbounded;
                break;
            }
            LpStatus::NumericalFailure => {
                status = SolveStatus::NumericalFailure;
                diagnostics = lp.diagnostics;
                break;
            }
        }
    }

    let (objective, incumbent, bound) = match (status, best) {
        (SolveStatus::Infeasible, Some((obj, x))) => {
            status = SolveStatus::Optimal;
            (obj, Some(x), obj)
        }
        (SolveStatus::Infeasible, None) => (f64::INFINITY, None, f64::INFINITY),
        (_, best) => (
            best.as_ref().map_or(f64::INFINITY, |b| b.0),
            best.map(|b| b.1),
            f64::NEG_INFINITY,
        ),
    };
    Ok(SolveOutcome {
        status,
        gap: if status == SolveStatus::Optimal { 0.0 } else { relative_gap(objective, bound) },
        incumbent,
        objective,
        best_bound: bound,
        nodes: lp_solves,
        lp_solves,
        time_limited: false,
        progress: Vec::new(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    fn knapsack() -> Milp {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = Milp::new();
        let a = m.add_variable(VarKind::Binary, 0.0, 1.0, "a").unwrap();
        let b = m.add_variable(VarKind::Binary, 0.0, 1.0, "b").unwrap();
        let c = m.add_variable(VarKind::Binary, 0.0, 1.0, "c").unwrap();
        m.add_constraint("r1", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 5.0).unwrap();
        m.add_constraint("r2", vec![(a, 4.0), (b, 1.0), (c, 2.0)], Sense::Le, 11.0).unwrap();
        m.add_constraint("r3", vec![(a, 3.0), (b, 4.0), (c, 2.0)], Sense::Le, 8.0).unwrap();
        m.set_objective(vec![(a, -5.0), (b, -4.0), (c, -3.0)], 0.0).unwrap();
        m
    }

    #[test]
    fn no_binaries_is_one_lp() {
        let mut m = Milp::new();
        let x = m.add_variable(VarKind::Continuous, 0.0, 10.0, "x").unwrap();
        m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 2.5).unwrap();
        m.set_objective(vec![(x, 2.0)], 0.0).unwrap();
        let out = solve_milp(&m, &SolveParams::default());
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.lp_solves, 1);
        assert_eq!(out.gap, 0.0);
        assert!((out.objective - 5.0).abs() < 1e-9);

        let oracle = enumerate_exact(&m, DEFAULT_MAX_BINARIES).unwrap();
        assert_eq!(oracle.lp_solves, 1);
        assert!((oracle.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_relaxation() {
        let mut m = Milp::new();
        let z = m.add_variable(VarKind::Binary, 0.0, 1.0, "z").unwrap();
        m.add_constraint("c", vec![(z, 1.0)], Sense::Ge, 2.0).unwrap();
        assert_eq!(solve_milp(&m, &SolveParams::default()).status, SolveStatus::Infeasible);
        assert_eq!(enumerate_exact(&m, 4).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let m = knapsack();
        let bb = solve_milp(&m, &SolveParams { mip_gap: 0.0, ..SolveParams::default() });
        let ex = enumerate_exact(&m, 3).unwrap();
        assert_eq!(bb.status, SolveStatus::Optimal);
        // a + b fits every row (5, 5, 7); adding c breaks the first
        assert!((ex.objective + 9.0).abs() < 1e-9);
        assert!((bb.objective - ex.objective).abs() < 1e-9);
        assert!(m.evaluate(bb.incumbent.as_ref().unwrap(), 1e-6).unwrap().is_feasible());
    }

    #[test]
    fn single_feasible_assignment() {
        let mut m = Milp::new();
        let cols: Vec<usize> = (0..3)
            .map(|i| m.add_variable(VarKind::Binary, 0.0, 1.0, format!("b{i}")).unwrap())
            .collect();
        m.add_constraint("a", vec![(cols[0], 1.0), (cols[1], 1.0)], Sense::Eq, 1.0).unwrap();
        m.add_constraint("b", vec![(cols[1], 1.0), (cols[2], 1.0)], Sense::Eq, 2.0).unwrap();
        let ex = enumerate_exact(&m, 3).unwrap();
        assert_eq!(ex.status, SolveStatus::Optimal);
        assert_eq!(ex.incumbent.unwrap(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn enumeration_refuses_large_models() {
        let mut m = Milp::new();
        for i in 0..5 {
            m.add_variable(VarKind::Binary, 0.0, 1.0, format!("b{i}")).unwrap();
        }
        assert_eq!(
            enumerate_exact(&m, 4).unwrap_err(),
            EnumerationError::TooManyBinaries { binaries: 5, max: 4 }
        );
    }

    #[test]
    fn node_limit_stops_search() {
        let m = knapsack();
        let out = solve_milp(&m, &SolveParams { node_limit: Some(1), mip_gap: 0.0, ..SolveParams::default() });
        assert!(matches!(out.status, SolveStatus::NodeLimit | SolveStatus::Optimal));
        assert!(out.nodes <= 1);
    }

    #[test]
    fn gap_is_relative_to_incumbent() {
        assert_eq!(relative_gap(100.0, 99.0), 0.01);
        assert_eq!(relative_gap(f64::INFINITY, 3.0), f64::INFINITY);
        assert_eq!(relative_gap(5.0, 5.0), 0.0);
    }
}
