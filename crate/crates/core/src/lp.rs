//! Bounded-variable primal simplex for the continuous relaxations solved by
//! branch-and-bound.
//!
//! Every row gets a slack column (`a x + s = b`, with the slack box encoding
//! the row sense), and rows whose slack starts outside its box get an
//! artificial column for phase one. The tableau is dense; the models handled
//! here are desk-sized.
//!
//! Results are certified against the original model data: an optimal answer
//! must pass a primal feasibility check and a Lagrangian lower bound built
//! from the final duals must match the primal objective; an infeasibility
//! claim must come with a Farkas-type witness. Anything that fails these
//! checks is reported as [`LpStatus::NumericalFailure`].

use crate::milp::{Milp, Sense};

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
    /// Tolerance of the final primal check against the stored model.
    pub verify_tol: f64,
    /// Relative tolerance between the primal objective and the dual bound.
    pub certificate_tol: f64,
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            stall_threshold: 50,
            verify_tol: 1e-6,
            certificate_tol: 1e-6,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal solution over the model columns; empty unless optimal.
    pub x: Vec<f64>,
    /// Objective value including the constant; NaN unless optimal.
    pub objective: f64,
    /// Lagrangian lower bound computed from `duals`; equals `objective`
    /// within the certificate tolerance when optimal.
    pub dual_bound: f64,
    /// Row duals (phase-two duals when optimal, phase-one duals when
    /// infeasible).
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub diagnostics: Option<String>,
}

impl LpOutcome {
    fn failure(iterations: usize, why: String) -> Self {
        LpOutcome {
            status: LpStatus::NumericalFailure,
            x: Vec::new(),
            objective: f64::NAN,
            dual_bound: f64::NAN,
            duals: Vec::new(),
            iterations,
            diagnostics: Some(why),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solve the continuous relaxation of `model`. Binary columns are treated as
/// continuous within their bounds.
pub fn solve_lp(model: &Milp, tol: f64) -> LpOutcome {
    let opts = LpOptions {
        verify_tol: tol,
        ..LpOptions::default()
    };
    let (lower, upper): (Vec<f64>, Vec<f64>) =
        model.variables().iter().map(|v| (v.lower, v.upper)).unzip();
    solve_lp_with_bounds(model, &lower, &upper, &opts)
}

/// Solve the relaxation of `model` with column bounds replaced by
/// `lower`/`upper`.
pub fn solve_lp_with_bounds(
    model: &Milp,
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
) -> LpOutcome {
    let n = model.num_variables();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    if let Some(j) = (0..n).find(|&j| lower[j] > upper[j]) {
        // Empty box: the bounds themselves are the witness.
        return LpOutcome {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            dual_bound: f64::INFINITY,
            duals: vec![0.0; model.num_constraints()],
            iterations: 0,
            diagnostics: Some(format!("column {j} has lower bound above upper bound")),
        };
    }
    let mut tab = Tableau::new(model, lower, upper);
    tab.solve(model, opts)
}

struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    /// Row-major `m x ncols`, holds `B^-1 [A I R]`.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    /// Row holding each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    d: Vec<f64>,
    cost: Vec<f64>,
    /// Artificial column for each row, if any, with its sign.
    art: Vec<Option<(usize, f64)>>,
    rhs: Vec<f64>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

fn slack_box(sense: Sense) -> (f64, f64) {
    match sense {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
        Sense::Eq => (0.0, 0.0),
    }
}

fn resting_value(lower: f64, upper: f64) -> f64 {
    if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}

/// `min { d * v : lower <= v <= upper }`, treating `|d| <= zero_tol` as 0.
fn box_min(d: f64, lower: f64, upper: f64, zero_tol: f64) -> f64 {
    if d.abs() <= zero_tol {
        0.0
    } else if d > 0.0 {
        if lower.is_finite() {
            d * lower
        } else {
            f64::NEG_INFINITY
        }
    } else if upper.is_finite() {
        d * upper
    } else {
        f64::NEG_INFINITY
    }
}

impl Tableau {
    fn new(model: &Milp, lower: &[f64], upper: &[f64]) -> Self {
        let n = model.num_variables();
        let m = model.num_constraints();
        let mut x: Vec<f64> = (0..n).map(|j| resting_value(lower[j], upper[j])).collect();
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();

        // Residuals r = b - A x_N decide which rows need an artificial.
        let mut art = vec![None; m];
        let mut slack_val = vec![0.0; m];
        let mut n_art = 0;
        for (i, c) in model.constraints().iter().enumerate() {
            let r = c.rhs - c.activity(&x);
            let (sl, su) = slack_box(c.sense);
            let clamped = r.clamp(sl, su);
            slack_val[i] = clamped;
            if r != clamped {
                art[i] = Some((n + m + n_art, if r > clamped { 1.0 } else { -1.0 }));
                n_art += 1;
            }
        }
        let ncols = n + m + n_art;
        let mut t = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        let mut row_of = vec![usize::MAX; ncols];
        let mut rhs = vec![0.0; m];
        for (i, c) in model.constraints().iter().enumerate() {
            let (sl, su) = slack_box(c.sense);
            lo.push(sl);
            up.push(su);
            let row = &mut t[i * ncols..(i + 1) * ncols];
            for &(j, a) in &c.terms {
                row[j] = a;
            }
            row[n + i] = 1.0;
            rhs[i] = c.rhs;
            if let Some((col, sign)) = art[i] {
                row[col] = sign;
                // Basic coefficient is `sign`; normalise the row.
                if sign < 0.0 {
                    row.iter_mut().for_each(|v| *v = -*v);
                }
                basis[i] = col;
            } else {
                basis[i] = n + i;
            }
        }
        x.extend_from_slice(&slack_val);
        x.resize(ncols, 0.0);
        lo.resize(ncols, 0.0);
        up.resize(ncols, f64::INFINITY);
        for (i, c) in model.constraints().iter().enumerate() {
            if let Some((col, sign)) = art[i] {
                let r = c.rhs - c.activity(&x[..n]) - slack_val[i];
                x[col] = r / sign;
            }
        }
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = i;
        }
        Tableau {
            m,
            n,
            ncols,
            t,
            lower: lo,
            upper: up,
            x,
            basis,
            row_of,
            d: vec![0.0; ncols],
            cost: vec![0.0; ncols],
            art,
            rhs,
            iterations: 0,
        }
    }

    fn entry(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.ncols + j]
    }

    fn price_all(&mut self) {
        for j in 0..self.ncols {
            self.d[j] = self.cost[j];
        }
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            for (dj, &a) in self.d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// `B^-1` lives in the slack columns of the tableau.
    fn binv(&self, r: usize, i: usize) -> f64 {
        self.entry(r, self.n + i)
    }

    /// Recompute basic values from `B^-1 (b - N x_N)` using the original rows.
    fn refresh_basics(&mut self, model: &Milp) {
        let mut resid = self.rhs.clone();
        for (i, c) in model.constraints().iter().enumerate() {
            for &(j, a) in &c.terms {
                if self.row_of[j] == usize::MAX {
                    resid[i] -= a * self.x[j];
                }
            }
            if self.row_of[self.n + i] == usize::MAX {
                resid[i] -= self.x[self.n + i];
            }
            if let Some((col, sign)) = self.art[i] {
                if self.row_of[col] == usize::MAX {
                    resid[i] -= sign * self.x[col];
                }
            }
        }
        for r in 0..self.m {
            let v: f64 = (0..self.m).map(|i| self.binv(r, i) * resid[i]).sum();
            self.x[self.basis[r]] = v;
        }
    }

    /// Row duals `y = c_B B^-1` for the current cost vector.
    fn duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|r| self.cost[self.basis[r]] * self.binv(r, i))
                    .sum()
            })
            .collect()
    }

    fn run_phase(&mut self, opts: &LpOptions, limit: usize) -> PhaseEnd {
        self.price_all();
        let mut stall = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= limit {
                return PhaseEnd::IterationLimit;
            }
            // Pricing: Dantzig, ties to the lowest column; Bland when stalled.
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.row_of[j] != usize::MAX || self.lower[j] == self.upper[j] {
                    continue;
                }
                let dj = self.d[j];
                let dir = if dj < -opts.optimality_tol && self.x[j] < self.upper[j] {
                    1.0
                } else if dj > opts.optimality_tol && self.x[j] > self.lower[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return PhaseEnd::Optimal;
            };

            // Ratio test.
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, f64, f64)> = None; // (row, |alpha|, bound hit)
            for r in 0..self.m {
                let alpha = self.entry(r, q);
                if alpha.abs() < opts.pivot_tol {
                    continue;
                }
                let b = self.basis[r];
                let delta = -dir * alpha;
                let (ratio, hit) = if delta < 0.0 {
                    if !self.lower[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lower[b]) / -delta).max(0.0), self.lower[b])
                } else {
                    if !self.upper[b].is_finite() {
                        continue;
                    }
                    (((self.upper[b] - self.x[b]) / delta).max(0.0), self.upper[b])
                };
                let better = match leave {
                    None => true,
                    Some((lr, la, _)) => {
                        if ratio < step - 1e-12 {
                            true
                        } else if ratio <= step + 1e-12 {
                            if bland {
                                b < self.basis[lr]
                            } else {
                                alpha.abs() > la
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = if leave.is_none() { ratio } else { step.min(ratio) };
                    leave = Some((r, alpha.abs(), hit));
                }
            }
            let range = self.upper[q] - self.lower[q];
            let flip = range.is_finite() && range <= step;
            if !flip && leave.is_none() {
                return PhaseEnd::Unbounded;
            }
            let step = if flip { range } else { step };

            self.iterations += 1;
            if step <= 1e-12 {
                stall += 1;
                if stall > opts.stall_threshold {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }

            for r in 0..self.m {
                let alpha = self.entry(r, q);
                if alpha != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= dir * step * alpha;
                }
            }
            if flip {
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                continue;
            }
            self.x[q] += dir * step;
            let (r, _, hit) = leave.expect("checked above");
            let out = self.basis[r];
            self.x[out] = hit;
            self.pivot(r, q);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        let prow: Vec<f64> = self.t[r * nc..(r + 1) * nc].iter().map(|v| v / piv).collect();
        let nz: Vec<usize> = (0..nc).filter(|&k| prow[k] != 0.0).collect();
        self.t[r * nc..(r + 1) * nc].copy_from_slice(&prow);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &k in &nz {
                row[k] -= f * prow[k];
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
        }
        self.d[q] = 0.0;
        let out = self.basis[r];
        self.row_of[out] = usize::MAX;
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    /// Lagrangian value `y b + sum_j min_box(d_j x_j)` over structural and
    /// slack columns, with `d = c - [A I]^T y`.
    fn lagrangian_bound(&self, model: &Milp, y: &[f64], c: &[f64]) -> f64 {
        let mut d = c.to_vec();
        for (i, row) in model.constraints().iter().enumerate() {
            for &(j, a) in &row.terms {
                d[j] -= y[i] * a;
            }
        }
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zero_tol = 1e-9 * scale;
        let mut bound: f64 = model
            .constraints()
            .iter()
            .zip(y)
            .map(|(row, yi)| yi * row.rhs)
            .sum();
        for j in 0..self.n {
            bound += box_min(d[j], self.lower[j], self.upper[j], zero_tol);
        }
        for i in 0..self.m {
            bound += box_min(-y[i], self.lower[self.n + i], self.upper[self.n + i], zero_tol);
        }
        bound
    }

    fn solve(&mut self, model: &Milp, opts: &LpOptions) -> LpOutcome {
        let limit = opts
            .max_iterations
            .unwrap_or(200 * (self.m + self.ncols) + 1000);
        let n_art = self.ncols - self.n - self.m;

        if n_art > 0 {
            for j in self.n + self.m..self.ncols {
                self.cost[j] = 1.0;
            }
            match self.run_phase(opts, limit) {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return LpOutcome::failure(self.iterations, "phase one reported unbounded".into())
                }
                PhaseEnd::IterationLimit => {
                    return LpOutcome::failure(self.iterations, "iteration limit in phase one".into())
                }
            }
            self.refresh_basics(model);
            let infeas: f64 = (self.n + self.m..self.ncols).map(|j| self.x[j].max(0.0)).sum();
            let scale = 1.0
                + model
                    .constraints()
                    .iter()
                    .fold(0.0f64, |m, c| m.max(c.rhs.abs()));
            if infeas > opts.feasibility_tol * scale {
                let y = self.duals();
                let witness = self.lagrangian_bound(model, &y, &vec![0.0; self.n]);
                if witness > 1e-9 * scale {
                    return LpOutcome {
                        status: LpStatus::Infeasible,
                        x: Vec::new(),
                        objective: f64::NAN,
                        dual_bound: f64::INFINITY,
                        duals: y,
                        iterations: self.iterations,
                        diagnostics: Some(format!(
                            "phase one residual {infeas:.3e}, witness gap {witness:.3e}"
                        )),
                    };
                }
                return LpOutcome::failure(
                    self.iterations,
                    format!(
                        "phase one residual {infeas:.3e} without a certifying witness ({witness:.3e})"
                    ),
                );
            }
            for j in self.n + self.m..self.ncols {
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
                if self.row_of[j] == usize::MAX {
                    self.x[j] = 0.0;
                }
            }
        }

        let c = model.objective_dense();
        self.cost[..self.n].copy_from_slice(&c);
        match self.run_phase(opts, limit) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return LpOutcome {
                    status: LpStatus::Unbounded,
                    x: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    dual_bound: f64::NEG_INFINITY,
                    duals: Vec::new(),
                    iterations: self.iterations,
                    diagnostics: None,
                }
            }
            PhaseEnd::IterationLimit => {
                return LpOutcome::failure(self.iterations, "iteration limit in phase two".into())
            }
        }
        self.refresh_basics(model);

        let mut x = self.x[..self.n].to_vec();
        for j in 0..self.n {
            // Basic values may sit a hair outside their box after refresh.
            if x[j] < self.lower[j] && self.lower[j] - x[j] <= opts.feasibility_tol {
                x[j] = self.lower[j];
            } else if x[j] > self.upper[j] && x[j] - self.upper[j] <= opts.feasibility_tol {
                x[j] = self.upper[j];
            }
        }
        let mut worst = 0.0f64;
        for j in 0..self.n {
            worst = worst
                .max(self.lower[j] - x[j])
                .max(x[j] - self.upper[j]);
        }
        for row in model.constraints() {
            worst = worst.max(row.violation(&x));
        }
        if worst > opts.verify_tol {
            return LpOutcome::failure(
                self.iterations,
                format!("optimal basis violates the model by {worst:.3e}"),
            );
        }
        let objective = model.objective_value(&x);
        let y = self.duals();
        let dual_bound = self.lagrangian_bound(model, &y, &c) + model.objective_constant();
        if !((dual_bound - objective).abs() <= opts.certificate_tol * (1.0 + objective.abs())) {
            return LpOutcome::failure(
                self.iterations,
                format!("dual bound {dual_bound} does not certify objective {objective}"),
            );
        }
        LpOutcome {
            status: LpStatus::Optimal,
            x,
            objective,
            dual_bound,
            duals: y,
            iterations: self.iterations,
            diagnostics: None,
        }
    }
}
