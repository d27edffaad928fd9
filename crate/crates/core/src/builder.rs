//! Assembly of the three planning models and decoding of their solutions.
//!
//! | variant | existing branches            | candidate lines                    |
//! |---------|------------------------------|------------------------------------|
//! | TEP     | DC flow, fixed in service    | big-M flow on availability `u`     |
//! | T1      | big-M flow on status `z_kse` | big-M flow on availability `u`     |
//! | T2      | big-M flow on status `z_kse` | big-M flow on status `z_jse <= u`  |
//!
//! Branches flagged `switchable: false` keep the plain DC flow equation under
//! every variant. All index arguments (hour, season, epoch) are zero-based;
//! generated names are one-based.

use crate::case::{validate_case, Case, ValidationReport};
use crate::milp::{Milp, ModelError, Sense, VarKind};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Tep,
    SnoT1,
    SnoT2,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Tep, Variant::SnoT1, Variant::SnoT2];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Tep => "TEP",
            Variant::SnoT1 => "TEP-SNO-T1",
            Variant::SnoT2 => "TEP-SNO-T2",
        }
    }

    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Tep => "tep",
            Variant::SnoT1 => "t1",
            Variant::SnoT2 => "t2",
        }
    }

    pub fn switches_existing(self) -> bool {
        self != Variant::Tep
    }

    pub fn switches_candidates(self) -> bool {
        self == Variant::SnoT2
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tep" => Ok(Variant::Tep),
            "t1" | "sno-t1" | "tep-sno-t1" => Ok(Variant::SnoT1),
            "t2" | "sno-t2" | "tep-sno-t2" => Ok(Variant::SnoT2),
            _ => Err(format!("unknown variant `{s}` (expected tep, t1 or t2)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("case failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParameterError {
    #[error("epoch {epoch} outside 1..={epochs}")]
    EpochOutOfRange { epoch: usize, epochs: usize },
    #[error("big-M needs positive reactance and angle bound (got {reactance}, {angle_bound})")]
    NonPositive { reactance: f64, angle_bound: f64 },
}

/// Capital-cost multiplier of a line finished at the start of epoch `e`
/// (one-based): `1 + (n_e - e + 1) * n_ye * a_m`.
pub fn investment_multiplier(n_e: usize, n_ye: usize, a_m: f64, e: usize) -> Result<f64, ParameterError> {
    if e < 1 || e > n_e {
        return Err(ParameterError::EpochOutOfRange { epoch: e, epochs: n_e });
    }
    Ok(1.0 + ((n_e - e + 1) * n_ye) as f64 * a_m)
}

/// Smallest valid big-M for a switchable line with angles confined to
/// `[-angle_bound, angle_bound]`: an open line has zero flow, so the
/// relaxed residual is at most `2 * angle_bound / reactance`.
pub fn branch_big_m(reactance: f64, angle_bound: f64) -> Result<f64, ParameterError> {
    if !(reactance > 0.0 && angle_bound > 0.0) {
        return Err(ParameterError::NonPositive {
            reactance,
            angle_bound,
        });
    }
    Ok(2.0 * angle_bound / reactance)
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Multiplier applied to every computed big-M.
    pub big_m_scale: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { big_m_scale: 1.0 }
    }
}

/// Semantic identity of a model column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Dispatch { gen: usize, hour: usize, season: usize, epoch: usize },
    Angle { bus: usize, hour: usize, season: usize, epoch: usize },
    BranchFlow { branch: usize, hour: usize, season: usize, epoch: usize },
    CandidateFlow { candidate: usize, hour: usize, season: usize, epoch: usize },
    Available { candidate: usize, epoch: usize },
    Built { candidate: usize, epoch: usize },
    BranchStatus { branch: usize, season: usize, epoch: usize },
    CandidateStatus { candidate: usize, season: usize, epoch: usize },
}

/// Bidirectional map between model columns and their semantic identities.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableIndex {
    pub variant: Variant,
    pub hours: usize,
    pub seasons: usize,
    pub epochs: usize,
    n_gens: usize,
    n_buses: usize,
    n_branches: usize,
    n_candidates: usize,
    dispatch: Vec<usize>,
    angle: Vec<usize>,
    branch_flow: Vec<usize>,
    candidate_flow: Vec<usize>,
    available: Vec<usize>,
    built: Vec<usize>,
    branch_status: Vec<Option<usize>>,
    candidate_status: Vec<Option<usize>>,
    columns: Vec<Column>,
}

impl VariableIndex {
    fn interval(&self, hour: usize, season: usize, epoch: usize) -> usize {
        assert!(hour < self.hours && season < self.seasons && epoch < self.epochs);
        (epoch * self.seasons + season) * self.hours + hour
    }

    fn season_epoch(&self, season: usize, epoch: usize) -> usize {
        assert!(season < self.seasons && epoch < self.epochs);
        epoch * self.seasons + season
    }

    pub fn intervals(&self) -> usize {
        self.hours * self.seasons * self.epochs
    }

    pub fn dispatch(&self, gen: usize, hour: usize, season: usize, epoch: usize) -> usize {
        self.dispatch[self.interval(hour, season, epoch) * self.n_gens + gen]
    }

    pub fn angle(&self, bus: usize, hour: usize, season: usize, epoch: usize) -> usize {
        self.angle[self.interval(hour, season, epoch) * self.n_buses + bus]
    }

    pub fn branch_flow(&self, branch: usize, hour: usize, season: usize, epoch: usize) -> usize {
        self.branch_flow[self.interval(hour, season, epoch) * self.n_branches + branch]
    }

    pub fn candidate_flow(&self, candidate: usize, hour: usize, season: usize, epoch: usize) -> usize {
        self.candidate_flow[self.interval(hour, season, epoch) * self.n_candidates + candidate]
    }

    pub fn available(&self, candidate: usize, epoch: usize) -> usize {
        self.available[epoch * self.n_candidates + candidate]
    }

    pub fn built(&self, candidate: usize, epoch: usize) -> usize {
        self.built[epoch * self.n_candidates + candidate]
    }

    /// Status column of an existing branch; `None` under TEP or for
    /// non-switchable branches.
    pub fn branch_status(&self, branch: usize, season: usize, epoch: usize) -> Option<usize> {
        self.branch_status
            .get(self.season_epoch(season, epoch) * self.n_branches + branch)
            .copied()
            .flatten()
    }

    /// Status column of a candidate line; `None` unless the variant is T2.
    pub fn candidate_status(&self, candidate: usize, season: usize, epoch: usize) -> Option<usize> {
        self.candidate_status
            .get(self.season_epoch(season, epoch) * self.n_candidates + candidate)
            .copied()
            .flatten()
    }

    pub fn column(&self, col: usize) -> Column {
        self.columns[col]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Every status column (existing and candidate) in column order.
    pub fn status_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.branch_status
            .iter()
            .chain(&self.candidate_status)
            .filter_map(|c| *c)
    }
}

struct Assembler<'a> {
    case: &'a Case,
    model: Milp,
    index: VariableIndex,
}

impl Assembler<'_> {
    fn var(&mut self, col: Column, kind: VarKind, lower: f64, upper: f64, name: String) -> Result<usize, ModelError> {
        let j = self.model.add_variable(kind, lower, upper, name)?;
        debug_assert_eq!(j, self.index.columns.len());
        self.index.columns.push(col);
        Ok(j)
    }
}

fn stamp(t: usize, s: usize, e: usize) -> String {
    format!("t{}_s{}_e{}", t + 1, s + 1, e + 1)
}

/// Build the model of `variant` for `case` with default options.
pub fn build_milp(case: &Case, variant: Variant) -> Result<(Milp, VariableIndex), BuildError> {
    build_milp_with(case, variant, &BuildOptions::default())
}

pub fn build_milp_with(
    case: &Case,
    variant: Variant,
    options: &BuildOptions,
) -> Result<(Milp, VariableIndex), BuildError> {
    let report = validate_case(case);
    if !report.is_ok() {
        return Err(BuildError::Invalid(report));
    }
    let h = &case.horizon;
    let (nt, ns, ne) = (h.hours, h.seasons, h.epochs);
    let ab = case.angle_bound;
    let reference = case.reference_bus().expect("validated");

    let name = case.name.clone().unwrap_or_else(|| "case".into());
    let mut asm = Assembler {
        case,
        model: Milp::with_name(format!("{name}_{}", variant.tag())),
        index: VariableIndex {
            variant,
            hours: nt,
            seasons: ns,
            epochs: ne,
            n_gens: case.generators.len(),
            n_buses: case.buses.len(),
            n_branches: case.branches.len(),
            n_candidates: case.candidates.len(),
            dispatch: Vec::new(),
            angle: Vec::new(),
            branch_flow: Vec::new(),
            candidate_flow: Vec::new(),
            available: Vec::new(),
            built: Vec::new(),
            branch_status: Vec::new(),
            candidate_status: Vec::new(),
            columns: Vec::new(),
        },
    };

    // Columns, block by block; within a block intervals run hour-fastest.
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                for (g, gen) in asm.case.generators.iter().enumerate() {
                    let j = asm.var(
                        Column::Dispatch { gen: g, hour: t, season: s, epoch: e },
                        VarKind::Continuous,
                        gen.p_min,
                        gen.p_max,
                        format!("p_g{}_{}", gen.id, stamp(t, s, e)),
                    )?;
                    asm.index.dispatch.push(j);
                }
            }
        }
    }
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                for (n, bus) in asm.case.buses.iter().enumerate() {
                    let (lo, hi) = if n == reference { (0.0, 0.0) } else { (-ab, ab) };
                    let j = asm.var(
                        Column::Angle { bus: n, hour: t, season: s, epoch: e },
                        VarKind::Continuous,
                        lo,
                        hi,
                        format!("theta_n{}_{}", bus.id, stamp(t, s, e)),
                    )?;
                    asm.index.angle.push(j);
                }
            }
        }
    }
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                for (k, br) in asm.case.branches.iter().enumerate() {
                    let j = asm.var(
                        Column::BranchFlow { branch: k, hour: t, season: s, epoch: e },
                        VarKind::Continuous,
                        -br.rate,
                        br.rate,
                        format!("pk_k{}_{}", br.id, stamp(t, s, e)),
                    )?;
                    asm.index.branch_flow.push(j);
                }
            }
        }
    }
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                for (c, cand) in asm.case.candidates.iter().enumerate() {
                    let j = asm.var(
                        Column::CandidateFlow { candidate: c, hour: t, season: s, epoch: e },
                        VarKind::Continuous,
                        -cand.rate,
                        cand.rate,
                        format!("pj_j{}_{}", cand.id, stamp(t, s, e)),
                    )?;
                    asm.index.candidate_flow.push(j);
                }
            }
        }
    }
    for e in 0..ne {
        for (c, cand) in asm.case.candidates.iter().enumerate() {
            let j = asm.var(
                Column::Available { candidate: c, epoch: e },
                VarKind::Binary,
                0.0,
                1.0,
                format!("u_j{}_e{}", cand.id, e + 1),
            )?;
            asm.index.available.push(j);
        }
    }
    for e in 0..ne {
        for (c, cand) in asm.case.candidates.iter().enumerate() {
            let j = asm.var(
                Column::Built { candidate: c, epoch: e },
                VarKind::Binary,
                0.0,
                1.0,
                format!("v_j{}_e{}", cand.id, e + 1),
            )?;
            asm.index.built.push(j);
        }
    }
    if variant.switches_existing() {
        for e in 0..ne {
            for s in 0..ns {
                for (k, br) in asm.case.branches.iter().enumerate() {
                    let col = if br.switchable {
                        Some(asm.var(
                            Column::BranchStatus { branch: k, season: s, epoch: e },
                            VarKind::Binary,
                            0.0,
                            1.0,
                            format!("zk_k{}_s{}_e{}", br.id, s + 1, e + 1),
                        )?)
                    } else {
                        None
                    };
                    asm.index.branch_status.push(col);
                }
            }
        }
    }
    if variant.switches_candidates() {
        for e in 0..ne {
            for s in 0..ns {
                for (c, cand) in asm.case.candidates.iter().enumerate() {
                    let j = asm.var(
                        Column::CandidateStatus { candidate: c, season: s, epoch: e },
                        VarKind::Binary,
                        0.0,
                        1.0,
                        format!("zj_j{}_s{}_e{}", cand.id, s + 1, e + 1),
                    )?;
                    asm.index.candidate_status.push(Some(j));
                }
            }
        }
    }

    let Assembler { mut model, index, .. } = asm;
    let bidx = |id: &str| case.bus_index(id).expect("validated");

    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                let st = stamp(t, s, e);
                // Nodal balance: inflow - outflow + generation = load.
                for (n, bus) in case.buses.iter().enumerate() {
                    let mut terms = Vec::new();
                    for (k, br) in case.branches.iter().enumerate() {
                        if bidx(&br.to_bus) == n {
                            terms.push((index.branch_flow(k, t, s, e), 1.0));
                        } else if bidx(&br.from_bus) == n {
                            terms.push((index.branch_flow(k, t, s, e), -1.0));
                        }
                    }
                    for (c, cand) in case.candidates.iter().enumerate() {
                        if bidx(&cand.to_bus) == n {
                            terms.push((index.candidate_flow(c, t, s, e), 1.0));
                        } else if bidx(&cand.from_bus) == n {
                            terms.push((index.candidate_flow(c, t, s, e), -1.0));
                        }
                    }
                    for (g, gen) in case.generators.iter().enumerate() {
                        if bidx(&gen.bus) == n {
                            terms.push((index.dispatch(g, t, s, e), 1.0));
                        }
                    }
                    model.add_constraint(
                        format!("bal_n{}_{st}", bus.id),
                        terms,
                        Sense::Eq,
                        case.load_at(n, t, s, e + 1),
                    )?;
                }

                for (k, br) in case.branches.iter().enumerate() {
                    let flow = index.branch_flow(k, t, s, e);
                    let from = index.angle(bidx(&br.from_bus), t, s, e);
                    let to = index.angle(bidx(&br.to_bus), t, s, e);
                    let b = 1.0 / br.reactance;
                    match index.branch_status(k, s, e) {
                        None => {
                            model.add_constraint(
                                format!("flow_k{}_{st}", br.id),
                                vec![(flow, 1.0), (from, -b), (to, b)],
                                Sense::Eq,
                                0.0,
                            )?;
                        }
                        Some(z) => {
                            let big_m = branch_big_m(br.reactance, ab).expect("validated")
                                * options.big_m_scale;
                            switched_line(&mut model, &format!("k{}_{st}", br.id), flow, from, to, b, z, br.rate, big_m)?;
                        }
                    }
                }

                for (c, cand) in case.candidates.iter().enumerate() {
                    let flow = index.candidate_flow(c, t, s, e);
                    let from = index.angle(bidx(&cand.from_bus), t, s, e);
                    let to = index.angle(bidx(&cand.to_bus), t, s, e);
                    let status = index
                        .candidate_status(c, s, e)
                        .unwrap_or_else(|| index.available(c, e));
                    let big_m = branch_big_m(cand.reactance, ab).expect("validated") * options.big_m_scale;
                    switched_line(
                        &mut model,
                        &format!("j{}_{st}", cand.id),
                        flow,
                        from,
                        to,
                        1.0 / cand.reactance,
                        status,
                        cand.rate,
                        big_m,
                    )?;
                }
            }
        }
    }

    // Build and availability logic.
    for (c, cand) in case.candidates.iter().enumerate() {
        for e in 0..ne {
            let mut terms: Vec<(usize, f64)> = (0..=e).map(|z| (index.built(c, z), 1.0)).collect();
            terms.push((index.available(c, e), -1.0));
            model.add_constraint(format!("build_j{}_e{}", cand.id, e + 1), terms, Sense::Le, 0.0)?;
        }
        for e in 1..ne {
            model.add_constraint(
                format!("onset_j{}_e{}", cand.id, e + 1),
                vec![
                    (index.built(c, e), 1.0),
                    (index.available(c, e), -1.0),
                    (index.available(c, e - 1), 1.0),
                ],
                Sense::Ge,
                0.0,
            )?;
        }
        model.add_constraint(
            format!("first_j{}", cand.id),
            vec![(index.built(c, 0), 1.0), (index.available(c, 0), -1.0)],
            Sense::Eq,
            0.0,
        )?;
    }
    if variant.switches_candidates() {
        for e in 0..ne {
            for s in 0..ns {
                for (c, cand) in case.candidates.iter().enumerate() {
                    let z = index.candidate_status(c, s, e).expect("T2 has candidate statuses");
                    model.add_constraint(
                        format!("avail_j{}_s{}_e{}", cand.id, s + 1, e + 1),
                        vec![(z, 1.0), (index.available(c, e), -1.0)],
                        Sense::Le,
                        0.0,
                    )?;
                }
            }
        }
    }

    let weight = h.years_per_epoch as f64 * h.days_per_season();
    let mut objective = Vec::new();
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                for (g, gen) in case.generators.iter().enumerate() {
                    objective.push((index.dispatch(g, t, s, e), weight * gen.cost));
                }
            }
        }
    }
    for e in 0..ne {
        let mult = investment_multiplier(ne, h.years_per_epoch, h.maintenance_rate, e + 1)
            .expect("epoch in range");
        for (c, cand) in case.candidates.iter().enumerate() {
            objective.push((index.built(c, e), cand.capital_cost * mult));
        }
    }
    model.set_objective(objective, 0.0)?;

    Ok((model, index))
}

/// Capacity rows `-rate z <= p <= rate z` and the big-M flow pair
/// `|p - (theta_from - theta_to) / x| <= (1 - z) M`.
#[allow(clippy::too_many_arguments)]
fn switched_line(
    model: &mut Milp,
    tag: &str,
    flow: usize,
    from: usize,
    to: usize,
    susceptance: f64,
    status: usize,
    rate: f64,
    big_m: f64,
) -> Result<(), ModelError> {
    model.add_constraint(format!("capub_{tag}"), vec![(flow, 1.0), (status, -rate)], Sense::Le, 0.0)?;
    model.add_constraint(format!("caplb_{tag}"), vec![(flow, 1.0), (status, rate)], Sense::Ge, 0.0)?;
    model.add_constraint(
        format!("flowub_{tag}"),
        vec![(flow, 1.0), (from, -susceptance), (to, susceptance), (status, big_m)],
        Sense::Le,
        big_m,
    )?;
    model.add_constraint(
        format!("flowlb_{tag}"),
        vec![(flow, 1.0), (from, -susceptance), (to, susceptance), (status, -big_m)],
        Sense::Ge,
        -big_m,
    )?;
    Ok(())
}

/// Copy of `model` with every existing-branch status fixed to 1 and, under
/// T2, every candidate status tied to its availability. The result has the
/// feasible set of the TEP model.
pub fn pin_topology(model: &Milp, index: &VariableIndex) -> Result<Milp, ModelError> {
    let mut pinned = model.clone();
    for col in index.branch_status.iter().filter_map(|c| *c) {
        pinned.set_bounds(col, 1.0, 1.0)?;
    }
    for e in 0..index.epochs {
        for s in 0..index.seasons {
            for c in 0..index.n_candidates {
                if let Some(z) = index.candidate_status(c, s, e) {
                    let name = model.variable(z).name.clone();
                    pinned.add_constraint(
                        format!("pin_{name}"),
                        vec![(z, 1.0), (index.available(c, e), -1.0)],
                        Sense::Eq,
                        0.0,
                    )?;
                }
            }
        }
    }
    Ok(pinned)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineKind {
    Existing,
    Candidate,
}

/// A candidate line finished at the start of `epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BuildDecision {
    pub candidate: usize,
    pub epoch: usize,
}

/// A line taken out of service for one season of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OpenLine {
    pub kind: LineKind,
    pub line: usize,
    pub season: usize,
    pub epoch: usize,
}

/// Decoded solution. Per-interval arrays are laid out
/// `[epoch][season][hour][element]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub variant: Variant,
    pub hours: usize,
    pub seasons: usize,
    pub epochs: usize,
    pub builds: Vec<BuildDecision>,
    pub switching: Vec<OpenLine>,
    pub dispatch: Vec<f64>,
    pub angles: Vec<f64>,
    pub branch_flows: Vec<f64>,
    pub candidate_flows: Vec<f64>,
    pub tc_g: f64,
    pub tc_i: f64,
    pub tc: f64,
}

impl Plan {
    fn interval(&self, hour: usize, season: usize, epoch: usize) -> usize {
        (epoch * self.seasons + season) * self.hours + hour
    }

    pub fn dispatch_at(&self, n_gens: usize, gen: usize, hour: usize, season: usize, epoch: usize) -> f64 {
        self.dispatch[self.interval(hour, season, epoch) * n_gens + gen]
    }

    /// Builds finished at the start of `epoch`, in candidate order.
    pub fn builds_in(&self, epoch: usize) -> impl Iterator<Item = usize> + '_ {
        self.builds.iter().filter(move |b| b.epoch == epoch).map(|b| b.candidate)
    }

    /// Lines open in `season` of `epoch`, existing lines first.
    pub fn open_in(&self, season: usize, epoch: usize) -> impl Iterator<Item = &OpenLine> + '_ {
        self.switching
            .iter()
            .filter(move |o| o.season == season && o.epoch == epoch)
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("assignment is infeasible for the model (max violation {0:.3e})")]
    Infeasible(f64),
}

/// Generation cost of a dispatch laid out like [`Plan::dispatch`].
pub fn generation_cost(case: &Case, dispatch: &[f64]) -> f64 {
    let h = &case.horizon;
    let weight = h.years_per_epoch as f64 * h.days_per_season();
    let ng = case.generators.len();
    let mut total = 0.0;
    for (i, p) in dispatch.iter().enumerate() {
        total += weight * p * case.generators[i % ng].cost;
    }
    total
}

/// Investment cost of a set of builds.
pub fn investment_cost(case: &Case, builds: &[BuildDecision]) -> f64 {
    let h = &case.horizon;
    builds
        .iter()
        .map(|b| {
            case.candidates[b.candidate].capital_cost
                * investment_multiplier(h.epochs, h.years_per_epoch, h.maintenance_rate, b.epoch + 1)
                    .expect("epoch in range")
        })
        .fold(0.0, |acc, c| acc + c)
}

/// Decode a feasible assignment of `model` into a plan. Costs are recomputed
/// from the dispatch and build decisions, not read off the objective.
pub fn decode_plan(
    case: &Case,
    model: &Milp,
    index: &VariableIndex,
    assignment: &[f64],
) -> Result<Plan, DecodeError> {
    let eval = model.evaluate(assignment, 1e-6)?;
    if !eval.is_feasible() {
        return Err(DecodeError::Infeasible(eval.max_violation()));
    }
    let (nt, ns, ne) = (index.hours, index.seasons, index.epochs);
    let on = |col: usize| assignment[col] > 0.5;

    let mut builds = Vec::new();
    for c in 0..case.candidates.len() {
        for e in 0..ne {
            if on(index.built(c, e)) {
                builds.push(BuildDecision { candidate: c, epoch: e });
            }
        }
    }
    builds.sort_by_key(|b| (b.epoch, b.candidate));

    let mut switching = Vec::new();
    for e in 0..ne {
        for s in 0..ns {
            for k in 0..case.branches.len() {
                if let Some(z) = index.branch_status(k, s, e) {
                    if !on(z) {
                        switching.push(OpenLine { kind: LineKind::Existing, line: k, season: s, epoch: e });
                    }
                }
            }
            for c in 0..case.candidates.len() {
                if let Some(z) = index.candidate_status(c, s, e) {
                    if !on(z) && on(index.available(c, e)) {
                        switching.push(OpenLine { kind: LineKind::Candidate, line: c, season: s, epoch: e });
                    }
                }
            }
        }
    }

    let mut dispatch = Vec::new();
    let mut angles = Vec::new();
    let mut branch_flows = Vec::new();
    let mut candidate_flows = Vec::new();
    for e in 0..ne {
        for s in 0..ns {
            for t in 0..nt {
                dispatch.extend((0..case.generators.len()).map(|g| assignment[index.dispatch(g, t, s, e)]));
                angles.extend((0..case.buses.len()).map(|n| assignment[index.angle(n, t, s, e)]));
                branch_flows.extend((0..case.branches.len()).map(|k| assignment[index.branch_flow(k, t, s, e)]));
                candidate_flows
                    .extend((0..case.candidates.len()).map(|c| assignment[index.candidate_flow(c, t, s, e)]));
            }
        }
    }

    let tc_g = generation_cost(case, &dispatch);
    let tc_i = investment_cost(case, &builds);
    Ok(Plan {
        variant: index.variant,
        hours: nt,
        seasons: ns,
        epochs: ne,
        builds,
        switching,
        dispatch,
        angles,
        branch_flows,
        candidate_flows,
        tc_g,
        tc_i,
        tc: tc_g + tc_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_case;

    const TWO_BUS: &str = r#"{
        "buses": [{"id": "1", "is_reference": true}, {"id": "2"}],
        "generators": [{"id": "G1", "bus": "1", "p_max": 100, "cost": 10}],
        "branches": [{"id": "1", "from_bus": "1", "to_bus": "2", "reactance": 0.01, "rate": 50}],
        "candidates": [{"id": "9", "from_bus": "1", "to_bus": "2", "reactance": 0.01, "rate": 50, "capital_cost": 1000}],
        "horizon": {"epochs": 1, "seasons": 1, "hours": 1},
        "load": [null, [[40]]]
    }"#;

    #[test]
    fn multiplier_examples() {
        assert!((investment_multiplier(3, 5, 0.04, 1).unwrap() - 1.6).abs() < 1e-15);
        assert!((investment_multiplier(3, 5, 0.04, 3).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(investment_multiplier(3, 5, 0.0, 2).unwrap(), 1.0);
        assert!(investment_multiplier(3, 5, 0.04, 0).is_err());
        assert!(investment_multiplier(3, 5, 0.04, 4).is_err());
    }

    #[test]
    fn big_m_examples() {
        assert!((branch_big_m(0.1, 0.6).unwrap() - 12.0).abs() < 1e-12);
        assert!((branch_big_m(1.0, 0.6).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(branch_big_m(0.3, 1.2).unwrap(), 2.0 * branch_big_m(0.3, 0.6).unwrap());
        assert!(branch_big_m(0.0, 0.6).is_err());
        assert!(branch_big_m(0.1, -1.0).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("TEP".parse::<Variant>().unwrap(), Variant::Tep);
        assert_eq!("tep-sno-t2".parse::<Variant>().unwrap(), Variant::SnoT2);
        assert!("t3".parse::<Variant>().is_err());
    }

    #[test]
    fn single_epoch_single_candidate() {
        let case = parse_case(TWO_BUS).unwrap();
        let (model, index) = build_milp(&case, Variant::Tep).unwrap();
        assert_eq!(model.num_binaries(), 2);
        let first = model
            .constraints()
            .iter()
            .find(|c| c.name == "first_j9")
            .expect("v = u row in epoch 1");
        assert_eq!(first.sense, Sense::Eq);
        assert_eq!(
            first.terms,
            vec![(index.built(0, 0), 1.0), (index.available(0, 0), -1.0)]
        );
        assert_eq!(model.variable(index.available(0, 0)).name, "u_j9_e1");
    }

    #[test]
    fn index_is_bijective() {
        let case = parse_case(TWO_BUS).unwrap();
        for variant in Variant::ALL {
            let (model, index) = build_milp(&case, variant).unwrap();
            assert_eq!(index.len(), model.num_variables());
            let mut seen = std::collections::HashSet::new();
            for col in 0..index.len() {
                assert!(seen.insert(index.column(col)));
                let back = match index.column(col) {
                    Column::Dispatch { gen, hour, season, epoch } => index.dispatch(gen, hour, season, epoch),
                    Column::Angle { bus, hour, season, epoch } => index.angle(bus, hour, season, epoch),
                    Column::BranchFlow { branch, hour, season, epoch } => index.branch_flow(branch, hour, season, epoch),
                    Column::CandidateFlow { candidate, hour, season, epoch } => {
                        index.candidate_flow(candidate, hour, season, epoch)
                    }
                    Column::Available { candidate, epoch } => index.available(candidate, epoch),
                    Column::Built { candidate, epoch } => index.built(candidate, epoch),
                    Column::BranchStatus { branch, season, epoch } => index.branch_status(branch, season, epoch).unwrap(),
                    Column::CandidateStatus { candidate, season, epoch } => {
                        index.candidate_status(candidate, season, epoch).unwrap()
                    }
                };
                assert_eq!(back, col);
            }
        }
    }

    #[test]
    fn non_switchable_branch_keeps_dc_flow() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.branches[0].switchable = false;
        let (model, index) = build_milp(&case, Variant::SnoT1).unwrap();
        assert_eq!(index.branch_status(0, 0, 0), None);
        assert!(model.constraints().iter().any(|c| c.name == "flow_k1_t1_s1_e1"));
        assert_eq!(model.num_binaries(), 2);
    }

    #[test]
    fn objective_weights() {
        let case = parse_case(TWO_BUS).unwrap();
        let (model, index) = build_milp(&case, Variant::Tep).unwrap();
        let c = model.objective_dense();
        // 5 years * 365 days per single season * $10/MWh
        assert_eq!(c[index.dispatch(0, 0, 0, 0)], 5.0 * 365.0 * 10.0);
        // one epoch of 5 years at 4% maintenance
        assert!((c[index.built(0, 0)] - 1000.0 * 1.2).abs() < 1e-9);
    }

    #[test]
    fn invalid_case_is_rejected() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.branches[0].reactance = 0.0;
        assert!(matches!(build_milp(&case, Variant::Tep), Err(BuildError::Invalid(_))));
    }

    #[test]
    fn decode_rejects_infeasible_assignment() {
        let case = parse_case(TWO_BUS).unwrap();
        let (model, index) = build_milp(&case, Variant::Tep).unwrap();
        let zeros = vec![0.0; model.num_variables()];
        assert!(matches!(
            decode_plan(&case, &model, &index, &zeros),
            Err(DecodeError::Infeasible(_))
        ));
    }

    #[test]
    fn decode_hand_built_solution() {
        let case = parse_case(TWO_BUS).unwrap();
        let (model, index) = build_milp(&case, Variant::Tep).unwrap();
        // build the candidate, split 40 MW evenly over the two identical lines
        let mut x = vec![0.0; model.num_variables()];
        x[index.dispatch(0, 0, 0, 0)] = 40.0;
        x[index.available(0, 0)] = 1.0;
        x[index.built(0, 0)] = 1.0;
        x[index.branch_flow(0, 0, 0, 0)] = 20.0;
        x[index.candidate_flow(0, 0, 0, 0)] = 20.0;
        x[index.angle(1, 0, 0, 0)] = -0.2;
        let plan = decode_plan(&case, &model, &index, &x).unwrap();
        assert_eq!(plan.builds, vec![BuildDecision { candidate: 0, epoch: 0 }]);
        assert!(plan.switching.is_empty());
        assert_eq!(plan.tc_g, 40.0 * 5.0 * 365.0 * 10.0);
        assert!((plan.tc_i - 1200.0).abs() < 1e-9);
        assert!((plan.tc - model.objective_value(&x)).abs() < 1e-9 * plan.tc);
    }
}
