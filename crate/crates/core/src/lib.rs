//! Multi-epoch transmission expansion planning with seasonal network
//! switching, formulated as a MILP and solved by an in-crate
//! branch-and-bound over a bounded-variable simplex.

pub mod bnb;
pub mod builder;
pub mod bundled;
pub mod case;
pub mod lp;
pub mod milp;
pub mod mps;
pub mod report;
pub mod solution;
pub mod synthetic;

pub use bnb::{enumerate_exact, solve_milp, SolveOutcome, SolveParams, SolveStatus};
pub use builder::{
    build_milp, build_milp_with, decode_plan, investment_multiplier, pin_topology, BuildDecision, BuildError,
    BuildOptions, LineKind, OpenLine, Plan, VariableIndex, Variant,
};
pub use case::{
    grow_load, parse_case, render_case, validate_case, Branch, Bus, CandidateLine, Case, CaseError, Generator,
    Horizon, LoadProfile, Severity, ValidationReport,
};
pub use lp::{solve_lp, LpOutcome, LpStatus};
pub use milp::{LinearConstraint, Milp, ModelError, Sense, VarKind, Variable};
pub use mps::{parse_mps, write_mps, MpsError, NameTable};
pub use report::{compute_metrics, render_report, Metrics, Report, SolveSummary, VariantRun};
pub use solution::{parse_solution, write_solution, SolutionError};
