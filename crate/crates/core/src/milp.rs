//! Solver-agnostic mixed-integer linear model.
//!
//! Models are stored verbatim: no presolve, no scaling, no term merging. The
//! direction is always minimization.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Absolute amount by which `x` violates this row.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    BoundOrder { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{name}` must have bounds within [0, 1] (got [{lower}, {upper}])")]
    BinaryBounds { name: String, lower: f64, upper: f64 },
    #[error("variable `{0}` has a NaN bound")]
    NanBound(String),
    #[error("constraint `{constraint}` references unknown column {column}")]
    UnknownColumn { constraint: String, column: usize },
    #[error("constraint `{constraint}` lists column {column} more than once")]
    DuplicateColumn { constraint: String, column: usize },
    #[error("constraint `{constraint}` has a non-finite coefficient or right-hand side")]
    NonFinite { constraint: String },
    #[error("assignment has {got} entries, model has {expected} columns")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Milp {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(usize, f64)>,
    objective_constant: f64,
}

impl Milp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_name(name: impl Into<String>) -> Self {
        Milp {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.binary_columns().count()
    }

    pub fn binary_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, column: usize) -> &Variable {
        &self.variables[column]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn add_variable(
        &mut self,
        kind: VarKind,
        lower: f64,
        upper: f64,
        name: impl Into<String>,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        check_bounds(kind, lower, upper, &name)?;
        self.variables.push(Variable {
            kind,
            lower,
            upper,
            name,
        });
        Ok(self.variables.len() - 1)
    }

    /// Replace the bounds of an existing column.
    pub fn set_bounds(&mut self, column: usize, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = &mut self.variables[column];
        check_bounds(v.kind, lower, upper, &v.name)?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        let mut seen = vec![false; self.variables.len()];
        for &(column, coef) in &terms {
            if column >= self.variables.len() {
                return Err(ModelError::UnknownColumn {
                    constraint: name,
                    column,
                });
            }
            if seen[column] {
                return Err(ModelError::DuplicateColumn {
                    constraint: name,
                    column,
                });
            }
            seen[column] = true;
            if !coef.is_finite() {
                return Err(ModelError::NonFinite { constraint: name });
            }
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite { constraint: name });
        }
        self.constraints.push(LinearConstraint {
            name,
            terms,
            sense,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Set the objective `sum(c_j x_j) + constant`. Replaces any previous
    /// objective.
    pub fn set_objective(
        &mut self,
        terms: Vec<(usize, f64)>,
        constant: f64,
    ) -> Result<(), ModelError> {
        let mut seen = vec![false; self.variables.len()];
        for &(column, coef) in &terms {
            if column >= self.variables.len() {
                return Err(ModelError::UnknownColumn {
                    constraint: "objective".into(),
                    column,
                });
            }
            if seen[column] {
                return Err(ModelError::DuplicateColumn {
                    constraint: "objective".into(),
                    column,
                });
            }
            seen[column] = true;
            if !coef.is_finite() {
                return Err(ModelError::NonFinite {
                    constraint: "objective".into(),
                });
            }
        }
        if !constant.is_finite() {
            return Err(ModelError::NonFinite {
                constraint: "objective".into(),
            });
        }
        self.objective = terms;
        self.objective_constant = constant;
        Ok(())
    }

    /// Dense objective coefficient vector.
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(j, v) in &self.objective {
            c[j] = v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Evaluate `assignment` against the stored data.
    pub fn evaluate(&self, assignment: &[f64], tol: f64) -> Result<Evaluation, ModelError> {
        evaluate_assignment(self, assignment, tol)
    }
}

fn check_bounds(kind: VarKind, lower: f64, upper: f64, name: &str) -> Result<(), ModelError> {
    if lower.is_nan() || upper.is_nan() {
        return Err(ModelError::NanBound(name.to_string()));
    }
    if lower > upper {
        return Err(ModelError::BoundOrder {
            name: name.to_string(),
            lower,
            upper,
        });
    }
    if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
        return Err(ModelError::BinaryBounds {
            name: name.to_string(),
            lower,
            upper,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub max_constraint_violation: f64,
    pub max_bound_violation: f64,
    pub max_integrality_violation: f64,
    pub tol: f64,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.max_constraint_violation <= self.tol
            && self.max_bound_violation <= self.tol
            && self.max_integrality_violation <= self.tol
    }

    pub fn max_violation(&self) -> f64 {
        self.max_constraint_violation
            .max(self.max_bound_violation)
            .max(self.max_integrality_violation)
    }
}

/// Objective and absolute violations of `assignment`.
///
/// Violations are absolute: scaling a row and its right-hand side by
/// `lambda > 0` scales that row's violation by `lambda`.
pub fn evaluate_assignment(
    model: &Milp,
    assignment: &[f64],
    tol: f64,
) -> Result<Evaluation, ModelError> {
    if assignment.len() != model.num_variables() {
        return Err(ModelError::LengthMismatch {
            expected: model.num_variables(),
            got: assignment.len(),
        });
    }
    let mut bound = 0.0f64;
    let mut integrality = 0.0f64;
    for (v, &x) in model.variables.iter().zip(assignment) {
        bound = bound.max((v.lower - x).max(0.0)).max((x - v.upper).max(0.0));
        if v.kind == VarKind::Binary {
            integrality = integrality.max((x - x.round()).abs());
        }
    }
    let constraint = model
        .constraints
        .iter()
        .map(|c| c.violation(assignment))
        .fold(0.0f64, f64::max);
    Ok(Evaluation {
        objective: model.objective_value(assignment),
        max_constraint_violation: constraint,
        max_bound_violation: bound,
        max_integrality_violation: integrality,
        tol,
    })
}
