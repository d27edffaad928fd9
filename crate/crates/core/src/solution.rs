//! Plain-text solution listings exchanged with external solvers.
//!
//! One `name value` pair per line (`name=value` is also accepted), `#` starts
//! a comment. Columns that are not listed are zero.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::milp::Milp;

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error("line {line}: expected `name value`")]
    Malformed { line: usize },
    #[error("line {line}: `{value}` is not a finite number")]
    BadValue { line: usize, value: String },
    #[error("line {line}: no column named `{name}` in the model")]
    UnknownName { line: usize, name: String },
    #[error("line {line}: `{name}` is listed twice")]
    Duplicate { line: usize, name: String },
}

/// Read a listing into a dense assignment over `model`'s columns.
pub fn parse_solution(model: &Milp, text: &str) -> Result<Vec<f64>, SolutionError> {
    let columns: HashMap<&str, usize> = model
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| (v.name.as_str(), j))
        .collect();
    let mut x = vec![0.0; model.num_variables()];
    let mut seen = vec![false; x.len()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == '=' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let [name, value] = fields[..] else {
            return Err(SolutionError::Malformed { line });
        };
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| SolutionError::BadValue {
                line,
                value: value.to_string(),
            })?;
        let &j = columns.get(name).ok_or_else(|| SolutionError::UnknownName {
            line,
            name: name.to_string(),
        })?;
        if seen[j] {
            return Err(SolutionError::Duplicate {
                line,
                name: name.to_string(),
            });
        }
        seen[j] = true;
        x[j] = v;
    }
    Ok(x)
}

/// Write the nonzero entries of `x`, one per line, in column order.
pub fn write_solution(model: &Milp, x: &[f64]) -> String {
    let mut out = String::new();
    for (var, &v) in model.variables().iter().zip(x) {
        if v != 0.0 {
            let _ = writeln!(out, "{} {}", var.name, v);
        }
    }
    out
}
