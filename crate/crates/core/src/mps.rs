//! Fixed-format MPS export and import.
//!
//! Output keeps the classic field order but not the 8-character name limit:
//! names are written whole and the parser splits on whitespace. Binary columns
//! sit between `INTORG`/`INTEND` markers and always carry an explicit bound.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::milp::{Milp, ModelError, Sense, VarKind};

const OBJECTIVE_ROW: &str = "COST";
const RHS_SET: &str = "RHS";
const BOUND_SET: &str = "BND";

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("duplicate {kind} name `{name}`")]
    NameCollision { kind: &'static str, name: String },
    #[error("{kind} {index} has a name that cannot be written to MPS: `{name}`")]
    BadName { kind: &'static str, index: usize, name: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown row `{row}`")]
    UnknownRow { line: usize, row: String },
    #[error("line {line}: unknown column `{column}`")]
    UnknownColumn { line: usize, column: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn writable(name: &str) -> bool {
    !name.is_empty() && !name.contains(char::is_whitespace) && !name.starts_with('*')
}

fn check_names<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
    reserved: Option<&str>,
) -> Result<(), MpsError> {
    let mut seen = HashMap::new();
    if let Some(r) = reserved {
        seen.insert(r, usize::MAX);
    }
    for (i, name) in names.enumerate() {
        if !writable(name) {
            return Err(MpsError::BadName {
                kind,
                index: i,
                name: name.to_string(),
            });
        }
        if seen.insert(name, i).is_some() {
            return Err(MpsError::NameCollision {
                kind,
                name: name.to_string(),
            });
        }
    }
    Ok(())
}

fn entry(out: &mut String, a: &str, b: &str, v: f64) {
    let _ = writeln!(out, "    {a:<8}  {b:<8}  {v}");
}

fn bound(out: &mut String, code: &str, column: &str, v: Option<f64>) {
    match v {
        Some(v) => {
            let _ = writeln!(out, " {code} {BOUND_SET:<8}  {column:<8}  {v}");
        }
        None => {
            let _ = writeln!(out, " {code} {BOUND_SET:<8}  {column}");
        }
    }
}

/// Serialize `model`. The output depends only on the model contents.
pub fn write_mps(model: &Milp) -> Result<String, MpsError> {
    check_names("column", model.variables().iter().map(|v| v.name.as_str()), None)?;
    check_names(
        "row",
        model.constraints().iter().map(|c| c.name.as_str()),
        Some(OBJECTIVE_ROW),
    )?;

    let n = model.num_variables();
    let mut by_column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in model.constraints().iter().enumerate() {
        for &(j, a) in &row.terms {
            by_column[j].push((i, a));
        }
    }
    let cost = model.objective_dense();
    let mut listed = vec![false; n];
    for &(j, _) in model.objective() {
        listed[j] = true;
    }

    let mut out = String::new();
    let name = if writable(&model.name) { model.name.as_str() } else { "MODEL" };
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJECTIVE_ROW}");
    for row in model.constraints() {
        let code = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {code}  {}", row.name);
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (j, var) in model.variables().iter().enumerate() {
        let binary = var.kind == VarKind::Binary;
        if binary != in_int {
            let tag = if binary { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 {tag}");
            markers += 1;
            in_int = binary;
        }
        if listed[j] || by_column[j].is_empty() {
            entry(&mut out, &var.name, OBJECTIVE_ROW, cost[j]);
        }
        for &(i, a) in &by_column[j] {
            entry(&mut out, &var.name, &model.constraints()[i].name, a);
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        entry(&mut out, RHS_SET, OBJECTIVE_ROW, -model.objective_constant());
    }
    for row in model.constraints() {
        if row.rhs != 0.0 {
            entry(&mut out, RHS_SET, &row.name, row.rhs);
        }
    }
    out.push_str("RANGES\n");

    out.push_str("BOUNDS\n");
    for var in model.variables() {
        let (lo, hi) = (var.lower, var.upper);
        let name = var.name.as_str();
        if var.kind == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            bound(&mut out, "BV", name, None);
        } else if lo == hi {
            bound(&mut out, "FX", name, Some(lo));
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            bound(&mut out, "FR", name, None);
        } else {
            if lo == f64::NEG_INFINITY {
                bound(&mut out, "MI", name, None);
            } else if lo != 0.0 || var.kind == VarKind::Binary {
                bound(&mut out, "LO", name, Some(lo));
            }
            if hi != f64::INFINITY {
                bound(&mut out, "UP", name, Some(hi));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

/// Column and row lookup for a parsed model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NameTable {
    pub columns: HashMap<String, usize>,
    pub rows: HashMap<String, usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

struct PendingColumn {
    name: String,
    integer: bool,
    cost: f64,
    entries: Vec<(usize, f64)>,
    lower: Option<f64>,
    upper: Option<f64>,
    binary_bound: bool,
}

struct PendingRow {
    name: String,
    sense: Sense,
    rhs: f64,
    range: Option<f64>,
}

fn number(line: usize, token: &str) -> Result<f64, MpsError> {
    let v: f64 = token.parse().map_err(|_| MpsError::Malformed {
        line,
        message: format!("`{token}` is not a number"),
    })?;
    if v.is_nan() {
        return Err(MpsError::Malformed {
            line,
            message: "NaN value".into(),
        });
    }
    Ok(v)
}

fn malformed(line: usize, message: impl Into<String>) -> MpsError {
    MpsError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parse fixed or free MPS. Ranged rows are split into a `>=` row under the
/// original name and a `<=` row named `<name>_rng`, appended after the other
/// rows. Integer columns must be binary.
pub fn parse_mps(text: &str) -> Result<(Milp, NameTable), MpsError> {
    let mut section = Section::Start;
    let mut model_name = String::new();
    let mut objective: Option<String> = None;
    let mut objective_rhs = 0.0;
    let mut rows: Vec<PendingRow> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<PendingColumn> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match fields[0] {
                "NAME" if section == Section::Start => {
                    model_name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::Start
                }
                "ROWS" if section == Section::Start => Section::Rows,
                "COLUMNS" if section == Section::Rows => Section::Columns,
                "RHS" if section == Section::Columns => Section::Rhs,
                "RANGES" if matches!(section, Section::Columns | Section::Rhs) => Section::Ranges,
                "BOUNDS" if matches!(section, Section::Columns | Section::Rhs | Section::Ranges) => {
                    Section::Bounds
                }
                "ENDATA" if section != Section::Start && section != Section::End => Section::End,
                other => return Err(malformed(line, format!("unexpected section `{other}`"))),
            };
            continue;
        }

        match section {
            Section::Start | Section::End => {
                return Err(malformed(line, "data outside a section"));
            }
            Section::Rows => {
                let [code, name] = fields[..] else {
                    return Err(malformed(line, "expected `<type> <row>`"));
                };
                if name == objective.as_deref().unwrap_or("") || row_index.contains_key(name) {
                    return Err(malformed(line, format!("duplicate row `{name}`")));
                }
                let sense = match code {
                    "N" => {
                        if objective.is_some() {
                            return Err(malformed(line, "more than one objective row"));
                        }
                        objective = Some(name.to_string());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(malformed(line, format!("unknown row type `{code}`"))),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push(PendingRow {
                    name: name.to_string(),
                    sense,
                    rhs: 0.0,
                    range: None,
                });
            }
            Section::Columns => {
                if fields.len() == 3 && fields[1] == "'MARKER'" {
                    integer = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(malformed(line, format!("unknown marker {m}"))),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(malformed(line, "expected `<column> <row> <value> [<row> <value>]`"));
                }
                let name = fields[0];
                let j = match col_index.get(name) {
                    Some(&j) => j,
                    None => {
                        col_index.insert(name.to_string(), cols.len());
                        cols.push(PendingColumn {
                            name: name.to_string(),
                            integer,
                            cost: 0.0,
                            entries: Vec::new(),
                            lower: None,
                            upper: None,
                            binary_bound: false,
                        });
                        cols.len() - 1
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let v = number(line, pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        cols[j].cost += v;
                    } else {
                        let i = *row_index.get(pair[0]).ok_or_else(|| MpsError::UnknownRow {
                            line,
                            row: pair[0].to_string(),
                        })?;
                        cols[j].entries.push((i, v));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = match fields.len() {
                    2 | 4 => &fields[..],
                    3 | 5 => &fields[1..],
                    _ => return Err(malformed(line, "expected `[<set>] <row> <value> [<row> <value>]`")),
                };
                for pair in pairs.chunks(2) {
                    let v = number(line, pair[1])?;
                    if Some(pair[0]) == objective.as_deref() {
                        if section == Section::Ranges {
                            return Err(malformed(line, "range on the objective row"));
                        }
                        objective_rhs = v;
                        continue;
                    }
                    let i = *row_index.get(pair[0]).ok_or_else(|| MpsError::UnknownRow {
                        line,
                        row: pair[0].to_string(),
                    })?;
                    if section == Section::Rhs {
                        rows[i].rhs = v;
                    } else {
                        rows[i].range = Some(v);
                    }
                }
            }
            Section::Bounds => {
                let code = fields[0];
                let needs_value = !matches!(code, "FR" | "MI" | "PL" | "BV");
                let (column, value) = match (fields.len(), needs_value) {
                    (3, false) => (fields[2], None),
                    (4, true) => (fields[2], Some(number(line, fields[3])?)),
                    (4, false) if code == "BV" => (fields[2], None),
                    _ => return Err(malformed(line, format!("bad `{code}` bound"))),
                };
                let j = *col_index.get(column).ok_or_else(|| MpsError::UnknownColumn {
                    line,
                    column: column.to_string(),
                })?;
                let c = &mut cols[j];
                match (code, value) {
                    ("UP", Some(v)) => c.upper = Some(v),
                    ("LO", Some(v)) => c.lower = Some(v),
                    ("FX", Some(v)) => {
                        c.lower = Some(v);
                        c.upper = Some(v);
                    }
                    ("FR", _) => {
                        c.lower = Some(f64::NEG_INFINITY);
                        c.upper = Some(f64::INFINITY);
                    }
                    ("MI", _) => c.lower = Some(f64::NEG_INFINITY),
                    ("PL", _) => c.upper = Some(f64::INFINITY),
                    ("BV", _) => {
                        c.binary_bound = true;
                        c.lower = Some(0.0);
                        c.upper = Some(1.0);
                    }
                    _ => return Err(malformed(line, format!("unsupported bound type `{code}`"))),
                }
            }
        }
    }
    if section != Section::End {
        return Err(malformed(text.lines().count(), "missing ENDATA"));
    }

    let mut model = Milp::with_name(model_name);
    let mut names = NameTable::default();
    let mut objective_terms = Vec::new();
    for c in &cols {
        let binary = c.integer || c.binary_bound;
        let (default_hi, kind) = if binary {
            (1.0, VarKind::Binary)
        } else {
            (f64::INFINITY, VarKind::Continuous)
        };
        let j = model.add_variable(
            kind,
            c.lower.unwrap_or(0.0),
            c.upper.unwrap_or(default_hi),
            c.name.clone(),
        )?;
        names.columns.insert(c.name.clone(), j);
        if c.cost != 0.0 {
            objective_terms.push((j, c.cost));
        }
    }

    let mut terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for (j, c) in cols.iter().enumerate() {
        for &(i, a) in &c.entries {
            terms[i].push((j, a));
        }
    }
    let mut split = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let t = std::mem::take(&mut terms[i]);
        let (sense, rhs) = match row.range {
            None => (row.sense, row.rhs),
            Some(r) => {
                let (lo, hi) = match row.sense {
                    Sense::Le => (row.rhs - r.abs(), row.rhs),
                    Sense::Ge => (row.rhs, row.rhs + r.abs()),
                    Sense::Eq if r >= 0.0 => (row.rhs, row.rhs + r),
                    Sense::Eq => (row.rhs + r, row.rhs),
                };
                split.push((format!("{}_rng", row.name), t.clone(), hi));
                (Sense::Ge, lo)
            }
        };
        let k = model.add_constraint(row.name.clone(), t, sense, rhs)?;
        names.rows.insert(row.name.clone(), k);
    }
    for (name, t, hi) in split {
        if names.rows.contains_key(&name) {
            return Err(MpsError::NameCollision { kind: "row", name });
        }
        let k = model.add_constraint(name.clone(), t, Sense::Le, hi)?;
        names.rows.insert(name, k);
    }
    model.set_objective(objective_terms, -objective_rhs)?;
    Ok((model, names))
}
