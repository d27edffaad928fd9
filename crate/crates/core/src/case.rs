//! Planning case: network, generators, candidate lines, horizon and base-year load.
//!
//! Cases are read from a JSON document with the top-level keys `buses`,
//! `generators`, `branches`, `candidates`, `horizon` and `load`. `load` is a
//! dense `[bus][season][hour]` array in MW for the first epoch; a bus entry may
//! be `null` or `[]` to mean "no load". Optional keys carry defaults:
//! `switchable = true`, `p_min = 0`, `angle_bound = 0.6` rad.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Default symmetric bound on bus voltage angles, radians.
pub const DEFAULT_ANGLE_BOUND: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    /// $/MWh
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Flow is `(theta_from - theta_to) / reactance`, so the unit must turn
    /// radians into MW.
    pub reactance: f64,
    /// Long-term rating, MW.
    pub rate: f64,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub switchable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLine {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub reactance: f64,
    pub rate: f64,
    /// Capital cost in $.
    pub capital_cost: f64,
    /// Existing branch this candidate would run alongside. Informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_to: Option<String>,
}

fn default_epochs() -> usize {
    3
}
fn default_years_per_epoch() -> usize {
    5
}
fn default_seasons() -> usize {
    4
}
fn default_hours() -> usize {
    24
}
fn default_load_growth() -> f64 {
    0.02
}
fn default_maintenance_rate() -> f64 {
    0.04
}
fn default_true() -> bool {
    true
}
fn is_true(b: &bool) -> bool {
    *b
}
fn is_false(b: &bool) -> bool {
    !*b
}
fn default_angle_bound() -> f64 {
    DEFAULT_ANGLE_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_years_per_epoch")]
    pub years_per_epoch: usize,
    #[serde(default = "default_seasons")]
    pub seasons: usize,
    #[serde(default = "default_hours")]
    pub hours: usize,
    /// Annual load growth, fraction per year.
    #[serde(default = "default_load_growth")]
    pub load_growth: f64,
    /// Annual maintenance cost of a new line as a fraction of its capital cost.
    #[serde(default = "default_maintenance_rate")]
    pub maintenance_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub season_names: Vec<String>,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon {
            epochs: default_epochs(),
            years_per_epoch: default_years_per_epoch(),
            seasons: default_seasons(),
            hours: default_hours(),
            load_growth: default_load_growth(),
            maintenance_rate: default_maintenance_rate(),
            season_names: Vec::new(),
        }
    }
}

impl Horizon {
    /// Display name of season `s` (zero-based).
    pub fn season_name(&self, s: usize) -> String {
        if let Some(name) = self.season_names.get(s) {
            return name.clone();
        }
        if self.seasons == 4 {
            ["Spring", "Summer", "Fall", "Winter"][s].to_string()
        } else {
            format!("Season {}", s + 1)
        }
    }

    /// Days represented by one typical day of a season.
    pub fn days_per_season(&self) -> f64 {
        365.0 / self.seasons as f64
    }
}

/// Base-year load, dense over (bus, season, hour).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    buses: usize,
    seasons: usize,
    hours: usize,
    values: Vec<f64>,
}

impl LoadProfile {
    pub fn zeros(buses: usize, seasons: usize, hours: usize) -> Self {
        LoadProfile {
            buses,
            seasons,
            hours,
            values: vec![0.0; buses * seasons * hours],
        }
    }

    fn offset(&self, bus: usize, season: usize, hour: usize) -> usize {
        assert!(bus < self.buses && season < self.seasons && hour < self.hours);
        (bus * self.seasons + season) * self.hours + hour
    }

    /// Base-year MW at bus index `bus`, season and hour (all zero-based).
    pub fn get(&self, bus: usize, season: usize, hour: usize) -> f64 {
        self.values[self.offset(bus, season, hour)]
    }

    pub fn set(&mut self, bus: usize, season: usize, hour: usize, mw: f64) {
        let i = self.offset(bus, season, hour);
        self.values[i] = mw;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multiply every entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Total system load in one interval of the base year.
    pub fn total(&self, season: usize, hour: usize) -> f64 {
        (0..self.buses).map(|n| self.get(n, season, hour)).sum()
    }

    fn has_load(&self, bus: usize) -> bool {
        (0..self.seasons).any(|s| (0..self.hours).any(|t| self.get(bus, s, t) != 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: Option<String>,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
    pub candidates: Vec<CandidateLine>,
    pub horizon: Horizon,
    pub load: LoadProfile,
    pub angle_bound: f64,
}

impl Case {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Index of the first declared reference bus.
    pub fn reference_bus(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_reference)
    }

    /// Load at bus index `bus` in hour `hour` of season `season` in epoch
    /// `epoch` (one-based), after growth.
    pub fn load_at(&self, bus: usize, hour: usize, season: usize, epoch: usize) -> f64 {
        let h = &self.horizon;
        grow_load(self.load.get(bus, season, hour), h.load_growth, h.years_per_epoch, epoch)
            .expect("epoch index is one-based")
    }
}

/// Raw document layout; `Case` is built from it after reference checks.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    branches: Vec<Branch>,
    #[serde(default)]
    candidates: Vec<CandidateLine>,
    #[serde(default)]
    horizon: Horizon,
    load: Vec<Option<Vec<Vec<f64>>>>,
    #[serde(default = "default_angle_bound")]
    angle_bound: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required field: {0}")]
    MissingField(String),
    #[error("invalid case document: {0}")]
    Invalid(String),
    #[error("{element} `{id}` references unknown bus `{bus}`")]
    UnknownBus {
        element: &'static str,
        id: String,
        bus: String,
    },
    #[error("load for bus `{bus}` has shape mismatch: {message}")]
    LoadShape { bus: String, message: String },
}

impl From<serde_json::Error> for CaseError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column) = (e.line(), e.column());
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => CaseError::Syntax {
                line,
                column,
                message: e.to_string(),
            },
            Category::Data => {
                let msg = e.to_string();
                match msg.strip_prefix("missing field `") {
                    Some(rest) => CaseError::MissingField(
                        rest.split('`').next().unwrap_or_default().to_string(),
                    ),
                    None => CaseError::Invalid(msg),
                }
            }
        }
    }
}

/// Parse a case document, applying defaults and checking bus references.
pub fn parse_case(document: &str) -> Result<Case, CaseError> {
    let doc: CaseDocument = serde_json::from_str(document)?;
    let bus_ids: HashSet<&str> = doc.buses.iter().map(|b| b.id.as_str()).collect();
    let check = |element: &'static str, id: &str, bus: &str| {
        if bus_ids.contains(bus) {
            Ok(())
        } else {
            Err(CaseError::UnknownBus {
                element,
                id: id.to_string(),
                bus: bus.to_string(),
            })
        }
    };
    for g in &doc.generators {
        check("generator", &g.id, &g.bus)?;
    }
    for k in &doc.branches {
        check("branch", &k.id, &k.from_bus)?;
        check("branch", &k.id, &k.to_bus)?;
    }
    for j in &doc.candidates {
        check("candidate", &j.id, &j.from_bus)?;
        check("candidate", &j.id, &j.to_bus)?;
    }

    let h = &doc.horizon;
    if doc.load.len() > doc.buses.len() {
        return Err(CaseError::Invalid(format!(
            "load has {} bus entries but only {} buses are declared",
            doc.load.len(),
            doc.buses.len()
        )));
    }
    let mut load = LoadProfile::zeros(doc.buses.len(), h.seasons, h.hours);
    for (n, entry) in doc.load.iter().enumerate() {
        let bus = &doc.buses[n].id;
        let Some(seasons) = entry else { continue };
        if seasons.is_empty() {
            continue;
        }
        if seasons.len() != h.seasons {
            return Err(CaseError::LoadShape {
                bus: bus.clone(),
                message: format!("{} seasons given, horizon has {}", seasons.len(), h.seasons),
            });
        }
        for (s, hours) in seasons.iter().enumerate() {
            if hours.len() != h.hours {
                return Err(CaseError::LoadShape {
                    bus: bus.clone(),
                    message: format!(
                        "season {} has {} hours, horizon has {}",
                        s + 1,
                        hours.len(),
                        h.hours
                    ),
                });
            }
            for (t, &mw) in hours.iter().enumerate() {
                load.set(n, s, t, mw);
            }
        }
    }

    Ok(Case {
        name: doc.name,
        buses: doc.buses,
        generators: doc.generators,
        branches: doc.branches,
        candidates: doc.candidates,
        horizon: doc.horizon,
        load,
        angle_bound: doc.angle_bound,
    })
}

/// Render a case back to its JSON document form.
pub fn render_case(case: &Case) -> String {
    let h = &case.horizon;
    let load = (0..case.buses.len())
        .map(|n| {
            if !case.load.has_load(n) {
                return None;
            }
            Some(
                (0..h.seasons)
                    .map(|s| (0..h.hours).map(|t| case.load.get(n, s, t)).collect())
                    .collect(),
            )
        })
        .collect();
    let doc = CaseDocument {
        name: case.name.clone(),
        buses: case.buses.clone(),
        generators: case.generators.clone(),
        branches: case.branches.clone(),
        candidates: case.candidates.clone(),
        horizon: case.horizon.clone(),
        load,
        angle_bound: case.angle_bound,
    };
    serde_json::to_string_pretty(&doc).expect("case documents always serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Fatal => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Fatal)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    fn fatal(&mut self, message: String) {
        self.findings.push(Finding {
            severity: Severity::Fatal,
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "ok: no findings");
        }
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Identifiers must be usable inside model column names, which join parts
/// with `_`.
fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
}

fn check_ids<'a>(
    report: &mut ValidationReport,
    kind: &str,
    ids: impl Iterator<Item = &'a str>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !valid_id(id) {
            report.fatal(format!(
                "{kind} id `{id}` must be non-empty and use only ASCII letters, digits, `-` or `.`"
            ));
        }
        if !seen.insert(id) {
            report.fatal(format!("duplicate {kind} id `{id}`"));
        }
    }
}

/// Check every case invariant. Fatal findings block model assembly.
pub fn validate_case(case: &Case) -> ValidationReport {
    let mut report = ValidationReport::default();

    check_ids(&mut report, "bus", case.buses.iter().map(|b| b.id.as_str()));
    check_ids(&mut report, "generator", case.generators.iter().map(|g| g.id.as_str()));
    check_ids(&mut report, "branch", case.branches.iter().map(|k| k.id.as_str()));
    check_ids(&mut report, "candidate", case.candidates.iter().map(|j| j.id.as_str()));

    match case.buses.iter().filter(|b| b.is_reference).count() {
        1 => {}
        0 => report.fatal("no reference bus declared".into()),
        n => report.fatal(format!("{n} reference buses declared, exactly one required")),
    }

    for g in &case.generators {
        if case.bus_index(&g.bus).is_none() {
            report.fatal(format!("generator `{}` references unknown bus `{}`", g.id, g.bus));
        }
        if !(g.p_min.is_finite() && g.p_max.is_finite()) || g.p_min < 0.0 || g.p_min > g.p_max {
            report.fatal(format!(
                "generator `{}` limits must satisfy 0 <= p_min <= p_max (got {} and {})",
                g.id, g.p_min, g.p_max
            ));
        } else if g.p_min > 0.0 {
            report.warn(format!(
                "generator `{}` has p_min = {} MW; unit commitment is not modeled, so the unit must run at least that much in every interval",
                g.id, g.p_min
            ));
        }
        if !(g.cost.is_finite() && g.cost >= 0.0) {
            report.fatal(format!("generator `{}` has negative or non-finite cost", g.id));
        }
    }

    let mut line = |kind: &str, id: &str, from: &str, to: &str, x: f64, rate: f64| {
        for bus in [from, to] {
            if case.bus_index(bus).is_none() {
                report.fatal(format!("{kind} `{id}` references unknown bus `{bus}`"));
            }
        }
        if from == to {
            report.fatal(format!("{kind} `{id}` connects bus `{from}` to itself"));
        }
        if !(x.is_finite() && x > 0.0) {
            report.fatal(format!("{kind} `{id}` has nonpositive reactance {x}"));
        }
        if !(rate.is_finite() && rate > 0.0) {
            report.fatal(format!("{kind} `{id}` has nonpositive rating {rate}"));
        }
    };
    for k in &case.branches {
        line("branch", &k.id, &k.from_bus, &k.to_bus, k.reactance, k.rate);
    }
    for j in &case.candidates {
        line("candidate", &j.id, &j.from_bus, &j.to_bus, j.reactance, j.rate);
    }
    for j in &case.candidates {
        if !(j.capital_cost.is_finite() && j.capital_cost >= 0.0) {
            report.fatal(format!("candidate `{}` has negative or non-finite capital cost", j.id));
        }
        if let Some(k) = &j.parallel_to {
            if !case.branches.iter().any(|b| &b.id == k) {
                report.warn(format!(
                    "candidate `{}` is declared parallel to unknown branch `{k}`",
                    j.id
                ));
            }
        }
    }

    let h = &case.horizon;
    for (name, count) in [
        ("epochs", h.epochs),
        ("years_per_epoch", h.years_per_epoch),
        ("seasons", h.seasons),
        ("hours", h.hours),
    ] {
        if count < 1 {
            report.fatal(format!("horizon {name} must be at least 1"));
        }
    }
    if !(h.load_growth.is_finite() && h.load_growth >= 0.0) {
        report.fatal(format!("load growth must be >= 0 (got {})", h.load_growth));
    }
    if !(h.maintenance_rate.is_finite() && h.maintenance_rate >= 0.0) {
        report.fatal(format!("maintenance rate must be >= 0 (got {})", h.maintenance_rate));
    }
    if !h.season_names.is_empty() && h.season_names.len() != h.seasons {
        report.fatal(format!(
            "{} season names given for {} seasons",
            h.season_names.len(),
            h.seasons
        ));
    }
    if !(case.angle_bound.is_finite() && case.angle_bound > 0.0) {
        report.fatal(format!("angle bound must be positive (got {})", case.angle_bound));
    }
    if case.load.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        report.fatal("load values must be finite and nonnegative".into());
    }

    if report.is_ok() {
        let capacity: f64 = case.generators.iter().map(|g| g.p_max).sum();
        let mut worst: Option<(f64, usize, usize, usize)> = None;
        for e in 1..=h.epochs {
            for s in 0..h.seasons {
                for t in 0..h.hours {
                    let demand: f64 = (0..case.buses.len()).map(|n| case.load_at(n, t, s, e)).sum();
                    if demand > capacity && worst.is_none_or(|w| demand > w.0) {
                        worst = Some((demand, t, s, e));
                    }
                }
            }
        }
        if let Some((demand, t, s, e)) = worst {
            report.warn(format!(
                "inadequate generation: peak load {demand:.3} MW (hour {}, {}, epoch {e}) exceeds total capacity {capacity:.3} MW",
                t + 1,
                h.season_name(s)
            ));
        }
    }

    report
}

#[derive(Debug, Error, PartialEq)]
#[error("epoch index must be at least 1 (got {0})")]
pub struct EpochDomainError(pub usize);

/// Load after growth: `d_base * (1 + a_d)^((e - 1) * n_ye)`, with `e` one-based.
pub fn grow_load(d_base: f64, a_d: f64, n_ye: usize, e: usize) -> Result<f64, EpochDomainError> {
    if e < 1 {
        return Err(EpochDomainError(e));
    }
    let years = ((e - 1) * n_ye) as i32;
    Ok(d_base * (1.0 + a_d).powi(years))
}
