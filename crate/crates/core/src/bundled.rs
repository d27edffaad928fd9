//! Desk-scale cases shipped with the crate.

use crate::case::{parse_case, Case};

/// `(name, document)` for every bundled case.
pub const CASES: &[(&str, &str)] = &[
    ("three_bus_switching", include_str!("../cases/three_bus_switching.json")),
    ("four_bus_ring", include_str!("../cases/four_bus_ring.json")),
    ("five_bus_growth", include_str!("../cases/five_bus_growth.json")),
    ("six_bus_two_season", include_str!("../cases/six_bus_two_season.json")),
    ("eight_bus_corridor", include_str!("../cases/eight_bus_corridor.json")),
    ("three_bus_four_candidates", include_str!("../cases/three_bus_four_candidates.json")),
];

/// Parse a bundled case by name.
pub fn load(name: &str) -> Option<Case> {
    CASES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, doc)| parse_case(doc).expect("bundled cases parse"))
}

/// Every bundled case, parsed, in declaration order.
pub fn all() -> Vec<(&'static str, Case)> {
    CASES
        .iter()
        .map(|(n, doc)| (*n, parse_case(doc).expect("bundled cases parse")))
        .collect()
}
