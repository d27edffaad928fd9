//! Fixtures shared by the benchmarks.

use tep_core::synthetic::{synthetic_case, Shape};
use tep_core::{build_milp, bundled, Case, Horizon, Milp, Variant};

/// 12-bus synthetic case small enough for the dense simplex: 2 epochs, 2
/// seasons, 2 hours.
pub fn medium_case() -> Case {
    synthetic_case(&Shape {
        buses: 12,
        branches: 18,
        generators: 6,
        candidates: 3,
        horizon: Horizon {
            epochs: 2,
            seasons: 2,
            hours: 2,
            ..Horizon::default()
        },
    })
}

/// Full-size 24-bus case: 3 epochs of 4 seasons of 24 hours.
pub fn rts24_case() -> Case {
    synthetic_case(&Shape::rts24())
}

pub fn bundled_model(name: &str, variant: Variant) -> Milp {
    let case = bundled::load(name).unwrap_or_else(|| panic!("no bundled case {name}"));
    build_milp(&case, variant).expect("bundled cases build").0
}
