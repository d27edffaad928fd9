//! Deterministic synthetic cases of arbitrary size, for model-size checks and
//! benchmarks. Values follow fixed arithmetic patterns; nothing is random.

use crate::case::{Branch, Bus, CandidateLine, Case, Generator, Horizon, LoadProfile, DEFAULT_ANGLE_BOUND};

#[derive(Debug, Clone)]
pub struct Shape {
    pub buses: usize,
    pub branches: usize,
    pub generators: usize,
    pub candidates: usize,
    pub horizon: Horizon,
}

impl Shape {
    /// 24 buses, 38 branches, 33 generators, 14 candidates over 3 epochs of 4
    /// seasons of 24 hours: the size of one area of the IEEE RTS-96.
    pub fn rts24() -> Self {
        Shape {
            buses: 24,
            branches: 38,
            generators: 33,
            candidates: 14,
            horizon: Horizon::default(),
        }
    }
}

/// Ring `1-2-...-n-1` plus chords `i -> i + 2 + (i mod 3)` until `branches`
/// lines exist, then any unused pairs. Candidates run parallel to branches in index order.
pub fn synthetic_case(shape: &Shape) -> Case {
    let n = shape.buses;
    assert!(n >= 3, "need at least 3 buses");
    assert!(shape.branches >= n, "need at least a ring");
    let bus_id = |i: usize| (i % n + 1).to_string();

    let buses = (0..n)
        .map(|i| Bus {
            id: bus_id(i),
            is_reference: i == 0,
        })
        .collect();

    let mut ends: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    assert!(shape.branches <= n * (n - 1) / 2, "cannot place {} distinct branches", shape.branches);
    let free = |ends: &[(usize, usize)], (a, b): (usize, usize)| a != b && !ends.contains(&(a, b)) && !ends.contains(&(b, a));
    for i in 0..3 * n {
        if ends.len() == shape.branches {
            break;
        }
        let pair = (i % n, (i + 2 + i % 3) % n);
        if free(&ends, pair) {
            ends.push(pair);
        }
    }
    // Dense shapes exhaust the chord pattern; take the remaining pairs in order.
    for a in 0..n {
        for b in a + 1..n {
            if ends.len() < shape.branches && free(&ends, (a, b)) {
                ends.push((a, b));
            }
        }
    }

    let branches: Vec<Branch> = ends
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Branch {
            id: (k + 1).to_string(),
            from_bus: bus_id(a),
            to_bus: bus_id(b),
            reactance: 0.001 * (1.0 + (k % 5) as f64 * 0.25),
            rate: 150.0 + 50.0 * (k % 4) as f64,
            switchable: k % 3 != 0,
        })
        .collect();

    let generators = (0..shape.generators)
        .map(|g| Generator {
            id: format!("G{}", g + 1),
            bus: bus_id(g * 7),
            p_min: 0.0,
            p_max: 80.0 + 40.0 * (g % 5) as f64,
            cost: 8.0 + 6.0 * (g % 9) as f64,
        })
        .collect();

    let candidates = (0..shape.candidates)
        .map(|c| {
            let br = &branches[c % branches.len()];
            CandidateLine {
                id: format!("{}", branches.len() + c + 1),
                from_bus: br.from_bus.clone(),
                to_bus: br.to_bus.clone(),
                reactance: br.reactance,
                rate: br.rate,
                capital_cost: 2.0e6 + 5.0e5 * (c % 6) as f64,
                parallel_to: Some(br.id.clone()),
            }
        })
        .collect();

    let h = &shape.horizon;
    let mut load = LoadProfile::zeros(n, h.seasons, h.hours);
    for b in 0..n {
        if b % 4 == 3 {
            continue;
        }
        let base = 20.0 + 5.0 * (b % 7) as f64;
        for s in 0..h.seasons {
            let season = 1.0 + 0.1 * (s % 3) as f64;
            for t in 0..h.hours {
                let hour = 0.7 + 0.3 * ((t * 7) % h.hours.max(1)) as f64 / h.hours.max(1) as f64;
                load.set(b, s, t, base * season * hour);
            }
        }
    }

    Case {
        name: Some(format!("synthetic_{n}")),
        buses,
        generators,
        branches,
        candidates,
        horizon: h.clone(),
        load,
        angle_bound: DEFAULT_ANGLE_BOUND,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::validate_case;

    #[test]
    fn rts24_shape_is_valid() {
        let case = synthetic_case(&Shape::rts24());
        let report = validate_case(&case);
        assert!(report.is_ok(), "{report}");
        assert_eq!(report.warnings().count(), 0, "{report}");
        assert_eq!(case.branches.len(), 38);
        assert_eq!(case.generators.len(), 33);
        assert_eq!(case.candidates.len(), 14);
    }

    #[test]
    fn small_shapes() {
        for buses in 4..10 {
            let shape = Shape {
                buses,
                branches: buses + buses / 2,
                generators: 2,
                candidates: 1,
                horizon: Horizon {
                    epochs: 1,
                    seasons: 1,
                    hours: 2,
                    ..Horizon::default()
                },
            };
            let report = validate_case(&synthetic_case(&shape));
            assert!(report.is_ok(), "{buses}: {report}");
        }
    }
}
