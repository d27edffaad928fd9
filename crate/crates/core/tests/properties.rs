use proptest::prelude::*;

use tep_core::bnb::DEFAULT_MAX_BINARIES;
use tep_core::synthetic::{synthetic_case, Shape};
use tep_core::{
    build_milp, bundled, compute_metrics, enumerate_exact, grow_load, parse_case, parse_mps, render_case,
    solve_lp, solve_milp, write_mps, Horizon, Milp, Sense, SolveParams, VarKind, Variant,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn lp_value(m: &Milp) -> f64 {
    let out = solve_lp(m, 1e-6);
    assert!(out.is_optimal(), "{:?}", out.status);
    out.objective
}

/// Same model with rows emitted in `order` and columns reversed.
fn shuffled(m: &Milp, order: &[usize]) -> Milp {
    let n = m.num_variables();
    let col = |j: usize| n - 1 - j;
    let mut out = Milp::with_name(m.name.clone());
    for v in m.variables().iter().rev() {
        out.add_variable(v.kind, v.lower, v.upper, v.name.clone()).unwrap();
    }
    for &i in order {
        let c = &m.constraints()[i];
        let terms = c.terms.iter().rev().map(|&(j, a)| (col(j), a)).collect();
        out.add_constraint(c.name.clone(), terms, c.sense, c.rhs).unwrap();
    }
    let obj = m.objective().iter().map(|&(j, a)| (col(j), a)).collect();
    out.set_objective(obj, m.objective_constant()).unwrap();
    out
}

#[test]
fn bundled_cases_round_trip() {
    for (name, case) in bundled::all() {
        let text = render_case(&case);
        let back = parse_case(&text).unwrap();
        assert_eq!(back, case, "{name}");
        assert_eq!(render_case(&back), text, "{name}");
    }
}

#[test]
fn mps_round_trip_keeps_relaxation() {
    for (name, case) in bundled::all() {
        for v in Variant::ALL {
            let (m, _) = build_milp(&case, v).unwrap();
            let text = write_mps(&m).unwrap();
            let (back, names) = parse_mps(&text).unwrap();
            assert_eq!(back.num_variables(), m.num_variables(), "{name} {v}");
            assert_eq!(back.num_constraints(), m.num_constraints(), "{name} {v}");
            assert_eq!(back.num_binaries(), m.num_binaries(), "{name} {v}");
            assert_eq!(names.columns.len(), m.num_variables());
            assert!(rel(lp_value(&m), lp_value(&back)) <= 1e-9, "{name} {v}");
            assert_eq!(write_mps(&back).unwrap(), text, "{name} {v}");
        }
    }
}

#[test]
fn mps_round_trip_keeps_optimum() {
    let case = bundled::load("three_bus_switching").unwrap();
    let params = SolveParams {
        mip_gap: 1e-9,
        ..SolveParams::default()
    };
    for v in Variant::ALL {
        let (m, _) = build_milp(&case, v).unwrap();
        let (back, _) = parse_mps(&write_mps(&m).unwrap()).unwrap();
        let a = solve_milp(&m, &params);
        let b = solve_milp(&back, &params);
        assert!(rel(a.objective, b.objective) <= 1e-9, "{v}: {} vs {}", a.objective, b.objective);
    }
}

/// Knapsack-style model: `n` binaries and one continuous slack column.
fn random_milp(costs: &[f64], weights: &[Vec<f64>], caps: &[f64]) -> Milp {
    let mut m = Milp::new();
    let n = costs.len();
    for j in 0..n {
        m.add_variable(VarKind::Binary, 0.0, 1.0, format!("b{j}")).unwrap();
    }
    let s = m.add_variable(VarKind::Continuous, 0.0, 3.0, "s").unwrap();
    for (i, (w, &cap)) in weights.iter().zip(caps).enumerate() {
        let mut terms: Vec<(usize, f64)> = w.iter().copied().enumerate().collect();
        terms.push((s, -1.0));
        m.add_constraint(format!("r{i}"), terms, Sense::Le, cap).unwrap();
    }
    let mut obj: Vec<(usize, f64)> = costs.iter().copied().enumerate().collect();
    obj.push((s, 2.5));
    m.set_objective(obj, 0.0).unwrap();
    m
}

fn milp_case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..8, 1usize..4).prop_flat_map(|(n, r)| {
        (
            prop::collection::vec(-10.0f64..3.0, n),
            prop::collection::vec(prop::collection::vec(0.0f64..6.0, n), r),
            prop::collection::vec(2.0f64..12.0, r),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthetic_round_trip(buses in 4usize..12, extra in 0usize..4, gens in 1usize..6, cands in 0usize..4,
                            seasons in 1usize..3, hours in 1usize..4) {
        let shape = Shape {
            buses,
            branches: (buses + extra).min(buses * (buses - 1) / 2),
            generators: gens,
            candidates: cands,
            horizon: Horizon { epochs: 2, seasons, hours, ..Horizon::default() },
        };
        let case = synthetic_case(&shape);
        let back = parse_case(&render_case(&case)).unwrap();
        prop_assert_eq!(back, case);
    }

    #[test]
    fn load_growth_is_monotone(d in 0.0f64..500.0, a in 0.0f64..0.1, n_ye in 1usize..10, e in 1usize..5) {
        let now = grow_load(d, a, n_ye, e).unwrap();
        let next = grow_load(d, a, n_ye, e + 1).unwrap();
        prop_assert!(next >= now);
        prop_assert!(now >= d);
        prop_assert_eq!(grow_load(d, a, n_ye, 1).unwrap(), d);
        prop_assert!(grow_load(d, a, n_ye, 0).is_err());
    }

    #[test]
    fn metric_identities(a in 1.0f64..1e10, b in 1.0f64..1e10) {
        let same = compute_metrics(a, a).unwrap();
        prop_assert_eq!(same.tcr, 0.0);
        prop_assert_eq!(same.rho, 0.0);
        let m = compute_metrics(a, b).unwrap();
        prop_assert_eq!(m.tcr + (b - a), 0.0);
        prop_assert!((m.rho * a - m.tcr).abs() <= 1e-12 * a.max(b));
        prop_assert!(compute_metrics(-a, b).is_err());
    }

    #[test]
    fn lp_ignores_row_and_column_order(seed in 0u64..1000) {
        let cases = bundled::all();
        let (_, case) = &cases[seed as usize % cases.len()];
        let variant = Variant::ALL[(seed / 7) as usize % 3];
        let (m, _) = build_milp(case, variant).unwrap();
        let k = m.num_constraints();
        let stride = [1usize, 3, 5, 7, 11, 13].into_iter().find(|s| k % s != 0).unwrap();
        let order: Vec<usize> = (0..k).map(|i| (i * stride + seed as usize) % k).collect();
        let a = lp_value(&m);
        let b = lp_value(&shuffled(&m, &order));
        prop_assert!(rel(a, b) <= 1e-7, "{} vs {}", a, b);
    }

    #[test]
    fn bnb_matches_enumeration((costs, weights, caps) in milp_case()) {
        let m = random_milp(&costs, &weights, &caps);
        let params = SolveParams { mip_gap: 0.0, ..SolveParams::default() };
        let bnb = solve_milp(&m, &params);
        let ex = enumerate_exact(&m, DEFAULT_MAX_BINARIES).unwrap();
        prop_assert_eq!(bnb.status.is_solved(), ex.status.is_solved());
        if ex.status.is_solved() {
            prop_assert!(rel(bnb.objective, ex.objective) <= 1e-9, "{} vs {}", bnb.objective, ex.objective);
            let x = bnb.incumbent.unwrap();
            prop_assert!(m.evaluate(&x, 1e-6).unwrap().is_feasible());
        }
    }
}
