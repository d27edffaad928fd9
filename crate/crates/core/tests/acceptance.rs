//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use tep_core::builder::VariableIndex;
use tep_core::report::format_percent;
use tep_core::synthetic::{synthetic_case, Shape};
use tep_core::{
    build_milp, build_milp_with, bundled, compute_metrics, decode_plan, enumerate_exact, investment_multiplier,
    parse_mps, parse_solution, pin_topology, solve_milp, write_mps, write_solution, BuildOptions, Case, Milp,
    SolveOutcome, SolveParams, Variant,
};

const REL_TOL: f64 = 1e-6;
const PHYSICS_TOL: f64 = 1e-6;
const ORACLE_MAX_BINARIES: usize = 16;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn params() -> SolveParams {
    SolveParams {
        mip_gap: 1e-9,
        ..SolveParams::default()
    }
}

struct Run {
    variant: Variant,
    model: Milp,
    index: VariableIndex,
    oracle: SolveOutcome,
    bnb: SolveOutcome,
    bnb_time: Duration,
}

struct Study {
    name: &'static str,
    case: Case,
    runs: Vec<Run>,
}

impl Study {
    fn run(&self, v: Variant) -> &Run {
        self.runs.iter().find(|r| r.variant == v).unwrap()
    }
}

fn study() -> Vec<Study> {
    bundled::all()
        .into_iter()
        .map(|(name, case)| {
            let runs = Variant::ALL
                .iter()
                .map(|&variant| {
                    let (model, index) = build_milp(&case, variant).expect("bundled cases build");
                    let start = Instant::now();
                    let bnb = solve_milp(&model, &params());
                    let bnb_time = start.elapsed();
                    let oracle = enumerate_exact(&model, ORACLE_MAX_BINARIES).expect("bundled cases are small");
                    Run {
                        variant,
                        model,
                        index,
                        oracle,
                        bnb,
                        bnb_time,
                    }
                })
                .collect();
            Study { name, case, runs }
        })
        .collect()
}

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence(studies: &[Study]) -> Verdict {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut problems = Vec::new();
    for s in studies {
        let h = &s.case.horizon;
        let shape_ok = (3..=8).contains(&s.case.buses.len())
            && (1..=4).contains(&s.case.candidates.len())
            && h.hours <= 4
            && h.seasons <= 2
            && h.epochs <= 2;
        if !shape_ok {
            problems.push(format!("{} is outside the oracle shape", s.name));
        }
        let mut case_time = Duration::ZERO;
        for r in &s.runs {
            case_time += r.bnb_time;
            if r.model.num_binaries() > ORACLE_MAX_BINARIES {
                problems.push(format!("{} {}: {} binaries", s.name, r.variant, r.model.num_binaries()));
            }
            if !r.oracle.status.is_solved() || !r.bnb.status.is_solved() {
                problems.push(format!("{} {}: oracle {} bnb {}", s.name, r.variant, r.oracle.status, r.bnb.status));
                continue;
            }
            let d = rel(r.bnb.objective, r.oracle.objective);
            worst = worst.max(d);
            if d > REL_TOL {
                problems.push(format!("{} {}: rel diff {d:.2e}", s.name, r.variant));
            }
        }
        slowest = slowest.max(case_time);
        if case_time >= Duration::from_secs(10) {
            problems.push(format!("{} took {:.2?}", s.name, case_time));
        }
    }
    let detail = format!(
        "{} cases x 3 variants, max rel diff {worst:.1e}, slowest case {:.3} s {}",
        studies.len(),
        slowest.as_secs_f64(),
        problems.join("; ")
    );
    check(studies.len() >= 5 && problems.is_empty(), detail)
}

fn nesting(studies: &[Study]) -> Verdict {
    let mut problems = Vec::new();
    for s in studies {
        let tc = |v| s.run(v).oracle.objective;
        let (tep, t1, t2) = (tc(Variant::Tep), tc(Variant::SnoT1), tc(Variant::SnoT2));
        if !(t2 <= t1 && t1 <= tep + REL_TOL * tep) {
            problems.push(format!("{}: {t2} / {t1} / {tep}", s.name));
        }
    }
    check(
        problems.is_empty(),
        format!("TC(T2) <= TC(T1) <= TC(TEP) on {} cases {}", studies.len(), problems.join("; ")),
    )
}

fn fix_and_recover(studies: &[Study]) -> Verdict {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for s in studies {
        let tep = s.run(Variant::Tep).oracle.objective;
        for v in [Variant::SnoT1, Variant::SnoT2] {
            let r = s.run(v);
            let pinned = pin_topology(&r.model, &r.index).expect("pinning keeps bounds valid");
            let out = solve_milp(&pinned, &params());
            let d = rel(out.objective, tep);
            worst = worst.max(d);
            if !out.status.is_solved() || d > REL_TOL {
                problems.push(format!("{} {v}: {} vs {tep}", s.name, out.objective));
            }
        }
    }
    check(
        problems.is_empty(),
        format!("pinned T1/T2 reproduce TEP, max rel diff {worst:.1e} {}", problems.join("; ")),
    )
}

fn metrics_arithmetic() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for (sno, tcr, rho) in [(9_456_150_000.0, 465_040_000.0, 4.69), (9_429_990_000.0, 491_200_000.0, 4.95)] {
        let m = compute_metrics(9_921_190_000.0, sno).expect("positive baseline");
        let pass = (m.tcr - tcr).abs() < 0.5 && (m.rho * 100.0 - rho).abs() <= 0.005;
        ok &= pass;
        lines.push(format!("tcr {} rho {}", m.tcr, format_percent(m.rho, 2)));
    }
    check(ok, lines.join(", "))
}

fn multipliers() -> Verdict {
    let got: Vec<f64> = (1..=3).map(|e| investment_multiplier(3, 5, 0.04, e).unwrap()).collect();
    check(got == [1.6, 1.4, 1.2], format!("{got:?}"))
}

fn binary_counts(studies: &[Study]) -> Verdict {
    let mut problems = Vec::new();
    let mut cases: Vec<(String, Case)> = studies.iter().map(|s| (s.name.to_string(), s.case.clone())).collect();
    let mut rts = synthetic_case(&Shape::rts24());
    for br in &mut rts.branches {
        br.switchable = true;
    }
    cases.push(("rts24".to_string(), rts.clone()));
    for (name, case) in &cases {
        let (j, s, e) = (case.candidates.len(), case.horizon.seasons, case.horizon.epochs);
        let count = |v| build_milp(case, v).unwrap().0.num_binaries();
        let (tep, t1, t2) = (count(Variant::Tep), count(Variant::SnoT1), count(Variant::SnoT2));
        if tep != 2 * j * e || t2 - t1 != j * s * e {
            problems.push(format!("{name}: {tep} {t1} {t2}"));
        }
    }
    let tep = build_milp(&rts, Variant::Tep).unwrap().0.num_binaries();
    let delta = build_milp(&rts, Variant::SnoT2).unwrap().0.num_binaries()
        - build_milp(&rts, Variant::SnoT1).unwrap().0.num_binaries();
    check(
        problems.is_empty() && tep == 84 && delta == 168,
        format!("{} cases, 24-bus shape TEP {tep}, T2-T1 {delta} {}", cases.len(), problems.join("; ")),
    )
}

fn deferral(studies: &[Study]) -> Verdict {
    let s = studies.iter().find(|s| s.name == "three_bus_switching").expect("deferral case bundled");
    let plan = |v| {
        let r = s.run(v);
        decode_plan(&s.case, &r.model, &r.index, r.oracle.incumbent.as_ref().unwrap()).unwrap()
    };
    let (tep, t1) = (plan(Variant::Tep), plan(Variant::SnoT1));
    let ids = |p: &tep_core::Plan| -> Vec<String> { p.builds_in(0).map(|c| s.case.candidates[c].id.clone()).collect() };
    let (tep_first, t1_first) = (ids(&tep), ids(&t1));
    let deferred = !tep_first.is_empty() && tep_first.iter().all(|c| !t1_first.contains(c));
    check(
        deferred && t1.tc < tep.tc,
        format!(
            "TEP builds {:?} in epoch 1 (TC {:.2}), T1 builds {:?} (TC {:.2})",
            tep_first, tep.tc, t1_first, t1.tc
        ),
    )
}

/// Largest physics residual of assignment `x`, with a description.
fn physics(case: &Case, index: &VariableIndex, x: &[f64]) -> (f64, String) {
    let mut worst = (0.0, String::new());
    let mut note = |v: f64, what: &dyn Fn() -> String| {
        if v > worst.0 {
            worst = (v, what());
        }
    };
    let bus = |id: &str| case.bus_index(id).unwrap();
    let on = |col: usize| x[col] > 0.5;
    for e in 0..index.epochs {
        for c in 0..case.candidates.len() {
            if e + 1 < index.epochs {
                note(x[index.available(c, e)] - x[index.available(c, e + 1)], &|| format!("u_{c} decreases"));
            }
        }
        for s in 0..index.seasons {
            for c in 0..case.candidates.len() {
                if let Some(z) = index.candidate_status(c, s, e) {
                    note(x[z] - x[index.available(c, e)], &|| format!("z_{c} > u_{c}"));
                }
            }
            for t in 0..index.hours {
                let theta = |n: usize| x[index.angle(n, t, s, e)];
                let mut balance: Vec<f64> = (0..case.buses.len()).map(|n| -case.load_at(n, t, s, e + 1)).collect();
                for (g, gen) in case.generators.iter().enumerate() {
                    balance[bus(&gen.bus)] += x[index.dispatch(g, t, s, e)];
                }
                let mut line = |from: &str, to: &str, reactance: f64, p: f64, closed: bool, label: String| {
                    let (i, j) = (bus(from), bus(to));
                    balance[i] -= p;
                    balance[j] += p;
                    let r = if closed { (p - (theta(i) - theta(j)) / reactance).abs() } else { p.abs() };
                    note(r, &|| format!("{label} t{t} s{s} e{e} closed={closed}"));
                };
                for (k, br) in case.branches.iter().enumerate() {
                    let closed = index.branch_status(k, s, e).is_none_or(on);
                    let p = x[index.branch_flow(k, t, s, e)];
                    line(&br.from_bus, &br.to_bus, br.reactance, p, closed, format!("branch {}", br.id));
                }
                for (c, cand) in case.candidates.iter().enumerate() {
                    let closed = on(index.available(c, e)) && index.candidate_status(c, s, e).is_none_or(on);
                    let p = x[index.candidate_flow(c, t, s, e)];
                    line(&cand.from_bus, &cand.to_bus, cand.reactance, p, closed, format!("candidate {}", cand.id));
                }
                for (n, r) in balance.iter().enumerate() {
                    note(r.abs(), &|| format!("balance bus {} t{t} s{s} e{e}", case.buses[n].id));
                }
            }
        }
    }
    worst
}

fn physics_invariants(studies: &[Study]) -> Verdict {
    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for s in studies {
        for r in &s.runs {
            for out in [&r.bnb, &r.oracle] {
                let Some(x) = out.incumbent.as_ref() else {
                    return Err(format!("{} {}: no incumbent", s.name, r.variant));
                };
                checked += 1;
                let (v, what) = physics(&s.case, &r.index, x);
                if v > worst.0 {
                    worst = (v, format!("{} {}: {what}", s.name, r.variant));
                }
            }
        }
    }
    check(
        worst.0 <= PHYSICS_TOL,
        format!("{checked} incumbents, max residual {:.1e} {}", worst.0, worst.1),
    )
}

fn big_m_validity(studies: &[Study]) -> Verdict {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let loose = BuildOptions { big_m_scale: 10.0 };
    for s in studies {
        for r in &s.runs {
            let (m, _) = build_milp_with(&s.case, r.variant, &loose).unwrap();
            let out = solve_milp(&m, &params());
            let d = rel(out.objective, r.oracle.objective);
            worst = worst.max(d);
            if !out.status.is_solved() || d > REL_TOL {
                problems.push(format!("{} {}: {} vs {}", s.name, r.variant, out.objective, r.oracle.objective));
            }
        }
    }
    check(
        problems.is_empty(),
        format!("M x10 on {} models, max rel change {worst:.1e} {}", studies.len() * 3, problems.join("; ")),
    )
}

fn interop(studies: &[Study]) -> Verdict {
    let mut problems = Vec::new();
    let mut worst = 0.0f64;
    for s in studies {
        for r in &s.runs {
            let first = write_mps(&r.model).unwrap();
            let second = parse_mps(&first).map(|(m, _)| write_mps(&m).unwrap());
            if second.as_ref() != Ok(&first) {
                problems.push(format!("{} {}: MPS not a fixed point", s.name, r.variant));
            }
            let listing = write_solution(&r.model, r.oracle.incumbent.as_ref().unwrap());
            let x = parse_solution(&r.model, &listing).unwrap();
            match decode_plan(&s.case, &r.model, &r.index, &x) {
                Ok(plan) => {
                    let d = rel(plan.tc, r.oracle.objective);
                    worst = worst.max(d);
                    if d > REL_TOL {
                        problems.push(format!("{} {}: tc {} vs {}", s.name, r.variant, plan.tc, r.oracle.objective));
                    }
                }
                Err(e) => problems.push(format!("{} {}: {e}", s.name, r.variant)),
            }
        }
    }
    check(
        problems.is_empty(),
        format!(
            "{} models byte-stable, imported tc max rel diff {worst:.1e} {}",
            studies.len() * 3,
            problems.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let studies = study();
    let criteria: [(&str, Box<dyn Fn() -> Verdict + '_>); 10] = [
        ("oracle equivalence", Box::new(|| oracle_equivalence(&studies))),
        ("variant nesting", Box::new(|| nesting(&studies))),
        ("fix-and-recover", Box::new(|| fix_and_recover(&studies))),
        ("metrics arithmetic", Box::new(metrics_arithmetic)),
        ("investment multiplier", Box::new(multipliers)),
        ("binary-count formulas", Box::new(|| binary_counts(&studies))),
        ("deferral demonstration", Box::new(|| deferral(&studies))),
        ("physics invariants", Box::new(|| physics_invariants(&studies))),
        ("big-M validity", Box::new(|| big_m_validity(&studies))),
        ("interop", Box::new(|| interop(&studies))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {}", i + 1, detail.trim_end()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {}", i + 1, detail.trim_end());
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
