//! Acceptance criteria 1–10, one PASS/FAIL line each.

mod common;

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use common::*;
use num_complex::Complex64;
use rand::Rng;
use renorm_core::boundary_data::{BoundaryData, ComponentData};
use renorm_core::domain::{Curve, Discretization, Domain, PunctureSet};
use renorm_core::harmonic_solver::{
    solve_dirichlet, solve_modified_dirichlet, solve_neumann, BoundaryCondition, Normalization, Profile, Sources,
};
use renorm_core::oracle::{analyze, finite_rho, oscillation_check, OscillationBound, RhoRecord, RhoStudy};
use renorm_core::path::{Endpoint, PathPlanner};
use renorm_core::quadrature::periodic_nodes;
use renorm_core::renorm::{
    dirichlet_renormalized_energy, dirichlet_solution, neumann_renormalized_energy, neumann_solution, EnergyReport,
    NeumannMode, Problem,
};
use renorm_core::topology::{harmonic_measures, period_matrix};
use renorm_core::Vec2;

const STEPS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared state between criteria that reuse the same studies.
#[derive(Default)]
struct Shared {
    dirichlet_records: Vec<(&'static str, Vec<RhoRecord>)>,
    neumann_records: Vec<(&'static str, Vec<RhoRecord>)>,
    tangential: Vec<f64>,
}

static SHARED: Mutex<Option<Shared>> = Mutex::new(None);

fn with_shared<T>(f: impl FnOnce(&mut Shared) -> T) -> T {
    let mut guard = SHARED.lock().unwrap();
    f(guard.get_or_insert_with(Shared::default))
}

fn dirichlet(d: &Domain, g: &BoundaryData) -> EnergyReport {
    let r = dirichlet_renormalized_energy(d, g, 3).unwrap();
    with_shared(|s| s.tangential.push(r.coupling));
    r
}

fn schedule(d: &Domain) -> Vec<f64> {
    let r0 = rho0(d);
    (0..STEPS).map(|j| r0 / (1u64 << j) as f64).collect()
}

fn records(d: &Domain, p: &Problem) -> Result<Vec<RhoRecord>, String> {
    schedule(d).into_iter().map(|rho| finite_rho(d, p, rho).map_err(|e| e.to_string())).collect()
}

fn degree_engine() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut wrong = 0;
    let mut verdict_mismatch = 0;
    for case in 0..50 {
        let w = r.gen_range(-4..=4);
        let data = ComponentData::new(w, random_series(&mut r, 5, 1.5));
        let g = BoundaryData::new(vec![data.clone()]);
        let dv = g.degree_with_residual(0, g.default_quadrature()).unwrap();
        worst = worst.max(dv.residual);
        if dv.degree != w {
            wrong += 1;
        }
        let holes: Vec<i64> = (0..r.gen_range(0..3)).map(|_| r.gen_range(-2..=2)).collect();
        let k = r.gen_range(1..4);
        let degs: Vec<i64> = (0..k).map(|_| [-2, -1, 1, 2][r.gen_range(0..4)]).collect();
        let pts: Vec<(Vec2, i64)> = degs.iter().enumerate().map(|(i, &d)| (v(0.1 * i as f64, 0.05), d)).collect();
        let sum: i64 = degs.iter().sum::<i64>() + holes.iter().sum::<i64>();
        let outer = if case % 2 == 0 { sum } else { sum + r.gen_range(1..3) * if r.gen() { 1 } else { -1 } };
        let mut comps = vec![ComponentData::new(outer, random_series(&mut r, 4, 1.0))];
        comps.extend(holes.iter().map(|&h| ComponentData::new(h, random_series(&mut r, 4, 1.0))));
        let verdict = BoundaryData::new(comps).check_compatibility(&punctures(&pts)).unwrap();
        if verdict.holds != (outer == sum) {
            verdict_mismatch += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wrong == 0 && verdict_mismatch == 0 && worst < 1e-10 && secs < 1.0,
        format!("wrong degrees {wrong}, max residual {worst:.1e}, verdict mismatches {verdict_mismatch}, {secs:.2} s"),
    )
}

fn solver_fixtures() -> Outcome {
    let start = Instant::now();
    let rbar = 0.4;
    let a = annulus(rbar, &[]);
    let m = harmonic_measures(&a).unwrap();
    let mut r = rng(2);
    let mut err_phi = 0.0f64;
    for _ in 0..100 {
        let rad = r.gen_range(0.41..0.99);
        let t = r.gen_range(0.0..2.0 * PI);
        let x = v(rad * t.cos(), rad * t.sin());
        let got = m.fields[0].eval_near(x).unwrap();
        err_phi = err_phi.max((got - rad.ln() / rbar.ln()).abs());
    }
    let err_p = (m.period.matrix[(0, 0)] - 2.0 * PI / rbar.ln().abs()).abs();
    let d = disk(&[]);
    let src = Sources::new(vec![(Vec2::ZERO, 1.0)]);
    let green = solve_dirichlet(&d, &src, vec![Profile::Constant(0.0)]).unwrap();
    let neu = solve_neumann(&d, &src, vec![Profile::Constant(1.0)], Normalization::boundary_mean(&d)).unwrap();
    let mut err_g = 0.0f64;
    for _ in 0..100 {
        let rad = r.gen_range(0.05..0.99);
        let t = r.gen_range(0.0..2.0 * PI);
        let x = v(rad * t.cos(), rad * t.sin());
        err_g = err_g.max((green.eval_near(x).unwrap() - rad.ln()).abs());
        err_g = err_g.max((neu.eval_near(x).unwrap() - rad.ln()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        err_phi < 1e-9 && err_p < 1e-9 && err_g < 1e-9 && secs < 5.0,
        format!("phi_1 {err_phi:.1e}, P_11 {err_p:.1e}, disk Green/Neumann {err_g:.1e}, {secs:.2} s"),
    )
}

fn period_matrices() -> Outcome {
    let mut r = rng(3);
    let mut worst_asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut failures = Vec::new();
    for case in 0..10 {
        let n = 2 + case % 2;
        let holes = random_holes(&mut r, n);
        let outer = if case % 3 == 0 { star(0.08, 5) } else { Curve::circle(Vec2::ZERO, 1.0) };
        let d = Domain::new(
            outer,
            holes.iter().map(|&(c, s)| Curve::circle(c, s)).collect(),
            PunctureSet::empty(),
            Discretization::default(),
        )
        .unwrap();
        match period_matrix(&d) {
            Ok(p) => {
                worst_asym = worst_asym.max(p.asymmetry);
                min_eig = min_eig.min(p.eigenvalues()[0]);
            }
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    outcome(
        failures.is_empty() && worst_asym <= 1e-8 && min_eig > 0.0,
        format!("max asymmetry {worst_asym:.1e}, min eigenvalue {min_eig:.3e}{}", join(&failures)),
    )
}

fn join(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!("; {}", v.join("; "))
    }
}

fn dirichlet_vs_oracle() -> Outcome {
    let start = Instant::now();
    let a = v(0.3, 0.0);
    let w = dirichlet(&disk(&[(a, 1)]), &winding(&[1])).total;
    let disk_err = (w + PI * (1.0 - a.norm_sq()).ln()).abs();
    let mut worst_rel = 0.0f64;
    let mut min_order = f64::INFINITY;
    let mut problems = Vec::new();
    for case in dirichlet_cases() {
        let closed = dirichlet(&case.domain, &case.g).total;
        let prob = Problem::Dirichlet { g: case.g.clone(), radius: 3 };
        let recs = match records(&case.domain, &prob) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{}: {e}", case.name));
                continue;
            }
        };
        with_shared(|s| s.dirichlet_records.push((case.name, recs.clone())));
        match analyze(recs) {
            Ok(RhoStudy { extrapolated, order, .. }) => {
                worst_rel = worst_rel.max((closed - extrapolated).abs() / (1.0 + closed.abs()));
                min_order = min_order.min(order.unwrap_or(f64::NAN));
            }
            Err(e) => problems.push(format!("{}: {e}", case.name)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        problems.is_empty() && disk_err < 1e-6 && worst_rel < 1e-4 && min_order >= 0.9 && secs < 60.0,
        format!(
            "disk error {disk_err:.1e}, max relative gap to oracle {worst_rel:.1e}, min fitted order {min_order:.2}, {secs:.1} s{}",
            join(&problems)
        ),
    )
}

fn max_decrease(recs: &[RhoRecord]) -> f64 {
    recs.windows(2).fold(0.0f64, |m, w| m.max(w[0].deflated - w[1].deflated))
}

fn monotonicity() -> Outcome {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let mut count = 0;
    let dir = with_shared(|s| s.dirichlet_records.clone());
    for (_, recs) in &dir {
        worst = worst.max(max_decrease(recs));
        count += 1;
    }
    for case in neumann_cases() {
        match records(&case.domain, &Problem::Neumann { mode: NeumannMode::Optimal { radius: 2 } }) {
            Ok(recs) => {
                worst = worst.max(max_decrease(&recs));
                count += 1;
                with_shared(|s| s.neumann_records.push((case.name, recs)));
            }
            Err(e) => problems.push(format!("{}: {e}", case.name)),
        }
    }
    let off = disk(&[(v(0.3, 0.0), 1)]);
    for p in [Problem::Dirichlet { g: winding(&[1]), radius: 3 }, Problem::Neumann { mode: NeumannMode::Optimal { radius: 2 } }] {
        match records(&off, &p) {
            Ok(recs) => {
                worst = worst.max(max_decrease(&recs));
                count += 1;
            }
            Err(e) => problems.push(format!("disk: {e}")),
        }
    }
    outcome(
        problems.is_empty() && count == dirichlet_cases().len() + neumann_cases().len() + 2 && worst <= 1e-7,
        format!("{count} sequences of {STEPS} radii, largest decrease {worst:.1e}{}", join(&problems)),
    )
}

fn tangential_term() -> Outcome {
    let all = with_shared(|s| s.tangential.clone());
    let worst = all.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    outcome(!all.is_empty() && worst < 1e-8, format!("{} Dirichlet runs, max |sum alpha_l int d_tau Phi_0| {worst:.1e}", all.len()))
}

fn neumann_pipeline() -> Outcome {
    let centered = neumann_renormalized_energy(&disk(&[(Vec2::ZERO, 1)]), &NeumannMode::Optimal { radius: 3 }).unwrap().total;
    let a = v(0.3, 0.0);
    let off = neumann_renormalized_energy(&disk(&[(a, 1)]), &NeumannMode::Optimal { radius: 3 }).unwrap().total;
    let off_err = (off - PI * (1.0 - a.norm_sq()).ln()).abs();
    let mut worst_res = 0.0f64;
    let mut compared = 0;
    let mut disagreements = Vec::new();
    let oracle = with_shared(|s| s.neumann_records.clone());
    for case in neumann_cases() {
        let r = neumann_renormalized_energy(&case.domain, &NeumannMode::Optimal { radius: 2 }).unwrap();
        worst_res = worst_res.max(r.diagnostics.beta_residual);
        if r.diagnostics.search_gap <= 1e-6 {
            continue;
        }
        match oracle.iter().find(|(n, _)| *n == case.name) {
            Some((_, recs)) => {
                compared += 1;
                let finest = recs.last().unwrap();
                if finest.degrees != r.degrees {
                    disagreements.push(format!("{}: closed form {:?}, oracle {:?}", case.name, r.degrees, finest.degrees));
                }
            }
            None => disagreements.push(format!("{}: no oracle study", case.name)),
        }
    }
    outcome(
        centered.abs() < 1e-8 && off_err < 1e-6 && worst_res < 1e-10 && disagreements.is_empty() && compared > 0,
        format!(
            "centered {centered:.1e}, off-center error {off_err:.1e}, max beta residual {worst_res:.1e}, argmin compared on {compared} fixtures{}",
            join(&disagreements)
        ),
    )
}

fn loop_points(d: &Domain, a: Vec2) -> Vec<Vec2> {
    let planner = PathPlanner::new(d);
    let r = (2.0 * planner.margin_puncture()).min(0.5 * d.distance_to_boundary(a));
    (0..32).map(|k| a + v((2.0 * PI * k as f64 / 32.0).cos(), (2.0 * PI * k as f64 / 32.0).sin()) * r).collect()
}

fn winding_of(values: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for k in 0..values.len() {
        s += (values[(k + 1) % values.len()] / values[k]).arg();
    }
    s / (2.0 * PI)
}

fn canonical_maps() -> Outcome {
    let mut worst_wind = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_current = 0.0f64;
    let mut problems = Vec::new();
    let cases = dirichlet_cases();
    for case in [&cases[0], &cases[3], &cases[4]] {
        let mut run = || -> Result<(), String> {
            let sol = dirichlet_solution(&case.domain, &case.g, 3).map_err(|e| e.to_string())?;
            with_shared(|s| s.tangential.push(sol.report.coupling));
            for p in case.domain.punctures().iter() {
                let vals = loop_points(&case.domain, p.position)
                    .into_iter()
                    .map(|x| sol.canonical_map(Endpoint::Interior(x)).map(|s| s.value))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                let w = winding_of(&vals);
                if w.round() as i64 != p.degree {
                    return Err(format!("winding {w} around degree {}", p.degree));
                }
                worst_wind = worst_wind.max((w - w.round()).abs());
            }
            for c in 0..case.domain.num_components() {
                for t in periodic_nodes(64) {
                    let u = sol.canonical_map(Endpoint::Boundary { component: c, t }).map_err(|e| e.to_string())?.value;
                    let g = case.g.eval_g(c, t).unwrap();
                    worst_trace = worst_trace.max((u - g).norm());
                }
            }
            Ok(())
        };
        if let Err(e) = run() {
            problems.push(format!("{}: {e}", case.name));
        }
    }
    for case in neumann_cases() {
        let mut run = || -> Result<(), String> {
            let sol = neumann_solution(&case.domain, &NeumannMode::Optimal { radius: 2 }).map_err(|e| e.to_string())?;
            for p in case.domain.punctures().iter() {
                let vals = loop_points(&case.domain, p.position)
                    .into_iter()
                    .map(|x| sol.canonical_map(Endpoint::Interior(x)).map(|s| s.value))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                let w = winding_of(&vals);
                if w.round() as i64 != p.degree {
                    return Err(format!("winding {w} around degree {}", p.degree));
                }
                worst_wind = worst_wind.max((w - w.round()).abs());
            }
            for c in 0..case.domain.num_components() {
                for j in 0..case.domain.nodes(c) {
                    worst_current = worst_current.max(sol.normal_current(c, j).map_err(|e| e.to_string())?.abs());
                }
            }
            Ok(())
        };
        if let Err(e) = run() {
            problems.push(format!("{}: {e}", case.name));
        }
    }
    outcome(
        problems.is_empty() && worst_wind < 1e-4 && worst_trace < 1e-6 && worst_current < 1e-6,
        format!(
            "winding residual {worst_wind:.1e}, Dirichlet trace error {worst_trace:.1e}, Neumann normal current {worst_current:.1e}{}",
            join(&problems)
        ),
    )
}

fn invariance() -> Outcome {
    let mut r = rng(9);
    let mut worst_d = 0.0f64;
    let mut worst_n = 0.0f64;
    let mut problems = Vec::new();
    for case in 0..10 {
        let holes = match case % 3 {
            0 => vec![],
            1 => random_holes(&mut r, 1),
            _ => random_holes(&mut r, 2),
        };
        let outer = if case % 4 == 3 { star(0.06, 4) } else { Curve::circle(Vec2::ZERO, 1.0) };
        let base = Domain::new(
            outer,
            holes.iter().map(|&(c, s)| Curve::circle(c, s)).collect(),
            PunctureSet::empty(),
            Discretization::default(),
        )
        .unwrap();
        let k = r.gen_range(1..=2);
        let pos = random_positions(&mut r, &base, k, 0.15);
        let degs: Vec<i64> = (0..k).map(|_| [-2, -1, 1, 2][r.gen_range(0..4)]).collect();
        let pairs: Vec<(Vec2, i64)> = pos.into_iter().zip(degs.iter().copied()).collect();
        let d = base.with_punctures(punctures(&pairs)).unwrap();
        let hole_w: Vec<i64> = holes.iter().map(|_| r.gen_range(-1..=1)).collect();
        let mut ws = vec![degs.iter().sum::<i64>() + hole_w.iter().sum::<i64>()];
        ws.extend(hole_w);
        let g = random_data(&mut r, &ws);
        let gamma = r.gen_range(-PI..PI);
        let angle = r.gen_range(-PI..PI);
        let shift = v(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let run = || -> Result<(f64, f64), String> {
            let e = |x: renorm_core::Error| x.to_string();
            let w0 = dirichlet(&d, &g).total;
            let w_phase = dirichlet(&d, &g.rotated_phase(gamma)).total;
            let moved = d.rigid(angle, shift).map_err(e)?;
            let w_moved = dirichlet(&moved, &moved_data(&d, &g, angle)).total;
            let shifted = d.rigid(0.0, shift).map_err(e)?;
            let w_shift = dirichlet(&shifted, &g).total;
            let mode = NeumannMode::Optimal { radius: 3 };
            let n0 = neumann_renormalized_energy(&d, &mode).map_err(e)?.total;
            let n_moved = neumann_renormalized_energy(&moved, &mode).map_err(e)?.total;
            let n_shift = neumann_renormalized_energy(&shifted, &mode).map_err(e)?.total;
            let dw = [w_phase, w_moved, w_shift].iter().fold(0.0f64, |m, x| m.max((x - w0).abs()));
            let dn = [n_moved, n_shift].iter().fold(0.0f64, |m, x| m.max((x - n0).abs()));
            Ok((dw, dn))
        };
        match run() {
            Ok((dw, dn)) => {
                worst_d = worst_d.max(dw);
                worst_n = worst_n.max(dn);
            }
            Err(e) => problems.push(format!("case {case}: {e}")),
        }
    }
    outcome(
        problems.is_empty() && worst_d < 1e-8 && worst_n < 1e-8,
        format!("max change of W_g {worst_d:.1e}, of W_N {worst_n:.1e}{}", join(&problems)),
    )
}

fn oscillation() -> Outcome {
    let mut r = rng(10);
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for case in 0..20 {
        let holes = random_holes(&mut r, 1 + case % 3);
        let d = circles(&holes, &[]);
        let nodal = |r: &mut rand_chacha::ChaCha8Rng, c: usize, zero_mean: bool| {
            let mut s = random_series(r, 4, 1.0);
            if zero_mean {
                s.constant = 0.0;
            }
            Profile::Nodal(periodic_nodes(d.nodes(c)).into_iter().map(|t| s.eval(t)).collect())
        };
        let (field, bound) = if case % 2 == 0 {
            let mut conds = vec![BoundaryCondition::Dirichlet(nodal(&mut r, 0, false))];
            for c in 1..d.num_components() {
                conds.push(BoundaryCondition::Neumann(nodal(&mut r, c, true)));
            }
            (solve_modified_dirichlet(&d, &Sources::none(), conds, None), OscillationBound::General)
        } else {
            let mut profiles = vec![Profile::Constant(0.0)];
            for c in 1..d.num_components() {
                profiles.push(nodal(&mut r, c, true));
            }
            (solve_neumann(&d, &Sources::none(), profiles, Normalization::AreaMean), OscillationBound::NeumannOuter)
        };
        let inclusions: Vec<usize> = (1..d.num_components()).collect();
        match field.and_then(|f| oscillation_check(&f, &inclusions, bound)) {
            Ok(verdict) => {
                min_margin = min_margin.min(verdict.margin());
                if !verdict.holds {
                    failures.push(format!("case {case}: interior {} > bound {}", verdict.interior, verdict.bound));
                }
            }
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    outcome(failures.is_empty(), format!("20 fields, smallest margin {min_margin:.3e}{}", join(&failures)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("degree engine", degree_engine),
        ("solver fixtures", solver_fixtures),
        ("period matrix", period_matrices),
        ("Dirichlet closed form vs oracle", dirichlet_vs_oracle),
        ("monotonicity", monotonicity),
        ("vanishing tangential term", tangential_term),
        ("Neumann pipeline", neumann_pipeline),
        ("canonical maps", canonical_maps),
        ("invariance", invariance),
        ("oscillation bounds", oscillation),
    ];
    let mut results: Vec<(Outcome, f64)> = Vec::new();
    for (i, (_, f)) in criteria.iter().enumerate() {
        // The tangential term collects the Dirichlet runs of every other
        // criterion, so it is evaluated last.
        if i == 5 {
            results.push((outcome(true, String::new()), 0.0));
            continue;
        }
        let start = Instant::now();
        results.push((f(), start.elapsed().as_secs_f64()));
    }
    results[5] = ((criteria[5].1)(), 0.0);
    let mut failed = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} criterion {:>2} {name}: {} [{secs:.1} s]", i + 1, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
