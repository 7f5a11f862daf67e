//! End-to-end acceptance battery: ten numbered criteria covering the
//! rectangle families, closed forms, the certificate machinery, the
//! brute-force oracle, transboundary spaces, and the solver invariants.
//!
//! Each criterion prints exactly one `[PASS]`/`[FAIL]` line; the lines go
//! to the real stdout (bypassing the harness capture) so a plain
//! `cargo test` shows them. The test fails if any criterion does.
//! Criteria 7 and 10 replay every optimal solve recorded by criteria 1-6,
//! so the run order matters and everything executes inside one test
//! function.

use modulus_core::certificate::{
    build_certificate, verify_certificate, BeurlingCertificate, CondStatus, FamilyMember,
    FamilySource, VerificationReport, VerifyOptions,
};
use modulus_core::geometry::{
    gamma_phi_system, rasterize_polyline, rectangle_family, transboundary_measure,
    unit_mass_intervals, Grid, Polyline, RectangleFamily, TransboundaryDomain,
};
use modulus_core::measure::{
    integrate, is_admissible, p_energy, CellSpace, Measure, MeasureSystem, Metric,
};
use modulus_core::oracles::{single_mass_modulus, MassInput};
use modulus_core::solver::{
    brute_force_modulus, eps_active, eval_atomic_modulus_sub1, solve_modulus, solve_modulus_l1,
    suggested_brute_force_bound, uniqueness_check, SolveOptions, SolveReport, SolveStatus,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;

// Tolerances for each criterion, pinned here rather than scattered below.
const C1_VALUE_RTOL: f64 = 1e-8;
const C1_METRIC_TOL: f64 = 1e-8;
const C1_GRID_SECONDS: f64 = 5.0;
const C2_SHARED_METRIC_TOL: f64 = 1e-7;
const C2_UNION_TOL: f64 = 2e-8;
const C3_VALUE_TOL: f64 = 1e-6;
const C4_VALUE_TOL: f64 = 1e-6;
const C5_METRIC_TOL: f64 = 1e-7;
const C5_VALUE_RTOL: f64 = 1e-8;
const C6_STEP: f64 = 1e-3;
const C6_SECONDS: f64 = 60.0;
const C7_WITNESS_TOL: f64 = 1e-9;
const C8_REDUCTION_TOL: f64 = 1e-9;
const C8_MONOTONE_SLACK: f64 = 1e-9;
const C9_MASS_TOL: f64 = 1e-5;
const C10_WEAK_DUALITY_SLACK: f64 = 1e-9;
const C10_SLACKNESS_TOL: f64 = 1e-8;
const C10_STRONG_DUALITY_RTOL: f64 = 1e-7;
const C10_SCALING_RTOL: f64 = 1e-7;
const C10_LAW_SLACK: f64 = 1e-9;

type Crit = Result<String, String>;

/// One optimal solve kept around for the certificate and invariant suites.
struct Solved {
    name: String,
    space: CellSpace,
    system: MeasureSystem,
    p: f64,
    report: SolveReport,
}

fn ck<T>(r: modulus_core::Result<T>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn solve_optimal(
    name: &str,
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
    opts: &SolveOptions,
) -> Result<SolveReport, String> {
    let report = ck(solve_modulus(system, space, p, opts), name)?;
    if report.status != SolveStatus::Optimal {
        return Err(format!("{name}: solver ended with {:?}", report.status));
    }
    Ok(report)
}

fn finite_value(name: &str, report: &SolveReport) -> Result<f64, String> {
    report
        .value
        .finite()
        .ok_or_else(|| format!("{name}: the modulus came back infinite"))
}

fn row_dot(values: &[f64], row: &Measure) -> f64 {
    row.entries().iter().map(|&(j, a)| a * values[j]).sum()
}

/// Criterion 1: the 1x2 rectangle's horizontal crossings at p = 2 give
/// modulus 2 with the constant metric, across four grid refinements, each
/// inside the per-grid time budget.
fn criterion_1(registry: &mut Vec<Solved>) -> Crit {
    let opts = SolveOptions::default();
    let mut slowest = 0.0f64;
    for k in 0..4u32 {
        let (nx, ny) = (8usize << k, 16usize << k);
        let name = format!("c1-{nx}x{ny}");
        let started = Instant::now();
        let grid = ck(Grid::rectangle(1.0, 2.0, nx, ny), &name)?;
        let space = grid.cell_space();
        let system = ck(rectangle_family(&grid, &RectangleFamily::Gamma0), &name)?;
        let report = solve_optimal(&name, &system, &space, 2.0, &opts)?;
        let elapsed = started.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);

        let value = finite_value(&name, &report)?;
        if ((value - 2.0) / 2.0).abs() > C1_VALUE_RTOL {
            return Err(format!("{name}: value {value:.12e} misses 2.0 beyond 1e-8 relative"));
        }
        let flat = ck(Metric::constant(space.len(), 1.0), &name)?;
        let dev = report.metric.linf_distance(&flat);
        if dev > C1_METRIC_TOL {
            return Err(format!("{name}: metric deviates from the flat 1.0 by {dev:.3e}"));
        }
        if elapsed >= C1_GRID_SECONDS {
            return Err(format!("{name}: took {elapsed:.2} s, over the 5 s budget"));
        }
        registry.push(Solved { name, space, system, p: 2.0, report });
    }
    Ok(format!(
        "four refinements (8x16 to 64x128) hit 2.0 with flat metrics; slowest grid {slowest:.2} s"
    ))
}

/// Criterion 2: a certificate whose family comes from the halved, doubly
/// traversed rows (not from the family being certified) still verifies the
/// same extremal metric, and adjoining those rows leaves the modulus alone.
fn criterion_2(registry: &mut Vec<Solved>) -> Crit {
    let grid = ck(Grid::rectangle(1.0, 2.0, 8, 16), "c2 grid")?;
    let space = grid.cell_space();
    let tight = SolveOptions { gap_tol: 1e-10, ..SolveOptions::default() };
    let gamma0 = ck(rectangle_family(&grid, &RectangleFamily::Gamma0), "c2 gamma0")?;
    let gamma1 = ck(rectangle_family(&grid, &RectangleFamily::Gamma1), "c2 gamma1")?;

    let r0 = solve_optimal("c2-gamma0", &gamma0, &space, 2.0, &tight)?;
    let r1 = solve_optimal("c2-gamma1", &gamma1, &space, 2.0, &tight)?;
    let shared = r0.metric.linf_distance(&r1.metric);
    if shared > C2_SHARED_METRIC_TOL {
        return Err(format!("the two families disagree on the extremal metric by {shared:.3e}"));
    }

    // Build against the half-row family, then re-point every member at an
    // explicit measure so the certificate stands on its own against gamma0.
    let built = ck(build_certificate(&gamma1, &space, &r1, 2.0), "c2 build")?;
    let mut family = Vec::with_capacity(built.family.len());
    for member in &built.family {
        let base = match &member.source {
            FamilySource::Row(i) => gamma1.row(*i).clone(),
            FamilySource::Explicit(m) => m.clone(),
        };
        let nu = ck(base.scaled(member.scale), "c2 member")?;
        family.push(FamilyMember {
            source: FamilySource::Explicit(nu),
            scale: 1.0,
            lambda: member.lambda,
        });
    }
    let cert = BeurlingCertificate { p: 2.0, family };
    let vopts = VerifyOptions::default();
    let verification = ck(verify_certificate(&gamma0, &space, &cert, &r0.metric, &vopts), "c2 verify")?;
    for (label, check) in [
        ("a", &verification.condition_a),
        ("b", &verification.condition_b),
        ("c", &verification.condition_c),
    ] {
        if check.status != CondStatus::Pass {
            return Err(format!("condition ({label}) did not pass: {}", check.detail));
        }
    }
    if !verification.verdict {
        return Err("all conditions passed yet the verdict is false".into());
    }

    let union = gamma0.union(&gamma1);
    let ru = solve_optimal("c2-union", &union, &space, 2.0, &tight)?;
    let v0 = finite_value("c2-gamma0", &r0)?;
    let vu = finite_value("c2-union", &ru)?;
    let drift = (vu - v0).abs();
    if drift > C2_UNION_TOL {
        return Err(format!("union modulus {vu:.12e} drifts from {v0:.12e} by {drift:.3e}"));
    }

    registry.push(Solved {
        name: "c2-gamma0".into(),
        space: space.clone(),
        system: gamma0,
        p: 2.0,
        report: r0,
    });
    registry.push(Solved {
        name: "c2-gamma1".into(),
        space: space.clone(),
        system: gamma1,
        p: 2.0,
        report: r1,
    });
    registry.push(Solved { name: "c2-union".into(), space, system: union, p: 2.0, report: ru });
    Ok(format!(
        "foreign-family certificate passed (a)(b)(c); union modulus drift {drift:.2e}"
    ))
}

/// Criterion 3: rows padded with an out-and-back prefix all over-integrate
/// the flat metric, no padded row is active, yet the union with the plain
/// crossings solves to the same modulus, re-derived by the row-wise
/// Cauchy-Schwarz argument.
fn criterion_3(registry: &mut Vec<Solved>) -> Crit {
    let grid = ck(Grid::rectangle(1.0, 2.0, 8, 16), "c3 grid")?;
    let space = grid.cell_space();
    let ny = grid.ny();
    let gamma0 = ck(rectangle_family(&grid, &RectangleFamily::Gamma0), "c3 gamma0")?;
    let padded = ck(rectangle_family(&grid, &RectangleFamily::GammaStar), "c3 padded")?;

    let flat = ck(Metric::constant(space.len(), 1.0), "c3 flat")?;
    let mut min_excess = f64::INFINITY;
    for (i, row) in padded.rows().iter().enumerate() {
        let integral = ck(integrate(&flat, row), "c3 integral")?;
        let floor = 1.0 + 2.0 / (i + 1) as f64;
        if integral < floor - 1e-9 {
            return Err(format!(
                "padded row {i} integrates to {integral:.12e}, below its floor {floor:.12e}"
            ));
        }
        min_excess = min_excess.min(integral - 1.0);
    }
    if min_excess < 0.12 {
        return Err(format!("a padded row got within {min_excess:.3e} of integral 1"));
    }

    let union = gamma0.union(&padded);
    let ru = solve_optimal("c3-union", &union, &space, 2.0, &SolveOptions::default())?;
    let v = finite_value("c3-union", &ru)?;
    if (v - 2.0).abs() > C3_VALUE_TOL {
        return Err(format!("union value {v:.12e} misses 2.0 beyond 1e-6"));
    }
    if let Some(&i) = ru.active_set.iter().find(|&&i| i >= ny) {
        return Err(format!("padded row {} came out active", i - ny));
    }

    // Per line: (sum hx phi)^2 <= a * sum hx phi^2, so the energy dominates
    // (hy/a) * sum of squared line integrals, which is at least b/a = 2.
    let mut lb = 0.0f64;
    for i in 0..ny {
        let li = ck(integrate(&ru.metric, gamma0.row(i)), "c3 line integral")?;
        lb += li * li;
    }
    lb *= grid.hy() / 1.0;
    let energy = ck(p_energy(&ru.metric, &space, 2.0), "c3 energy")?;
    if lb > energy + 1e-9 {
        return Err(format!("lower bound {lb:.12e} exceeds the energy {energy:.12e}"));
    }
    if lb < 2.0 * (1.0 - 2.0 * C3_VALUE_TOL) {
        return Err(format!("lower bound {lb:.12e} fails to reach b/a"));
    }

    registry.push(Solved { name: "c3-union".into(), space, system: union, p: 2.0, report: ru });
    Ok(format!(
        "all {ny} padded rows over-integrate (min excess {min_excess:.3}) and stay inactive; \
         union value {v:.10}; Cauchy-Schwarz bound {lb:.10}"
    ))
}

/// Criterion 4: the four-cell block's closed forms across p, genuine
/// non-uniqueness of the p = 1 vertex under pivot reordering, and the
/// exact sub-1 atomic value.
fn criterion_4(registry: &mut Vec<Solved>) -> Crit {
    let opts = SolveOptions::default();
    let space = ck(CellSpace::uniform(4, 1.0), "c4 space")?;
    let row = ck(Measure::from_entries((0..4).map(|j| (j, 1.0)).collect()), "c4 row")?;
    let block = MeasureSystem::new(vec![row]);

    for (p, want) in [(1.0, 1.0), (1.5, 0.5), (2.0, 0.25), (3.0, 0.0625)] {
        let name = format!("c4-p{p}");
        let report = solve_optimal(&name, &block, &space, p, &opts)?;
        let v = finite_value(&name, &report)?;
        if (v - want).abs() > C4_VALUE_TOL {
            return Err(format!("{name}: value {v:.12e}, want {want}"));
        }
        registry.push(Solved {
            name,
            space: space.clone(),
            system: block.clone(),
            p,
            report,
        });
    }

    // Two pivot orders, two optimal vertices, one optimal value.
    let forward: Vec<usize> = (0..4).collect();
    let backward: Vec<usize> = (0..4).rev().collect();
    let mut vertices = Vec::new();
    for (tag, order) in [("forward", &forward), ("backward", &backward)] {
        let r = ck(solve_modulus_l1(&block, &space, &opts, Some(order)), tag)?;
        if r.status != SolveStatus::Optimal {
            return Err(format!("{tag} pivot order ended with {:?}", r.status));
        }
        let v = finite_value(tag, &r)?;
        if (v - 1.0).abs() > 1e-9 {
            return Err(format!("{tag} pivot order reached value {v:.12e}, want 1"));
        }
        let adm = ck(is_admissible(&r.metric, &block, 1e-9), tag)?;
        if !adm.admissible {
            return Err(format!("{tag} vertex is not admissible (worst {:.12e})", adm.worst_value));
        }
        vertices.push(r.metric);
    }
    let spread = vertices[0].linf_distance(&vertices[1]);
    if spread < 0.5 {
        return Err(format!("both pivot orders landed on the same vertex (spread {spread:.3e})"));
    }
    let uq = ck(uniqueness_check(&block, &space, 1.0, &opts), "c4 uniqueness")?;
    if uq.unique || uq.witness.is_none() {
        return Err("the uniqueness probe failed to expose the degenerate optimum".into());
    }

    // Atoms (0.25, 1, 3) at p = 0.5: the concentration formula gives
    // (min c)^(1-p) = 0.5 with no rounding at all.
    let atom_space = ck(CellSpace::new(vec![0.25, 1.0, 3.0], vec![true; 3]), "c4 atoms")?;
    let atom_row = ck(
        Measure::from_entries(vec![(0, 0.25), (1, 1.0), (2, 3.0)]),
        "c4 atom row",
    )?;
    let atom_system = MeasureSystem::new(vec![atom_row.clone()]);
    let (value, witness) = ck(
        eval_atomic_modulus_sub1(&atom_system, &atom_space, 0.5),
        "c4 atomic evaluator",
    )?;
    if value != 0.5 {
        return Err(format!("atomic evaluator returned {value:.17e}, want exactly 0.5"));
    }
    let closed = ck(
        single_mass_modulus(&MassInput::Atoms(vec![0.25, 1.0, 3.0]), 0.5),
        "c4 closed form",
    )?;
    if closed.value != 0.5 {
        return Err(format!("closed form returned {:.17e}, want exactly 0.5", closed.value));
    }
    let reach = ck(integrate(&witness, &atom_row), "c4 witness integral")?;
    if reach < 1.0 - 1e-12 {
        return Err(format!("the concentrating witness only integrates to {reach:.12e}"));
    }

    Ok(format!(
        "block values match 4^(1-p); pivot orders gave vertices {spread:.1} apart at value 1; \
         atomic p=0.5 value exactly 0.5"
    ))
}

/// Criterion 5: systems induced by a known strictly positive metric hand
/// that metric straight back, across sizes, weights, and p in {1, 2, 3}.
fn criterion_5(registry: &mut Vec<Solved>) -> Crit {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst_metric = 0.0f64;
    let mut worst_value = 0.0f64;
    for case in 0..100 {
        let cells = rng.gen_range(1..=20usize);
        let weights: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.1..3.0)).collect();
        let space = ck(CellSpace::new(weights, vec![false; cells]), "c5 space")?;
        let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.1..4.0)).collect();
        let target = ck(Metric::new(values), "c5 target")?;
        let system = ck(gamma_phi_system(&space, &target), "c5 system")?;
        for p in [1.0, 2.0, 3.0] {
            let name = format!("c5-{case}-p{p}");
            let report = solve_optimal(&name, &system, &space, p, &opts)?;
            let dev = report.metric.linf_distance(&target);
            worst_metric = worst_metric.max(dev);
            if dev > C5_METRIC_TOL {
                return Err(format!("{name}: metric came back off by {dev:.3e}"));
            }
            let want = ck(p_energy(&target, &space, p), &name)?;
            let v = finite_value(&name, &report)?;
            let rel = ((v - want) / want).abs();
            worst_value = worst_value.max(rel);
            if rel > C5_VALUE_RTOL {
                return Err(format!("{name}: value off by {rel:.3e} relative"));
            }
            registry.push(Solved {
                name,
                space: space.clone(),
                system: system.clone(),
                p,
                report,
            });
        }
    }
    Ok(format!(
        "100 induced systems round-tripped at p in {{1,2,3}}; worst metric dev {worst_metric:.1e}, \
         worst relative value dev {worst_value:.1e}"
    ))
}

/// Criterion 6: the solver against exhaustive grid search on 200 seeded
/// small instances, within the resolution of the search grid, inside the
/// time budget.
fn criterion_6(registry: &mut Vec<Solved>) -> Crit {
    let opts = SolveOptions::default();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut four_cell = 0usize;
    for inst in 0..200 {
        let roll = rng.gen_range(0..20u32);
        let cells = match roll {
            0..=4 => 1,
            5..=10 => 2,
            11..=16 => 3,
            _ => 4,
        };
        // Four-cell search boxes get big fast; keeping their coefficients
        // at 1.0 or above caps each axis near 1000 steps.
        let low = if cells == 4 { 1.0 } else { 0.5 };
        if cells == 4 {
            four_cell += 1;
        }
        let weights: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.5..2.0)).collect();
        let space = ck(CellSpace::new(weights, vec![false; cells]), "c6 space")?;
        let row_count = rng.gen_range(1..=3usize);
        let mut rows = Vec::with_capacity(row_count);
        for _ in 0..row_count {
            let mut entries = Vec::new();
            for j in 0..cells {
                if rng.gen::<f64>() < 0.6 {
                    entries.push((j, rng.gen_range(low..2.2)));
                }
            }
            if entries.is_empty() {
                entries.push((rng.gen_range(0..cells), rng.gen_range(low..2.2)));
            }
            rows.push(ck(Measure::from_entries(entries), "c6 row")?);
        }
        let system = MeasureSystem::new(rows);
        let p = if inst % 2 == 0 { 1.0 } else { 2.0 };
        let name = format!("c6-{inst}");
        let report = solve_optimal(&name, &system, &space, p, &opts)?;
        let v = finite_value(&name, &report)?;

        let bound = suggested_brute_force_bound(&system);
        let (bf, _) = ck(brute_force_modulus(&system, &space, p, C6_STEP, bound), &name)?;
        // Grid metrics are admissible, so the search can never beat the
        // true optimum; rounding the solver's metric up to the grid raises
        // the energy by at most `slack`.
        if bf < v * (1.0 - 1e-7) - 1e-9 {
            return Err(format!("{name}: search value {bf:.9e} undercut the solver's {v:.9e}"));
        }
        let mut slack = 1e-9;
        for (j, &phi) in report.metric.values().iter().enumerate() {
            slack += space.weight(j) * ((phi + C6_STEP).powf(p) - phi.powf(p));
        }
        if bf > v + slack {
            return Err(format!(
                "{name}: search value {bf:.9e} sits outside the step window ending {:.9e}",
                v + slack
            ));
        }
        registry.push(Solved { name, space, system, p, report });
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= C6_SECONDS {
        return Err(format!("the sweep took {elapsed:.1} s, over the 60 s budget"));
    }
    Ok(format!(
        "200 instances ({four_cell} four-cell) matched the search within step resolution \
         in {elapsed:.1} s"
    ))
}

/// A perturbed admissible metric that is guaranteed non-optimal: for p > 1
/// a multiplicative bump rescaled back to admissibility (falling back to a
/// single-cell bump if the energy fails to rise), and for p = 1 always the
/// single-cell bump, since rescaling a perturbed vertex can land back on
/// the optimum.
fn perturbed_metric(s: &Solved, rng: &mut ChaCha8Rng) -> Result<Metric, String> {
    let base = s.report.metric.values().to_vec();
    let v = finite_value(&s.name, &s.report)?;
    if s.p > 1.0 {
        let bumped: Vec<f64> =
            base.iter().map(|&x| x * (1.0 + rng.gen_range(0.05..0.35))).collect();
        let mut worst = f64::INFINITY;
        for row in s.system.rows() {
            worst = worst.min(row_dot(&bumped, row));
        }
        if worst.is_finite() && worst > 0.0 {
            let rescaled: Vec<f64> = bumped.iter().map(|&x| x / worst).collect();
            let candidate = ck(Metric::new(rescaled), &s.name)?;
            let energy = ck(p_energy(&candidate, &s.space, s.p), &s.name)?;
            if energy > v * (1.0 + 1e-9) {
                return Ok(candidate);
            }
        }
    }
    let j = rng.gen_range(0..s.space.len());
    let mut values = base;
    values[j] += 0.3 + 0.7 * rng.gen::<f64>();
    ck(Metric::new(values), &s.name)
}

/// Replays the separating functional of a failed cone check against the
/// certificate's own family and target.
fn replay_witness(
    label: &str,
    system: &MeasureSystem,
    space: &CellSpace,
    cert: &BeurlingCertificate,
    phi: &Metric,
    report: &VerificationReport,
) -> Result<(), String> {
    let f = report
        .cone_witness
        .as_ref()
        .ok_or_else(|| format!("{label}: cone failure without a witness"))?;
    if f.len() != space.len() {
        return Err(format!("{label}: witness has {} cells, space has {}", f.len(), space.len()));
    }
    for (k, member) in cert.family.iter().enumerate() {
        let base = match &member.source {
            FamilySource::Row(i) => system.row(*i).clone(),
            FamilySource::Explicit(m) => m.clone(),
        };
        let nu = ck(base.scaled(member.scale), label)?;
        let dot = row_dot(f, &nu);
        if dot < -C7_WITNESS_TOL {
            return Err(format!("{label}: witness dots member {k} to {dot:.3e}"));
        }
    }
    let target: Vec<f64> = if cert.p <= 1.0 + 1e-6 {
        space.weights().to_vec()
    } else {
        phi.values()
            .iter()
            .zip(space.weights())
            .map(|(&x, &w)| w * x.powf(cert.p - 1.0))
            .collect()
    };
    let against: f64 = target.iter().zip(f).map(|(t, fv)| t * fv).sum();
    if against >= 0.0 {
        return Err(format!("{label}: witness fails to separate the target (dot {against:.3e})"));
    }
    Ok(())
}

/// Criterion 7: every recorded optimal solve certifies, and 50 perturbed
/// admissible metrics are all rejected with a concrete condition; every
/// cone rejection ships a separating witness that replays cleanly.
fn criterion_7(registry: &[Solved]) -> Crit {
    let vopts = VerifyOptions::default();
    let mut verified = 0usize;
    for s in registry {
        let cert = ck(build_certificate(&s.system, &s.space, &s.report, s.p), &s.name)?;
        let rep =
            ck(verify_certificate(&s.system, &s.space, &cert, &s.report.metric, &vopts), &s.name)?;
        if !rep.verdict {
            return Err(format!(
                "{}: built certificate failed verification; a: {} | b: {} | c: {}",
                s.name, rep.condition_a.detail, rep.condition_b.detail, rep.condition_c.detail
            ));
        }
        verified += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let small: Vec<&Solved> =
        registry.iter().filter(|s| s.name.starts_with("c6-")).take(40).collect();
    if small.len() < 40 {
        return Err(format!("only {} small instances available for perturbation", small.len()));
    }
    let mut rejected = 0usize;
    let mut cone_failures = 0usize;
    for s in small {
        let cert = ck(build_certificate(&s.system, &s.space, &s.report, s.p), &s.name)?;
        let phi = perturbed_metric(s, &mut rng)?;
        let rep = ck(verify_certificate(&s.system, &s.space, &cert, &phi, &vopts), &s.name)?;
        let concrete = [&rep.condition_a, &rep.condition_b, &rep.condition_c]
            .iter()
            .any(|c| c.status == CondStatus::Fail && !c.detail.is_empty());
        if rep.verdict || !concrete {
            return Err(format!("{}: perturbed metric slipped through verification", s.name));
        }
        if rep.condition_c.status == CondStatus::Fail {
            cone_failures += 1;
            replay_witness(&s.name, &s.system, &s.space, &cert, &phi, &rep)?;
        }
        rejected += 1;
    }

    // Skewed rectangle metrics keep every row integral at exactly 1, so the
    // rejection must come from the cone condition, witness included.
    let grid = ck(Grid::rectangle(1.0, 2.0, 8, 16), "c7 grid")?;
    let space = grid.cell_space();
    let gamma0 = ck(rectangle_family(&grid, &RectangleFamily::Gamma0), "c7 gamma0")?;
    let base = solve_optimal("c7-skew-base", &gamma0, &space, 2.0, &SolveOptions::default())?;
    let cert = ck(build_certificate(&gamma0, &space, &base, 2.0), "c7 skew cert")?;
    for t in 0..10usize {
        let label = format!("c7-skew-{t}");
        let delta = 0.05 + 0.02 * t as f64;
        let mut values = base.metric.values().to_vec();
        for iy in 0..grid.ny() {
            for ix in 0..grid.nx() {
                let sign = if (ix + iy + t) % 2 == 0 { 1.0 } else { -1.0 };
                values[grid.cell_index(ix, iy)] *= 1.0 + sign * delta;
            }
        }
        let phi = ck(Metric::new(values), &label)?;
        let rep = ck(verify_certificate(&gamma0, &space, &cert, &phi, &vopts), &label)?;
        if rep.condition_c.status != CondStatus::Fail {
            return Err(format!(
                "{label}: expected a cone rejection, got {:?} ({})",
                rep.condition_c.status, rep.condition_c.detail
            ));
        }
        if rep.verdict {
            return Err(format!("{label}: skewed metric slipped through verification"));
        }
        cone_failures += 1;
        replay_witness(&label, &gamma0, &space, &cert, &phi, &rep)?;
        rejected += 1;
    }

    if rejected != 50 {
        return Err(format!("{rejected} perturbed metrics tested, expected 50"));
    }
    Ok(format!(
        "{verified} optimal solves certified; 50 perturbed metrics rejected, \
         {cone_failures} by the cone condition with replayed witnesses"
    ))
}

/// Criterion 8: transboundary spaces. A domain with no holes reproduces the
/// plain modulus; granting rows extra unit-weight atoms never increases the
/// modulus; and solves over genuine hole domains certify.
fn criterion_8() -> Crit {
    let opts = SolveOptions::default();
    let vopts = VerifyOptions::default();

    let grid = ck(Grid::rectangle(1.0, 1.0, 4, 4), "c8 grid")?;
    let space = grid.cell_space();
    let domain = ck(TransboundaryDomain::new(grid.clone(), Vec::new()), "c8 domain")?;
    let mut plain_rows = Vec::new();
    let mut hybrid_rows = Vec::new();
    for iy in 0..grid.ny() {
        let y = (iy as f64 + 0.5) * grid.hy();
        let seg = ck(Polyline::segment((0.0, y), (1.0, y)), "c8 segment")?;
        plain_rows.push(ck(rasterize_polyline(&grid, &seg), "c8 raster")?);
        hybrid_rows.push(ck(transboundary_measure(&domain, &seg), "c8 hybrid raster")?);
    }
    let plain = MeasureSystem::new(plain_rows);
    let hybrid = MeasureSystem::new(hybrid_rows);
    let rp = solve_optimal("c8-plain", &plain, &space, 2.0, &opts)?;
    let rh = solve_optimal("c8-zero-hole", &hybrid, domain.space(), 2.0, &opts)?;
    let vp = finite_value("c8-plain", &rp)?;
    let vh = finite_value("c8-zero-hole", &rh)?;
    if (vp - vh).abs() > C8_REDUCTION_TOL {
        return Err(format!("zero-hole value {vh:.12e} differs from plain {vp:.12e}"));
    }

    // Appending hole atoms to rows only adds mass, so each step enlarges
    // the feasible set and the modulus cannot go up.
    let mut chain = vec![vp];
    let mut last = vp;
    for atoms in 1..=3usize {
        let mut weights = space.weights().to_vec();
        let mut flags = vec![false; space.len()];
        for _ in 0..atoms {
            weights.push(1.0);
            flags.push(true);
        }
        let aug_space = ck(CellSpace::new(weights, flags), "c8 augmented space")?;
        let mut rows = Vec::new();
        for (iy, row) in plain.rows().iter().enumerate() {
            let mut entries = row.entries().to_vec();
            for s in 0..atoms {
                if iy == s || iy == (s + 1) % grid.ny() {
                    entries.push((space.len() + s, 1.0));
                }
            }
            rows.push(ck(Measure::from_entries(entries), "c8 augmented row")?);
        }
        let aug = MeasureSystem::new(rows);
        let name = format!("c8-atoms-{atoms}");
        let r = solve_optimal(&name, &aug, &aug_space, 2.0, &opts)?;
        let v = finite_value(&name, &r)?;
        if v > last + C8_MONOTONE_SLACK {
            return Err(format!("atom {atoms} raised the modulus from {last:.9e} to {v:.9e}"));
        }
        last = v;
        chain.push(v);
        let cert = ck(build_certificate(&aug, &aug_space, &r, 2.0), &name)?;
        let rep = ck(verify_certificate(&aug, &aug_space, &cert, &r.metric, &vopts), &name)?;
        if !rep.verdict {
            return Err(format!("{name}: certificate failed to verify"));
        }
    }

    // A genuine hole: the 2x2 center of a 6x6 square collapses to one atom
    // that exactly the two middle crossings touch.
    let grid6 = ck(Grid::rectangle(1.0, 1.0, 6, 6), "c8 fine grid")?;
    let hole: Vec<usize> = [(2, 2), (3, 2), (2, 3), (3, 3)]
        .iter()
        .map(|&(ix, iy)| grid6.cell_index(ix, iy))
        .collect();
    let domain6 = ck(TransboundaryDomain::new(grid6.clone(), vec![hole]), "c8 hole domain")?;
    let mut rows6 = Vec::new();
    let mut crossing = 0usize;
    for iy in 0..grid6.ny() {
        let y = (iy as f64 + 0.5) * grid6.hy();
        let seg = ck(Polyline::segment((0.0, y), (1.0, y)), "c8 hole segment")?;
        let row = ck(transboundary_measure(&domain6, &seg), "c8 hole raster")?;
        if row.value_at(domain6.atom_index(0)) == 1.0 {
            crossing += 1;
        }
        rows6.push(row);
    }
    if crossing != 2 {
        return Err(format!("{crossing} curves touched the hole, expected the middle two"));
    }
    let holed = MeasureSystem::new(rows6);
    let r6 = solve_optimal("c8-hole", &holed, domain6.space(), 2.0, &opts)?;
    let cert6 = ck(build_certificate(&holed, domain6.space(), &r6, 2.0), "c8 hole cert")?;
    let rep6 =
        ck(verify_certificate(&holed, domain6.space(), &cert6, &r6.metric, &vopts), "c8 hole")?;
    if !rep6.verdict {
        return Err("the hole domain's certificate failed to verify".into());
    }
    let v6 = finite_value("c8-hole", &r6)?;

    let shown: Vec<String> = chain.iter().map(|v| format!("{v:.6}")).collect();
    Ok(format!(
        "zero-hole reduction exact; atom chain {} non-increasing; hole solve {v6:.6} certified",
        shown.join(" >= ")
    ))
}

/// Criterion 9: along a unit line sampled at h = 1/1024 with the flat
/// profile, every reported interval carries quadrature mass 1/n, and the
/// induced n-traversal rows integrate the profile to 1.
fn criterion_9() -> Crit {
    let a = 1.0f64;
    let h = a / 1024.0;
    let samples = vec![1.0 / a; 1025];
    let line = ck(Metric::new(samples.clone()), "c9 line metric")?;
    let mut checked = 0usize;
    for n in [1usize, 2, 4, 8] {
        let intervals = ck(unit_mass_intervals(&samples, h, n), "c9 intervals")?;
        if intervals.is_empty() {
            return Err(format!("n = {n}: no feasible centers on the line"));
        }
        let target = 1.0 / n as f64;
        for iv in &intervals {
            if (iv.mass - target).abs() > C9_MASS_TOL {
                return Err(format!(
                    "n = {n}, center {}: mass {:.9} misses 1/{n} beyond 1e-5",
                    iv.center, iv.mass
                ));
            }
            let mut entries = Vec::with_capacity(iv.hi - iv.lo + 1);
            for i in iv.lo..=iv.hi {
                let w = if i == iv.lo || i == iv.hi { 0.5 } else { 1.0 };
                entries.push((i, n as f64 * h * w));
            }
            let row = ck(Measure::from_entries(entries), "c9 induced row")?;
            let integral = ck(integrate(&line, &row), "c9 induced integral")?;
            if (integral - 1.0).abs() > C9_MASS_TOL {
                return Err(format!(
                    "n = {n}, center {}: induced row integrates to {integral:.9}",
                    iv.center
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} intervals across n in {{1,2,4,8}} carry mass 1/n with unit-integral rows"
    ))
}

/// Criterion 10: solver invariants over everything recorded: weak duality
/// along the traces, nonnegative multipliers, complementary slackness on
/// active rows, strong duality at p = 1, and the monotonicity,
/// subadditivity, and scaling laws on re-solved variants.
fn criterion_10(registry: &[Solved]) -> Crit {
    let opts = SolveOptions::default();
    let mut violations: Vec<String> = Vec::new();
    let mut trace_points = 0usize;
    let mut active_rows = 0usize;
    for s in registry {
        let Some(v) = s.report.value.finite() else { continue };
        let scale = v.abs().max(1.0);
        for pt in &s.report.trace {
            trace_points += 1;
            if pt.dual > pt.primal + C10_WEAK_DUALITY_SLACK * scale {
                violations.push(format!(
                    "{}: trace dual {:.12e} above primal {:.12e}",
                    s.name, pt.dual, pt.primal
                ));
            }
        }
        let eps = eps_active(opts.feas_tol, &s.report.dual);
        for (i, &lam) in s.report.dual.iter().enumerate() {
            if lam < 0.0 {
                violations.push(format!("{}: negative multiplier {lam:.3e} on row {i}", s.name));
            }
            if lam > eps {
                active_rows += 1;
                match integrate(&s.report.metric, s.system.row(i)) {
                    Ok(integral) => {
                        if (integral - 1.0).abs() > C10_SLACKNESS_TOL {
                            violations.push(format!(
                                "{}: active row {i} integrates to {integral:.12e}",
                                s.name
                            ));
                        }
                    }
                    Err(e) => violations.push(format!("{}: row {i}: {e}", s.name)),
                }
            }
        }
        if s.p <= 1.0 + 1e-6 {
            let dual_sum: f64 = s.report.dual.iter().sum();
            if (dual_sum - v).abs() > C10_STRONG_DUALITY_RTOL * scale {
                violations.push(format!(
                    "{}: dual sum {dual_sum:.12e} misses the value {v:.12e}",
                    s.name
                ));
            }
        }
    }

    // Structural laws, re-solved on every tenth oracle instance.
    let mut law_checks = 0usize;
    for s in registry.iter().filter(|s| s.name.starts_with("c6-")).step_by(10) {
        let Some(v) = s.report.value.finite() else { continue };
        let scale = v.abs().max(1.0);

        let doubled_rows: modulus_core::Result<Vec<Measure>> =
            s.system.rows().iter().map(|r| r.scaled(2.0)).collect();
        let doubled = MeasureSystem::new(ck(doubled_rows, &s.name)?);
        let rd = solve_optimal(&format!("{}-doubled", s.name), &doubled, &s.space, s.p, &opts)?;
        let vd = finite_value(&s.name, &rd)?;
        let want = v * 2f64.powf(-s.p);
        if ((vd - want) / want.abs().max(1e-12)).abs() > C10_SCALING_RTOL {
            violations.push(format!(
                "{}: doubling rows gave {vd:.12e}, want {want:.12e}",
                s.name
            ));
        }
        law_checks += 1;

        if s.system.len() >= 2 {
            let len = s.system.len();
            let sub = MeasureSystem::new(s.system.rows()[..len - 1].to_vec());
            let rs = solve_optimal(&format!("{}-sub", s.name), &sub, &s.space, s.p, &opts)?;
            let vs = finite_value(&s.name, &rs)?;
            if vs > v + C10_LAW_SLACK * scale {
                violations.push(format!(
                    "{}: dropping a row raised the modulus from {v:.12e} to {vs:.12e}",
                    s.name
                ));
            }
            let k = len / 2;
            let left = MeasureSystem::new(s.system.rows()[..k].to_vec());
            let right = MeasureSystem::new(s.system.rows()[k..].to_vec());
            let rl = solve_optimal(&format!("{}-left", s.name), &left, &s.space, s.p, &opts)?;
            let rr = solve_optimal(&format!("{}-right", s.name), &right, &s.space, s.p, &opts)?;
            let (vl, vr) = (finite_value(&s.name, &rl)?, finite_value(&s.name, &rr)?);
            if v > vl + vr + C10_LAW_SLACK * scale {
                violations.push(format!(
                    "{}: union value {v:.12e} exceeds the split sum {:.12e}",
                    s.name,
                    vl + vr
                ));
            }
            law_checks += 2;
        }
    }

    if !violations.is_empty() {
        return Err(format!("{} violations; first: {}", violations.len(), violations[0]));
    }
    Ok(format!(
        "weak duality on {trace_points} trace points, slackness on {active_rows} active rows, \
         {law_checks} structural re-solves; zero violations"
    ))
}

#[test]
fn all_ten_criteria_hold() {
    let mut registry: Vec<Solved> = Vec::new();
    let mut outcomes: Vec<(usize, &str, Crit)> = Vec::new();
    outcomes.push((1, "rectangle-refinement", criterion_1(&mut registry)));
    outcomes.push((2, "foreign-family-certificate", criterion_2(&mut registry)));
    outcomes.push((3, "superadmissible-rows", criterion_3(&mut registry)));
    outcomes.push((4, "block-closed-forms", criterion_4(&mut registry)));
    outcomes.push((5, "induced-system-roundtrip", criterion_5(&mut registry)));
    outcomes.push((6, "oracle-equivalence", criterion_6(&mut registry)));
    outcomes.push((7, "certificate-soundness", criterion_7(&registry)));
    outcomes.push((8, "transboundary-monotonicity", criterion_8()));
    outcomes.push((9, "unit-mass-intervals", criterion_9()));
    outcomes.push((10, "solver-invariants", criterion_10(&registry)));

    // Write through the handle, not the print macros: the harness captures
    // the macros, and these lines are the battery's report. The leading
    // newline closes the harness's unterminated "test ... " prefix.
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(b"\n").expect("stdout is writable");
    let mut failed = Vec::new();
    for (ix, name, outcome) in &outcomes {
        let line = match outcome {
            Ok(summary) => format!("criterion {ix:2} [PASS] {name}: {summary}\n"),
            Err(reason) => {
                failed.push(format!("criterion {ix} ({name}): {reason}"));
                format!("criterion {ix:2} [FAIL] {name}: {reason}\n")
            }
        };
        stdout.write_all(line.as_bytes()).expect("stdout is writable");
    }
    stdout.flush().expect("stdout flushes");
    drop(stdout);
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.join("\n"));
}
