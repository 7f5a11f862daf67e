//! Closed-form reference values and the end-to-end example suite.
//!
//! The oracles provide independently computed moduli for instances whose
//! answers are known in closed form: rectangle crossing families and
//! single-measure mass blocks. The example suite wires them to the full
//! pipeline (generate, solve, certify, verify, compare) and reports each
//! case's residuals, so a regression anywhere in the stack surfaces as a
//! failed case rather than a silent drift.

use rayon::prelude::*;

use crate::certificate::{build_certificate, verify_certificate, VerifyOptions};
use crate::error::{Error, Result};
use crate::geometry::{rectangle_family, Grid, RectangleFamily};
use crate::measure::{CellSpace, Measure, MeasureSystem, Metric};
use crate::solver::{solve_modulus, SolveOptions, SolveStatus};

/// How an expected value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pedigree {
    /// A published closed form evaluated directly.
    ClosedForm,
    /// Immediate from the definitions (symmetry, normalization).
    Definitional,
    /// Derived by an independent computation (hand KKT solve, grid
    /// search, limit argument).
    CrossChecked,
}

impl Pedigree {
    pub fn label(self) -> &'static str {
        match self {
            Pedigree::ClosedForm => "closed-form",
            Pedigree::Definitional => "definitional",
            Pedigree::CrossChecked => "cross-checked",
        }
    }
}

/// The exact p-modulus of the straight crossing family of an `a × b`
/// rectangle: `b · a^{1−p}`, the p-energy of the flat metric `1/a`.
///
/// Requires `0 < a ≤ b` and `p ≥ 1`; sides given in the wrong order are
/// swapped, flagged by the second component of the return value.
pub fn rectangle_modulus_exact(a: f64, b: f64, p: f64) -> Result<(f64, bool)> {
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(Error::Invalid(format!(
            "rectangle sides must be positive and finite, got {a} × {b}"
        )));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Contract(format!(
            "the rectangle closed form needs p ≥ 1, got {p}"
        )));
    }
    let swapped = a > b;
    let (a, b) = if swapped { (b, a) } else { (a, b) };
    Ok((b * a.powf(1.0 - p), swapped))
}

/// The mass carried by a single-measure system: one arbitrarily divisible
/// block, or a finite set of indivisible atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum MassInput {
    /// Total mass of a block that can be subdivided at will.
    Block(f64),
    /// Individual atom costs.
    Atoms(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleMassValue {
    pub value: f64,
    /// False exactly for the divisible block with `p < 1`, where the
    /// infimum 0 is approached but never attained.
    pub extremal_metric_exists: bool,
}

/// The modulus of the system consisting of the single measure `m|A`:
///
/// * `p ≥ 1` → `m(A)^{1−p}` (so always 1 at `p = 1`);
/// * `0 < p < 1`, atoms → `(min_i c_i)^{1−p}`, concentrating on the
///   cheapest atom;
/// * `0 < p < 1`, divisible block → infimum 0 with no extremal metric:
///   splitting the block into `n` pieces drives the energy to 0.
pub fn single_mass_modulus(input: &MassInput, p: f64) -> Result<SingleMassValue> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Contract(format!("the mass formulas need p > 0, got {p}")));
    }
    let total = match input {
        MassInput::Block(m) => {
            if !(m.is_finite() && *m > 0.0) {
                return Err(Error::Invalid(format!("block mass must be positive, got {m}")));
            }
            *m
        }
        MassInput::Atoms(costs) => {
            if costs.is_empty() {
                return Err(Error::Invalid("the atom list is empty".into()));
            }
            for (i, &c) in costs.iter().enumerate() {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Invalid(format!(
                        "atom {i} cost must be positive, got {c}"
                    )));
                }
            }
            costs.iter().sum()
        }
    };
    if p >= 1.0 {
        return Ok(SingleMassValue {
            value: total.powf(1.0 - p),
            extremal_metric_exists: true,
        });
    }
    match input {
        MassInput::Atoms(costs) => {
            let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(SingleMassValue { value: min.powf(1.0 - p), extremal_metric_exists: true })
        }
        MassInput::Block(_) => {
            Ok(SingleMassValue { value: 0.0, extremal_metric_exists: false })
        }
    }
}

/// A reference instance with its expected answer.
#[derive(Debug, Clone)]
pub struct ExampleCase {
    pub name: String,
    pub space: CellSpace,
    pub system: MeasureSystem,
    pub p: f64,
    pub expected: f64,
    pub pedigree: Pedigree,
    /// Expected extremal metric, when one is known in closed form.
    pub expected_metric: Option<Metric>,
}

/// Resolution and tolerance knobs for [`run_example_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteKnobs {
    /// Base horizontal cell count for rectangle grids (vertical counts
    /// scale with the aspect ratio).
    pub base_nx: usize,
    /// Relative tolerance on value agreement with the oracle.
    pub tol: f64,
    pub solve_opts: SolveOptions,
}

impl Default for SuiteKnobs {
    fn default() -> Self {
        Self { base_nx: 8, tol: 1e-6, solve_opts: SolveOptions::default() }
    }
}

/// Outcome of one suite case.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub name: String,
    pub pedigree: Pedigree,
    pub expected: f64,
    pub solved: f64,
    /// Relative value residual against the oracle.
    pub residual: f64,
    /// Sup-norm distance to the expected metric, when one is given.
    pub metric_residual: Option<f64>,
    /// Whether the built certificate verified; None when the solve
    /// already failed.
    pub certified: Option<bool>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub cases: Vec<CaseOutcome>,
    pub all_passed: bool,
}

impl SuiteReport {
    /// Plain-text table, one case per line.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>13} {:>13} {:>10} {:>9} {:>6}\n",
            "case", "expected", "solved", "residual", "certified", "pass"
        ));
        for c in &self.cases {
            out.push_str(&format!(
                "{:<28} {:>13.6e} {:>13.6e} {:>10.2e} {:>9} {:>6}\n",
                c.name,
                c.expected,
                c.solved,
                c.residual,
                match c.certified {
                    Some(true) => "yes",
                    Some(false) => "NO",
                    None => "-",
                },
                if c.passed { "ok" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "{} of {} cases passed\n",
            self.cases.iter().filter(|c| c.passed).count(),
            self.cases.len()
        ));
        out
    }
}

/// A block system: the restriction of the weights to `cells` as a single
/// measure over a uniform space.
fn block_case(
    name: &str,
    cells: usize,
    weight: f64,
    p: f64,
    pedigree: Pedigree,
) -> Result<ExampleCase> {
    let space = CellSpace::uniform(cells, weight)?;
    let entries: Vec<(usize, f64)> = (0..cells).map(|j| (j, weight)).collect();
    let system = MeasureSystem::new(vec![Measure::from_entries(entries)?]);
    let total = weight * cells as f64;
    let expected = single_mass_modulus(&MassInput::Block(total), p)?.value;
    // At p = 1 the optimum is a non-unique vertex of the covering LP, so
    // only strictly convex energies pin the metric.
    let metric =
        if p > 1.0 { Some(Metric::constant(cells, 1.0 / total)?) } else { None };
    Ok(ExampleCase {
        name: name.into(),
        space,
        system,
        p,
        expected,
        pedigree,
        expected_metric: metric,
    })
}

fn rectangle_case(
    name: &str,
    a: f64,
    b: f64,
    which: RectangleFamily,
    p: f64,
    base_nx: usize,
    pedigree: Pedigree,
) -> Result<ExampleCase> {
    let nx = base_nx.max(1);
    let ny = ((nx as f64) * b / a).round().max(1.0) as usize;
    let grid = Grid::rectangle(a, b, nx, ny)?;
    let system = rectangle_family(&grid, &which)?;
    let (expected, _) = rectangle_modulus_exact(a, b, p)?;
    let metric =
        if p > 1.0 { Some(Metric::constant(grid.len(), 1.0 / a)?) } else { None };
    Ok(ExampleCase {
        name: name.into(),
        space: grid.cell_space(),
        system,
        p,
        expected,
        pedigree,
        expected_metric: metric,
    })
}

/// The reference catalogue evaluated by [`run_example_suite`].
pub fn example_cases(knobs: &SuiteKnobs) -> Result<Vec<ExampleCase>> {
    let nx = knobs.base_nx;
    let mut cases = vec![
        rectangle_case("rect-1x2-gamma0-p2", 1.0, 2.0, RectangleFamily::Gamma0, 2.0, nx, Pedigree::ClosedForm)?,
        rectangle_case("rect-square-gamma0-p2", 1.0, 1.0, RectangleFamily::Gamma0, 2.0, nx, Pedigree::Definitional)?,
        rectangle_case("rect-1x2-gamma0-p3", 1.0, 2.0, RectangleFamily::Gamma0, 3.0, nx, Pedigree::CrossChecked)?,
        rectangle_case("rect-1x2-gamma1-p2", 1.0, 2.0, RectangleFamily::Gamma1, 2.0, nx, Pedigree::ClosedForm)?,
        rectangle_case("rect-1x2-gamma0-p1", 1.0, 2.0, RectangleFamily::Gamma0, 1.0, nx, Pedigree::CrossChecked)?,
        block_case("block-mass4-p2", 4, 1.0, 2.0, Pedigree::ClosedForm)?,
        block_case("block-mass4-p1", 4, 1.0, 1.0, Pedigree::ClosedForm)?,
        block_case("block-mass2-p3", 8, 0.25, 3.0, Pedigree::ClosedForm)?,
    ];
    // Independent one-cell rows solved by hand: φ = (1, 2), energy 5.
    let space = CellSpace::uniform(2, 1.0)?;
    let system = MeasureSystem::new(vec![
        Measure::from_entries(vec![(0, 1.0)])?,
        Measure::from_entries(vec![(1, 0.5)])?,
    ]);
    cases.push(ExampleCase {
        name: "independent-rows-p2".into(),
        space,
        system,
        p: 2.0,
        expected: 5.0,
        pedigree: Pedigree::CrossChecked,
        expected_metric: Some(Metric::new(vec![1.0, 2.0])?),
    });
    Ok(cases)
}

fn run_case(case: &ExampleCase, knobs: &SuiteKnobs) -> CaseOutcome {
    let mut outcome = CaseOutcome {
        name: case.name.clone(),
        pedigree: case.pedigree,
        expected: case.expected,
        solved: f64::NAN,
        residual: f64::INFINITY,
        metric_residual: None,
        certified: None,
        passed: false,
        detail: String::new(),
    };
    let report = match solve_modulus(&case.system, &case.space, case.p, &knobs.solve_opts) {
        Ok(r) => r,
        Err(e) => {
            outcome.detail = format!("solve error: {e}");
            return outcome;
        }
    };
    if report.status != SolveStatus::Optimal {
        outcome.detail = format!("solve ended with status {:?}", report.status);
        return outcome;
    }
    let solved = match report.value.finite() {
        Some(v) => v,
        None => {
            outcome.detail = "solve reported an infinite value".into();
            return outcome;
        }
    };
    outcome.solved = solved;
    let scale = case.expected.abs().max(1e-12);
    outcome.residual = (solved - case.expected).abs() / scale;
    let mut ok = outcome.residual <= knobs.tol;
    if !ok {
        outcome.detail = format!("value residual {:.3e} exceeds {:.3e}", outcome.residual, knobs.tol);
    }

    if let Some(expected_metric) = &case.expected_metric {
        let dev = report.metric.linf_distance(expected_metric);
        outcome.metric_residual = Some(dev);
        let metric_tol = (10.0 * knobs.tol).max(1e-6);
        if dev > metric_tol {
            ok = false;
            if !outcome.detail.is_empty() {
                outcome.detail.push_str("; ");
            }
            outcome.detail.push_str(&format!("metric deviates by {dev:.3e}"));
        }
    }

    let verify_opts = VerifyOptions {
        solve_opts: knobs.solve_opts,
        ..VerifyOptions::default()
    };
    match build_certificate(&case.system, &case.space, &report, case.p)
        .and_then(|cert| {
            verify_certificate(&case.system, &case.space, &cert, &report.metric, &verify_opts)
        }) {
        Ok(verdict) => {
            outcome.certified = Some(verdict.verdict);
            if !verdict.verdict {
                ok = false;
                if !outcome.detail.is_empty() {
                    outcome.detail.push_str("; ");
                }
                outcome.detail.push_str("certificate failed to verify");
            }
        }
        Err(e) => {
            outcome.certified = Some(false);
            ok = false;
            if !outcome.detail.is_empty() {
                outcome.detail.push_str("; ");
            }
            outcome.detail.push_str(&format!("certification error: {e}"));
        }
    }

    if ok && outcome.detail.is_empty() {
        outcome.detail = "ok".into();
    }
    outcome.passed = ok;
    outcome
}

/// Runs every catalogue case end to end: solve, compare to the oracle,
/// build and verify a certificate. Individual failures are collected in
/// the report, not raised as errors.
pub fn run_example_suite(knobs: &SuiteKnobs) -> Result<SuiteReport> {
    let cases = example_cases(knobs)?;
    let outcomes: Vec<CaseOutcome> =
        cases.par_iter().map(|case| run_case(case, knobs)).collect();
    let all_passed = outcomes.iter().all(|c| c.passed);
    Ok(SuiteReport { cases: outcomes, all_passed })
}
