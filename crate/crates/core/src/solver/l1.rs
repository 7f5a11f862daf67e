//! The p = 1 modulus is a plain linear program
//!
//! ```text
//! min Σ_j m_j φ_j    s.t.   Σ_j a_ij φ_j ≥ 1  for every row i,  φ ≥ 0,
//! ```
//!
//! solved by the two-phase simplex. The duals of the covering rows are the
//! multipliers reported in the solve, and strong duality pins the gap to
//! roundoff. An optional column ordering steers Bland's rule toward
//! different optimal vertices when the optimum is not unique.

use crate::error::{Error, Result};
use crate::measure::{kahan_sum, CellSpace, MeasureSystem, Metric};
use crate::solver::simplex::{Constraint, LinearProgram, LpOutcome, Sense};
use crate::solver::{eps_active, ModulusValue, SolveOptions, SolveReport, SolveStatus, TracePoint};

pub(crate) fn solve(
    system: &MeasureSystem,
    space: &CellSpace,
    opts: &SolveOptions,
    order: Option<&[usize]>,
) -> Result<SolveReport> {
    let n = space.len();
    let constraints: Vec<Constraint> = system
        .rows()
        .iter()
        .map(|row| {
            let mut coeffs = vec![0.0; n];
            for &(j, a) in row.entries() {
                coeffs[j] = a;
            }
            Constraint { coeffs, sense: Sense::Ge, rhs: 1.0 }
        })
        .collect();
    let lp = LinearProgram {
        num_vars: n,
        objective: space.weights().to_vec(),
        constraints,
    };

    let sol = match crate::solver::simplex::solve(&lp, order, Some(opts.max_iters))? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible { phase1_value } => {
            return Err(Error::Lp(format!(
                "covering LP reported infeasible (phase-1 mass {phase1_value:.3e}) \
                 although every row has positive mass"
            )));
        }
        LpOutcome::Unbounded => {
            return Err(Error::Lp(
                "covering LP reported unbounded although the objective is nonnegative".into(),
            ));
        }
        LpOutcome::Budget { pivots } => {
            // No feasible vertex is in hand when the budget dies mid-solve,
            // so report the exhaustion with an empty-handed metric.
            return Ok(SolveReport {
                value: ModulusValue::Infinite,
                metric: Metric::zeros(n),
                dual: vec![0.0; system.rows().len()],
                gap: f64::INFINITY,
                active_set: Vec::new(),
                iterations: pivots,
                status: SolveStatus::MaxIters,
                trace: Vec::new(),
            });
        }
    };

    let metric = Metric::new(sol.x)?;
    let value = kahan_sum(
        metric
            .values()
            .iter()
            .zip(space.weights().iter())
            .map(|(&f, &w)| w * f),
    );
    let dual_sum = kahan_sum(sol.duals.iter().copied());
    let scale = value.abs().max(1e-300);
    let gap = ((value - dual_sum) / scale).max(0.0);

    let eps = eps_active(opts.feas_tol, &sol.duals);
    let active_set: Vec<usize> = (0..system.rows().len())
        .filter(|&i| sol.duals[i] > eps)
        .collect();

    let mut status = SolveStatus::Optimal;
    for (i, row) in system.rows().iter().enumerate() {
        let integral = crate::measure::integrate(&metric, row)?;
        if integral < 1.0 - opts.feas_tol {
            status = SolveStatus::MaxIters;
        }
        if active_set.contains(&i) && (integral - 1.0).abs() > opts.feas_tol {
            status = SolveStatus::MaxIters;
        }
    }
    if gap > opts.gap_tol {
        status = SolveStatus::MaxIters;
    }

    Ok(SolveReport {
        value: ModulusValue::Finite(value),
        metric,
        dual: sol.duals,
        gap,
        active_set,
        iterations: sol.pivots,
        status,
        trace: vec![TracePoint { primal: value, dual: dual_sum }],
    })
}
