//! Projected dual ascent for the p-modulus problem with 1 < p < ∞.
//!
//! The Lagrange dual of `min Σ m_j φ_j^p` over `Aφ ≥ 1, φ ≥ 0` is concave
//! in the multipliers λ ≥ 0. With `s = A᳃λ` (written `A^T λ` below), the
//! inner minimization has the closed form
//!
//! ```text
//! φ_j(λ) = (s_j / (p m_j))^{1/(p−1)},
//! g(λ)   = Σ_i λ_i − (p−1)/p · Σ_j s_j φ_j(λ),
//! ∇g_i   = 1 − ∫ φ(λ) dμ_i.
//! ```
//!
//! The iteration is projected gradient ascent with Armijo backtracking,
//! initial step `1/‖A‖_∞²`. Once the duality gap is small the active rows
//! are identified from λ and the stationarity system `∫ φ(λ) dμ_i = 1`
//! (i active) is polished by a damped Newton method, which lands on the
//! optimal pair to near machine precision. Every step is deterministic.

use crate::error::Result;
use crate::measure::{kahan_sum, CellSpace, KahanSum, MeasureSystem, Metric};
use crate::solver::{eps_active, SolveOptions, SolveReport, SolveStatus, TracePoint};

/// Sufficient-increase constant for the Armijo test.
const ARMIJO_SIGMA: f64 = 1e-4;
/// Relative gap at which the first Newton polish is attempted.
const POLISH_TRIGGER: f64 = 1e-4;
/// Target sup-norm of the active-row residual inside the polish.
const NEWTON_TOL: f64 = 1e-13;

struct Rows<'a> {
    rows: Vec<&'a [(usize, f64)]>,
    n_cells: usize,
}

impl<'a> Rows<'a> {
    fn new(system: &'a MeasureSystem, n_cells: usize) -> Self {
        Self {
            rows: system.rows().iter().map(|r| r.entries()).collect(),
            n_cells,
        }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    /// s = A^T λ restricted to the rows listed in `which`.
    fn scatter(&self, lam: &[f64], which: Option<&[usize]>, s: &mut [f64]) {
        s.iter_mut().for_each(|v| *v = 0.0);
        match which {
            None => {
                for (i, row) in self.rows.iter().enumerate() {
                    let l = lam[i];
                    if l != 0.0 {
                        for &(j, a) in *row {
                            s[j] += l * a;
                        }
                    }
                }
            }
            Some(idx) => {
                for (k, &i) in idx.iter().enumerate() {
                    let l = lam[k];
                    if l != 0.0 {
                        for &(j, a) in self.rows[i] {
                            s[j] += l * a;
                        }
                    }
                }
            }
        }
    }

    fn row_integral(&self, i: usize, phi: &[f64]) -> f64 {
        let mut acc = KahanSum::new();
        for &(j, a) in self.rows[i] {
            acc.add(a * phi[j]);
        }
        acc.value()
    }
}

struct Eval {
    phi: Vec<f64>,
    row_int: Vec<f64>,
    dual_value: f64,
}

fn phi_from_s(s: &[f64], weights: &[f64], p: f64, phi: &mut [f64]) {
    let inv_pm1 = 1.0 / (p - 1.0);
    for j in 0..s.len() {
        phi[j] = if s[j] > 0.0 {
            (s[j] / (p * weights[j])).powf(inv_pm1)
        } else {
            0.0
        };
    }
}

fn evaluate(rows: &Rows, weights: &[f64], p: f64, lam: &[f64]) -> Eval {
    let mut s = vec![0.0; rows.n_cells];
    rows.scatter(lam, None, &mut s);
    let mut phi = vec![0.0; rows.n_cells];
    phi_from_s(&s, weights, p, &mut phi);
    let row_int: Vec<f64> = (0..rows.len()).map(|i| rows.row_integral(i, &phi)).collect();
    let coupling = kahan_sum(s.iter().zip(phi.iter()).map(|(&sj, &fj)| sj * fj));
    let dual_value = kahan_sum(lam.iter().copied()) - (p - 1.0) / p * coupling;
    Eval { phi, row_int, dual_value }
}

fn energy_of(phi: &[f64], weights: &[f64], p: f64) -> f64 {
    kahan_sum(phi.iter().zip(weights.iter()).map(|(&f, &w)| w * f.powf(p)))
}

enum LuOutcome {
    Solved(Vec<f64>),
    /// The column whose pivot collapsed; with columns never permuted, it
    /// names the variable that is linearly dependent on the earlier ones.
    Singular(usize),
}

/// Dense LU solve with partial (row) pivoting. The singularity threshold
/// is generous because callers recover by shedding the named variable;
/// near-duplicate active rows leave pivots around the duplication error,
/// far below any healthy Jacobian's.
fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> LuOutcome {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return LuOutcome::Singular(0);
    }
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
        if mag < 1e-11 * scale {
            return LuOutcome::Singular(col);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    LuOutcome::Solved(x)
}

enum PolishEnd {
    Done { lam_active: Vec<f64>, phi: Vec<f64> },
    Failed,
}

/// Newton iteration on the tight-row system restricted to `active`.
/// Rows whose multiplier is driven to zero are dropped; rows of the full
/// system that come out violated are added; a singular Jacobian sheds the
/// smallest multiplier (this absorbs duplicated rows).
fn polish(
    rows: &Rows,
    weights: &[f64],
    p: f64,
    start_lam: &[f64],
    feas_tol: f64,
    iter_budget: &mut usize,
) -> PolishEnd {
    let lam_max = start_lam.iter().copied().fold(0.0f64, f64::max);
    if lam_max <= 0.0 {
        return PolishEnd::Failed;
    }
    let eps = eps_active(feas_tol, start_lam);
    let mut active: Vec<usize> = (0..rows.len()).filter(|&i| start_lam[i] > eps).collect();
    if active.is_empty() {
        let imax = (0..rows.len())
            .max_by(|&a, &b| start_lam[a].total_cmp(&start_lam[b]))
            .unwrap();
        active.push(imax);
    }
    let mut lam: Vec<f64> = active
        .iter()
        .map(|&i| start_lam[i].max(1e-8 * lam_max))
        .collect();

    let mut s = vec![0.0; rows.n_cells];
    let mut phi = vec![0.0; rows.n_cells];

    'outer: for _ in 0..40 {
        let k = active.len();
        let mut converged = false;
        for _ in 0..80 {
            *iter_budget = iter_budget.saturating_sub(1);
            rows.scatter(&lam, Some(&active), &mut s);
            phi_from_s(&s, weights, p, &mut phi);
            let f: Vec<f64> = active
                .iter()
                .map(|&i| rows.row_integral(i, &phi) - 1.0)
                .collect();
            let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if fnorm <= NEWTON_TOL {
                converged = true;
                break;
            }

            // J_ab = Σ_j a_aj D_j a_bj with D_j = dφ_j/ds_j.
            let mut d = vec![0.0; rows.n_cells];
            for j in 0..rows.n_cells {
                if s[j] > 0.0 {
                    d[j] = phi[j] / ((p - 1.0) * s[j]);
                }
            }
            let mut jac = vec![vec![0.0; k]; k];
            for (a_pos, &ia) in active.iter().enumerate() {
                for (b_pos, &ib) in active.iter().enumerate().skip(a_pos) {
                    let mut acc = 0.0;
                    if rows.rows[ia].len() <= rows.rows[ib].len() {
                        for &(j, va) in rows.rows[ia] {
                            if d[j] != 0.0 {
                                let vb = rows.rows[ib]
                                    .binary_search_by_key(&j, |&(c, _)| c)
                                    .map(|pos| rows.rows[ib][pos].1)
                                    .unwrap_or(0.0);
                                acc += va * d[j] * vb;
                            }
                        }
                    } else {
                        for &(j, vb) in rows.rows[ib] {
                            if d[j] != 0.0 {
                                let va = rows.rows[ia]
                                    .binary_search_by_key(&j, |&(c, _)| c)
                                    .map(|pos| rows.rows[ia][pos].1)
                                    .unwrap_or(0.0);
                                acc += va * d[j] * vb;
                            }
                        }
                    }
                    jac[a_pos][b_pos] = acc;
                    jac[b_pos][a_pos] = acc;
                }
            }

            let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
            let step = match lu_solve(jac, rhs) {
                LuOutcome::Solved(step) => step,
                LuOutcome::Singular(col) => {
                    // The collapsed pivot names the multiplier that is a
                    // combination of the ones eliminated before it. Shedding
                    // exactly that one keeps a representative of each
                    // duplicate group; shedding by weakest value instead can
                    // remove both members of a pair and orphan their cells.
                    active.remove(col);
                    lam.remove(col);
                    if active.is_empty() {
                        return PolishEnd::Failed;
                    }
                    continue 'outer;
                }
            };

            let mut t_max = 1.0f64;
            let mut blocking = None;
            for a_pos in 0..k {
                if step[a_pos] < 0.0 {
                    let t = -0.95 * lam[a_pos] / step[a_pos];
                    if t < t_max {
                        t_max = t;
                        blocking = Some(a_pos);
                    }
                }
            }
            if t_max < 1e-10 {
                let drop = blocking.expect("tiny t_max implies a blocking row");
                active.remove(drop);
                lam.remove(drop);
                if active.is_empty() {
                    return PolishEnd::Failed;
                }
                continue 'outer;
            }

            let mut t = t_max;
            let mut accepted = false;
            for _ in 0..40 {
                let cand: Vec<f64> = lam
                    .iter()
                    .zip(step.iter())
                    .map(|(l, d)| (l + t * d).max(0.0))
                    .collect();
                rows.scatter(&cand, Some(&active), &mut s);
                phi_from_s(&s, weights, p, &mut phi);
                let cand_norm = active
                    .iter()
                    .map(|&i| (rows.row_integral(i, &phi) - 1.0).abs())
                    .fold(0.0f64, f64::max);
                if cand_norm <= (1.0 - 0.25 * t) * fnorm {
                    lam = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // A step the line search cannot use usually comes from a
                // Jacobian too ill-conditioned to trust (near-duplicate
                // active rows slip past the LU pivot test); shed the
                // weakest multiplier and rebuild.
                let drop = (0..active.len())
                    .min_by(|&a, &b| lam[a].total_cmp(&lam[b]))
                    .expect("the active set is nonempty here");
                active.remove(drop);
                lam.remove(drop);
                if active.is_empty() {
                    return PolishEnd::Failed;
                }
                continue 'outer;
            }
        }

        if !converged {
            return PolishEnd::Failed;
        }

        // Validate against the full system.
        rows.scatter(&lam, Some(&active), &mut s);
        phi_from_s(&s, weights, p, &mut phi);
        let mut worst = None;
        for i in 0..rows.len() {
            if active.contains(&i) {
                continue;
            }
            let v = rows.row_integral(i, &phi);
            if v < 1.0 - 0.5 * feas_tol {
                match worst {
                    Some((_, wv)) if wv <= v => {}
                    _ => worst = Some((i, v)),
                }
            }
        }
        if let Some((i, _)) = worst {
            let pos = active.binary_search(&i).unwrap_err();
            active.insert(pos, i);
            lam.insert(pos, 1e-6 * lam.iter().copied().fold(1e-12f64, f64::max));
            continue 'outer;
        }

        let mut lam_full = vec![0.0; rows.len()];
        for (pos, &i) in active.iter().enumerate() {
            lam_full[i] = lam[pos];
        }
        return PolishEnd::Done { lam_active: lam_full, phi: phi.clone() };
    }
    PolishEnd::Failed
}

fn finalize(
    rows: &Rows,
    space: &CellSpace,
    p: f64,
    lam: Vec<f64>,
    mut phi: Vec<f64>,
    opts: &SolveOptions,
    iterations: usize,
    trace: Vec<TracePoint>,
) -> Option<SolveReport> {
    let row_int: Vec<f64> = (0..rows.len()).map(|i| rows.row_integral(i, &phi)).collect();
    let rmin = row_int.iter().copied().fold(f64::INFINITY, f64::min);
    if !(rmin > 0.0) {
        return None;
    }
    if rmin < 1.0 {
        for v in phi.iter_mut() {
            *v /= rmin;
        }
    }
    let value = energy_of(&phi, space.weights(), p);
    let dual_value = evaluate(rows, space.weights(), p, &lam).dual_value;
    let scale = value.abs().max(1e-300);
    let gap = ((value - dual_value) / scale).max(0.0);
    if gap > opts.gap_tol {
        return None;
    }
    let eps = eps_active(opts.feas_tol, &lam);
    let active_set: Vec<usize> = (0..rows.len()).filter(|&i| lam[i] > eps).collect();
    for &i in &active_set {
        let scaled = if rmin < 1.0 { row_int[i] / rmin } else { row_int[i] };
        if (scaled - 1.0).abs() > opts.feas_tol {
            return None;
        }
    }
    let metric = Metric::new(phi).ok()?;
    let mut trace = trace;
    trace.push(TracePoint { primal: value, dual: dual_value });
    Some(SolveReport {
        value: crate::solver::ModulusValue::Finite(value),
        metric,
        dual: lam,
        gap,
        active_set,
        iterations,
        status: SolveStatus::Optimal,
        trace,
    })
}

/// Entry point used by the dispatcher; `lambda0` overrides the default
/// all-ones start (perturbed starts feed the uniqueness check).
pub(crate) fn solve(
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
    opts: &SolveOptions,
    lambda0: Option<Vec<f64>>,
) -> Result<SolveReport> {
    let rows = Rows::new(system, space.len());
    let weights = space.weights();
    let m = rows.len();

    let norm_a = (0..m)
        .map(|i| rows.rows[i].iter().map(|&(_, v)| v).sum::<f64>())
        .fold(0.0f64, f64::max);
    let t0 = 1.0 / (norm_a * norm_a).max(1e-300);

    let mut lam = lambda0.unwrap_or_else(|| vec![1.0; m]);
    let mut ev = evaluate(&rows, weights, p, &lam);
    let mut step = t0;

    let mut best_dual = f64::NEG_INFINITY;
    let mut best_dual_lam = lam.clone();
    let mut best_primal = f64::INFINITY;
    let mut best_metric: Vec<f64> = vec![0.0; space.len()];
    let mut trace: Vec<TracePoint> = Vec::new();

    let mut polish_trigger = POLISH_TRIGGER.max(opts.gap_tol);
    let mut polish_attempts = 0usize;
    let mut stalled = false;

    let mut iter = 0usize;
    let mut budget = opts.max_iters;
    while iter < opts.max_iters {
        iter += 1;

        if ev.dual_value > best_dual {
            best_dual = ev.dual_value;
            best_dual_lam.copy_from_slice(&lam);
        }
        let rmin = ev.row_int.iter().copied().fold(f64::INFINITY, f64::min);
        if rmin > 1e-300 {
            let candidate = energy_of(&ev.phi, weights, p) / rmin.powf(p);
            if candidate < best_primal {
                best_primal = candidate;
                for (dst, &src) in best_metric.iter_mut().zip(ev.phi.iter()) {
                    *dst = src / rmin;
                }
            }
        }
        trace.push(TracePoint { primal: best_primal, dual: best_dual });

        let scale = best_primal.abs().max(1e-300);
        let rel_gap = (best_primal - best_dual) / scale;
        if (rel_gap <= polish_trigger || stalled) && polish_attempts < 12 {
            polish_attempts += 1;
            if let PolishEnd::Done { lam_active, phi } =
                polish(&rows, weights, p, &best_dual_lam, opts.feas_tol, &mut budget)
            {
                if let Some(report) =
                    finalize(&rows, space, p, lam_active, phi, opts, iter, trace.clone())
                {
                    return Ok(report);
                }
            }
            polish_trigger = (rel_gap * 1e-2).max(opts.gap_tol * 1e-4);
            stalled = false;
        }

        // One projected-gradient step with Armijo backtracking.
        let grad: Vec<f64> = ev.row_int.iter().map(|v| 1.0 - v).collect();
        let mut accepted = false;
        while step > 1e-20 * t0 {
            let cand: Vec<f64> = lam
                .iter()
                .zip(grad.iter())
                .map(|(l, g)| (l + step * g).max(0.0))
                .collect();
            let move_dot: f64 = grad
                .iter()
                .zip(cand.iter().zip(lam.iter()))
                .map(|(g, (c, l))| g * (c - l))
                .sum();
            if move_dot <= 0.0 {
                // No ascent direction remains inside the cone.
                break;
            }
            let cand_ev = evaluate(&rows, weights, p, &cand);
            if cand_ev.dual_value >= ev.dual_value + ARMIJO_SIGMA * move_dot {
                lam = cand;
                ev = cand_ev;
                step = (step * 1.4).min(1e8 * t0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if stalled {
                break;
            }
            stalled = true;
        }
    }

    // Last-chance polish from the best dual point.
    if let PolishEnd::Done { lam_active, phi } =
        polish(&rows, weights, p, &best_dual_lam, opts.feas_tol, &mut budget)
    {
        if let Some(report) =
            finalize(&rows, space, p, lam_active, phi, opts, iter, trace.clone())
        {
            return Ok(report);
        }
    }

    let scale = best_primal.abs().max(1e-300);
    let metric = Metric::new(best_metric).unwrap_or_else(|_| Metric::zeros(space.len()));
    Ok(SolveReport {
        value: crate::solver::ModulusValue::Finite(best_primal),
        metric,
        dual: best_dual_lam,
        gap: ((best_primal - best_dual) / scale).max(0.0),
        active_set: Vec::new(),
        iterations: iter,
        status: SolveStatus::MaxIters,
        trace,
    })
}
