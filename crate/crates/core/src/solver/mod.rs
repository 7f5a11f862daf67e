//! Solvers for the discrete p-modulus problem
//!
//! ```text
//! Mod_p(E) = inf { Σ_j m_j φ_j^p  :  ∫ φ dμ ≥ 1 for every μ in E, φ ≥ 0 }
//! ```
//!
//! over a finite cell space with weights `m`. Three regimes:
//!
//! * `p = 1` (and exponents within [`P_LP_THRESHOLD`] of 1): a covering
//!   linear program handed to the two-phase simplex.
//! * `p > 1`: strictly convex; projected dual ascent with a Newton polish
//!   on the active rows.
//! * `0 < p < 1`: non-convex. The general solver refuses it; the atomic
//!   closed form is available as [`eval_atomic_modulus_sub1`], and
//!   [`brute_force_modulus`] accepts any `p > 0`.
//!
//! Degenerate inputs resolve before any iteration: an empty system has
//! modulus 0, and a system containing a zero row has modulus +∞ because no
//! metric can integrate to 1 against the zero measure.

pub(crate) mod simplex;

mod dual_ascent;
mod l1;

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{validate_system, CellSpace, MeasureSystem, Metric};

/// Exponents with `p ≤ 1 + P_LP_THRESHOLD` are routed to the linear
/// program; the dual-ascent exponent `1/(p−1)` is useless that close to 1.
pub const P_LP_THRESHOLD: f64 = 1e-6;

pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Relative duality gap below which a solve counts as optimal.
    pub gap_tol: f64,
    /// Absolute slack allowed in `∫ φ dμ ≥ 1` and in complementary
    /// slackness on active rows.
    pub feas_tol: f64,
    /// Seed for any randomized probe (perturbed starts); solves themselves
    /// are deterministic.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            gap_tol: DEFAULT_GAP_TOL,
            feas_tol: DEFAULT_FEAS_TOL,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
    EmptySystem,
}

/// A modulus value; the infinite case arises exactly when the system
/// contains a zero row. Serialized as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusValue {
    Finite(f64),
    Infinite,
}

impl ModulusValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, ModulusValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ModulusValue::Finite(v) => Some(*v),
            ModulusValue::Infinite => None,
        }
    }
}

impl Serialize for ModulusValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModulusValue::Finite(v) => s.serialize_f64(*v),
            ModulusValue::Infinite => s.serialize_str("inf"),
        }
    }
}

struct ModulusValueVisitor;

impl Visitor<'_> for ModulusValueVisitor {
    type Value = ModulusValue;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a finite number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ModulusValue, E> {
        Ok(ModulusValue::Finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ModulusValue, E> {
        Ok(ModulusValue::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ModulusValue, E> {
        Ok(ModulusValue::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ModulusValue, E> {
        if v == "inf" {
            Ok(ModulusValue::Infinite)
        } else {
            Err(E::custom(format!("unexpected modulus string {v:?}")))
        }
    }
}

impl<'de> Deserialize<'de> for ModulusValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ModulusValueVisitor)
    }
}

/// One point of the convergence trace: the best primal value seen so far
/// and the current dual bound. Weak duality keeps `dual ≤ primal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub value: ModulusValue,
    /// The extremal (or best-found) metric, already scaled to be
    /// admissible when the value is finite.
    pub metric: Metric,
    /// One Lagrange multiplier per row of the system.
    pub dual: Vec<f64>,
    /// Relative duality gap, clamped at zero.
    pub gap: f64,
    /// Rows whose multiplier clears the activity threshold, ascending.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub status: SolveStatus,
    /// In-memory convergence trace; not part of any serialized report.
    pub trace: Vec<TracePoint>,
}

/// Activity threshold for multipliers: `max(feas_tol, 1e-8) · max_i λ_i`.
pub fn eps_active(feas_tol: f64, dual: &[f64]) -> f64 {
    let lam_max = dual.iter().copied().fold(0.0f64, f64::max);
    feas_tol.max(1e-8) * lam_max
}

fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Contract(format!("exponent must satisfy p > 0, got {p}")));
    }
    if p < 1.0 {
        return Err(Error::Unsupported(format!(
            "p = {p} < 1 is non-convex; use eval_atomic_modulus_sub1 or brute_force_modulus"
        )));
    }
    Ok(())
}

/// Empty and structurally infeasible systems resolve without iteration.
fn resolve_degenerate(
    system: &MeasureSystem,
    space: &CellSpace,
) -> Result<Option<SolveReport>> {
    if system.is_empty() {
        return Ok(Some(SolveReport {
            value: ModulusValue::Finite(0.0),
            metric: Metric::zeros(space.len()),
            dual: Vec::new(),
            gap: 0.0,
            active_set: Vec::new(),
            iterations: 0,
            status: SolveStatus::EmptySystem,
            trace: Vec::new(),
        }));
    }
    let diag = validate_system(system, space);
    if let Some(&i) = diag.out_of_range_rows.first() {
        return Err(Error::Invalid(format!(
            "row {i} references a cell outside the space of {} cells",
            space.len()
        )));
    }
    if !diag.zero_rows.is_empty() {
        return Ok(Some(SolveReport {
            value: ModulusValue::Infinite,
            metric: Metric::zeros(space.len()),
            dual: vec![0.0; system.len()],
            gap: 0.0,
            active_set: Vec::new(),
            iterations: 0,
            status: SolveStatus::Infeasible,
            trace: Vec::new(),
        }));
    }
    Ok(None)
}

/// Solves `Mod_p` for `p ≥ 1`, dispatching on the exponent.
pub fn solve_modulus(
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_exponent(p)?;
    if let Some(report) = resolve_degenerate(system, space)? {
        return Ok(report);
    }
    if p <= 1.0 + P_LP_THRESHOLD {
        l1::solve(system, space, opts, None)
    } else {
        dual_ascent::solve(system, space, p, opts, None)
    }
}

/// The `p = 1` solver with explicit control over the simplex column
/// ordering. Different orderings can land on different optimal vertices
/// when the extremal metric is not unique.
pub fn solve_modulus_l1(
    system: &MeasureSystem,
    space: &CellSpace,
    opts: &SolveOptions,
    order: Option<&[usize]>,
) -> Result<SolveReport> {
    if let Some(report) = resolve_degenerate(system, space)? {
        return Ok(report);
    }
    l1::solve(system, space, opts, order)
}

/// Closed form for single-row atomic systems with `0 < p < 1`, where the
/// general solver refuses to run (the energy is concave, not convex).
///
/// For the system `{μ}` with `μ` supported on atom cells, the minimum of
/// the concave energy over the half-space `∫φ dμ ≥ 1` sits at a vertex
/// `φ = e_k / a_k`, so
///
/// ```text
/// Mod_p = min_k m_k / a_k^p,
/// ```
///
/// which for the restriction `μ = m|A` (entries equal to the weights
/// `c_k`) reduces to `(min_k c_k)^{1−p}`. Returns the value and the
/// concentrating witness metric; ties resolve to the smallest cell index,
/// though every tied atom gives an equally optimal witness.
///
/// A block of arbitrarily divisible mass would drive the infimum to 0
/// with no extremal metric at all; finite cell spaces cannot model that
/// regime, so it is documented in the oracle catalogue instead of being
/// simulated here.
pub fn eval_atomic_modulus_sub1(
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
) -> Result<(f64, Metric)> {
    if !(p.is_finite() && p > 0.0 && p < 1.0) {
        return Err(Error::Contract(format!(
            "atomic closed form requires 0 < p < 1, got {p}"
        )));
    }
    if system.len() != 1 {
        return Err(Error::Unsupported(format!(
            "the sub-1 closed form covers single-row systems, got {} rows",
            system.len()
        )));
    }
    let row = system.row(0);
    if row.max_index().is_some_and(|m| m >= space.len()) {
        return Err(Error::Invalid(format!(
            "row references a cell outside the space of {} cells",
            space.len()
        )));
    }
    let support: Vec<(usize, f64)> = row
        .entries()
        .iter()
        .copied()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    if support.is_empty() {
        return Err(Error::Invalid(
            "the row carries no mass; its modulus is infinite".into(),
        ));
    }
    for &(j, _) in &support {
        if !space.is_atom(j) {
            return Err(Error::Unsupported(format!(
                "cell {j} is not an atom; the closed form needs purely atomic support"
            )));
        }
    }
    let (k, ak, best) = support
        .iter()
        .map(|&(j, a)| (j, a, space.weight(j) / a.powf(p)))
        .fold((usize::MAX, 0.0, f64::INFINITY), |acc, it| {
            if it.2 < acc.2 {
                it
            } else {
                acc
            }
        });
    let mut values = vec![0.0; space.len()];
    values[k] = 1.0 / ak;
    Ok((best, Metric::new(values)?))
}

enum LbKind {
    /// p > 1: single-row relaxation `(d/S)^p · T`.
    Convex,
    /// p = 1: `d · min_j m_j/a_j`.
    Linear,
    /// p < 1: concentration, `d^p · min_j m_j/a_j^p`.
    Concave,
}

/// Backstop on branch-and-bound nodes; hitting it means the instance was
/// too large for the requested step despite passing the size gate.
const BF_NODE_BUDGET: u64 = 200_000_000;

struct BruteForce {
    p: f64,
    step: f64,
    weights: Vec<f64>,
    /// Dense row-major coefficients, `a[i][j]`, in search order.
    a: Vec<Vec<f64>>,
    /// Per cell, the largest admissible grid count (min of the value that
    /// alone satisfies every covering row and of `bound`).
    caps: Vec<u64>,
    kind: LbKind,
    /// Per row, suffix aggregate used by the bound; meaning depends on
    /// `kind` (S for convex, the min ratio otherwise).
    s_suf: Vec<Vec<f64>>,
    /// Per row, the T suffix (convex case only).
    t_suf: Vec<Vec<f64>>,
    nodes: u64,
    best: f64,
    best_phi: Vec<f64>,
    phi: Vec<f64>,
}

impl BruteForce {
    fn lower_bound(&self, i: usize, k: usize, d: f64) -> f64 {
        if d <= 1e-12 {
            return 0.0;
        }
        match self.kind {
            LbKind::Convex => {
                let s = self.s_suf[i][k];
                if s <= 0.0 {
                    f64::INFINITY
                } else {
                    (d / s).powf(self.p) * self.t_suf[i][k]
                }
            }
            LbKind::Linear => d * self.s_suf[i][k],
            LbKind::Concave => d.powf(self.p) * self.s_suf[i][k],
        }
    }

    fn complete_last(&mut self, energy: f64, deficits: &[f64]) {
        let last = self.phi.len() - 1;
        let mut required = 0.0f64;
        for (i, &d) in deficits.iter().enumerate() {
            if d > 1e-12 {
                let a = self.a[i][last];
                if a <= 0.0 {
                    return;
                }
                required = required.max(d / a);
            }
        }
        let mut count = if required > 0.0 {
            (required / self.step - 1e-9).ceil().max(0.0) as u64
        } else {
            0
        };
        loop {
            if count > self.caps[last] {
                // The bound clips every admissible completion of this branch.
                return;
            }
            let v = count as f64 * self.step;
            let ok = deficits
                .iter()
                .enumerate()
                .all(|(i, &d)| d <= 1e-12 || self.a[i][last] * v >= d - 1e-12);
            if ok {
                break;
            }
            count += 1;
        }
        let v = count as f64 * self.step;
        let total = energy + self.weights[last] * v.powf(self.p);
        if total < self.best {
            self.best = total;
            self.phi[last] = v;
            self.best_phi.copy_from_slice(&self.phi);
        }
    }

    fn dfs(&mut self, k: usize, energy: f64, deficits: &[f64]) -> Result<()> {
        self.nodes += 1;
        if self.nodes > BF_NODE_BUDGET {
            return Err(Error::BruteForceTooLarge(format!(
                "grid search exceeded {BF_NODE_BUDGET} nodes at step {}; \
                 refuse the instance or coarsen the step",
                self.step
            )));
        }
        if k + 1 == self.phi.len() {
            self.complete_last(energy, deficits);
            return Ok(());
        }
        let m = self.a.len();
        for c in 0..=self.caps[k] {
            let v = c as f64 * self.step;
            let e = energy + self.weights[k] * v.powf(self.p);
            // The energy term grows with c; nothing further can improve.
            if e >= self.best {
                break;
            }
            let next: Vec<f64> = (0..m).map(|i| deficits[i] - self.a[i][k] * v).collect();
            let mut bound = 0.0f64;
            for i in 0..m {
                bound = bound.max(self.lower_bound(i, k + 1, next[i]));
                if e + bound >= self.best {
                    break;
                }
            }
            if e + bound >= self.best {
                continue;
            }
            self.phi[k] = v;
            self.dfs(k + 1, e, &next)?;
        }
        self.phi[k] = 0.0;
        Ok(())
    }
}

/// Largest instance the grid search accepts: beyond this the cell-product
/// grid is hopeless at any useful step, so the call is refused outright.
const BF_MAX_CELLS: usize = 5;
const BF_MAX_ROWS: usize = 4;

/// Exhaustive grid search over metrics quantized to multiples of `step`
/// with every cell value limited to `bound` rounded up to the grid, for
/// any `p > 0`. The search is exact on that grid: per-cell caps and the
/// branch-and-bound pruning never exclude a grid point that could beat
/// the incumbent.
///
/// Instances with more than 5 cells or 4 rows are refused, as is any run
/// whose node count outgrows an internal budget. If no grid point inside
/// `[0, bound]^n` is admissible the value is infinite and the metric zero.
///
/// This is an oracle for cross-checking the solvers on small instances,
/// not a production path.
pub fn brute_force_modulus(
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
    step: f64,
    bound: f64,
) -> Result<(f64, Metric)> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Contract(format!("brute force requires p > 0, got {p}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Contract(format!("step must be positive, got {step}")));
    }
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(Error::Contract(format!(
            "bound must be finite and nonnegative, got {bound}"
        )));
    }
    let n = space.len();
    let m = system.len();
    if n > BF_MAX_CELLS || m > BF_MAX_ROWS {
        return Err(Error::BruteForceTooLarge(format!(
            "grid search accepts at most {BF_MAX_CELLS} cells and {BF_MAX_ROWS} rows, \
             got {n} cells and {m} rows"
        )));
    }
    if system.is_empty() {
        return Ok((0.0, Metric::zeros(n)));
    }
    let diag = validate_system(system, space);
    if let Some(&i) = diag.out_of_range_rows.first() {
        return Err(Error::Invalid(format!(
            "row {i} references a cell outside the space of {n} cells"
        )));
    }
    if !diag.zero_rows.is_empty() {
        return Ok((f64::INFINITY, Metric::zeros(n)));
    }

    let mut a = vec![vec![0.0; n]; m];
    for (i, row) in system.rows().iter().enumerate() {
        for &(j, v) in row.entries() {
            a[i][j] = v;
        }
    }

    // Cap each cell at the smaller of `bound` and the smallest value that
    // alone satisfies every row covering it; past the latter, larger values
    // are never part of an optimal grid point. The bound rounds up to the
    // grid so a caller passing exactly `1 / a_min(j)` still reaches the
    // first grid point that satisfies a row supported on cell `j` alone.
    let bound_count = (bound / step - 1e-9).ceil().max(0.0) as u64;
    let mut caps = vec![0u64; n];
    for j in 0..n {
        let amin = (0..m)
            .map(|i| a[i][j])
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if amin.is_finite() {
            let mut c = (1.0 / (amin * step)).ceil().max(0.0) as u64;
            while amin * c as f64 * step < 1.0 {
                c += 1;
            }
            caps[j] = c.min(bound_count);
        }
    }

    // Search cells in ascending cap order: small loops sit near the root
    // and the widest cell falls to the closed-form completion.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| caps[j]);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|i| order.iter().map(|&j| a[i][j]).collect())
        .collect();
    let caps: Vec<u64> = order.iter().map(|&j| caps[j]).collect();
    let weights: Vec<f64> = order.iter().map(|&j| space.weight(j)).collect();

    let kind = if p > 1.0 + 1e-12 {
        LbKind::Convex
    } else if p >= 1.0 - 1e-12 {
        LbKind::Linear
    } else {
        LbKind::Concave
    };

    let mut s_suf = vec![vec![0.0; n + 1]; m];
    let mut t_suf = vec![vec![0.0; n + 1]; m];
    for i in 0..m {
        match kind {
            LbKind::Convex => {
                let q = p / (p - 1.0);
                for j in (0..n).rev() {
                    let aj = a[i][j];
                    let (ds, dt) = if aj > 0.0 {
                        (
                            aj.powf(q) / (p * weights[j]).powf(1.0 / (p - 1.0)),
                            weights[j] * (aj / (p * weights[j])).powf(q),
                        )
                    } else {
                        (0.0, 0.0)
                    };
                    s_suf[i][j] = s_suf[i][j + 1] + ds;
                    t_suf[i][j] = t_suf[i][j + 1] + dt;
                }
            }
            LbKind::Linear => {
                s_suf[i][n] = f64::INFINITY;
                for j in (0..n).rev() {
                    let r = if a[i][j] > 0.0 { weights[j] / a[i][j] } else { f64::INFINITY };
                    s_suf[i][j] = s_suf[i][j + 1].min(r);
                }
            }
            LbKind::Concave => {
                s_suf[i][n] = f64::INFINITY;
                for j in (0..n).rev() {
                    let r = if a[i][j] > 0.0 {
                        weights[j] / a[i][j].powf(p)
                    } else {
                        f64::INFINITY
                    };
                    s_suf[i][j] = s_suf[i][j + 1].min(r);
                }
            }
        }
    }

    // The all-caps point dominates every grid point componentwise; if even
    // it misses a row, the bound has cut off all admissible candidates.
    let cap_phi: Vec<f64> = caps.iter().map(|&c| c as f64 * step).collect();
    for row in &a {
        let total = crate::measure::kahan_sum(
            row.iter().zip(cap_phi.iter()).map(|(&c, &v)| c * v),
        );
        if total < 1.0 - 1e-12 {
            return Ok((f64::INFINITY, Metric::zeros(n)));
        }
    }
    // Seed the incumbent with it so equal-cost points still register.
    let seed_energy: f64 = crate::measure::kahan_sum(
        cap_phi
            .iter()
            .zip(weights.iter())
            .map(|(&v, &w)| w * v.powf(p)),
    );

    let mut bf = BruteForce {
        p,
        step,
        weights,
        a,
        caps,
        kind,
        s_suf,
        t_suf,
        nodes: 0,
        best: seed_energy * (1.0 + 1e-12) + 1e-300,
        best_phi: cap_phi,
        phi: vec![0.0; n],
    };
    let deficits = vec![1.0; m];
    bf.dfs(0, 0.0, &deficits)?;

    let mut values = vec![0.0; n];
    for (k, &j) in order.iter().enumerate() {
        values[j] = bf.best_phi[k];
    }
    let metric = Metric::new(values)?;
    let value = crate::measure::p_energy(&metric, space, p)?;
    Ok((value, metric))
}

/// A per-cell `bound` that never cuts off the optimum of
/// [`brute_force_modulus`]: past `1 / a_min(j)`, with `a_min(j)` the
/// smallest positive coefficient among rows covering cell `j`, the cell
/// alone satisfies every row it meets, so no optimum exceeds that height.
/// Returns the maximum of those thresholds, or 0 for an empty system.
pub fn suggested_brute_force_bound(system: &MeasureSystem) -> f64 {
    let mut amin: BTreeMap<usize, f64> = BTreeMap::new();
    for row in system.rows() {
        for &(j, v) in row.entries() {
            if v > 0.0 {
                let slot = amin.entry(j).or_insert(f64::INFINITY);
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    amin.values().map(|&v| 1.0 / v).fold(0.0, f64::max)
}

/// Outcome of a uniqueness probe for the extremal metric.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub unique: bool,
    /// Largest sup-norm deviation between any probe metric and the
    /// baseline metric.
    pub max_deviation: f64,
    pub trials: usize,
    pub tol: f64,
    /// When not unique, the two optimal metrics that differ the most:
    /// the baseline and the worst-deviating probe.
    pub witness: Option<(Metric, Metric)>,
}

/// Re-solves the problem from perturbed starting points (`p > 1`) or under
/// permuted simplex pivot orders (`p = 1`) and reports whether every run
/// lands on the same extremal metric. For `p > 1` strict convexity makes
/// the metric unique, so deviations beyond the tolerance indicate a solver
/// defect; for `p = 1` non-uniqueness is genuine and expected on
/// degenerate instances.
pub fn uniqueness_check(
    system: &MeasureSystem,
    space: &CellSpace,
    p: f64,
    opts: &SolveOptions,
) -> Result<UniquenessReport> {
    check_exponent(p)?;
    let baseline = solve_modulus(system, space, p, opts)?;
    let tol = 10.0 * opts.feas_tol;
    match baseline.status {
        SolveStatus::EmptySystem | SolveStatus::Infeasible => {
            return Ok(UniquenessReport {
                unique: true,
                max_deviation: 0.0,
                trials: 0,
                tol,
                witness: None,
            });
        }
        SolveStatus::Optimal => {}
        SolveStatus::MaxIters => {
            return Err(Error::Contract(
                "uniqueness check requires an optimal baseline solve".into(),
            ));
        }
    }

    let mut max_deviation = 0.0f64;
    let mut worst: Option<Metric> = None;
    let mut trials = 0usize;
    let mut record = |alt: SolveReport, max_deviation: &mut f64, trials: &mut usize| {
        let d = alt.metric.linf_distance(&baseline.metric);
        if d > *max_deviation {
            *max_deviation = d;
            worst = Some(alt.metric);
        }
        *trials += 1;
    };
    if p <= 1.0 + P_LP_THRESHOLD {
        let n = space.len();
        let reversed: Vec<usize> = (0..n).rev().collect();
        let rotated: Vec<usize> = (n / 2..n).chain(0..n / 2).collect();
        for order in [&reversed, &rotated] {
            let alt = l1::solve(system, space, opts, Some(order))?;
            if alt.status != SolveStatus::Optimal {
                return Err(Error::Contract(
                    "uniqueness probe failed to reach optimality".into(),
                ));
            }
            record(alt, &mut max_deviation, &mut trials);
        }
    } else {
        for t in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1 + 7 * t));
            let lam0: Vec<f64> = (0..system.len())
                .map(|_| 1.0 + 0.5 * rng.gen::<f64>())
                .collect();
            let alt = dual_ascent::solve(system, space, p, opts, Some(lam0))?;
            if alt.status != SolveStatus::Optimal {
                return Err(Error::Contract(
                    "uniqueness probe failed to reach optimality".into(),
                ));
            }
            record(alt, &mut max_deviation, &mut trials);
        }
    }
    let unique = max_deviation <= tol;
    let witness = if unique {
        None
    } else {
        worst.map(|w| (baseline.metric.clone(), w))
    };
    Ok(UniquenessReport { unique, max_deviation, trials, tol, witness })
}
