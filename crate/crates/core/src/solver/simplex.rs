//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c·x` subject to mixed `≤ / ≥ / =` constraints and `x ≥ 0`.
//! Bland's smallest-index rule (taken relative to an optional column
//! ordering) guarantees termination under degeneracy; the ordering also
//! lets callers steer which optimal vertex is reached when the optimum is
//! not unique.
//!
//! Dual values are reported per constraint with the convention
//!
//! ```text
//! value = Σ_{i: ≥} y_i b_i − Σ_{i: ≤} y_i b_i + Σ_{i: =} y_i b_i
//! ```
//!
//! where `y_i ≥ 0` for inequality rows and `y_i` is signed for equalities.
//! Equivalently, `y` prices the Lagrangian
//! `c·x − Σ_{≥} y (a x − b) + Σ_{≤} y (a x − b) − Σ_{=} y (a x − b)`.

use crate::error::{Error, Result};

const EPS_PIVOT: f64 = 1e-11;
const EPS_ENTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    // Callers currently express equalities as Le/Ge pairs so dual signs
    // stay one-sided, but the solver handles Eq rows directly.
    #[allow(dead_code)]
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Minimized objective, one coefficient per structural variable.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One dual per constraint, see the module docs for the sign convention.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible { phase1_value: f64 },
    Unbounded,
    /// The caller-supplied pivot budget ran out before optimality.
    Budget { pivots: usize },
}

struct Tableau {
    /// `rows × (cols + 1)`; the trailing column is the rhs.
    t: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    /// Rows found linearly dependent after phase 1.
    dead_rows: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        debug_assert!(piv.abs() > 0.0);
        let inv = 1.0 / piv;
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        for r in 0..self.t.len() {
            if r == row {
                continue;
            }
            let factor = self.t[r][col];
            if factor != 0.0 {
                for c in 0..=self.cols {
                    self.t[r][c] -= factor * self.t[row][c];
                }
                self.t[r][col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for c in 0..=self.cols {
                self.cost[c] -= factor * self.t[row][c];
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
        for r in 0..self.t.len() {
            if self.t[r][self.cols] < 0.0 && self.t[r][self.cols] > -1e-12 {
                self.t[r][self.cols] = 0.0;
            }
        }
        self.pivots += 1;
    }

    /// Prices out the basic columns of `full_cost` into the cost row.
    fn load_cost(&mut self, full_cost: &[f64]) {
        self.cost = full_cost.to_vec();
        self.cost.push(0.0);
        for r in 0..self.t.len() {
            let cb = full_cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..=self.cols {
                    self.cost[c] -= cb * self.t[r][c];
                }
            }
        }
    }

    /// Runs simplex iterations until no allowed column has a negative
    /// reduced cost. Returns `Some(false)` if an unbounded ray is found
    /// and `None` if the soft pivot budget ran out first; overrunning the
    /// hard anti-cycling cap is an error.
    fn run<F: Fn(usize) -> bool, R: Fn(usize) -> usize>(
        &mut self,
        allowed: F,
        rank: R,
        soft_cap: usize,
        hard_cap: usize,
    ) -> Result<Option<bool>> {
        loop {
            if self.pivots > hard_cap {
                return Err(Error::Lp("pivot limit exceeded".into()));
            }
            if self.pivots > soft_cap {
                return Ok(None);
            }
            let mut entering: Option<usize> = None;
            for c in 0..self.cols {
                if self.cost[c] < -EPS_ENTER && allowed(c) {
                    match entering {
                        Some(e) if rank(e) <= rank(c) => {}
                        _ => entering = Some(c),
                    }
                }
            }
            let Some(col) = entering else {
                return Ok(Some(true));
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                if self.dead_rows[r] {
                    continue;
                }
                let a = self.t[r][col];
                if a > EPS_PIVOT {
                    let ratio = self.t[r][self.cols] / a;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - 1e-12
                                || (ratio <= best + 1e-12
                                    && rank(self.basis[r]) < rank(self.basis[br]))
                            {
                                leaving = Some((r, ratio.min(best)));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Ok(Some(false));
            };
            self.pivot(row, col);
        }
    }
}

/// Solves the program. `order` optionally permutes the structural columns
/// for Bland's rule: entry `order[k]` is the k-th preferred variable.
/// `pivot_cap` bounds total pivots across both phases; exhausting it
/// yields [`LpOutcome::Budget`] rather than an error.
pub fn solve(
    lp: &LinearProgram,
    order: Option<&[usize]>,
    pivot_cap: Option<usize>,
) -> Result<LpOutcome> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    if lp.objective.len() != n {
        return Err(Error::DimensionMismatch {
            context: "lp objective",
            expected: n,
            got: lp.objective.len(),
        });
    }
    let mut rank_of: Vec<usize> = (0..n).collect();
    if let Some(ord) = order {
        if ord.len() != n {
            return Err(Error::DimensionMismatch {
                context: "lp column order",
                expected: n,
                got: ord.len(),
            });
        }
        for (pos, &j) in ord.iter().enumerate() {
            if j >= n {
                return Err(Error::Contract(format!("order references column {j} out of {n}")));
            }
            rank_of[j] = pos;
        }
    }

    // Canonicalize to nonnegative rhs; remember per-row sign flips.
    let mut flip = vec![1.0f64; m];
    let mut senses = Vec::with_capacity(m);
    for (i, con) in lp.constraints.iter().enumerate() {
        if con.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "lp constraint",
                expected: n,
                got: con.coeffs.len(),
            });
        }
        let mut sense = con.sense;
        if con.rhs < 0.0 {
            flip[i] = -1.0;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        senses.push(sense);
    }

    // Column layout: structural | slack/surplus | artificial | rhs.
    let num_slack = m;
    let mut num_art = 0;
    let art_base = n + num_slack;
    let mut art_col = vec![usize::MAX; m];
    for (i, s) in senses.iter().enumerate() {
        if !matches!(s, Sense::Le) {
            art_col[i] = art_base + num_art;
            num_art += 1;
        }
    }
    let cols = n + num_slack + num_art;

    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let con = &lp.constraints[i];
        for j in 0..n {
            t[i][j] = flip[i] * con.coeffs[j];
        }
        t[i][cols] = flip[i] * con.rhs;
        match senses[i] {
            Sense::Le => {
                t[i][n + i] = 1.0;
                basis[i] = n + i;
            }
            Sense::Ge => {
                t[i][n + i] = -1.0;
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
            Sense::Eq => {
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
        }
    }

    let mut tab = Tableau {
        t,
        cost: vec![0.0; cols + 1],
        basis,
        cols,
        dead_rows: vec![false; m],
        pivots: 0,
    };
    let rank = |c: usize| if c < n { rank_of[c] } else { n + (c - n) };
    let hard_cap = 20_000 + 200 * (n + m);
    let soft_cap = pivot_cap.unwrap_or(usize::MAX);

    // Phase 1: minimize the artificial mass.
    if num_art > 0 {
        let mut c1 = vec![0.0; cols];
        for c in c1.iter_mut().skip(art_base) {
            *c = 1.0;
        }
        tab.load_cost(&c1);
        let Some(bounded) = tab.run(|_| true, rank, soft_cap, hard_cap)? else {
            return Ok(LpOutcome::Budget { pivots: tab.pivots });
        };
        debug_assert!(bounded, "phase 1 is bounded below by zero");
        let phase1 = -tab.cost[cols];
        if phase1 > 1e-8 {
            return Ok(LpOutcome::Infeasible { phase1_value: phase1 });
        }
        // Drive zero-level artificials out of the basis; rows that cannot
        // pivot are linearly dependent on the others.
        for r in 0..m {
            if tab.basis[r] >= art_base {
                let col = (0..art_base).find(|&c| tab.t[r][c].abs() > EPS_PIVOT);
                match col {
                    Some(c) => tab.pivot(r, c),
                    None => tab.dead_rows[r] = true,
                }
            }
        }
    }

    // Phase 2 over the true objective, artificials barred from entering.
    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(&lp.objective);
    tab.load_cost(&c2);
    let Some(bounded) = tab.run(|c| c < art_base, rank, soft_cap, hard_cap)? else {
        return Ok(LpOutcome::Budget { pivots: tab.pivots });
    };
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.t[r][cols].max(0.0);
        }
    }
    let value = -tab.cost[cols];

    // Canonical prices come off the reduced costs of each row's initial
    // identity column (slack for ≤ rows, artificial otherwise).
    let mut duals = vec![0.0; m];
    for i in 0..m {
        if tab.dead_rows[i] {
            continue;
        }
        let idcol = match senses[i] {
            Sense::Le => n + i,
            _ => art_col[i],
        };
        let y_canon = -tab.cost[idcol];
        let signed = match lp.constraints[i].sense {
            Sense::Ge | Sense::Eq => flip[i] * y_canon,
            Sense::Le => -flip[i] * y_canon,
        };
        duals[i] = signed;
    }
    // Inequality duals are nonnegative up to roundoff.
    for (i, d) in duals.iter_mut().enumerate() {
        if !matches!(lp.constraints[i].sense, Sense::Eq) && *d < 0.0 && *d > -1e-9 {
            *d = 0.0;
        }
    }

    Ok(LpOutcome::Optimal(LpSolution {
        x,
        value,
        duals,
        pivots: tab.pivots,
    }))
}
