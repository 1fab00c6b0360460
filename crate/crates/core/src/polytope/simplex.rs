//! Dense two-phase tableau simplex at double precision.
//!
//! Pivoting is deterministic: Dantzig pricing with lowest-index tie-breaking,
//! falling back to Bland's rule after a stall so cycling cannot occur. Duals
//! are read off the final tableau from each row's marker column.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable lower bound; `NEG_INFINITY` marks a free variable.
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>, constraints: Vec<Constraint>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints,
            lower_bounds: vec![0.0; n],
            upper_bounds: vec![None; n],
        }
    }

    pub fn free_variable(mut self, j: usize) -> Self {
        self.lower_bounds[j] = f64::NEG_INFINITY;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per original constraint row. Sign convention: for
    /// minimization, duals of `≥` rows are nonnegative and duals of `≤` rows
    /// nonpositive; maximization negates.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolutionReport {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("bad LP input: {0}")]
    BadInput(String),
    #[error("numerically singular basis: {0}")]
    Degenerate(String),
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;

#[derive(Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lb: f64 },
    Free { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    n_cols: usize,
    /// Row-major `m × (n_cols + 1)`; last entry of each row is the rhs.
    a: Vec<f64>,
    cost: Vec<f64>,
    obj: f64,
    basis: Vec<usize>,
    artificial_start: usize,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n_cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.n_cols + 1) + self.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.n_cols + 1;
        let pivot = self.a[row * width + col];
        let inv = 1.0 / pivot;
        for j in 0..width {
            self.a[row * width + j] *= inv;
        }
        self.a[row * width + col] = 1.0;
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.a[i * width + col];
            if factor == 0.0 {
                continue;
            }
            let (head, tail) = self.a.split_at_mut(row.max(i) * width);
            let (src, dst) = if row < i {
                (&head[row * width..row * width + width], &mut tail[..width])
            } else {
                (&tail[..width], &mut head[i * width..i * width + width])
            };
            for j in 0..width {
                dst[j] -= factor * src[j];
            }
            self.a[i * width + col] = 0.0;
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for j in 0..self.n_cols {
                self.cost[j] -= factor * self.a[row * width + j];
            }
            self.obj -= factor * self.rhs(row);
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Lexicographic comparison of rows `i` and `r` scaled by their pivot
    /// entries, scanning rhs first, then the identity block (slacks and
    /// artificials), then structural columns. Every initial row is
    /// lexicographically positive in this order, so the rule terminates.
    fn lex_less(&self, i: usize, ai: f64, r: usize, ar: f64, slack_start: usize) -> bool {
        let wi = 1.0 / ai;
        let wr = 1.0 / ar;
        let vi = self.rhs(i) * wi;
        let vr = self.rhs(r) * wr;
        if vi != vr {
            return vi < vr;
        }
        for j in (slack_start..self.n_cols).chain(0..slack_start) {
            let vi = self.at(i, j) * wi;
            let vr = self.at(r, j) * wr;
            if vi != vr {
                return vi < vr;
            }
        }
        false
    }

    /// Runs the simplex on the current cost row with Dantzig pricing and the
    /// lexicographic ratio rule. `allow` filters enterable columns. Returns
    /// false when an unbounded ray is detected.
    fn run(&mut self, allow: &dyn Fn(usize) -> bool, slack_start: usize) -> Result<bool, LpError> {
        let max_iters = 50_000 + 40 * (self.m + self.n_cols);
        for iter in 0..max_iters {
            self.iterations = iter + 1;
            let mut entering = None;
            let mut best_cost = -COST_TOL;
            for j in 0..self.n_cols {
                if allow(j) && self.cost[j] < best_cost {
                    best_cost = self.cost[j];
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };

            let mut row: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let replace = match row {
                    None => true,
                    Some(r) => {
                        if ratio < best_ratio - 1e-9 * (1.0 + best_ratio.abs()) {
                            true
                        } else if ratio <= best_ratio + 1e-9 * (1.0 + best_ratio.abs()) {
                            self.lex_less(i, a, r, self.at(r, col), slack_start)
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    best_ratio = best_ratio.min(ratio);
                    row = Some(i);
                }
            }
            let Some(row) = row else {
                return Ok(false);
            };

            self.pivot(row, col);
        }
        Err(LpError::Degenerate(
            "iteration limit reached; basis cycling suspected".into(),
        ))
    }
}

/// Solves the LP. Deterministic for identical input.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    if lp.lower_bounds.len() != n || lp.upper_bounds.len() != n {
        return Err(LpError::BadInput("bounds length mismatch".into()));
    }
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(LpError::BadInput(format!(
                "constraint width {} differs from objective width {n}",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::BadInput("non-finite constraint".into()));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::BadInput("non-finite objective".into()));
    }

    // Map variables to shifted/split nonnegative columns.
    let mut var_map = Vec::with_capacity(n);
    let mut n_struct = 0usize;
    for j in 0..n {
        let lb = lp.lower_bounds[j];
        if lb == f64::NEG_INFINITY {
            var_map.push(VarMap::Free { pos: n_struct, neg: n_struct + 1 });
            n_struct += 2;
        } else if lb.is_finite() {
            var_map.push(VarMap::Shifted { col: n_struct, lb });
            n_struct += 1;
        } else {
            return Err(LpError::BadInput(format!("bad lower bound for variable {j}")));
        }
    }

    // Internal rows: original constraints then upper-bound rows.
    struct Row {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    }
    let project = |coeffs: &[f64]| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; n_struct];
        let mut shift = 0.0;
        for j in 0..n {
            let v = coeffs[j];
            if v == 0.0 {
                continue;
            }
            match var_map[j] {
                VarMap::Shifted { col, lb } => {
                    row[col] += v;
                    shift += v * lb;
                }
                VarMap::Free { pos, neg } => {
                    row[pos] += v;
                    row[neg] -= v;
                }
            }
        }
        (row, shift)
    };

    let mut rows = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let (coeffs, shift) = project(&c.coeffs);
        rows.push(Row { coeffs, relation: c.relation, rhs: c.rhs - shift });
    }
    for j in 0..n {
        if let Some(ub) = lp.upper_bounds[j] {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            let (coeffs, shift) = project(&unit);
            rows.push(Row { coeffs, relation: Relation::Le, rhs: ub - shift });
        }
    }
    let m = rows.len();

    // Count slacks; decide negation so every slack-marked row carries +1.
    let mut n_slack = 0usize;
    for r in &rows {
        if r.relation != Relation::Eq {
            n_slack += 1;
        }
    }
    let n_cols_upper = n_struct + n_slack + m;
    let width = n_cols_upper + 1;
    let mut a = vec![0.0; m * width];
    let mut g = vec![1.0f64; m];
    let mut basis = vec![usize::MAX; m];
    let mut marker = vec![usize::MAX; m];
    let mut slack_at = n_struct;
    let mut artificial_at = n_struct + n_slack;
    let artificial_start = n_struct + n_slack;

    for (i, r) in rows.iter().enumerate() {
        let negate = r.rhs < 0.0 || (r.rhs == 0.0 && r.relation == Relation::Ge);
        g[i] = if negate { -1.0 } else { 1.0 };
        for (j, &v) in r.coeffs.iter().enumerate() {
            a[i * width + j] = g[i] * v;
        }
        a[i * width + n_cols_upper] = g[i] * r.rhs;
        let slack_sign = match r.relation {
            Relation::Le => Some(g[i]),
            Relation::Ge => Some(-g[i]),
            Relation::Eq => None,
        };
        if let Some(s) = slack_sign {
            a[i * width + slack_at] = s;
            if s > 0.0 {
                basis[i] = slack_at;
                marker[i] = slack_at;
            }
            slack_at += 1;
        }
        if basis[i] == usize::MAX {
            a[i * width + artificial_at] = 1.0;
            basis[i] = artificial_at;
            marker[i] = artificial_at;
            artificial_at += 1;
        }
    }
    let n_cols = artificial_at;

    // Trim to the actual number of columns used.
    let mut packed = vec![0.0; m * (n_cols + 1)];
    for i in 0..m {
        packed[i * (n_cols + 1)..i * (n_cols + 1) + n_cols]
            .copy_from_slice(&a[i * width..i * width + n_cols]);
        packed[i * (n_cols + 1) + n_cols] = a[i * width + n_cols_upper];
    }

    let mut t = Tableau {
        m,
        n_cols,
        a: packed,
        cost: vec![0.0; n_cols],
        obj: 0.0,
        basis,
        artificial_start,
        iterations: 0,
    };
    let stats = std::env::var_os("GHZW_LP_STATS").is_some();
    let t0 = std::time::Instant::now();
    // First slack column: comparisons in the lexicographic rule scan the
    // identity block before structural columns.
    let slack_start = n_struct;

    // Phase 1: minimize the sum of artificials.
    let any_artificial = n_cols > artificial_start;
    if any_artificial {
        for j in artificial_start..n_cols {
            t.cost[j] = 1.0;
        }
        // Price out the basic artificials.
        for i in 0..m {
            if t.basis[i] >= artificial_start {
                for j in 0..n_cols {
                    t.cost[j] -= t.at(i, j);
                }
                t.obj -= t.rhs(i);
            }
        }
        let bounded = t.run(&|_| true, slack_start)?;
        if stats {
            eprintln!(
                "lp-stats: m={m} n={n_cols} phase1_iters={} elapsed={:?}",
                t.iterations,
                t0.elapsed()
            );
        }
        if !bounded {
            return Err(LpError::Degenerate("phase 1 reported an unbounded ray".into()));
        }
        if -t.obj > PHASE1_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                primal: Vec::new(),
                duals: Vec::new(),
            });
        }
        // Drive leftover artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] < artificial_start {
                continue;
            }
            let col = (0..artificial_start).find(|&j| t.at(i, j).abs() > 1e-7);
            match col {
                Some(j) => t.pivot(i, j),
                None => {
                    // Redundant row: silence its structural entries.
                    let w = t.n_cols + 1;
                    for j in 0..artificial_start {
                        t.a[i * w + j] = 0.0;
                    }
                    t.a[i * w + t.n_cols] = 0.0;
                }
            }
        }
    }

    // Phase 2 with the real costs.
    let mut phase2_cost = vec![0.0; n_cols];
    let sense_sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut shift_const = 0.0;
    for j in 0..n {
        let c = sense_sign * lp.objective[j];
        match var_map[j] {
            VarMap::Shifted { col, lb } => {
                phase2_cost[col] = c;
                shift_const += c * lb;
            }
            VarMap::Free { pos, neg } => {
                phase2_cost[pos] = c;
                phase2_cost[neg] = -c;
            }
        }
    }
    t.cost = phase2_cost;
    t.obj = 0.0;
    for i in 0..m {
        let b = t.basis[i];
        let cb = t.cost[b];
        if cb != 0.0 {
            let w = t.n_cols + 1;
            for j in 0..n_cols {
                t.cost[j] -= cb * t.a[i * w + j];
            }
            t.obj -= cb * t.rhs(i);
            t.cost[b] = 0.0;
        }
    }
    let art_start = t.artificial_start;
    let bounded = t.run(&|j| j < art_start, slack_start)?;
    if stats {
        eprintln!(
            "lp-stats: m={m} n={n_cols} phase2_iters={} total_elapsed={:?}",
            t.iterations,
            t0.elapsed()
        );
    }
    if !bounded {
        let objective = match lp.sense {
            Sense::Minimize => f64::NEG_INFINITY,
            Sense::Maximize => f64::INFINITY,
        };
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective,
            primal: Vec::new(),
            duals: Vec::new(),
        });
    }

    // Recover the primal point.
    let mut u = vec![0.0; n_cols];
    for i in 0..m {
        u[t.basis[i]] = t.rhs(i);
    }
    let mut primal = vec![0.0; n];
    for j in 0..n {
        primal[j] = match var_map[j] {
            VarMap::Shifted { col, lb } => lb + u[col],
            VarMap::Free { pos, neg } => u[pos] - u[neg],
        };
    }

    // Duals from marker columns: each marker entered its row with +1 and has
    // zero phase-2 cost, so its final reduced cost is −ỹᵢ.
    let m_orig = lp.constraints.len();
    let mut duals = vec![0.0; m_orig];
    for i in 0..m_orig {
        let y_internal = -t.cost[marker[i]];
        duals[i] = sense_sign * g[i] * y_internal;
    }

    let internal_obj = -t.obj + shift_const;
    let objective = sense_sign * internal_obj;

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        duals,
    })
}

/// Recomputes feasibility and the duality gap of an optimal solution from the
/// original problem data. Upper bounds are not supported here.
pub fn verify_solution(lp: &LinearProgram, sol: &LpSolution) -> SolutionReport {
    assert!(sol.status == LpStatus::Optimal, "verify_solution needs an optimal solution");
    assert!(
        lp.upper_bounds.iter().all(|u| u.is_none()),
        "verify_solution does not fold upper-bound duals"
    );
    let n = lp.objective.len();
    let sense_sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut primal_infeas = 0.0f64;
    for c in &lp.constraints {
        let lhs: f64 = c.coeffs.iter().zip(&sol.primal).map(|(a, x)| a * x).sum();
        let viol = match c.relation {
            Relation::Le => (lhs - c.rhs).max(0.0),
            Relation::Ge => (c.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        primal_infeas = primal_infeas.max(viol);
    }
    for j in 0..n {
        let lb = lp.lower_bounds[j];
        if lb.is_finite() {
            primal_infeas = primal_infeas.max(lb - sol.primal[j]);
        }
    }

    // Canonicalize to minimization.
    let y: Vec<f64> = sol.duals.iter().map(|v| sense_sign * v).collect();
    let mut dual_infeas = 0.0f64;
    let mut dual_obj = 0.0f64;
    for (i, c) in lp.constraints.iter().enumerate() {
        dual_obj += y[i] * c.rhs;
        let sign_viol = match c.relation {
            Relation::Ge => (-y[i]).max(0.0),
            Relation::Le => y[i].max(0.0),
            Relation::Eq => 0.0,
        };
        dual_infeas = dual_infeas.max(sign_viol);
    }
    for j in 0..n {
        let mut rc = sense_sign * lp.objective[j];
        for (i, c) in lp.constraints.iter().enumerate() {
            rc -= y[i] * c.coeffs[j];
        }
        if lp.lower_bounds[j] == f64::NEG_INFINITY {
            dual_infeas = dual_infeas.max(rc.abs());
        } else {
            dual_infeas = dual_infeas.max(-rc);
            dual_obj += rc * lp.lower_bounds[j];
        }
    }

    let duality_gap = (sense_sign * sol.objective - dual_obj).abs();
    SolutionReport {
        primal_infeasibility: primal_infeas,
        dual_infeasibility: dual_infeas,
        duality_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        sense: Sense,
        obj: &[f64],
        rows: &[(&[f64], Relation, f64)],
    ) -> LinearProgram {
        LinearProgram::new(
            sense,
            obj.to_vec(),
            rows.iter()
                .map(|(c, r, b)| Constraint { coeffs: c.to_vec(), relation: *r, rhs: *b })
                .collect(),
        )
    }

    #[test]
    fn maximize_single_variable() {
        let p = lp(Sense::Maximize, &[1.0], &[(&[1.0], Relation::Le, 1.0)]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.primal[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let p = lp(
            Sense::Maximize,
            &[1.0],
            &[(&[1.0], Relation::Ge, 2.0), (&[1.0], Relation::Le, 1.0)],
        );
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let p = lp(Sense::Maximize, &[1.0], &[(&[-1.0], Relation::Le, 1.0)]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_primal_dual_pair() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6),
        // duals (0, 3/2, 1).
        let p = lp(
            Sense::Maximize,
            &[3.0, 5.0],
            &[
                (&[1.0, 0.0], Relation::Le, 4.0),
                (&[0.0, 2.0], Relation::Le, 12.0),
                (&[3.0, 2.0], Relation::Le, 18.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 36.0).abs() < 1e-10);
        assert!((s.primal[0] - 2.0).abs() < 1e-10);
        assert!((s.primal[1] - 6.0).abs() < 1e-10);
        assert!((s.duals[0]).abs() < 1e-10);
        assert!((s.duals[1] - 1.5).abs() < 1e-10);
        assert!((s.duals[2] - 1.0).abs() < 1e-10);
        let report = verify_solution(&p, &s);
        assert!(report.primal_infeasibility < 1e-8);
        assert!(report.dual_infeasibility < 1e-8);
        assert!(report.duality_gap < 1e-7);
    }

    #[test]
    fn equality_constraints_and_min() {
        // min x + y s.t. x + 2y = 4, x − y ≥ −1 → optimum at x=2/3, y=5/3.
        let p = lp(
            Sense::Minimize,
            &[1.0, 1.0],
            &[
                (&[1.0, 2.0], Relation::Eq, 4.0),
                (&[1.0, -1.0], Relation::Ge, -1.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - (2.0 / 3.0 + 5.0 / 3.0)).abs() < 1e-10, "{}", s.objective);
        let report = verify_solution(&p, &s);
        assert!(report.duality_gap < 1e-7);
    }

    #[test]
    fn free_variables() {
        // min x with x free, x ≥ -5 as a row.
        let p = lp(Sense::Minimize, &[1.0], &[(&[1.0], Relation::Ge, -5.0)]).free_variable(0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 5.0).abs() < 1e-10);
    }

    #[test]
    fn shifted_lower_bounds() {
        let mut p = lp(Sense::Minimize, &[1.0, 1.0], &[(&[1.0, 1.0], Relation::Ge, 1.0)]);
        p.lower_bounds = vec![-2.0, 3.0];
        let s = solve_lp(&p).unwrap();
        // y ≥ 3 already satisfies the row; x falls to its bound −2.
        assert!((s.objective - 1.0).abs() < 1e-10);
        assert!((s.primal[0] + 2.0).abs() < 1e-10);
        assert!((s.primal[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn upper_bounds_as_rows() {
        let mut p = lp(Sense::Maximize, &[1.0, 1.0], &[(&[1.0, 1.0], Relation::Le, 10.0)]);
        p.upper_bounds = vec![Some(2.0), Some(3.0)];
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 5.0).abs() < 1e-10);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        // The same plane twice plus its double.
        let p = lp(
            Sense::Minimize,
            &[1.0, 2.0],
            &[
                (&[1.0, 1.0], Relation::Eq, 2.0),
                (&[1.0, 1.0], Relation::Eq, 2.0),
                (&[2.0, 2.0], Relation::Eq, 4.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_repeat_solves() {
        let p = lp(
            Sense::Maximize,
            &[1.0, 2.0, 3.0, 1.0],
            &[
                (&[1.0, 1.0, 1.0, 1.0], Relation::Le, 10.0),
                (&[1.0, 2.0, 0.0, 1.0], Relation::Le, 8.0),
                (&[0.0, 1.0, 4.0, 1.0], Relation::Le, 12.0),
            ],
        );
        let s1 = solve_lp(&p).unwrap();
        let s2 = solve_lp(&p).unwrap();
        assert_eq!(s1.primal, s2.primal);
        assert_eq!(s1.duals, s2.duals);
    }
}
