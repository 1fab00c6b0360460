use super::system::{InflationConstraintSystem, SparseRow};
use super::InflationError;
use crate::polytope::{solve_lp, Constraint, LinearProgram, LpStatus, Relation, Sense};
use crate::qsim::Behavior;

enum M1Mode {
    AtLeast,
    AtMost,
}

struct ReducedSolve {
    feasible: bool,
    /// Objective in unshifted coordinates (the block-0 mass `z_∅`).
    objective: f64,
    /// Unshifted reduced solution.
    z: Vec<f64>,
    /// Duals per positivity row (zero for rows never activated).
    duals_pos: Vec<f64>,
    /// Duals per observed-event row.
    duals_m1: Vec<f64>,
    /// Dual of the implied mass-bound seed row; as an event functional the
    /// seed equals the sum of the setting-0 rows of `M1`, so certificates
    /// fold it into `y₁` there.
    dual_seed: f64,
}

/// Solves the reduced LP with two structural accelerations, both exact:
///
/// * coordinates are shifted by a known-feasible interior point — the product
///   distribution when the graph structure admits one (then the shifted
///   origin already attains the optimum mass 1 for feasible behaviors), the
///   white-noise point otherwise. The unshifted origin is the apex of the
///   positivity cone, where thousands of simultaneously active rows stall the
///   simplex on degenerate pivots;
/// * positivity rows enter by generation: solve with the active subset, lift,
///   add violated rows, repeat. A relaxation that is infeasible settles
///   infeasibility, and at convergence the omitted rows carry dual zero.
fn solve_reduced(
    cs: &InflationConstraintSystem,
    rhs: &[f64],
    mode: M1Mode,
    sense: Sense,
    with_objective: bool,
) -> Result<ReducedSolve, InflationError> {
    let n_z = cs.n_z;
    let n_pos = cs.positivity_z.len();
    let shift: Vec<f64> = cs.product_shift(rhs).unwrap_or_else(|| {
        let mut w = vec![0.0; n_z];
        w[cs.c_z] = 1.0;
        w
    });
    let white_value = |row: &SparseRow| -> f64 { row.dot(&shift) };
    let relation = match mode {
        M1Mode::AtLeast => Relation::Ge,
        M1Mode::AtMost => Relation::Le,
    };

    // In ≥ mode, zero-probability observed rows are implied by positivity of
    // the fibers and only add degeneracy; drop them. Summing all M1 rows of
    // one setting shows the full system implies z_∅ = 1, so the mass-bound
    // seed row below keeps the relaxation bounded without them.
    let keep_m1: Vec<usize> = (0..cs.m1_z.len())
        .filter(|&e| !matches!(mode, M1Mode::AtLeast) || rhs[e] > 1e-15)
        .collect();
    let mass_seed = match mode {
        M1Mode::AtLeast => (Relation::Ge, 1.0),
        M1Mode::AtMost => (Relation::Le, 1.0),
    };

    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; n_pos];
    let max_rounds = 200;
    for _round in 0..max_rounds {
        let mut constraints = Vec::with_capacity(active.len() + keep_m1.len() + 1);
        {
            let (rel, bound) = mass_seed;
            let mut coeffs = vec![0.0; n_z];
            coeffs[cs.c_z] = 1.0;
            constraints.push(Constraint { coeffs, relation: rel, rhs: bound - shift[cs.c_z] });
        }
        for &i in &active {
            let row = &cs.positivity_z[i];
            constraints.push(Constraint {
                coeffs: row.to_dense(n_z),
                relation: Relation::Ge,
                rhs: -white_value(row),
            });
        }
        for &e in &keep_m1 {
            let row = &cs.m1_z[e];
            constraints.push(Constraint {
                coeffs: row.to_dense(n_z),
                relation,
                rhs: rhs[e] - white_value(row),
            });
        }
        let mut objective = vec![0.0; n_z];
        if with_objective {
            objective[cs.c_z] = 1.0;
        }
        let mut lp = LinearProgram::new(sense, objective, constraints);
        lp.lower_bounds = vec![f64::NEG_INFINITY; n_z];

        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Infeasible => {
                // A relaxation is already infeasible, so the full LP is too.
                return Ok(ReducedSolve {
                    feasible: false,
                    objective: f64::NAN,
                    z: Vec::new(),
                    duals_pos: Vec::new(),
                    duals_m1: Vec::new(),
                    dual_seed: 0.0,
                });
            }
            LpStatus::Unbounded => {
                return Err(InflationError::SolveFailed(
                    "reduced LP reported unbounded".into(),
                ));
            }
            LpStatus::Optimal => {}
        }

        // Collect violated positivity rows.
        let mut violated: Vec<(f64, usize)> = Vec::new();
        for (i, row) in cs.positivity_z.iter().enumerate() {
            if in_active[i] {
                continue;
            }
            let v = row.dot(&sol.primal) + white_value(row);
            if v < -1e-9 {
                violated.push((v, i));
            }
        }
        if violated.is_empty() {
            let seed_slots = 1usize;
            let mut duals_pos = vec![0.0; n_pos];
            for (slot, &i) in active.iter().enumerate() {
                duals_pos[i] = sol.duals[seed_slots + slot];
            }
            let mut duals_m1 = vec![0.0; cs.m1_z.len()];
            for (slot, &e) in keep_m1.iter().enumerate() {
                duals_m1[e] = sol.duals[seed_slots + active.len() + slot];
            }
            let dual_seed = sol.duals[0];
            let mut z = sol.primal;
            for (zi, si) in z.iter_mut().zip(&shift) {
                *zi += si;
            }
            return Ok(ReducedSolve {
                feasible: true,
                objective: shift[cs.c_z] + sol.objective,
                z,
                duals_pos,
                duals_m1,
                dual_seed,
            });
        }
        violated.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, i) in violated.iter().take(64) {
            in_active[i] = true;
            active.push(i);
        }
    }
    Err(InflationError::SolveFailed(
        "positivity row generation did not converge".into(),
    ))
}

/// Is `p` explainable by the inflation relaxation: does a nonnegative
/// inflation-event vector exist with `M1·x = p` and `M2·x = 0`?
pub fn lp_sat_feasible(
    cs: &InflationConstraintSystem,
    p: &Behavior,
) -> Result<bool, InflationError> {
    Ok(lp_sat_solution(cs, p)?.is_some())
}

/// Like [`lp_sat_feasible`], returning the witnessing event-space vector.
///
/// Solved through `LP_opt`: the optimum mass `τ` is 1 exactly when `M1·x = p`
/// is attainable, because `M1·x ≥ p` with both sides summing to the same
/// per-setting totals forces equality.
pub fn lp_sat_solution(
    cs: &InflationConstraintSystem,
    p: &Behavior,
) -> Result<Option<Vec<f64>>, InflationError> {
    cs.check_behavior(p)?;
    let sol = solve_reduced(cs, p.table(), M1Mode::AtLeast, Sense::Minimize, true)?;
    if sol.feasible && sol.objective <= 1.0 + 1e-8 {
        Ok(Some(cs.lift(&sol.z)))
    } else {
        Ok(None)
    }
}

/// Visibility against general noise: `v⋆ = 1/τ` with
/// `τ = min c·x` s.t. `x ≥ 0`, `M1·x ≥ p`, `M2·x = 0`.
pub fn visibility_general(
    cs: &InflationConstraintSystem,
    p: &Behavior,
) -> Result<f64, InflationError> {
    cs.check_behavior(p)?;
    let sol = solve_reduced(cs, p.table(), M1Mode::AtLeast, Sense::Minimize, true)?;
    if !sol.feasible {
        return Err(InflationError::SolveFailed("visibility LP infeasible".into()));
    }
    Ok(1.0 / sol.objective)
}

/// Lower bound on the genuine LOSR multipartite fraction:
/// `1 − max c·x` s.t. `x ≥ 0`, `M1·x ≤ p`, `M2·x = 0`.
pub fn gmf_lower_bound(
    cs: &InflationConstraintSystem,
    p: &Behavior,
) -> Result<f64, InflationError> {
    cs.check_behavior(p)?;
    let sol = solve_reduced(cs, p.table(), M1Mode::AtMost, Sense::Maximize, true)?;
    if !sol.feasible {
        return Err(InflationError::SolveFailed("GMF LP infeasible".into()));
    }
    Ok((1.0 - sol.objective).clamp(0.0, 1.0))
}

/// A dual certificate for `LP_opt`: nonnegative multipliers with
/// `M1ᵀ·y₁ + M2ᵀ·y₂ ≤ c` whose value `y₁·p` equals `τ`; values above 1
/// certify that `p` lies outside the relaxation, and `y₁` reads directly as a
/// probability-form witness with bound 1.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// One multiplier per observed event, the dual of `M1·x ≥ p`.
    pub y1: Vec<f64>,
    /// Multipliers over the ±-paired `M2` rows (first every base row, then
    /// every negated base row).
    pub y2: Vec<f64>,
    /// `y₁·p`, equal to `τ = 1/v⋆` at optimality.
    pub value: f64,
}

pub fn dual_certificate(
    cs: &InflationConstraintSystem,
    p: &Behavior,
) -> Result<DualCertificate, InflationError> {
    cs.check_behavior(p)?;
    let sol = solve_reduced(cs, p.table(), M1Mode::AtLeast, Sense::Minimize, true)?;
    if !sol.feasible {
        return Err(InflationError::SolveFailed("certificate LP infeasible".into()));
    }

    let w_orbit = &sol.duals_pos;
    let n_a = 1usize << cs.scenario.n_parties();
    let mut y1: Vec<f64> = sol
        .duals_m1
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    // Fold the mass-seed dual into the setting-0 block of M1.
    if sol.dual_seed > 0.0 {
        for slot in y1.iter_mut().take(n_a) {
            *slot += sol.dual_seed;
        }
    }

    // Event-space positivity multipliers: orbit duals, undoing the 2^K row
    // scaling of the reduced positivity rows.
    let mut w_full = vec![0.0; cs.n_cols];
    let mut orbit_row = 0usize;
    for block in &cs.blocks {
        for v in 0..block.n_cols {
            let w = w_orbit[orbit_row + block.orbit_of_col[v] as usize];
            w_full[block.col_offset + v] =
                (if w > 0.0 { w } else { 0.0 }) * block.n_events as f64;
        }
        orbit_row += block.orbit_reps.len();
    }

    // Residual r = c − M1ᵀy1 − w, which lies in the row space of M2.
    let mut r = vec![0.0; cs.n_cols];
    for &(j, v) in &cs.c.0 {
        r[j] += v;
    }
    for (row, &y) in cs.m1.iter().zip(&y1) {
        if y != 0.0 {
            for &(j, v) in &row.0 {
                r[j] -= y * v;
            }
        }
    }
    for (j, w) in w_full.iter().enumerate() {
        r[j] -= w;
    }

    // Decompose r over the base M2 rows (least squares via CGNR), then split
    // signed multipliers across the ± row pairs.
    let mu = cgnr(&cs.m2_base, &r, cs.n_cols)?;
    let half = cs.m2_base.len();
    let mut y2 = vec![0.0; 2 * half];
    for (i, &m) in mu.iter().enumerate() {
        if m > 0.0 {
            y2[i] = m;
        } else {
            y2[i + half] = -m;
        }
    }

    let value = y1.iter().zip(p.table()).map(|(y, q)| y * q).sum();
    Ok(DualCertificate { y1, y2, value })
}

/// Conjugate gradient on the normal equations for `M2ᵀ·μ = r`, with rows
/// normalized for conditioning. The system is consistent up to solver noise,
/// so the residual floor sits well below the certificate tolerance.
fn cgnr(
    rows: &[(super::system::M2Kind, SparseRow)],
    r: &[f64],
    n_cols: usize,
) -> Result<Vec<f64>, InflationError> {
    let m = rows.len();
    let norms: Vec<f64> = rows
        .iter()
        .map(|(_, row)| row.0.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt().max(1e-12))
        .collect();

    let apply_bt = |s: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.resize(m, 0.0);
        for (i, (_, row)) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in &row.0 {
                acc += v * s[j];
            }
            out[i] = acc / norms[i];
        }
    };
    let apply_b = |mu: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.resize(n_cols, 0.0);
        for (i, (_, row)) in rows.iter().enumerate() {
            let scaled = mu[i] / norms[i];
            if scaled != 0.0 {
                for &(j, v) in &row.0 {
                    out[j] += v * scaled;
                }
            }
        }
    };

    let mut mu = vec![0.0; m];
    let mut bx = vec![0.0; n_cols];
    let mut resid: Vec<f64> = r.to_vec();
    let mut g = Vec::new();
    apply_bt(&resid, &mut g);
    let mut d = g.clone();
    let mut g_sq: f64 = g.iter().map(|v| v * v).sum();

    let target = 1e-22; // squared gradient tolerance
    let max_iters = 20_000.min(10 * m + 1000);
    let mut tmp = Vec::new();
    for _ in 0..max_iters {
        if g_sq < target {
            break;
        }
        apply_b(&d, &mut tmp);
        let dtd: f64 = tmp.iter().map(|v| v * v).sum();
        if dtd <= 0.0 {
            break;
        }
        let alpha = g_sq / dtd;
        for i in 0..m {
            mu[i] += alpha * d[i];
        }
        for j in 0..n_cols {
            resid[j] -= alpha * tmp[j];
        }
        apply_bt(&resid, &mut g);
        let g_sq_new: f64 = g.iter().map(|v| v * v).sum();
        let beta = g_sq_new / g_sq;
        for i in 0..m {
            d[i] = g[i] + beta * d[i];
        }
        g_sq = g_sq_new;
    }

    apply_b(&mu, &mut bx);
    let worst = resid
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    if worst > 1e-7 {
        return Err(InflationError::SolveFailed(format!(
            "certificate lifting residual {worst:.3e} too large"
        )));
    }
    Ok(mu.iter().zip(&norms).map(|(m, n)| m / n).collect())
}

/// Independent arithmetic re-check of a certificate against the stored
/// matrices: nonnegativity of both multiplier vectors, columnwise dual
/// feasibility `M1ᵀy₁ + M2ᵀy₂ ≤ c`, and the certified value `y₁·p`.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub y1_min: f64,
    pub y1_min_index: usize,
    pub y2_min: f64,
    pub y2_min_index: usize,
    pub max_column_excess: f64,
    pub worst_column: usize,
    pub value: f64,
    pub passed: bool,
}

pub fn verify_certificate(
    cs: &InflationConstraintSystem,
    cert: &DualCertificate,
    p: &Behavior,
) -> Result<VerificationReport, InflationError> {
    cs.check_behavior(p)?;
    if cert.y1.len() != cs.m1_rows().len() || cert.y2.len() != cs.n_m2_rows() {
        return Err(InflationError::ScenarioMismatch(
            "certificate length does not match the constraint system".into(),
        ));
    }

    let (y1_min_index, y1_min) = cert
        .y1
        .iter()
        .cloned()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let (y2_min_index, y2_min) = cert
        .y2
        .iter()
        .cloned()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));

    let mut lhs = vec![0.0; cs.n_cols];
    for (row, &y) in cs.m1_rows().iter().zip(&cert.y1) {
        if y != 0.0 {
            for &(j, v) in &row.0 {
                lhs[j] += y * v;
            }
        }
    }
    let half = cs.m2_base_rows().len();
    for (i, (_, row)) in cs.m2_base_rows().iter().enumerate() {
        let net = cert.y2[i] - cert.y2[i + half];
        if net != 0.0 {
            for &(j, v) in &row.0 {
                lhs[j] += net * v;
            }
        }
    }
    for &(j, v) in &cs.c_row().0 {
        lhs[j] -= v;
    }
    let (worst_column, max_column_excess) = lhs
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));

    let value = cert.y1.iter().zip(p.table()).map(|(y, q)| y * q).sum();
    let passed = y1_min >= -1e-10 && y2_min >= -1e-10 && max_column_excess <= 1e-8;
    Ok(VerificationReport {
        y1_min,
        y1_min_index,
        y2_min,
        y2_min_index,
        max_column_excess,
        worst_column,
        value,
        passed,
    })
}

/// Residuals of a lifted event-space vector against the stored constraints,
/// used by tests and the certify pipeline report.
pub fn feasibility_residuals(
    cs: &InflationConstraintSystem,
    x: &[f64],
    p: &Behavior,
) -> (f64, f64, f64) {
    let m1_resid = cs
        .m1_rows()
        .iter()
        .zip(p.table())
        .map(|(row, &b)| (row.dot(x) - b).abs())
        .fold(0.0f64, f64::max);
    let m2_resid = cs
        .m2_base_rows()
        .iter()
        .map(|(_, row)| row.dot(x).abs())
        .fold(0.0f64, f64::max);
    let x_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    (m1_resid, m2_resid, x_min)
}
