//! Self-contained linear programming plus brute-force polytope oracles:
//! local-deterministic vertex enumeration, nonsignalling extremization, and
//! the vertex-form visibility LP.

mod simplex;
mod text;
mod vertices;

pub use simplex::{
    solve_lp, verify_solution, Constraint, LinearProgram, LpError, LpSolution, LpStatus, Relation,
    Sense, SolutionReport,
};
pub use text::{dump_lp, parse_lp};
pub use vertices::local_deterministic_vertices;

use crate::qsim::Behavior;
use crate::witness::{Witness, WitnessError};

/// Expands a witness into one coefficient per behavior-table event, the dense
/// linear functional used by the nonsignalling LP. Unreferenced parties are
/// pinned to their first setting, mirroring correlator evaluation.
pub(crate) fn witness_event_coefficients(w: &Witness) -> Result<Vec<f64>, WitnessError> {
    let inputs = w.inputs_per_party();
    let n = inputs.len();
    let n_settings: usize = inputs.iter().product();
    let n_outcomes = 1usize << n;
    let mut coeffs = vec![0.0f64; n_settings * n_outcomes];
    for t in w.terms() {
        if t.condition().is_some() {
            return Err(WitnessError::UnsupportedConditional);
        }
        let mut setting = vec![0usize; n];
        for r in t.participants() {
            setting[r.party] = r.setting;
        }
        let mut s_idx = 0;
        for (p, &x) in setting.iter().enumerate() {
            s_idx = s_idx * inputs[p] + x;
        }
        for a in 0..n_outcomes {
            let mut sign = 1.0;
            for r in t.participants() {
                let bit = (a >> (n - 1 - r.party)) & 1;
                if (bit == 1) != r.flip {
                    sign = -sign;
                }
            }
            coeffs[s_idx * n_outcomes + a] += t.coefficient() * sign;
        }
    }
    Ok(coeffs)
}

/// Nonsignalling equality rows over behavior-table variables: for each party,
/// the marginal over its outcome must not depend on its input. Returns sparse
/// rows as `(column, coefficient)` lists.
pub(crate) fn nonsignalling_rows(inputs: &[usize]) -> Vec<Vec<(usize, f64)>> {
    let n = inputs.len();
    let n_settings: usize = inputs.iter().product();
    let n_outcomes = 1usize << n;
    let mut rows = Vec::new();
    let mut setting = vec![0usize; n];
    for p in 0..n {
        if inputs[p] < 2 {
            continue;
        }
        for s in 0..n_settings {
            // Decode and keep only base settings (party p at input 0).
            let mut rem = s;
            for q in (0..n).rev() {
                setting[q] = rem % inputs[q];
                rem /= inputs[q];
            }
            if setting[p] != 0 {
                continue;
            }
            for alt in 1..inputs[p] {
                let mut alt_setting = setting.clone();
                alt_setting[p] = alt;
                let mut s_alt = 0;
                for (q, &x) in alt_setting.iter().enumerate() {
                    s_alt = s_alt * inputs[q] + x;
                }
                for rest in 0..(n_outcomes >> 1) {
                    let mut row = Vec::with_capacity(4);
                    for bit in 0..2 {
                        let a = insert_bit(rest, n - 1 - p, bit);
                        row.push((s * n_outcomes + a, 1.0));
                        row.push((s_alt * n_outcomes + a, -1.0));
                    }
                    rows.push(row);
                }
            }
        }
    }
    rows
}

fn insert_bit(packed: usize, pos: usize, bit: usize) -> usize {
    let low_mask = (1usize << pos) - 1;
    (((packed >> pos) << (pos + 1)) | (bit << pos)) | (packed & low_mask)
}

/// Exact LP extremum of `w` over the nonsignalling polytope of its scenario.
pub fn extremize_over_nonsignalling(w: &Witness, sense: Sense) -> Result<f64, LpError> {
    let coeffs = witness_event_coefficients(w)
        .map_err(|e| LpError::BadInput(format!("witness expansion: {e}")))?;
    let inputs = w.inputs_per_party();
    let n_settings: usize = inputs.iter().product();
    let n_outcomes = 1usize << inputs.len();
    let n_vars = n_settings * n_outcomes;

    let mut constraints = Vec::new();
    for s in 0..n_settings {
        let mut row = vec![0.0; n_vars];
        for a in 0..n_outcomes {
            row[s * n_outcomes + a] = 1.0;
        }
        constraints.push(Constraint { coeffs: row, relation: Relation::Eq, rhs: 1.0 });
    }
    for sparse in nonsignalling_rows(inputs) {
        let mut row = vec![0.0; n_vars];
        for (col, v) in sparse {
            row[col] += v;
        }
        constraints.push(Constraint { coeffs: row, relation: Relation::Eq, rhs: 0.0 });
    }

    let lp = LinearProgram::new(sense, coeffs, constraints);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        other => Err(LpError::BadInput(format!(
            "nonsignalling extremization ended {other:?}"
        ))),
    }
}

/// The nonsignalling behavior attaining the extremum, alongside its value.
pub fn extremal_nonsignalling_behavior(
    w: &Witness,
    sense: Sense,
) -> Result<(f64, Behavior), LpError> {
    let coeffs = witness_event_coefficients(w)
        .map_err(|e| LpError::BadInput(format!("witness expansion: {e}")))?;
    let inputs = w.inputs_per_party();
    let n_settings: usize = inputs.iter().product();
    let n_outcomes = 1usize << inputs.len();
    let n_vars = n_settings * n_outcomes;

    let mut constraints = Vec::new();
    for s in 0..n_settings {
        let mut row = vec![0.0; n_vars];
        for a in 0..n_outcomes {
            row[s * n_outcomes + a] = 1.0;
        }
        constraints.push(Constraint { coeffs: row, relation: Relation::Eq, rhs: 1.0 });
    }
    for sparse in nonsignalling_rows(inputs) {
        let mut row = vec![0.0; n_vars];
        for (col, v) in sparse {
            row[col] += v;
        }
        constraints.push(Constraint { coeffs: row, relation: Relation::Eq, rhs: 0.0 });
    }
    let lp = LinearProgram::new(sense, coeffs, constraints);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::BadInput(format!("extremization ended {:?}", sol.status)));
    }
    let table: Vec<f64> = sol.primal.iter().map(|&v| v.max(0.0)).collect();
    let behavior = Behavior::new(inputs.to_vec(), table)
        .map_err(|e| LpError::BadInput(format!("LP point is not a behavior: {e}")))?;
    Ok((sol.objective, behavior))
}

/// Largest `v` such that `v·target + (1−v)·noise` lies in the convex hull of
/// `vertices` for some normalized noise behavior, via the reciprocal trick:
/// `v⋆ = 1/τ` with `τ = min Σᵢ xᵢ` s.t. `Σᵢ xᵢ·Vᵢ ≥ target`, `x ≥ 0`.
pub fn polytope_visibility(target: &Behavior, vertices: &[Behavior]) -> Result<f64, LpError> {
    if vertices.is_empty() {
        return Err(LpError::BadInput("no vertices supplied".into()));
    }
    for v in vertices {
        if v.inputs() != target.inputs() {
            return Err(LpError::BadInput("vertex signature mismatch".into()));
        }
    }
    let n_events = target.table().len();
    let n_v = vertices.len();
    let mut constraints = Vec::with_capacity(n_events);
    for e in 0..n_events {
        let coeffs: Vec<f64> = vertices.iter().map(|v| v.table()[e]).collect();
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: target.table()[e],
        });
    }
    let lp = LinearProgram::new(Sense::Minimize, vec![1.0; n_v], constraints);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((1.0 / sol.objective).min(1.0)),
        other => Err(LpError::BadInput(format!("visibility LP ended {other:?}"))),
    }
}
