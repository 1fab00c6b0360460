//! Plain-text dump/restore of linear programs for debugging. Floats render
//! through Rust's shortest-roundtrip formatter, so a dump parses back to
//! bit-identical values.

use super::simplex::{Constraint, LinearProgram, LpError, Relation, Sense};

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> Result<f64, LpError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|e| LpError::BadInput(format!("bad number {s:?}: {e}"))),
    }
}

pub fn dump_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Minimize => "sense min\n",
        Sense::Maximize => "sense max\n",
    });
    out.push_str("objective");
    for v in &lp.objective {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
    for c in &lp.constraints {
        out.push_str("row ");
        out.push_str(match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        });
        out.push(' ');
        out.push_str(&fmt_f64(c.rhs));
        out.push_str(" :");
        for v in &c.coeffs {
            out.push(' ');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out.push_str("lower");
    for v in &lp.lower_bounds {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
    out.push_str("upper");
    for v in &lp.upper_bounds {
        out.push(' ');
        out.push_str(&v.map_or("none".to_string(), fmt_f64));
    }
    out.push('\n');
    out
}

pub fn parse_lp(text: &str) -> Result<LinearProgram, LpError> {
    let mut sense = None;
    let mut objective: Option<Vec<f64>> = None;
    let mut constraints = Vec::new();
    let mut lower = None;
    let mut upper = None;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("sense ") {
            sense = Some(match rest.trim() {
                "min" => Sense::Minimize,
                "max" => Sense::Maximize,
                other => return Err(LpError::BadInput(format!("unknown sense {other:?}"))),
            });
        } else if let Some(rest) = line.strip_prefix("objective") {
            objective = Some(
                rest.split_whitespace()
                    .map(parse_f64)
                    .collect::<Result<_, _>>()?,
            );
        } else if let Some(rest) = line.strip_prefix("row ") {
            let (head, coeffs) = rest
                .split_once(':')
                .ok_or_else(|| LpError::BadInput("row without ':'".into()))?;
            let mut head_parts = head.split_whitespace();
            let relation = match head_parts.next() {
                Some("<=") => Relation::Le,
                Some("=") => Relation::Eq,
                Some(">=") => Relation::Ge,
                other => return Err(LpError::BadInput(format!("unknown relation {other:?}"))),
            };
            let rhs = parse_f64(
                head_parts
                    .next()
                    .ok_or_else(|| LpError::BadInput("row without rhs".into()))?,
            )?;
            let coeffs = coeffs
                .split_whitespace()
                .map(parse_f64)
                .collect::<Result<_, _>>()?;
            constraints.push(Constraint { coeffs, relation, rhs });
        } else if let Some(rest) = line.strip_prefix("lower") {
            lower = Some(
                rest.split_whitespace()
                    .map(parse_f64)
                    .collect::<Result<Vec<_>, _>>()?,
            );
        } else if let Some(rest) = line.strip_prefix("upper") {
            upper = Some(
                rest.split_whitespace()
                    .map(|s| {
                        if s == "none" {
                            Ok(None)
                        } else {
                            parse_f64(s).map(Some)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            );
        } else {
            return Err(LpError::BadInput(format!("unparsed line {line:?}")));
        }
    }

    let objective = objective.ok_or_else(|| LpError::BadInput("missing objective".into()))?;
    let n = objective.len();
    let mut lp = LinearProgram::new(
        sense.ok_or_else(|| LpError::BadInput("missing sense".into()))?,
        objective,
        constraints,
    );
    if let Some(l) = lower {
        if l.len() != n {
            return Err(LpError::BadInput("lower bounds width mismatch".into()));
        }
        lp.lower_bounds = l;
    }
    if let Some(u) = upper {
        if u.len() != n {
            return Err(LpError::BadInput("upper bounds width mismatch".into()));
        }
        lp.upper_bounds = u;
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let mut lp = LinearProgram::new(
            Sense::Maximize,
            vec![0.1 + 0.2, -3.5e-17, 1.0 / 3.0],
            vec![Constraint {
                coeffs: vec![std::f64::consts::PI, 0.0, -2.0f64.sqrt()],
                relation: Relation::Le,
                rhs: 1e-300,
            }],
        );
        lp.lower_bounds[1] = f64::NEG_INFINITY;
        lp.upper_bounds[2] = Some(0.7);
        let text = dump_lp(&lp);
        let back = parse_lp(&text).unwrap();
        assert_eq!(lp.objective, back.objective);
        assert_eq!(lp.constraints[0].coeffs, back.constraints[0].coeffs);
        assert_eq!(lp.constraints[0].rhs, back.constraints[0].rhs);
        assert_eq!(lp.lower_bounds, back.lower_bounds);
        assert_eq!(lp.upper_bounds, back.upper_bounds);
    }
}
