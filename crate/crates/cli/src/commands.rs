use anyhow::{bail, Context, Result};
use serde::Serialize;

use ghzw_core::expdata::{
    bundled_table1, eval_w3_from_data, eval_w4_from_data, monte_carlo_sigma, parse_dataset,
    stabilizer_fidelity,
};
use ghzw_core::inflation::{
    build_constraint_system_multi, dual_certificate, feasibility_residuals, lp_sat_solution,
    ring_inflation, verify_certificate, visibility_general, InflationGraph, Scenario,
};
use ghzw_core::polytope::{dump_lp, local_deterministic_vertices};
use ghzw_core::qsim::{behavior_from_state, noisy_ghz, Behavior};
use ghzw_core::witness::{evaluate, evaluate_terms, threshold_mixed_noise, ProbabilityFormWitness, WitnessError};

use crate::output::OutputContext;
use crate::witness_source::resolve;
use crate::{AnalyzeArgs, CertifyArgs, SimulateArgs, SweepArgs, VerticesArgs};

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        bail!("{name} = {v} must lie in [0, 1]");
    }
    Ok(())
}

fn noisy_behavior(
    n: usize,
    p: f64,
    k: f64,
    strategy: &ghzw_core::qsim::MeasurementStrategy,
) -> Result<Behavior> {
    let state = noisy_ghz(n, p, k)?;
    Ok(behavior_from_state(&state, strategy)?)
}

// --- simulate --------------------------------------------------------------

#[derive(Serialize)]
struct TermValue {
    index: usize,
    coefficient: f64,
    value: f64,
}

#[derive(Serialize)]
struct SimulatePayload {
    witness: String,
    n: usize,
    p: f64,
    k: f64,
    terms: Vec<TermValue>,
    total: f64,
    bound: f64,
    violated: bool,
}

pub fn simulate(args: &SimulateArgs, ctx: &OutputContext) -> Result<i32> {
    check_unit("p", args.p)?;
    check_unit("k", args.k)?;
    let resolved = resolve(&args.witness, args.n)?;
    let behavior = noisy_behavior(resolved.n, args.p, args.k, &resolved.strategy)?;
    let term_values = evaluate_terms(&resolved.witness, &behavior)?;
    let total: f64 = term_values.iter().sum();
    let payload = SimulatePayload {
        witness: resolved.witness.name().to_string(),
        n: resolved.n,
        p: args.p,
        k: args.k,
        terms: term_values
            .iter()
            .enumerate()
            .map(|(index, &value)| TermValue {
                index,
                coefficient: resolved.witness.terms()[index].coefficient(),
                value,
            })
            .collect(),
        total,
        bound: resolved.witness.bound(),
        violated: total > resolved.witness.bound(),
    };
    let violated = payload.violated;
    let report = ctx.envelope("simulate", &format!("{args:?}"), payload);
    ctx.emit(&report, || {
        let mut csv = String::from("term,coefficient,value\n");
        for t in &report.payload.terms {
            csv.push_str(&format!("{},{},{}\n", t.index, t.coefficient, t.value));
        }
        csv.push_str(&format!(
            "total,,{}\nbound,,{}\n",
            report.payload.total, report.payload.bound
        ));
        csv
    })?;
    Ok(if violated { 0 } else { 2 })
}

// --- sweep -----------------------------------------------------------------

#[derive(Serialize)]
struct SweepPoint {
    n: usize,
    k: f64,
    p: f64,
    value: f64,
    violated: bool,
}

#[derive(Serialize)]
struct SweepThreshold {
    n: usize,
    k: f64,
    p_star: Option<f64>,
    f_star: Option<f64>,
}

#[derive(Serialize)]
struct SweepPayload {
    witness: String,
    points: Vec<SweepPoint>,
    thresholds: Vec<SweepThreshold>,
}

fn parse_p_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--p-range wants start:end:steps, got {s:?}");
    }
    let start: f64 = parts[0].parse().context("p-range start")?;
    let end: f64 = parts[1].parse().context("p-range end")?;
    let steps: usize = parts[2].parse().context("p-range steps")?;
    if steps < 2 {
        bail!("--p-range needs at least 2 steps");
    }
    check_unit("p-range start", start)?;
    check_unit("p-range end", end)?;
    Ok((0..steps)
        .map(|i| start + (end - start) * i as f64 / (steps - 1) as f64)
        .collect())
}

pub fn sweep(args: &SweepArgs, ctx: &OutputContext) -> Result<i32> {
    use rayon::prelude::*;

    let resolved = resolve(&args.witness, args.n)?;
    let ps = parse_p_range(&args.p_range)?;
    if args.k.is_empty() {
        bail!("at least one --k value is required");
    }
    for &k in &args.k {
        check_unit("k", k)?;
    }

    let grid: Vec<(f64, f64)> = args
        .k
        .iter()
        .flat_map(|&k| ps.iter().map(move |&p| (k, p)))
        .collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&(k, p)| -> Result<SweepPoint> {
            let behavior = noisy_behavior(resolved.n, p, k, &resolved.strategy)?;
            let value = evaluate(&resolved.witness, &behavior)?;
            Ok(SweepPoint { n: resolved.n, k, p, value, violated: value > resolved.witness.bound() })
        })
        .collect::<Result<_>>()?;

    let thresholds: Vec<SweepThreshold> = args
        .k
        .iter()
        .map(|&k| -> Result<SweepThreshold> {
            match threshold_mixed_noise(&resolved.witness, &resolved.strategy, resolved.n, k) {
                Ok((p_star, f_star)) => Ok(SweepThreshold {
                    n: resolved.n,
                    k,
                    p_star: Some(p_star),
                    f_star: Some(f_star),
                }),
                Err(WitnessError::NoViolationAtUnitP { .. }) => {
                    Ok(SweepThreshold { n: resolved.n, k, p_star: None, f_star: None })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_>>()?;

    let any_violation = points.iter().any(|pt| pt.violated);
    let payload = SweepPayload {
        witness: resolved.witness.name().to_string(),
        points,
        thresholds,
    };
    let report = ctx.envelope("sweep", &format!("{args:?}"), payload);
    ctx.emit(&report, || {
        let mut csv = String::from("kind,n,k,p,value,violated,p_star,f_star\n");
        for pt in &report.payload.points {
            csv.push_str(&format!(
                "point,{},{},{},{},{},,\n",
                pt.n, pt.k, pt.p, pt.value, pt.violated
            ));
        }
        for t in &report.payload.thresholds {
            csv.push_str(&format!(
                "threshold,{},{},,,,{},{}\n",
                t.n,
                t.k,
                t.p_star.map_or(String::new(), |v| v.to_string()),
                t.f_star.map_or(String::new(), |v| v.to_string()),
            ));
        }
        csv
    })?;
    Ok(if any_violation { 0 } else { 2 })
}

// --- certify ----------------------------------------------------------------

#[derive(Serialize)]
struct CertifyPayload {
    witness: String,
    n: usize,
    p: f64,
    k: f64,
    inflation: String,
    columns: usize,
    feasible: bool,
    visibility: f64,
    lifted_residuals: Option<[f64; 3]>,
    certificate_value: f64,
    certificate_verified: bool,
    max_column_excess: f64,
    certificate: ProbabilityFormWitness,
}

fn load_graphs(source: &str, order: usize, scenario: &Scenario) -> Result<Vec<InflationGraph>> {
    if source == "ring" {
        return Ok(vec![ring_inflation(scenario, order)?]);
    }
    let text = std::fs::read_to_string(source)
        .with_context(|| format!("reading inflation graph file {source}"))?;
    // Either a single graph object or an array of graphs.
    if let Ok(graphs) = serde_json::from_str::<Vec<InflationGraph>>(&text) {
        if graphs.is_empty() {
            bail!("inflation file {source} holds an empty graph list");
        }
        return Ok(graphs);
    }
    Ok(vec![InflationGraph::from_json(&text)?])
}

pub fn certify(args: &CertifyArgs, ctx: &OutputContext) -> Result<i32> {
    check_unit("p", args.p)?;
    check_unit("k", args.k)?;
    let resolved = resolve(&args.witness, args.n)?;
    let scenario = Scenario::new(resolved.witness.inputs_per_party().to_vec())?;
    let graphs = load_graphs(&args.inflation, args.order, &scenario)?;
    let cs = build_constraint_system_multi(&graphs, &scenario)?;
    let behavior = noisy_behavior(resolved.n, args.p, args.k, &resolved.strategy)?;

    if let Some(path) = &args.dump_lp {
        let lp = cs.to_lp(&behavior, true)?;
        std::fs::write(path, dump_lp(&lp))
            .with_context(|| format!("writing LP dump to {}", path.display()))?;
    }

    let lifted = lp_sat_solution(&cs, &behavior)?;
    let feasible = lifted.is_some();
    let lifted_residuals = lifted.map(|x| {
        let (m1, m2, x_min) = feasibility_residuals(&cs, &x, &behavior);
        [m1, m2, x_min]
    });
    let visibility = visibility_general(&cs, &behavior)?;
    let cert = dual_certificate(&cs, &behavior)?;
    let verification = verify_certificate(&cs, &cert, &behavior)?;
    let gap = (cert.value * visibility - 1.0).abs();
    let verified = verification.passed
        && verification.max_column_excess <= ctx.tol_feas
        && gap <= ctx.tol_gap.max(1e-9) * 10.0;

    let prob_form = ProbabilityFormWitness {
        name: format!("{}-dual-certificate", resolved.witness.name()),
        inputs_per_party: resolved.witness.inputs_per_party().to_vec(),
        coefficients: cert.y1.clone(),
        bound: 1.0,
    };
    if let Some(path) = &args.cert_out {
        std::fs::write(path, serde_json::to_string_pretty(&prob_form)?)
            .with_context(|| format!("writing certificate to {}", path.display()))?;
    }

    let payload = CertifyPayload {
        witness: resolved.witness.name().to_string(),
        n: resolved.n,
        p: args.p,
        k: args.k,
        inflation: if args.inflation == "ring" {
            format!("ring-order-{}", args.order)
        } else {
            args.inflation.clone()
        },
        columns: cs.n_columns(),
        feasible,
        visibility,
        lifted_residuals,
        certificate_value: cert.value,
        certificate_verified: verified,
        max_column_excess: verification.max_column_excess,
        certificate: prob_form,
    };
    let report = ctx.envelope("certify", &format!("{args:?}"), payload);
    ctx.emit(&report, || {
        format!(
            "key,value\nfeasible,{}\nvisibility,{}\ncertificate_value,{}\ncertificate_verified,{}\nmax_column_excess,{}\n",
            report.payload.feasible,
            report.payload.visibility,
            report.payload.certificate_value,
            report.payload.certificate_verified,
            report.payload.max_column_excess,
        )
    })?;
    Ok(if feasible { 2 } else { 0 })
}

// --- analyze -----------------------------------------------------------------

#[derive(Serialize)]
struct WitnessBlock {
    value: f64,
    sigma: f64,
    resample_mean: f64,
    bound: f64,
    sigmas_above_bound: f64,
}

#[derive(Serialize)]
struct AnalyzePayload {
    dataset: String,
    records: usize,
    resamples: usize,
    w3: WitnessBlock,
    w4: WitnessBlock,
    stabilizer_witness: f64,
    fidelity_lower_bound: f64,
    hom_visibility: f64,
}

pub fn analyze(args: &AnalyzeArgs, ctx: &OutputContext) -> Result<i32> {
    let ds = match &args.dataset {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading dataset {}", path.display()))?;
            parse_dataset(&text, &path.display().to_string())?
        }
        None => bundled_table1(),
    };

    let w3 = eval_w3_from_data(&ds)?;
    let w4 = eval_w4_from_data(&ds)?;
    let (mean3, sigma3) = monte_carlo_sigma(&ds, eval_w3_from_data, args.resamples, ctx.seed)?;
    let (mean4, sigma4) = monte_carlo_sigma(&ds, eval_w4_from_data, args.resamples, ctx.seed ^ 1)?;
    let stab = stabilizer_fidelity(&ds)?;

    let payload = AnalyzePayload {
        dataset: ds.provenance().to_string(),
        records: ds.records().len(),
        resamples: args.resamples,
        w3: WitnessBlock {
            value: w3,
            sigma: sigma3,
            resample_mean: mean3,
            bound: 8.0,
            sigmas_above_bound: (w3 - 8.0) / sigma3,
        },
        w4: WitnessBlock {
            value: w4,
            sigma: sigma4,
            resample_mean: mean4,
            bound: 6.0,
            sigmas_above_bound: (w4 - 6.0) / sigma4,
        },
        stabilizer_witness: stab.witness_value,
        fidelity_lower_bound: stab.fidelity_lower_bound,
        hom_visibility: stab.hom_visibility,
    };
    let violated = payload.w3.value > 8.0 && payload.w4.value > 6.0;
    let report = ctx.envelope("analyze", &format!("{args:?} seed={}", ctx.seed), payload);
    ctx.emit(&report, || {
        let p = &report.payload;
        let mut csv = String::from("key,value\n");
        for (k, v) in [
            ("w3", p.w3.value),
            ("w3_sigma", p.w3.sigma),
            ("w3_sigmas_above_bound", p.w3.sigmas_above_bound),
            ("w4", p.w4.value),
            ("w4_sigma", p.w4.sigma),
            ("w4_sigmas_above_bound", p.w4.sigmas_above_bound),
            ("stabilizer_witness", p.stabilizer_witness),
            ("fidelity_lower_bound", p.fidelity_lower_bound),
            ("hom_visibility", p.hom_visibility),
        ] {
            csv.push_str(&format!("{k},{v}\n"));
        }
        csv
    })?;
    Ok(if violated { 0 } else { 2 })
}

// --- vertices ----------------------------------------------------------------

#[derive(Serialize)]
struct VertexRow {
    index: usize,
    /// Output bit per `(party, input)`, parties major.
    outputs: Vec<u8>,
}

#[derive(Serialize)]
struct VerticesPayload {
    inputs: Vec<usize>,
    count: usize,
    vertices: Vec<VertexRow>,
}

pub fn vertices(args: &VerticesArgs, ctx: &OutputContext) -> Result<i32> {
    let inputs: Vec<usize> = args
        .inputs
        .split(',')
        .map(|s| s.trim().parse::<usize>().context("parsing --inputs"))
        .collect::<Result<_>>()?;
    if inputs.is_empty() {
        bail!("--inputs must name at least one party");
    }
    let vertices = local_deterministic_vertices(&inputs)?;
    let rows: Vec<VertexRow> = vertices
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let mut outputs = Vec::new();
            for party in 0..inputs.len() {
                for input in 0..inputs[party] {
                    let mut setting = vec![0usize; inputs.len()];
                    setting[party] = input;
                    let s = v.setting_index(&setting);
                    // The deterministic outcome has probability 1; read the
                    // party's bit out of it.
                    let a = (0..v.n_outcomes())
                        .find(|&a| v.prob(s, a) > 0.5)
                        .expect("deterministic row");
                    outputs.push(((a >> (inputs.len() - 1 - party)) & 1) as u8);
                }
            }
            VertexRow { index, outputs }
        })
        .collect();

    let payload = VerticesPayload { inputs: inputs.clone(), count: rows.len(), vertices: rows };
    let report = ctx.envelope("vertices", &format!("{args:?}"), payload);
    ctx.emit(&report, || {
        let mut csv = String::from("index,outputs\n");
        for r in &report.payload.vertices {
            let bits: Vec<String> = r.outputs.iter().map(|b| b.to_string()).collect();
            csv.push_str(&format!("{},{}\n", r.index, bits.join("")));
        }
        csv
    })?;
    Ok(0)
}
