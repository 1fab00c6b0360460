//! Timing probe for the inflation LP path. Run with
//! `GHZW_LP_STATS=1 cargo run --release -p ghzw-core --example lp_probe`.

use ghzw_core::inflation::{
    build_constraint_system, lp_sat_feasible, ring_inflation, visibility_general, Scenario,
};
use ghzw_core::qsim::Behavior;
use std::time::Instant;

fn main() {
    let s = Scenario::new(vec![2, 2, 2]).unwrap();
    let g = ring_inflation(&s, 2).unwrap();
    let t0 = Instant::now();
    let cs = build_constraint_system(&g, &s).unwrap();
    println!("build: {:?} (cols {})", t0.elapsed(), cs.n_columns());

    let white = Behavior::white_noise(&[2, 2, 2]);
    let t1 = Instant::now();
    let feasible = lp_sat_feasible(&cs, &white).unwrap();
    println!("feasibility(white): {feasible} in {:?}", t1.elapsed());

    let t2 = Instant::now();
    let v = visibility_general(&cs, &white).unwrap();
    println!("visibility(white): {v} in {:?}", t2.elapsed());

    let ghz = ghzw_core::qsim::behavior_from_state(
        &ghzw_core::qsim::ghz_state(3, ghzw_core::qsim::GhzPhase::Plus)
            .unwrap()
            .to_density_state(),
        &ghzw_core::witness::w3_strategy(),
    )
    .unwrap();
    let t3 = Instant::now();
    let feasible = lp_sat_feasible(&cs, &ghz).unwrap();
    println!("feasibility(ghz): {feasible} in {:?}", t3.elapsed());

    let t4 = Instant::now();
    let v = visibility_general(&cs, &ghz).unwrap();
    println!("visibility(ghz): {v} in {:?}", t4.elapsed());

    let vertices = ghzw_core::polytope::local_deterministic_vertices(&[2, 2, 2]).unwrap();
    let t5 = Instant::now();
    for v in vertices.iter().take(8) {
        assert!(lp_sat_feasible(&cs, v).unwrap());
    }
    println!("feasibility(8 deterministic): {:?}", t5.elapsed());

    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
    let t6 = Instant::now();
    for _ in 0..8 {
        let picks: Vec<(f64, &Behavior)> = (0..8)
            .map(|_| (rng.random::<f64>() + 0.01, &vertices[rng.random_range(0..64)]))
            .collect();
        let total: f64 = picks.iter().map(|(w, _)| w).sum();
        let normed: Vec<(f64, &Behavior)> = picks.iter().map(|&(w, b)| (w / total, b)).collect();
        let mix = Behavior::mix(&normed).unwrap();
        assert!(lp_sat_feasible(&cs, &mix).unwrap());
    }
    println!("feasibility(8 random mixtures): {:?}", t6.elapsed());
}
