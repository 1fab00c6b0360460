use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ghzw_core::expdata::{bundled_table1, eval_w4_from_data, monte_carlo_sigma};
use ghzw_core::inflation::{build_constraint_system, lp_sat_feasible, ring_inflation, Scenario};
use ghzw_core::polytope::{extremize_over_nonsignalling, Sense};
use ghzw_core::qsim::{behavior_from_state, ghz_state, noisy_ghz, GhzPhase};
use ghzw_core::witness::{build_w3, build_w4, evaluate, w3_strategy, w4_strategy};

fn bench_behavior_generation(c: &mut Criterion) {
    let state = noisy_ghz(4, 0.9, 0.5).unwrap();
    let strategy = w4_strategy();
    c.bench_function("behavior_from_state/ghz4", |b| {
        b.iter(|| behavior_from_state(black_box(&state), black_box(&strategy)).unwrap())
    });
}

fn bench_witness_eval(c: &mut Criterion) {
    let behavior = behavior_from_state(
        &ghz_state(3, GhzPhase::Plus).unwrap().to_density_state(),
        &w3_strategy(),
    )
    .unwrap();
    let w3 = build_w3();
    c.bench_function("evaluate/w3", |b| {
        b.iter(|| evaluate(black_box(&w3), black_box(&behavior)).unwrap())
    });
}

fn bench_ns_extremization(c: &mut Criterion) {
    let w4 = build_w4();
    c.bench_function("extremize_over_nonsignalling/w4_min", |b| {
        b.iter(|| extremize_over_nonsignalling(black_box(&w4), Sense::Minimize).unwrap())
    });
}

fn bench_inflation_feasibility(c: &mut Criterion) {
    let s = Scenario::new(vec![2, 2, 2]).unwrap();
    let ring = ring_inflation(&s, 2).unwrap();
    let cs = build_constraint_system(&ring, &s).unwrap();
    let ghz = behavior_from_state(
        &ghz_state(3, GhzPhase::Plus).unwrap().to_density_state(),
        &w3_strategy(),
    )
    .unwrap();
    c.bench_function("lp_sat_feasible/ghz3_order2_ring", |b| {
        b.iter(|| lp_sat_feasible(black_box(&cs), black_box(&ghz)).unwrap())
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let ds = bundled_table1();
    c.bench_function("monte_carlo_sigma/w4_1000", |b| {
        b.iter(|| monte_carlo_sigma(black_box(&ds), eval_w4_from_data, 1000, 7).unwrap())
    });
}

criterion_group!(
    benches,
    bench_behavior_generation,
    bench_witness_eval,
    bench_ns_extremization,
    bench_inflation_feasibility,
    bench_monte_carlo
);
criterion_main!(benches);
